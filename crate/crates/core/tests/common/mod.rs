//! Brute-force reference implementations used to check the library.
#![allow(dead_code)]

use std::collections::BTreeMap;

use vipguide::perception::{BoundingBox, DepthMap, MaskGrid};

/// Free column runs by marking every occupied column.
pub fn column_scan(spans: &[(u32, u32)], width: u32) -> Vec<(u32, u32)> {
    let mut occupied = vec![false; width as usize];
    for &(a, b) in spans {
        for c in a.min(width)..b.min(width) {
            occupied[c as usize] = true;
        }
    }
    runs_of_false(&occupied, 0)
}

/// Maximal runs of `false`, offset by `base`.
pub fn runs_of_false(cols: &[bool], base: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &occ) in cols.iter().enumerate() {
        match (occ, start) {
            (false, None) => start = Some(i as u32),
            (true, Some(s)) => {
                out.push((base + s, base + i as u32));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((base + s, base + cols.len() as u32));
    }
    out
}

/// Per-partition free runs from column occupancy.
pub fn column_scan_partition(spans: &[(u32, u32)], width: u32, x_start: u32, x_end: u32) -> Vec<(u32, u32)> {
    let mut occupied = vec![false; width as usize];
    for &(a, b) in spans {
        for c in a.min(width)..b.min(width) {
            occupied[c as usize] = true;
        }
    }
    runs_of_false(&occupied[x_start as usize..x_end as usize], x_start)
}

/// Mean over non-excluded pixels with 128-bit accumulation, or `None` when
/// nothing remains.
pub fn naive_mean(depth: &DepthMap, x_start: u32, x_end: u32, exclude: Option<&MaskGrid>) -> Option<(u128, u128)> {
    let mut sum = 0u128;
    let mut count = 0u128;
    for y in 0..depth.height {
        for x in x_start..x_end {
            if exclude.is_some_and(|m| m.get(x, y)) {
                continue;
            }
            sum += depth.get(x, y) as u128;
            count += 1;
        }
    }
    (count > 0).then_some((sum, count))
}

/// Lower-middle median by full sort.
pub fn sorted_median(depth: &DepthMap, b: &BoundingBox, mask: Option<&MaskGrid>) -> Option<u16> {
    let mut v = Vec::new();
    for y in b.y1..b.y2 {
        for x in b.x1..b.x2 {
            if mask.is_none_or(|m| m.get(x, y)) {
                v.push(depth.get(x, y));
            }
        }
    }
    v.sort_unstable();
    (!v.is_empty()).then(|| v[(v.len() - 1) / 2])
}

/// Undirected weighted graph as adjacency lists over string ids.
pub type Adjacency = BTreeMap<String, Vec<(String, f64, bool)>>;

/// Every simple path from `src` to `dst` over unblocked edges with its cost;
/// returns the cheapest cost and the lexicographically smallest cheapest path.
pub fn enumerate_best(adj: &Adjacency, src: &str, dst: &str) -> Option<(f64, Vec<String>)> {
    fn walk(
        adj: &Adjacency,
        cur: &str,
        dst: &str,
        path: &mut Vec<String>,
        cost: f64,
        best: &mut Option<(f64, Vec<String>)>,
    ) {
        if cur == dst {
            let better = match best {
                None => true,
                Some((c, p)) => cost < *c || (cost == *c && path < p),
            };
            if better {
                *best = Some((cost, path.clone()));
            }
            return;
        }
        for (next, w, blocked) in &adj[cur] {
            if *blocked || path.contains(next) {
                continue;
            }
            path.push(next.clone());
            walk(adj, next, dst, path, cost + w, best);
            path.pop();
        }
    }
    let mut best = None;
    let mut path = vec![src.to_string()];
    walk(adj, src, dst, &mut path, 0.0, &mut best);
    best
}

/// Road-probe verdict straight from the definition: mean of 255/0 over the
/// probe compared with the threshold in floating point.
pub fn probe_mean_safe(bits: &[bool], threshold: u32) -> bool {
    let sum: f64 = bits.iter().map(|&b| if b { 255.0 } else { 0.0 }).sum();
    sum / bits.len() as f64 > threshold as f64
}

/// A small random but valid frame.
pub fn random_frame<R: rand::Rng>(rng: &mut R, frame_id: u64) -> vipguide::perception::PerceptionFrame {
    use vipguide::perception::{Detection, PerceptionFrame};
    let w = rng.random_range(1..=24u32);
    let h = rng.random_range(1..=24u32);
    let values = (0..w * h).map(|_| rng.random()).collect();
    let depth = DepthMap::new(w, h, values).unwrap();
    let mut frame = PerceptionFrame::bare(frame_id, rng.random_range(0.0..1e6), depth);
    let random_mask = |rng: &mut R| {
        let bits = (0..w * h).map(|_| rng.random_bool(0.4)).collect();
        MaskGrid::new(w, h, bits).unwrap().encode()
    };
    let classes = ["person", "car", "bicycle", "vip"];
    let mut vip_used = false;
    for i in 0..rng.random_range(0..6u64) {
        let mut class = classes[rng.random_range(0..classes.len())];
        if class == "vip" {
            if vip_used {
                class = "person";
            }
            vip_used = true;
        }
        let x1 = rng.random_range(0..w);
        let y1 = rng.random_range(0..h);
        let x2 = rng.random_range(x1 + 1..=w);
        let y2 = rng.random_range(y1 + 1..=h);
        let mut det = Detection::new(class, BoundingBox::new(x1, y1, x2, y2), rng.random_range(0.0..=1.0));
        if rng.random_bool(0.7) {
            det = det.with_track_id(i + 1);
            if rng.random_bool(0.5) {
                frame.instance_masks.insert(i + 1, random_mask(rng));
            }
        }
        frame.detections.push(det);
    }
    if rng.random_bool(0.5) {
        frame.vip_mask = Some(random_mask(rng));
    }
    if rng.random_bool(0.5) {
        frame.road_mask = Some(random_mask(rng));
    }
    frame
}
