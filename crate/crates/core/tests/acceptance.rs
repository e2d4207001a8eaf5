//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use vipguide::calibration::{detection_distance, fit, CalibrationSample};
use vipguide::config::Config;
use vipguide::dataset::{write_dataset, FrameReader};
use vipguide::geometry::{
    lookahead, pose_envelope, safety_distance, validate_pose, visibility_offset, GeometricConfig,
};
use vipguide::global::{GraphError, NavGraph};
use vipguide::local::{free_space, mean_partition_depth, partition_bounds, road_edge_check, EdgeStatus};
use vipguide::perception::{BoundingBox, DepthMap, Detection, MaskGrid, PerceptionFrame};
use vipguide::pipeline::{Outcome, Pipeline};
use vipguide::sim::{
    generate, project_bbox, reference_calibration, render_depth, Camera, RevLaw, ScenarioKind, ScenarioSpec,
    SceneObject,
};

type Verdict = Result<String, String>;

fn quiet() -> Config {
    let mut c = Config::default();
    c.pipeline.record_latency = false;
    c
}

fn scenario_regression() -> Verdict {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for kind in [ScenarioKind::FootpathTree, ScenarioKind::ParkedVehicles, ScenarioKind::CrowdedStreet] {
        let (mut hits, mut total) = (0usize, 0usize);
        for seed in 1..=5 {
            let spec = ScenarioSpec::new(kind, seed, 60);
            let model = reference_calibration(&spec.rev_law).map_err(|e| e.to_string())?;
            let mut p = Pipeline::new(quiet(), model).map_err(|e| e.to_string())?;
            for (frame, gt) in generate(spec) {
                let d = p.process_frame(&frame, 0.0).map_err(|e| e.to_string())?.decision;
                if frame.vip().is_none() {
                    continue;
                }
                total += 1;
                if let Outcome::Heading { partition, .. } = d.outcome {
                    if Some(partition) == gt.expected_partition {
                        hits += 1;
                    }
                }
            }
        }
        let rate = hits as f64 / total as f64;
        ok &= rate >= 0.95;
        details.push(format!("{kind} {hits}/{total}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    let msg = format!("{} in {secs:.2} s", details.join(", "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn free_space_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf5ee);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let width = rng.random_range(3..=1920u32);
        let parts = partition_bounds(width, 3).map_err(|e| e.to_string())?;
        let d_filter = 1.161;
        let mut dets = Vec::new();
        let mut dists = Vec::new();
        let mut spans = Vec::new();
        for i in 0..rng.random_range(0..=10) {
            let x1 = rng.random_range(0..width);
            let x2 = rng.random_range(x1 + 1..=width);
            let class = if i == 0 && rng.random_bool(0.3) { "vip" } else { "car" };
            let dist = rng.random_range(0.0..2.5);
            dets.push(Detection::new(class, BoundingBox::new(x1, 0, x2, 1), 0.9));
            dists.push(dist);
            if class != "vip" && dist <= d_filter {
                spans.push((x1, x2));
            }
        }
        let fs = free_space(&dets, &dists, d_filter, width, &parts);
        let mut same = fs.frame_segments == common::column_scan(&spans, width);
        for (p, got) in parts.iter().zip(&fs.partitions) {
            let want = common::column_scan_partition(&spans, width, p.x_start, p.x_end);
            same &= got.segments == want && got.max_free_width == want.iter().map(|s| s.1 - s.0).max().unwrap_or(0);
        }
        mismatches += usize::from(!same);
    }
    let msg = format!("1000 frames, {mismatches} mismatches");
    if mismatches == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn adjacency(g: &NavGraph) -> common::Adjacency {
    let mut adj: common::Adjacency = BTreeMap::new();
    for n in g.nodes() {
        adj.entry(n.id.clone()).or_default();
    }
    for e in g.edges() {
        let (u, v) = (g.nodes()[e.u].id.clone(), g.nodes()[e.v].id.clone());
        adj.get_mut(&u).unwrap().push((v.clone(), e.weight, e.blocked));
        adj.get_mut(&v).unwrap().push((u, e.weight, e.blocked));
    }
    adj
}

fn route_agrees(g: &NavGraph, src: &str, dst: &str) -> bool {
    match (g.shortest_path(src, dst), common::enumerate_best(&adjacency(g), src, dst)) {
        (Ok(r), Some((cost, path))) => r.total_cost == cost && r.nodes == path,
        (Err(GraphError::Unreachable { .. }), None) => true,
        _ => false,
    }
}

fn dijkstra_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1d1);
    let mut failures = 0;
    for _ in 0..500 {
        let n = rng.random_range(2..=8);
        let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let mut g = NavGraph::new();
        for id in &ids {
            g.add_node(id.clone(), [0.0, 0.0]).map_err(|e| e.to_string())?;
        }
        for i in 1..n {
            let j = rng.random_range(0..i);
            g.add_edge(&ids[i], &ids[j], f64::from(rng.random_range(1..12))).map_err(|e| e.to_string())?;
        }
        for _ in 0..rng.random_range(0..=n * 2) {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b && g.edge(&ids[a], &ids[b]).is_none() {
                g.add_edge(&ids[a], &ids[b], f64::from(rng.random_range(1..12))).map_err(|e| e.to_string())?;
            }
        }
        let src = ids.choose(&mut rng).unwrap().clone();
        let dst = ids.choose(&mut rng).unwrap().clone();
        let mut ok = route_agrees(&g, &src, &dst);

        let e = g.edges()[rng.random_range(0..g.edge_count())].clone();
        let (u, v) = (g.nodes()[e.u].id.clone(), g.nodes()[e.v].id.clone());
        g.block_edge(&u, &v).map_err(|e| e.to_string())?;
        ok &= route_agrees(&g, &src, &dst);
        if let Ok(r) = g.replan(&src, &dst) {
            ok &= !r.nodes.windows(2).any(|w| (w[0] == u && w[1] == v) || (w[0] == v && w[1] == u));
        }
        failures += usize::from(!ok);
    }
    let msg = format!("500 graphs with block + replan, {failures} disagreements");
    if failures == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn geometry() -> Verdict {
    let mut worst: f64 = 0.0;
    for fi in 1..180 {
        let f = f64::from(fi);
        for di in 1..=200 {
            let d = f64::from(di) * 0.05;
            let h = visibility_offset(f, d).map_err(|e| e.to_string())?;
            let t = (f.to_radians() / 2.0).tan();
            worst = worst.max((h / d - t).abs() / t);
        }
    }
    let mut problems = Vec::new();
    if worst > 1e-12 {
        problems.push(format!("identity error {worst:e}"));
    }
    for &(x, td, tr) in &[(1.0, 0.161, 1.0), (1.5, 0.2, 1.2), (0.7, 0.0, 2.0)] {
        let base = safety_distance(x, td, tr).map_err(|e| e.to_string())?;
        for k in [0.0, 0.5, 2.0, 3.0] {
            let scaled = safety_distance(k * x, td, tr).map_err(|e| e.to_string())?;
            if (scaled - k * base).abs() > 1e-12 * (1.0 + scaled) {
                problems.push(format!("safety distance not linear at x={x} k={k}"));
            }
        }
        if safety_distance(0.0, td, tr) != Ok(0.0) || safety_distance(x, 0.0, 0.0) != Ok(0.0) {
            problems.push("safety distance zero cases".into());
        }
    }
    if lookahead(2.5, 0.0, 0.05) != 2.5 {
        problems.push("lookahead with zero safety distance".into());
    }
    let mut endpoints = 0;
    for walk in [0.0, 0.5, 1.0, 1.5] {
        for range in [12.0, 15.0, 25.0, f64::INFINITY] {
            let cfg = GeometricConfig {
                walk_speed_mps: walk,
                perception_range_m: range,
                ..Default::default()
            };
            let env = pose_envelope(&cfg).map_err(|e| e.to_string())?;
            if env.d_min < 1.0 || env.d_max > 10.0 {
                problems.push(format!("bounds [{}, {}] outside [1, 10]", env.d_min, env.d_max));
            }
            for (h, d) in [(env.h_max, env.d_min), (env.h_vip, env.d_max)] {
                endpoints += 1;
                let v = validate_pose(h, d, &cfg);
                if !v.is_empty() {
                    problems.push(format!("endpoint ({h}, {d}): {}", v[0]));
                }
            }
        }
    }
    let cfg = GeometricConfig::default();
    if validate_pose(cfg.h_vip_m, 0.5, &cfg).is_empty() || validate_pose(cfg.h_vip_m, 10.5, &cfg).is_empty() {
        problems.push("out-of-range distance accepted".into());
    }
    if problems.is_empty() {
        Ok(format!("identity max rel err {worst:.1e}, {endpoints} endpoints valid"))
    } else {
        Err(problems.join("; "))
    }
}

fn calibration() -> Verdict {
    let mut problems = Vec::new();
    let mut worst_coef: f64 = 0.0;
    for &(a, b, c) in &[(3.0, -12.0, 11.0), (0.0, -9.0, 10.0), (19.0, -26.0, 10.0), (-2.0, -5.0, 8.0)] {
        let s: Vec<_> = (0..25)
            .map(|i| {
                let r = f64::from(i) / 24.0;
                CalibrationSample::new(r, a * r * r + b * r + c)
            })
            .collect();
        let m = fit(&s).map_err(|e| e.to_string())?;
        for (got, want) in m.coefficients().iter().zip([a, b, c]) {
            worst_coef = worst_coef.max((got - want).abs());
        }
    }
    if worst_coef > 1e-6 {
        problems.push(format!("coefficient error {worst_coef:e}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1200);
    let noise = Normal::new(0.0, 0.5).map_err(|e| e.to_string())?;
    let noisy: Vec<_> = (0..200)
        .map(|_| {
            let r: f64 = rng.random();
            let z = 5.0 * r * r - 14.0 * r + 10.0;
            CalibrationSample::new(r, (z + noise.sample(&mut rng)).max(0.05))
        })
        .collect();
    let rmse = fit(&noisy).map_err(|e| e.to_string())?.rmse;
    if rmse > 1.2 {
        problems.push(format!("noisy rmse {rmse:.3}"));
    }

    let cam = Camera::default();
    let law = RevLaw::default();
    let model = reference_calibration(&law).map_err(|e| e.to_string())?;
    let mut worst_z: f64 = 0.0;
    for i in 0..=90 {
        let z = 1.0 + 0.1 * f64::from(i);
        let obj = SceneObject {
            kind: "person".into(),
            position: [-0.4, 0.0, z],
            size: [0.5, 1.7],
            labeled: true,
        };
        let b = project_bbox(&obj, &cam).ok_or("object off frame")?;
        let mut frame = PerceptionFrame::bare(0, 0.0, render_depth(&[obj], &cam, &law));
        frame.detections.push(Detection::new("person", b, 0.9));
        let d = detection_distance(&frame, &frame.detections[0], &model).map_err(|e| e.to_string())?;
        worst_z = worst_z.max((d - z).abs());
    }
    if worst_z > 0.3 {
        problems.push(format!("round-trip error {worst_z:.3} m"));
    }
    let msg = format!("coef err {worst_coef:.1e}, noisy rmse {rmse:.3} m, round trip {worst_z:.3} m");
    if problems.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}: {}", problems.join("; ")))
    }
}

fn road_edge() -> Verdict {
    let vip = BoundingBox::new(3, 0, 6, 3);
    let mut mismatches = 0;
    let mut checked = 0;
    for pattern in 0u32..512 {
        let bits: Vec<bool> = (0..9).map(|i| pattern >> i & 1 == 1).collect();
        let flipped: Vec<bool> = bits.iter().map(|b| !b).collect();
        let mut road = MaskGrid::empty(9, 3);
        for (i, &b) in bits.iter().enumerate() {
            let (x, y) = (i as u32 % 3, i as u32 / 3);
            road.set(x, y, b);
            road.set(x + 6, y, !b);
        }
        for threshold in [0, 28, 85, 128, 142, 200, 255] {
            let want = match (
                common::probe_mean_safe(&bits, threshold),
                common::probe_mean_safe(&flipped, threshold),
            ) {
                (true, true) => EdgeStatus::Safe,
                (false, true) => EdgeStatus::WarnLeft,
                (true, false) => EdgeStatus::WarnRight,
                (false, false) => EdgeStatus::WarnBoth,
            };
            checked += 1;
            mismatches += usize::from(road_edge_check(&vip, Some(&road), 3, threshold) != want);
        }
    }
    let msg = format!("512 patterns x 7 thresholds ({checked} checks), {mismatches} mismatches");
    if mismatches == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn partition_mean() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe03);
    let mut mismatches = 0;
    let mut cases = 0;
    for i in 0..300 {
        let (w, h) = (rng.random_range(3..200u32), rng.random_range(1..120u32));
        let depth = DepthMap::new(w, h, (0..w * h).map(|_| rng.random()).collect()).map_err(|e| e.to_string())?;
        let mask = (i % 2 == 1).then(|| {
            let p: f64 = rng.random();
            MaskGrid::new(w, h, (0..w * h).map(|_| rng.random_bool(p)).collect()).expect("sized mask")
        });
        for n in [1, 3, 5] {
            let Ok(parts) = partition_bounds(w, n) else { continue };
            for p in &parts {
                cases += 1;
                let got = mean_partition_depth(&depth, p, mask.as_ref());
                let same = match common::naive_mean(&depth, p.x_start, p.x_end, mask.as_ref()) {
                    Some((sum, count)) => {
                        got.sum as u128 == sum && got.count as u128 == count && got.value() == sum as f64 / count as f64
                    }
                    None => got.is_empty(),
                };
                mismatches += usize::from(!same);
            }
        }
    }
    let msg = format!("{cases} partitions over 300 maps (half masked), {mismatches} mismatches");
    if mismatches == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn performance() -> Verdict {
    let spec = ScenarioSpec::new(ScenarioKind::CrowdedStreet, 1, 650);
    let model = reference_calibration(&spec.rev_law).map_err(|e| e.to_string())?;
    let mut p = Pipeline::new(Config::default(), model).map_err(|e| e.to_string())?;
    let mut wall = Vec::with_capacity(650);
    for (frame, _) in generate(spec) {
        let t = Instant::now();
        p.process_frame(&frame, 0.0).map_err(|e| e.to_string())?;
        wall.push(t.elapsed().as_secs_f64() * 1e3);
    }
    wall.sort_by(f64::total_cmp);
    let wall_p90 = wall[(0.9 * wall.len() as f64).ceil() as usize - 1];
    let stages = p.latency().planner();
    let msg = format!(
        "650 frames 640x480: planner p50 {:.3} ms p90 {:.3} ms, whole call p90 {wall_p90:.3} ms",
        stages.p50, stages.p90
    );
    if stages.p90 < 10.0 && wall_p90 < 10.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Verdict {
    let run = |frames: Vec<PerceptionFrame>, spec: &ScenarioSpec| -> Result<String, String> {
        let model = reference_calibration(&spec.rev_law).map_err(|e| e.to_string())?;
        let mut p = Pipeline::new(quiet(), model).map_err(|e| e.to_string())?;
        let mut out = String::new();
        for f in &frames {
            out.push_str(&p.process_frame(f, 0.0).map_err(|e| e.to_string())?.decision.to_json_line());
            out.push('\n');
        }
        Ok(out)
    };
    let mut compared = 0;
    for kind in ScenarioKind::ALL {
        let spec = ScenarioSpec::new(kind, 11, 45);
        let a = run(generate(spec.clone()).map(|(f, _)| f).collect(), &spec)?;
        let b = run(generate(spec.clone()).map(|(f, _)| f).collect(), &spec)?;
        // and once more through the on-disk format
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        write_dataset(dir.path(), generate(spec.clone()).map(|(f, g)| (f, Some(g)))).map_err(|e| e.to_string())?;
        let frames = FrameReader::open(dir.path())
            .map_err(|e| e.to_string())?
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let c = run(frames, &spec)?;
        if a != b || a != c {
            return Err(format!("{kind}: traces differ"));
        }
        compared += 1;
    }
    Ok(format!("{compared} scenario specs, in-memory and on-disk traces byte-identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("scenario regression", scenario_regression),
        ("free-space oracle", free_space_oracle),
        ("global planner oracle", dijkstra_oracle),
        ("geometry", geometry),
        ("calibration", calibration),
        ("road-edge exhaustive", road_edge),
        ("partition mean exactness", partition_mean),
        ("performance budget", performance),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
