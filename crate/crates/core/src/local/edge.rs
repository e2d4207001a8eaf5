use serde::{Deserialize, Serialize};

use crate::perception::{BoundingBox, MaskGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeStatus {
    Safe,
    WarnLeft,
    WarnRight,
    WarnBoth,
    Unknown,
}

impl EdgeStatus {
    fn from_sides(left_safe: bool, right_safe: bool) -> Self {
        match (left_safe, right_safe) {
            (true, true) => Self::Safe,
            (false, true) => Self::WarnLeft,
            (true, false) => Self::WarnRight,
            (false, false) => Self::WarnBoth,
        }
    }
}

/// Half-open probe rectangle `(x1, y1, x2, y2)`.
pub type Probe = (u32, u32, u32, u32);

/// The two square probes beside the VIP box, bottom-aligned with it and
/// clipped to the frame. A side is `None` when nothing of it remains.
pub fn edge_probes(vip: &BoundingBox, width: u32, height: u32, box_px: u32) -> (Option<Probe>, Option<Probe>) {
    let y2 = vip.y2.min(height);
    let y1 = y2.saturating_sub(box_px);
    let left = (vip.x1.saturating_sub(box_px), y1, vip.x1.min(width), y2);
    let right = (vip.x2.min(width), y1, vip.x2.saturating_add(box_px).min(width), y2);
    let keep = |p: Probe| (p.0 < p.2 && p.1 < p.3).then_some(p);
    (keep(left), keep(right))
}

/// True when the probe's road-coverage mean (road = 255, else 0) exceeds
/// `threshold`.
fn probe_safe(road: &MaskGrid, probe: Probe, threshold: u32) -> bool {
    let (x1, y1, x2, y2) = probe;
    let mut road_px = 0u64;
    for y in y1..y2 {
        for x in x1..x2 {
            road_px += u64::from(road.get(x, y));
        }
    }
    let area = u64::from(x2 - x1) * u64::from(y2 - y1);
    // mean > threshold  <=>  255 * road > threshold * area
    255 * road_px > u64::from(threshold) * area
}

/// Road-edge proximity check on both sides of the VIP. A probe that falls
/// entirely outside the frame counts as a warning on its side.
pub fn road_edge_check(
    vip: &BoundingBox,
    road: Option<&MaskGrid>,
    box_px: u32,
    threshold: u32,
) -> EdgeStatus {
    let Some(road) = road else {
        return EdgeStatus::Unknown;
    };
    let (left, right) = edge_probes(vip, road.width(), road.height(), box_px);
    let left_safe = left.is_some_and(|p| probe_safe(road, p, threshold));
    let right_safe = right.is_some_and(|p| probe_safe(road, p, threshold));
    EdgeStatus::from_sides(left_safe, right_safe)
}
