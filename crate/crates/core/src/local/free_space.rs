use crate::perception::Detection;

use super::partition::Partition;

/// Half-open column range `[start, end)`.
pub type Segment = (u32, u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionFreeSpace {
    pub segments: Vec<Segment>,
    pub max_free_width: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeSpace {
    /// Maximal obstacle-free column runs over the whole frame.
    pub frame_segments: Vec<Segment>,
    pub partitions: Vec<PartitionFreeSpace>,
}

/// Gaps between obstacles within `d_filter` of the VIP.
///
/// Obstacle column spans are sorted by left edge and overlapping spans are
/// merged; the gaps between merged spans are the frame-level free segments.
/// Each partition keeps the pieces of those segments that fall inside it.
/// VIP detections are ignored.
pub fn free_space(
    detections: &[Detection],
    distances: &[f64],
    d_filter: f64,
    width: u32,
    partitions: &[Partition],
) -> FreeSpace {
    let mut spans: Vec<Segment> = detections
        .iter()
        .zip(distances)
        .filter(|(d, &dist)| !d.is_vip() && dist <= d_filter)
        .map(|(d, _)| (d.bbox.x1.min(width), d.bbox.x2.min(width)))
        .filter(|(a, b)| a < b)
        .collect();
    spans.sort_unstable();

    let mut frame_segments = Vec::new();
    let mut cursor = 0u32;
    let mut i = 0;
    while i < spans.len() {
        let (start, mut end) = spans[i];
        // absorb every span overlapping the current run
        while i + 1 < spans.len() && spans[i + 1].0 <= end {
            i += 1;
            end = end.max(spans[i].1);
        }
        if start > cursor {
            frame_segments.push((cursor, start));
        }
        cursor = cursor.max(end);
        i += 1;
    }
    if cursor < width {
        frame_segments.push((cursor, width));
    }

    let partitions = partitions
        .iter()
        .map(|p| {
            let segments: Vec<Segment> = frame_segments
                .iter()
                .map(|&(a, b)| (a.max(p.x_start), b.min(p.x_end)))
                .filter(|(a, b)| a < b)
                .collect();
            let max_free_width = segments.iter().map(|(a, b)| b - a).max().unwrap_or(0);
            PartitionFreeSpace {
                segments,
                max_free_width,
            }
        })
        .collect();

    FreeSpace {
        frame_segments,
        partitions,
    }
}
