use crate::local::{Partition, Severity};
use crate::perception::{write_ppm, BoundingBox, PerceptionFrame};

/// What to draw over a frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overlay {
    pub vip: Option<BoundingBox>,
    /// Danger and warning obstacles.
    pub obstacles: Vec<(BoundingBox, Severity)>,
    pub heading: Option<Partition>,
}

pub const VIP_RGB: [u8; 3] = [0, 0, 255];
pub const DANGER_RGB: [u8; 3] = [255, 0, 0];
pub const WARNING_RGB: [u8; 3] = [255, 255, 0];
pub const HEADING_RGB: [u8; 3] = [0, 255, 0];

const THICKNESS: u32 = 2;

fn outline(rgb: &mut [u8], width: u32, height: u32, b: (u32, u32, u32, u32), color: [u8; 3]) {
    let (x1, y1) = (b.0.min(width), b.1.min(height));
    let (x2, y2) = (b.2.min(width), b.3.min(height));
    for y in y1..y2 {
        for x in x1..x2 {
            let border = x < x1 + THICKNESS || x + THICKNESS >= x2 || y < y1 + THICKNESS || y + THICKNESS >= y2;
            if border {
                let i = 3 * (y * width + x) as usize;
                rgb[i..i + 3].copy_from_slice(&color);
            }
        }
    }
}

/// Renders the depth map as gray (high byte of the REV) with 2-pixel box
/// outlines: heading partition green, warnings yellow, dangers red and the
/// VIP blue, drawn in that order. Returns binary PPM bytes.
pub fn annotate(frame: &PerceptionFrame, overlay: &Overlay) -> Vec<u8> {
    let (w, h) = (frame.depth.width, frame.depth.height);
    let mut rgb: Vec<u8> = frame
        .depth
        .values
        .iter()
        .flat_map(|&v| {
            let g = (v >> 8) as u8;
            [g, g, g]
        })
        .collect();
    if let Some(p) = overlay.heading {
        outline(&mut rgb, w, h, (p.x_start, 0, p.x_end, h), HEADING_RGB);
    }
    for sev in [Severity::Warning, Severity::Danger] {
        let color = if sev == Severity::Danger { DANGER_RGB } else { WARNING_RGB };
        for (b, _) in overlay.obstacles.iter().filter(|(_, s)| *s == sev) {
            outline(&mut rgb, w, h, (b.x1, b.y1, b.x2, b.y2), color);
        }
    }
    if let Some(b) = overlay.vip {
        outline(&mut rgb, w, h, (b.x1, b.y1, b.x2, b.y2), VIP_RGB);
    }
    write_ppm(w, h, &rgb)
}
