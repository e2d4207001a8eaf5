use std::collections::BTreeMap;

use super::rle::MaskGrid;
use super::CodecError;

/// Axis-aligned pixel box, origin top-left. Columns and rows are half-open:
/// the box covers `x1..x2` and `y1..y2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundingBox {
    pub x1: u32,
    pub y1: u32,
    pub x2: u32,
    pub y2: u32,
}

impl BoundingBox {
    pub const fn new(x1: u32, y1: u32, x2: u32, y2: u32) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> u32 {
        self.x2.saturating_sub(self.x1)
    }

    pub fn height(&self) -> u32 {
        self.y2.saturating_sub(self.y1)
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// Center column in pixel units (may be fractional).
    pub fn center_x(&self) -> f64 {
        (f64::from(self.x1) + f64::from(self.x2)) / 2.0
    }

    pub fn is_valid_in(&self, width: u32, height: u32) -> bool {
        self.x1 < self.x2 && self.x2 <= width && self.y1 < self.y2 && self.y2 <= height
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub class_label: String,
    pub bbox: BoundingBox,
    pub confidence: f64,
    /// Identity assigned by the upstream detector/tracker, if any. Also keys
    /// `PerceptionFrame::instance_masks`.
    pub track_id: Option<u64>,
}

impl Detection {
    pub const VIP_CLASS: &'static str = "vip";

    pub fn new(class_label: impl Into<String>, bbox: BoundingBox, confidence: f64) -> Self {
        Self {
            class_label: class_label.into(),
            bbox,
            confidence,
            track_id: None,
        }
    }

    pub fn with_track_id(mut self, id: u64) -> Self {
        self.track_id = Some(id);
        self
    }

    pub fn is_vip(&self) -> bool {
        self.class_label == Self::VIP_CLASS
    }
}

/// Run-length encoded binary mask. Runs alternate background/foreground in
/// row-major order, starting with a (possibly empty) background run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMask {
    pub width: u32,
    pub height: u32,
    pub runs: Vec<u32>,
}

impl BitMask {
    pub fn pixel_count(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    pub fn run_total(&self) -> u64 {
        self.runs.iter().map(|&r| u64::from(r)).sum()
    }

    /// Expands the runs into a dense grid.
    pub fn decode(&self) -> Result<MaskGrid, CodecError> {
        super::rle::rle_decode(self)
    }
}

/// 16-bit relative depth values (REV), row-major. Larger values are nearer
/// to the camera.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<u16>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, values: Vec<u16>) -> Result<Self, CodecError> {
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(CodecError::Consistency(format!(
                "depth has {} values, expected {}x{} = {}",
                values.len(),
                width,
                height,
                expected
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: u32, height: u32, value: u16) -> Self {
        Self {
            width,
            height,
            values: vec![value; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn row(&self, y: u32) -> &[u16] {
        let w = self.width as usize;
        &self.values[y as usize * w..(y as usize + 1) * w]
    }
}

/// One time-stamped bundle of perception outputs for a single video frame.
#[derive(Clone, Debug, PartialEq)]
pub struct PerceptionFrame {
    pub frame_id: u64,
    pub timestamp: f64,
    pub width: u32,
    pub height: u32,
    pub detections: Vec<Detection>,
    pub vip_mask: Option<BitMask>,
    pub road_mask: Option<BitMask>,
    pub instance_masks: BTreeMap<u64, BitMask>,
    pub depth: DepthMap,
}

impl PerceptionFrame {
    /// A frame with no detections or masks over the given depth map.
    pub fn bare(frame_id: u64, timestamp: f64, depth: DepthMap) -> Self {
        Self {
            frame_id,
            timestamp,
            width: depth.width,
            height: depth.height,
            detections: Vec::new(),
            vip_mask: None,
            road_mask: None,
            instance_masks: BTreeMap::new(),
            depth,
        }
    }

    pub fn vip(&self) -> Option<&Detection> {
        self.detections.iter().find(|d| d.is_vip())
    }

    pub fn depth_file_name(&self) -> String {
        format!("{}.pgm", self.frame_id)
    }

    /// Checks every type invariant, naming the first offending field.
    pub fn validate(&self) -> Result<(), CodecError> {
        if self.width == 0 || self.height == 0 {
            return Err(CodecError::field("width/height", "frame dimensions must be positive"));
        }
        if !self.timestamp.is_finite() {
            return Err(CodecError::field("timestamp", "must be finite"));
        }
        let mut vip_seen = false;
        for (i, det) in self.detections.iter().enumerate() {
            if !det.bbox.is_valid_in(self.width, self.height) {
                return Err(CodecError::field(
                    format!("detections[{i}].bbox"),
                    format!(
                        "box {:?} outside {}x{} frame or empty",
                        [det.bbox.x1, det.bbox.y1, det.bbox.x2, det.bbox.y2],
                        self.width,
                        self.height
                    ),
                ));
            }
            if !(0.0..=1.0).contains(&det.confidence) {
                return Err(CodecError::field(
                    format!("detections[{i}].confidence"),
                    format!("{} not in [0,1]", det.confidence),
                ));
            }
            if det.is_vip() {
                if vip_seen {
                    return Err(CodecError::field(
                        format!("detections[{i}].class"),
                        "more than one vip detection",
                    ));
                }
                vip_seen = true;
            }
        }
        let check_mask = |name: &str, mask: &BitMask| -> Result<(), CodecError> {
            if mask.width != self.width || mask.height != self.height {
                return Err(CodecError::Consistency(format!(
                    "{name} is {}x{}, frame is {}x{}",
                    mask.width, mask.height, self.width, self.height
                )));
            }
            if mask.run_total() != mask.pixel_count() {
                return Err(CodecError::Consistency(format!(
                    "{name} runs sum to {}, expected {}",
                    mask.run_total(),
                    mask.pixel_count()
                )));
            }
            Ok(())
        };
        if let Some(m) = &self.vip_mask {
            check_mask("vip_mask", m)?;
        }
        if let Some(m) = &self.road_mask {
            check_mask("road_mask", m)?;
        }
        for (id, m) in &self.instance_masks {
            check_mask(&format!("instance_masks[{id}]"), m)?;
        }
        if self.depth.width != self.width || self.depth.height != self.height {
            return Err(CodecError::Consistency(format!(
                "depth is {}x{}, frame is {}x{}",
                self.depth.width, self.depth.height, self.width, self.height
            )));
        }
        if self.depth.values.len() != self.width as usize * self.height as usize {
            return Err(CodecError::Consistency("depth value count mismatch".into()));
        }
        Ok(())
    }
}
