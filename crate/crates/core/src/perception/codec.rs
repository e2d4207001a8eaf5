//! JSONL frame records with binary PGM depth sidecars.
//!
//! A record is a single JSON object (no trailing newline); the stream writer
//! joins records with `\n`. The depth map lives in a sidecar named
//! `<frame_id>.pgm` next to the stream.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pnm::{read_pgm, write_pgm16};
use super::types::{BitMask, BoundingBox, Detection, DepthMap, PerceptionFrame};
use super::CodecError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub class: String,
    pub bbox: [u32; 4],
    pub confidence: f64,
    pub track_id: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskRecord {
    pub runs: Vec<u32>,
}

/// Wire form of one frame's metadata. Field order is the serialized order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub timestamp: f64,
    pub width: u32,
    pub height: u32,
    pub detections: Vec<DetectionRecord>,
    pub vip_mask: Option<MaskRecord>,
    pub road_mask: Option<MaskRecord>,
    /// Omitted from the wire when empty.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub instance_masks: BTreeMap<u64, MaskRecord>,
    pub depth_file: String,
}

impl FrameRecord {
    pub fn parse(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut de = serde_json::Deserializer::from_slice(bytes);
        let record: FrameRecord = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            CodecError::field(
                if path == "." { "record".to_string() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        de.end()
            .map_err(|e| CodecError::field("record", format!("trailing data: {e}")))?;
        Ok(record)
    }

    fn from_frame(frame: &PerceptionFrame) -> Self {
        let mask = |m: &BitMask| MaskRecord {
            runs: m.runs.clone(),
        };
        Self {
            frame_id: frame.frame_id,
            timestamp: frame.timestamp,
            width: frame.width,
            height: frame.height,
            detections: frame
                .detections
                .iter()
                .map(|d| DetectionRecord {
                    class: d.class_label.clone(),
                    bbox: [d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2],
                    confidence: d.confidence,
                    track_id: d.track_id,
                })
                .collect(),
            vip_mask: frame.vip_mask.as_ref().map(mask),
            road_mask: frame.road_mask.as_ref().map(mask),
            instance_masks: frame
                .instance_masks
                .iter()
                .map(|(&id, m)| (id, mask(m)))
                .collect(),
            depth_file: frame.depth_file_name(),
        }
    }

    /// Combines the record with its decoded depth map and validates the result.
    pub fn into_frame(self, depth: DepthMap) -> Result<PerceptionFrame, CodecError> {
        let expected_name = format!("{}.pgm", self.frame_id);
        if self.depth_file != expected_name {
            return Err(CodecError::field(
                "depth_file",
                format!("expected {expected_name:?}, found {:?}", self.depth_file),
            ));
        }
        let (width, height) = (self.width, self.height);
        let mask = move |m: MaskRecord| BitMask {
            width,
            height,
            runs: m.runs,
        };
        let frame = PerceptionFrame {
            frame_id: self.frame_id,
            timestamp: self.timestamp,
            width,
            height,
            detections: self
                .detections
                .into_iter()
                .map(|d| Detection {
                    class_label: d.class,
                    bbox: BoundingBox::new(d.bbox[0], d.bbox[1], d.bbox[2], d.bbox[3]),
                    confidence: d.confidence,
                    track_id: d.track_id,
                })
                .collect(),
            vip_mask: self.vip_mask.map(mask),
            road_mask: self.road_mask.map(mask),
            instance_masks: self
                .instance_masks
                .into_iter()
                .map(|(id, m)| (id, mask(m)))
                .collect(),
            depth,
        };
        frame.validate()?;
        Ok(frame)
    }
}

/// Decodes one record plus its depth sidecar.
pub fn decode_frame(record: &[u8], sidecar: &[u8]) -> Result<PerceptionFrame, CodecError> {
    let record = FrameRecord::parse(record)?;
    let depth = read_pgm(sidecar)?;
    record.into_frame(depth)
}

/// Encoded form of a frame: the JSON record and the PGM sidecar bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedFrame {
    pub record: Vec<u8>,
    pub sidecar: Vec<u8>,
}

pub fn encode_frame(frame: &PerceptionFrame) -> EncodedFrame {
    let record = serde_json::to_vec(&FrameRecord::from_frame(frame))
        .expect("frame records always serialize");
    EncodedFrame {
        record,
        sidecar: write_pgm16(&frame.depth),
    }
}
