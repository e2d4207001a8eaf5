//! Perception data model: detections, masks, relative depth maps and their
//! serialized form. The planner never sees a neural network, only these types.

mod codec;
mod luma;
mod pnm;
mod rle;
mod types;

use thiserror::Error;

pub use codec::{decode_frame, encode_frame, DetectionRecord, EncodedFrame, FrameRecord, MaskRecord};
pub use luma::{depth_from_rgb, luma_convert};
pub use pnm::{read_pgm, write_pgm16, write_ppm};
pub use rle::{rle_decode, rle_encode, MaskGrid};
pub use types::{BitMask, BoundingBox, DepthMap, Detection, PerceptionFrame};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("inconsistent frame: {0}")]
    Consistency(String),
}

impl CodecError {
    pub(crate) fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        CodecError::Field {
            field: field.into(),
            message: message.into(),
        }
    }
}
