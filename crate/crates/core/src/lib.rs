//! Guidance planning for a drone escorting a visually impaired person (VIP).
//!
//! The crate turns perception frames (detections, masks, relative depth) into
//! per-frame heading decisions, with a navigation-graph fallback when the
//! local path is blocked.

pub mod calibration;
pub mod config;
pub mod dataset;
pub mod geometry;
pub mod global;
pub mod local;
pub mod perception;
pub mod pipeline;
pub mod sim;
pub mod tracking;
