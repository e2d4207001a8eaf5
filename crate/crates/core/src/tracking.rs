//! Greedy IoU multi-object tracker and approach-rate estimation.
//!
//! Matching is restricted to same-class pairs and proceeds in descending IoU.
//! An unmatched track keeps its last box (constant-position hold) until it
//! has missed more than `max_misses` consecutive frames.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::{BoundingBox, Detection};

/// Most recent history entries kept per track.
const HISTORY_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackingError {
    #[error("insufficient history: {usable} usable entries in window, need 2")]
    InsufficientHistory { usable: usize },
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = a.x2.min(b.x2).saturating_sub(a.x1.max(b.x1));
    let iy = a.y2.min(b.y2).saturating_sub(a.y1.max(b.y1));
    let inter = u64::from(ix) * u64::from(iy);
    let union = a.area() + b.area() - inter;
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub timestamp: f64,
    pub bbox: BoundingBox,
    pub distance_m: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub track_id: u64,
    pub class_label: String,
    pub history: Vec<Observation>,
    pub misses: u32,
}

impl Track {
    /// Last observed box; held constant while the track is missing.
    pub fn bbox(&self) -> BoundingBox {
        self.history.last().expect("tracks start with one observation").bbox
    }

    fn push(&mut self, obs: Observation) {
        match self.history.last_mut() {
            // keep timestamps strictly increasing
            Some(last) if obs.timestamp <= last.timestamp => *last = obs,
            _ => self.history.push(obs),
        }
        if self.history.len() > HISTORY_CAP {
            self.history.drain(..self.history.len() - HISTORY_CAP);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub iou_threshold: f64,
    pub max_misses: u32,
    /// Window for approach-rate regression.
    pub approach_window_s: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.3,
            max_misses: 15,
            approach_window_s: 1.0,
        }
    }
}

/// Tracker state. A single writer feeds frames in order; `tracks()` exposes a
/// read-only view.
#[derive(Clone, Debug, Default)]
pub struct Tracker {
    tracks: Vec<Track>,
    next_id: u64,
}

impl Tracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn track(&self, id: u64) -> Option<&Track> {
        self.tracks.iter().find(|t| t.track_id == id)
    }

    /// Associates one frame's detections. `distances[i]` (if provided) is stored
    /// with detection `i`. Returns the track id assigned to each detection.
    pub fn associate(
        &mut self,
        timestamp: f64,
        detections: &[Detection],
        distances: &[Option<f64>],
        iou_threshold: f64,
        max_misses: u32,
    ) -> Vec<u64> {
        let mut candidates = Vec::new();
        for (di, det) in detections.iter().enumerate() {
            for (ti, track) in self.tracks.iter().enumerate() {
                if track.class_label != det.class_label {
                    continue;
                }
                let score = iou(&track.bbox(), &det.bbox);
                if score >= iou_threshold {
                    candidates.push((score, di, ti));
                }
            }
        }
        // descending IoU; ties go to the lower detection index, then lower track
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut det_track: Vec<Option<usize>> = vec![None; detections.len()];
        let mut track_used = vec![false; self.tracks.len()];
        for (_, di, ti) in candidates {
            if det_track[di].is_none() && !track_used[ti] {
                det_track[di] = Some(ti);
                track_used[ti] = true;
            }
        }

        let mut assigned = Vec::with_capacity(detections.len());
        for (di, det) in detections.iter().enumerate() {
            let obs = Observation {
                timestamp,
                bbox: det.bbox,
                distance_m: distances.get(di).copied().flatten(),
            };
            match det_track[di] {
                Some(ti) => {
                    let t = &mut self.tracks[ti];
                    t.push(obs);
                    t.misses = 0;
                    assigned.push(t.track_id);
                }
                None => {
                    let id = self.next_id;
                    self.next_id += 1;
                    self.tracks.push(Track {
                        track_id: id,
                        class_label: det.class_label.clone(),
                        history: vec![obs],
                        misses: 0,
                    });
                    assigned.push(id);
                }
            }
        }
        for (ti, used) in track_used.iter().enumerate() {
            if !used {
                self.tracks[ti].misses += 1;
            }
        }
        self.tracks.retain(|t| t.misses <= max_misses);
        assigned
    }
}

/// Rate at which the tracked object closes distance, in m/s (positive =
/// approaching): the negated least-squares slope of distance against time over
/// entries within `window` seconds of the latest observation.
pub fn approach_rate(track: &Track, window: f64) -> Result<f64, TrackingError> {
    let latest = match track.history.last() {
        Some(o) => o.timestamp,
        None => return Err(TrackingError::InsufficientHistory { usable: 0 }),
    };
    let pts: Vec<(f64, f64)> = track
        .history
        .iter()
        .filter(|o| o.timestamp >= latest - window)
        .filter_map(|o| o.distance_m.map(|d| (o.timestamp, d)))
        .collect();
    if pts.len() < 2 {
        return Err(TrackingError::InsufficientHistory { usable: pts.len() });
    }
    let n = pts.len() as f64;
    let t_mean = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let d_mean = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - t_mean).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - t_mean) * (p.1 - d_mean)).sum();
    if sxx == 0.0 {
        return Err(TrackingError::InsufficientHistory { usable: 1 });
    }
    Ok(-(sxy / sxx))
}
