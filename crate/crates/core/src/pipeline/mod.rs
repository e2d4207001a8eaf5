//! Per-frame orchestration: distances, tracking, hazard assessment, road
//! edges, partition scoring, heading choice and, when the local planner gives
//! up for long enough, a global replan.

mod annotate;
mod latency;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{detection_distance, CalibrationModel};
use crate::config::Config;
use crate::geometry::safety_distance;
use crate::global::{GraphError, NavGraph, Route};
use crate::local::{
    classify_obstacle, decide, free_space, heading_angle, mean_partition_depth, partition_bounds,
    road_edge_check, EdgeStatus, LocalOutcome, Partition, PartitionProfile, Severity,
};
use crate::perception::{BoundingBox, CodecError, MaskGrid, PerceptionFrame};
use crate::tracking::{approach_rate, Tracker};

pub use annotate::{annotate, Overlay};
pub use latency::{LatencyStats, StageSummary};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("frame {got} arrived after frame {previous}; frame ids must increase")]
    OutOfOrder { previous: u64, got: u64 },
    #[error("invalid frame: {0}")]
    Frame(#[from] CodecError),
    #[error("route: {0}")]
    Route(#[from] GraphError),
    #[error("frame cannot be planned: {0}")]
    Unplannable(String),
    #[error("{0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outcome {
    Heading { partition: usize, angle_deg: f64 },
    Reroute { new_route: Option<Vec<String>> },
    VipLost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub track_id: u64,
    pub class: String,
    /// Distance from the VIP; `None` when the depth region was unusable.
    pub distance_m: Option<f64>,
    pub severity: Option<Severity>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageLatency {
    pub decode: f64,
    pub track: f64,
    pub plan: f64,
}

/// One trace record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub frame_id: u64,
    pub outcome: Outcome,
    pub assessments: Vec<Assessment>,
    pub edge_status: EdgeStatus,
    pub latency_ms: Option<StageLatency>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Decision {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("decisions always serialize")
    }
}

#[derive(Clone, Debug)]
pub struct FrameResult {
    pub decision: Decision,
    pub overlay: Overlay,
    pub profiles: Vec<PartitionProfile>,
    /// Safety distance used for this frame.
    pub safety_m: f64,
}

#[derive(Clone, Debug)]
struct RouteState {
    graph: NavGraph,
    dst: String,
    current: String,
    route: Option<Route>,
}

#[derive(Clone, Debug)]
pub struct Pipeline {
    config: Config,
    model: CalibrationModel,
    tracker: Tracker,
    route: Option<RouteState>,
    last_frame_id: Option<u64>,
    frames_without_vip: u32,
    last_vip: Option<(BoundingBox, Option<f64>)>,
    reroute_streak: u32,
    latency: LatencyStats,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl Pipeline {
    pub fn new(config: Config, model: CalibrationModel) -> Result<Self, PipelineError> {
        config.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(Self {
            config,
            model,
            tracker: Tracker::new(),
            route: None,
            last_frame_id: None,
            frames_without_vip: 0,
            last_vip: None,
            reroute_streak: 0,
            latency: LatencyStats::default(),
        })
    }

    /// Attaches a navigation graph and plans the initial route. The VIP is
    /// taken to stay at `src` until a replan moves the route.
    pub fn with_route(mut self, graph: NavGraph, src: &str, dst: &str) -> Result<Self, PipelineError> {
        let route = graph.shortest_path(src, dst)?;
        self.route = Some(RouteState {
            graph,
            dst: dst.to_string(),
            current: src.to_string(),
            route: Some(route),
        });
        Ok(self)
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    pub fn route(&self) -> Option<&Route> {
        self.route.as_ref().and_then(|r| r.route.as_ref())
    }

    pub fn graph(&self) -> Option<&NavGraph> {
        self.route.as_ref().map(|r| &r.graph)
    }

    pub fn latency(&self) -> &LatencyStats {
        &self.latency
    }

    /// Runs one frame. `decode_ms` is the caller's ingest time, recorded in
    /// the trace. On error the pipeline state is left untouched.
    pub fn process_frame(&mut self, frame: &PerceptionFrame, decode_ms: f64) -> Result<FrameResult, PipelineError> {
        if let Some(prev) = self.last_frame_id {
            if frame.frame_id <= prev {
                return Err(PipelineError::OutOfOrder {
                    previous: prev,
                    got: frame.frame_id,
                });
            }
        }
        frame.validate()?;
        let vip_mask = frame.vip_mask.as_ref().map(|m| m.decode()).transpose()?;
        let road_mask = frame.road_mask.as_ref().map(|m| m.decode()).transpose()?;
        let parts = partition_bounds(frame.width, self.config.planner.n_partitions)
            .map_err(|e| PipelineError::Unplannable(e.to_string()))?;

        let t_track = Instant::now();
        let mut notes = Vec::new();
        let distances: Vec<Option<f64>> = frame
            .detections
            .iter()
            .enumerate()
            .map(|(i, det)| match detection_distance(frame, det, &self.model) {
                Ok(d) => Some(d),
                Err(e) => {
                    notes.push(format!("no distance for detection {i} ({}): {e}", det.class_label));
                    None
                }
            })
            .collect();
        let cfg = self.config.clone();
        let ids = self.tracker.associate(
            frame.timestamp,
            &frame.detections,
            &distances,
            cfg.tracking.iou_threshold,
            cfg.tracking.max_misses,
        );
        let track_ms = ms_since(t_track);

        let t_plan = Instant::now();
        let vip_idx = frame.detections.iter().position(|d| d.is_vip());
        match vip_idx {
            Some(i) => {
                self.frames_without_vip = 0;
                self.last_vip = Some((frame.detections[i].bbox, distances[i]));
            }
            None => self.frames_without_vip = self.frames_without_vip.saturating_add(1),
        }

        let g = &cfg.geometry;
        let mut speed = g.walk_speed_mps;
        if cfg.pipeline.live_speed {
            for (det, id) in frame.detections.iter().zip(&ids) {
                if det.is_vip() {
                    continue;
                }
                let Some(track) = self.tracker.track(*id) else { continue };
                if let Ok(rate) = approach_rate(track, cfg.tracking.approach_window_s) {
                    speed = speed.max(rate.min(cfg.pipeline.max_live_speed_mps));
                }
            }
        }
        let safety_m = safety_distance(speed, g.t_detect_s, g.t_react_s)
            .map_err(|e| PipelineError::Config(e.to_string()))?;

        let vip_ref = self.last_vip.and_then(|(_, d)| d);
        let proximity: Vec<Option<f64>> = distances
            .iter()
            .map(|d| d.map(|d| vip_ref.map_or(d, |v| (d - v).abs())))
            .collect();
        let p = &cfg.planner;
        let mut assessments = Vec::new();
        let mut overlay = Overlay {
            vip: vip_idx.map(|i| frame.detections[i].bbox),
            ..Overlay::default()
        };
        for (i, det) in frame.detections.iter().enumerate() {
            if det.is_vip() {
                continue;
            }
            let severity = proximity[i].map(|d| classify_obstacle(d, safety_m, p.danger_mult, p.warning_mult));
            if let Some(s @ (Severity::Danger | Severity::Warning)) = severity {
                overlay.obstacles.push((det.bbox, s));
            }
            assessments.push(Assessment {
                track_id: ids[i],
                class: det.class_label.clone(),
                distance_m: proximity[i],
                severity,
            });
        }

        let vip_lost = self.frames_without_vip > cfg.pipeline.vip_lost_frames;
        let (outcome, edge_status, profiles) = if vip_lost {
            self.reroute_streak = 0;
            notes.push(format!("vip not detected for {} frames", self.frames_without_vip));
            (Outcome::VipLost, EdgeStatus::Unknown, Vec::new())
        } else {
            let edge_status = match vip_idx {
                Some(i) => road_edge_check(&frame.detections[i].bbox, road_mask.as_ref(), p.edge_box_px, p.edge_threshold),
                None => EdgeStatus::Unknown,
            };
            if vip_idx.is_none() {
                notes.push(format!(
                    "vip not detected ({} of {} frames tolerated)",
                    self.frames_without_vip, cfg.pipeline.vip_lost_frames
                ));
            }
            let exclusion = match (vip_idx, vip_mask) {
                (Some(_), Some(mask)) => Some(mask),
                (Some(i), None) => {
                    let b = frame.detections[i].bbox;
                    let mut m = MaskGrid::empty(frame.width, frame.height);
                    m.fill_rect(b.x1, b.y1, b.x2, b.y2, true);
                    Some(m)
                }
                (None, _) => None,
            };
            let filter: Vec<f64> = frame
                .detections
                .iter()
                .zip(&proximity)
                .map(|(d, prox)| if d.is_vip() { f64::INFINITY } else { prox.unwrap_or(f64::INFINITY) })
                .collect();
            let fs = free_space(&frame.detections, &filter, safety_m, frame.width, &parts);
            let profiles: Vec<PartitionProfile> = parts
                .iter()
                .zip(fs.partitions)
                .map(|(part, free)| {
                    let mean = mean_partition_depth(&frame.depth, part, exclusion.as_ref());
                    PartitionProfile {
                        partition: *part,
                        h_score: mean.value(),
                        empty: mean.is_empty(),
                        free_segments: free.segments,
                        max_free_width: free.max_free_width,
                    }
                })
                .collect();

            let vip_box = self.last_vip.map(|(b, _)| b);
            let vip_partition = vip_box.and_then(|b| parts.iter().position(|pt| pt.contains_column(b.center_x())));
            let vip_width = vip_box.map_or(p.fallback_vip_width_px, |b| b.width());
            let outcome = match decide(&profiles, vip_partition, p.width_threshold(vip_width)) {
                LocalOutcome::Heading { partition } => {
                    self.reroute_streak = 0;
                    let part: &Partition = &parts[partition];
                    overlay.heading = Some(*part);
                    Outcome::Heading {
                        partition,
                        angle_deg: heading_angle(part, frame.width, g.hfov_deg),
                    }
                }
                LocalOutcome::RerouteNeeded => Outcome::Reroute {
                    new_route: self.request_reroute(&mut notes),
                },
            };
            (outcome, edge_status, profiles)
        };
        let plan_ms = ms_since(t_plan);

        self.last_frame_id = Some(frame.frame_id);
        self.latency.record(decode_ms, track_ms, plan_ms);
        let decision = Decision {
            frame_id: frame.frame_id,
            outcome,
            assessments,
            edge_status,
            latency_ms: cfg.pipeline.record_latency.then_some(StageLatency {
                decode: decode_ms,
                track: track_ms,
                plan: plan_ms,
            }),
            notes,
        };
        Ok(FrameResult {
            decision,
            overlay,
            profiles,
            safety_m,
        })
    }

    /// Counts a reroute request and, once the hysteresis is met, blocks the
    /// edge the VIP was about to take and replans from the current node.
    fn request_reroute(&mut self, notes: &mut Vec<String>) -> Option<Vec<String>> {
        self.reroute_streak += 1;
        let needed = self.config.pipeline.reroute_hysteresis.max(1);
        if self.reroute_streak < needed {
            notes.push(format!("reroute pending ({}/{needed})", self.reroute_streak));
            return None;
        }
        self.reroute_streak = 0;
        let Some(state) = self.route.as_mut() else {
            notes.push("reroute needed but no navigation graph is loaded".into());
            return None;
        };
        let next = state
            .route
            .as_ref()
            .and_then(|r| r.nodes.iter().position(|n| *n == state.current).and_then(|i| r.nodes.get(i + 1)))
            .cloned();
        let Some(next) = next else {
            notes.push(format!("reroute needed but no route leaves {}", state.current));
            return None;
        };
        if let Err(e) = state.graph.block_edge(&state.current, &next) {
            notes.push(format!("cannot block {}-{next}: {e}", state.current));
            return None;
        }
        notes.push(format!("blocked edge {}-{next}", state.current));
        match state.graph.replan(&state.current, &state.dst) {
            Ok(route) => {
                let nodes = route.nodes.clone();
                state.route = Some(route);
                Some(nodes)
            }
            Err(e) => {
                state.route = None;
                notes.push(format!("replan failed: {e}"));
                None
            }
        }
    }
}
