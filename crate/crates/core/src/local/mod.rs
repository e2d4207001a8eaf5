//! Per-frame local planning: score vertical partitions by mean relative depth,
//! find free space between nearby obstacles, check road edges, and choose a
//! heading or request a global reroute.

mod edge;
mod free_space;
mod partition;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edge::{edge_probes, road_edge_check, EdgeStatus, Probe};
pub use free_space::{free_space, FreeSpace, PartitionFreeSpace, Segment};
pub use partition::{mean_partition_depth, partition_bounds, Partition, PartitionMean};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("invalid partitioning: {0}")]
    Partitions(String),
    #[error("invalid planner config: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub n_partitions: usize,
    /// Required free width as a multiple of the VIP's box width.
    pub width_margin: f64,
    pub danger_mult: f64,
    pub warning_mult: f64,
    pub edge_box_px: u32,
    pub edge_threshold: u32,
    /// VIP box width assumed when no VIP has been seen yet.
    pub fallback_vip_width_px: u32,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            n_partitions: 3,
            width_margin: 1.2,
            danger_mult: 1.0,
            warning_mult: 2.0,
            edge_box_px: 90,
            edge_threshold: 128,
            fallback_vip_width_px: 60,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.n_partitions == 0 || self.n_partitions % 2 == 0 {
            return Err(PlannerError::Config(format!(
                "planner.n_partitions = {} must be odd",
                self.n_partitions
            )));
        }
        if !(self.width_margin > 0.0) {
            return Err(PlannerError::Config("planner.width_margin must be positive".into()));
        }
        if !(self.danger_mult > 0.0 && self.warning_mult >= self.danger_mult) {
            return Err(PlannerError::Config(
                "planner.danger_mult must be positive and not exceed warning_mult".into(),
            ));
        }
        if self.edge_box_px == 0 || self.edge_threshold > 255 {
            return Err(PlannerError::Config(
                "planner.edge_box_px must be positive and edge_threshold <= 255".into(),
            ));
        }
        Ok(())
    }

    /// `ceil(width_margin * vip_width)`.
    pub fn width_threshold(&self, vip_width_px: u32) -> u32 {
        (self.width_margin * f64::from(vip_width_px)).ceil() as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Danger,
    Warning,
    Clear,
}

/// Danger within `danger_mult * d'`, warning within `warning_mult * d'`.
pub fn classify_obstacle(distance_m: f64, safety_m: f64, danger_mult: f64, warning_mult: f64) -> Severity {
    if distance_m <= danger_mult * safety_m {
        Severity::Danger
    } else if distance_m <= warning_mult * safety_m {
        Severity::Warning
    } else {
        Severity::Clear
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionProfile {
    pub partition: Partition,
    /// Mean REV `H(i)` with VIP pixels excluded.
    pub h_score: f64,
    /// Every pixel of the partition was excluded.
    pub empty: bool,
    pub free_segments: Vec<Segment>,
    pub max_free_width: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalOutcome {
    Heading { partition: usize },
    RerouteNeeded,
}

/// Picks the heading partition.
///
/// Partitions are visited in ascending `h_score` (lower mean REV means fewer
/// or farther obstacles). Ties prefer the VIP's partition, then the one
/// nearest the center. Empty partitions are visited last. The first partition
/// whose widest free segment reaches `width_threshold` wins; if none does a
/// reroute is requested.
pub fn decide(profiles: &[PartitionProfile], vip_partition: Option<usize>, width_threshold: u32) -> LocalOutcome {
    let center = profiles.len() / 2;
    let mut order: Vec<&PartitionProfile> = profiles.iter().collect();
    order.sort_by(|a, b| {
        let key = |p: &PartitionProfile| {
            (
                vip_partition != Some(p.partition.index),
                p.partition.index.abs_diff(center),
                p.partition.index,
            )
        };
        a.empty
            .cmp(&b.empty)
            .then(a.h_score.total_cmp(&b.h_score))
            .then_with(|| key(a).cmp(&key(b)))
    });
    order
        .into_iter()
        .find(|p| p.max_free_width >= width_threshold)
        .map_or(LocalOutcome::RerouteNeeded, |p| LocalOutcome::Heading {
            partition: p.partition.index,
        })
}

/// Signed heading toward the partition's center column, positive to the right.
pub fn heading_angle(partition: &Partition, width: u32, hfov_deg: f64) -> f64 {
    let w = f64::from(width);
    (partition.center_column() - w / 2.0) / w * hfov_deg
}
