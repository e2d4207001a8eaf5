//! Drone positioning envelope relative to the VIP and forward safety distances.
//!
//! Conventions: lengths in meters, times in seconds, angles in degrees at every
//! public boundary. The camera's optical axis is horizontal and the drone's
//! heading coincides with the VIP's.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible envelope: d_min = {d_min:.3} m exceeds d_max = {d_max:.3} m")]
    Infeasible { d_min: f64, d_max: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometricConfig {
    /// Vertical field of view.
    pub f_deg: f64,
    /// Horizontal field of view, used for heading angles.
    pub hfov_deg: f64,
    pub h_vip_m: f64,
    pub h_max_m: f64,
    pub d_min_floor_m: f64,
    pub d_max_ceiling_m: f64,
    pub walk_speed_mps: f64,
    pub t_detect_s: f64,
    pub t_react_s: f64,
    pub buffer_factor: f64,
    /// Effective obstacle-detection range of the camera.
    pub perception_range_m: f64,
    /// Fraction of the VIP's body, from the head down, that must stay in view.
    pub visible_fraction: f64,
}

impl Default for GeometricConfig {
    fn default() -> Self {
        Self {
            f_deg: 82.6,
            hfov_deg: 80.0,
            h_vip_m: 1.7,
            h_max_m: 2.0,
            d_min_floor_m: 1.0,
            d_max_ceiling_m: 10.0,
            walk_speed_mps: 1.0,
            // 10 + 27 + 108 + 16 ms of perception inference
            t_detect_s: 0.161,
            t_react_s: 1.0,
            buffer_factor: 0.05,
            perception_range_m: 15.0,
            visible_fraction: 2.0 / 3.0,
        }
    }
}

impl GeometricConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let fail = |msg: String| Err(GeometryError::Domain(msg));
        if !(self.f_deg > 0.0 && self.f_deg < 180.0) {
            return fail(format!("f_deg = {} must lie in (0, 180)", self.f_deg));
        }
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            return fail(format!("hfov_deg = {} must lie in (0, 180)", self.hfov_deg));
        }
        if !(self.h_vip_m > 0.0) {
            return fail(format!("h_vip_m = {} must be positive", self.h_vip_m));
        }
        if !(self.h_max_m >= self.h_vip_m) {
            return fail(format!("h_max_m = {} must be >= h_vip_m", self.h_max_m));
        }
        if !(self.walk_speed_mps >= 0.0 && self.t_detect_s >= 0.0 && self.t_react_s >= 0.0) {
            return fail("walk speed and times must be non-negative".into());
        }
        if !(self.visible_fraction > 0.0 && self.visible_fraction <= 1.0) {
            return fail(format!("visible_fraction = {} must lie in (0, 1]", self.visible_fraction));
        }
        if !(self.buffer_factor >= 0.0) {
            return fail("buffer_factor must be non-negative".into());
        }
        if !(self.perception_range_m > 0.0) {
            return fail("perception_range_m must be positive".into());
        }
        if !(self.d_min_floor_m > 0.0 && self.d_min_floor_m <= self.d_max_ceiling_m) {
            return fail("distance floor/ceiling out of order".into());
        }
        Ok(())
    }

    pub fn safety_distance(&self) -> Result<f64, GeometryError> {
        safety_distance(self.walk_speed_mps, self.t_detect_s, self.t_react_s)
    }

    fn half_fov_tan(&self) -> f64 {
        (self.f_deg.to_radians() / 2.0).tan()
    }
}

/// Height offset at which the top of the VIP's head sits on the edge of the
/// vertical field of view: `d * tan(f / 2)`.
pub fn visibility_offset(f_deg: f64, d: f64) -> Result<f64, GeometryError> {
    if !(f_deg > 0.0 && f_deg < 180.0) {
        return Err(GeometryError::Domain(format!("field of view {f_deg} outside (0, 180)")));
    }
    if !(d > 0.0) {
        return Err(GeometryError::Domain(format!("distance {d} must be positive")));
    }
    Ok(d * (f_deg.to_radians() / 2.0).tan())
}

/// Obstacle-free distance needed ahead of the VIP: `x * (t_detect + t_react)`.
pub fn safety_distance(walk_speed: f64, t_detect: f64, t_react: f64) -> Result<f64, GeometryError> {
    if !(walk_speed >= 0.0 && t_detect >= 0.0 && t_react >= 0.0) {
        return Err(GeometryError::Domain(format!(
            "negative input: x = {walk_speed}, t_detect = {t_detect}, t_react = {t_react}"
        )));
    }
    Ok(walk_speed * (t_detect + t_react))
}

/// Distance the camera must see ahead of the drone: `d + d' + buffer_factor * d'`.
pub fn lookahead(d: f64, safety: f64, buffer_factor: f64) -> f64 {
    d + safety + buffer_factor * safety
}

/// Smallest standoff at which the top `visible_fraction` of the VIP fits in the
/// vertical field of view from height offset `h_offset`, floored at the
/// configured minimum distance.
pub fn min_distance_for_visibility(h_offset: f64, cfg: &GeometricConfig) -> f64 {
    let needed = (h_offset + cfg.visible_fraction * cfg.h_vip_m) / cfg.half_fov_tan();
    needed.max(cfg.d_min_floor_m)
}

/// Admissible drone poses: the segment between the near endpoint
/// `(h_max, d_min)` and the far endpoint `(h_vip, d_max)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseEnvelope {
    pub h_max: f64,
    pub d_min: f64,
    pub h_vip: f64,
    pub d_max: f64,
}

impl PoseEnvelope {
    /// Pose at parameter `t` in `[0, 1]`, from the near endpoint to the far one.
    pub fn interpolate(&self, t: f64) -> (f64, f64) {
        (
            self.h_max + (self.h_vip - self.h_max) * t,
            self.d_min + (self.d_max - self.d_min) * t,
        )
    }
}

pub fn pose_envelope(cfg: &GeometricConfig) -> Result<PoseEnvelope, GeometryError> {
    cfg.validate()?;
    let d_min = min_distance_for_visibility(cfg.h_max_m, cfg);
    let safety = cfg.safety_distance()?;
    // camera must cover d + d' + buffer within its perception range
    let range_limited = cfg.perception_range_m - safety - cfg.buffer_factor * safety;
    let d_max = cfg.d_max_ceiling_m.min(range_limited);
    if d_min > d_max {
        return Err(GeometryError::Infeasible { d_min, d_max });
    }
    Ok(PoseEnvelope {
        h_max: cfg.h_max_m,
        d_min,
        h_vip: cfg.h_vip_m,
        d_max,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum PoseViolation {
    HeadNotVisible { ratio: f64, limit: f64 },
    BelowFloor { d: f64, floor: f64 },
    BelowMinDistance { d: f64, d_min: f64 },
    AboveMaxDistance { d: f64, d_max: f64 },
    OffsetBelowVipHeight { h: f64, h_vip: f64 },
    OffsetAboveMax { h: f64, h_max: f64 },
}

impl std::fmt::Display for PoseViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::HeadNotVisible { ratio, limit } => {
                write!(f, "head not visible: h'/d = {ratio:.4} > tan(f/2) = {limit:.4}")
            }
            Self::BelowFloor { d, floor } => write!(f, "d = {d} m below {floor} m floor"),
            Self::BelowMinDistance { d, d_min } => {
                write!(f, "d = {d} m below envelope minimum {d_min:.3} m")
            }
            Self::AboveMaxDistance { d, d_max } => {
                write!(f, "d = {d} m above envelope maximum {d_max:.3} m")
            }
            Self::OffsetBelowVipHeight { h, h_vip } => {
                write!(f, "h' = {h} m below VIP height {h_vip} m")
            }
            Self::OffsetAboveMax { h, h_max } => write!(f, "h' = {h} m above maximum {h_max} m"),
        }
    }
}

/// Lists every violated pose constraint; an empty list means the pose is valid.
/// When the envelope itself is infeasible the distance bounds fall back to the
/// configured floor and ceiling.
pub fn validate_pose(h_offset: f64, d: f64, cfg: &GeometricConfig) -> Vec<PoseViolation> {
    // relative slack for poses computed exactly on an envelope boundary
    const EPS: f64 = 1e-9;
    let mut out = Vec::new();
    let limit = cfg.half_fov_tan();
    let ratio = if d > 0.0 { h_offset / d } else { f64::INFINITY };
    if ratio > limit * (1.0 + EPS) {
        out.push(PoseViolation::HeadNotVisible { ratio, limit });
    }
    let (d_min, d_max) = match pose_envelope(cfg) {
        Ok(env) => (env.d_min, env.d_max),
        Err(_) => (cfg.d_min_floor_m, cfg.d_max_ceiling_m),
    };
    if d < cfg.d_min_floor_m {
        out.push(PoseViolation::BelowFloor {
            d,
            floor: cfg.d_min_floor_m,
        });
    } else if d < d_min * (1.0 - EPS) {
        out.push(PoseViolation::BelowMinDistance { d, d_min });
    }
    if d > d_max * (1.0 + EPS) {
        out.push(PoseViolation::AboveMaxDistance { d, d_max });
    }
    if h_offset < cfg.h_vip_m * (1.0 - EPS) {
        out.push(PoseViolation::OffsetBelowVipHeight {
            h: h_offset,
            h_vip: cfg.h_vip_m,
        });
    }
    if h_offset > cfg.h_max_m * (1.0 + EPS) {
        out.push(PoseViolation::OffsetAboveMax {
            h: h_offset,
            h_max: cfg.h_max_m,
        });
    }
    out
}
