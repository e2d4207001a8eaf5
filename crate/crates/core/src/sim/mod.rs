//! Deterministic synthetic perception streams with ground truth.
//!
//! The drone follows the VIP at a fixed standoff, so the VIP stays put in the
//! camera frame while the world slides toward the camera. Each scenario lays
//! out billboards around the walkway; depth is rendered through a pinhole
//! camera, and detections, instance masks, the VIP mask and a walkway road
//! mask are derived from the same rasterization.

mod render;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::calibration::{fit, CalibrationError, CalibrationModel, CalibrationSample};
use crate::geometry::GeometricConfig;
use crate::perception::{Detection, MaskGrid, PerceptionFrame};

pub use render::{project_bbox, render_depth, Camera, RevLaw, SceneObject};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    FootpathTree,
    ParkedVehicles,
    CrowdedStreet,
    Random,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::FootpathTree,
        ScenarioKind::ParkedVehicles,
        ScenarioKind::CrowdedStreet,
        ScenarioKind::Random,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FootpathTree => "footpath_tree",
            Self::ParkedVehicles => "parked_vehicles",
            Self::CrowdedStreet => "crowded_street",
            Self::Random => "random",
        }
    }

    /// Partition (of three) the VIP should be steered into.
    pub fn expected_direction(&self) -> Option<Direction> {
        match self {
            Self::FootpathTree | Self::ParkedVehicles => Some(Direction::Right),
            Self::CrowdedStreet => Some(Direction::Left),
            Self::Random => None,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown scenario `{s}` (expected footpath_tree, parked_vehicles, crowded_street or random)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Center,
    Right,
}

impl Direction {
    pub fn of_partition(index: usize, n: usize) -> Self {
        let center = n / 2;
        match index.cmp(&center) {
            std::cmp::Ordering::Less => Self::Left,
            std::cmp::Ordering::Equal => Self::Center,
            std::cmp::Ordering::Greater => Self::Right,
        }
    }

    /// Partition index among three.
    pub fn partition_of_three(&self) -> usize {
        match self {
            Self::Left => 0,
            Self::Center => 1,
            Self::Right => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub n_frames: u32,
    pub camera: Camera,
    pub walk_speed_mps: f64,
    pub fps: f64,
    pub vip_distance_m: f64,
    pub rev_law: RevLaw,
    /// Standard deviation of additive Gaussian REV noise; 0 disables it.
    pub rev_jitter: f64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, seed: u64, n_frames: u32) -> Self {
        Self {
            kind,
            seed,
            n_frames,
            camera: Camera::default(),
            walk_speed_mps: 1.0,
            fps: 30.0,
            vip_distance_m: 4.0,
            rev_law: RevLaw::default(),
            rev_jitter: 0.0,
        }
    }

    /// Safety distance for the scenario's walking speed with the default
    /// detection and reaction times.
    pub fn safety_distance(&self) -> f64 {
        let g = GeometricConfig::default();
        self.walk_speed_mps * (g.t_detect_s + g.t_react_s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub frame_id: u64,
    pub expected_partition: Option<usize>,
    pub expected_direction: Option<Direction>,
}

/// An object plus its closing speed toward the camera. Depths wrap inside
/// `[near, near + span)`, which always starts behind the VIP, so long streams
/// keep a populated scene and nothing ever hides the VIP. A short span models
/// a recurring obstacle (a row of trees, a line of parked cars).
#[derive(Clone, Debug)]
struct Actor {
    object: SceneObject,
    approach_mps: f64,
    confidence: f64,
    near: f64,
    span: f64,
}

const WRAP_GAP: f64 = 0.1;
const WRAP_SPAN: f64 = 10.0;

/// Scene contents at one instant: the VIP and everything else.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub vip: SceneObject,
    pub objects: Vec<SceneObject>,
    /// Lateral extent of the walkway, meters.
    pub walkway: (f64, f64),
}

/// A laid-out scenario; frames are generated on demand and are a pure
/// function of `(spec, frame index)`.
#[derive(Clone, Debug)]
pub struct Scenario {
    spec: ScenarioSpec,
    vip: SceneObject,
    actors: Vec<Actor>,
    walkway: (f64, f64),
}

fn jitter(rng: &mut ChaCha8Rng, amplitude: f64) -> f64 {
    rng.random_range(-amplitude..=amplitude)
}

impl Scenario {
    pub fn new(spec: ScenarioSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let cam = spec.camera;
        let walk = spec.walk_speed_mps;
        let vip_x = jitter(&mut rng, 0.08);
        let vip = SceneObject::grounded("vip", vip_x, spec.vip_distance_m, 0.5, 1.7, true, &cam);

        let mut actors = Vec::new();
        let d_vip = spec.vip_distance_m;
        let default_window = (d_vip + WRAP_GAP, WRAP_SPAN);
        let mut add = |rng: &mut ChaCha8Rng, obj: SceneObject, approach: f64, (near, span): (f64, f64)| {
            let confidence = rng.random_range(0.6..0.95);
            actors.push(Actor {
                object: obj,
                approach_mps: approach,
                confidence,
                near,
                span,
            });
        };

        let walkway = match spec.kind {
            ScenarioKind::FootpathTree => {
                // a tree overhanging the footpath right in front of the VIP,
                // a hedge along the left margin; neither is a detector class
                let x = 0.15 + jitter(&mut rng, 0.1);
                let z = d_vip + 1.6 + jitter(&mut rng, 0.2);
                add(&mut rng, SceneObject::grounded("tree", x, z, 1.0, 4.0, false, &cam), walk, (d_vip + 0.5, 2.5));
                // evenly spaced over the whole wrap window so the hedge never breaks
                for k in 0..9 {
                    let z = d_vip + 0.8 + WRAP_SPAN / 9.0 * k as f64 + jitter(&mut rng, 0.1);
                    let x = -1.8 + jitter(&mut rng, 0.05);
                    add(&mut rng, SceneObject::grounded("wall", x, z, 1.2, 1.4, false, &cam), walk, default_window);
                }
                (-1.1, 1.6)
            }
            ScenarioKind::ParkedVehicles => {
                // nearest car juts into the path ahead-left; the rest line the kerb
                let x = -0.25 + jitter(&mut rng, 0.08);
                let z = d_vip + 1.0 + jitter(&mut rng, 0.05);
                add(&mut rng, SceneObject::grounded("car", x, z, 2.3, 1.5, true, &cam), walk, (d_vip + 0.5, 2.5));
                for &(z0, spread) in &[(2.4, 0.2), (5.3, 0.3), (8.5, 0.3)] {
                    let z = d_vip + z0 + jitter(&mut rng, spread);
                    let x = -1.9 + jitter(&mut rng, 0.1);
                    add(&mut rng, SceneObject::grounded("car", x, z, 1.8, 1.5, true, &cam), walk, default_window);
                }
                (-1.2, 3.0)
            }
            ScenarioKind::CrowdedStreet => {
                // pedestrians walking slightly slower than the VIP fill the
                // center and right of the walkway
                let drift = 0.1 * walk;
                for &x0 in &[-0.82, -0.28, 0.26, 0.80] {
                    let x = x0 + jitter(&mut rng, 0.04);
                    let z = d_vip + rng.random_range(0.8..1.0);
                    let h = 1.7 + jitter(&mut rng, 0.1);
                    add(&mut rng, SceneObject::grounded("person", x, z, 0.5, h, true, &cam), drift, (d_vip + 0.6, 0.5));
                }
                for &(x0, z0) in &[(1.5, 1.5), (2.3, 3.0), (1.9, 5.0)] {
                    let x = x0 + jitter(&mut rng, 0.1);
                    let z = d_vip + z0 + jitter(&mut rng, 0.3);
                    let h = 1.7 + jitter(&mut rng, 0.1);
                    add(&mut rng, SceneObject::grounded("person", x, z, 0.5, h, true, &cam), drift, default_window);
                }
                (-3.0, 3.0)
            }
            ScenarioKind::Random => {
                let count = rng.random_range(0..=8);
                for _ in 0..count {
                    let (kind, w, h, labeled) = match rng.random_range(0..4) {
                        0 => ("person", 0.5, 1.7, true),
                        1 => ("car", 1.8, 1.5, true),
                        2 => ("tree", 1.0, 4.0, false),
                        _ => ("wall", 1.2, 1.4, false),
                    };
                    let x = rng.random_range(-4.0..4.0);
                    let z = rng.random_range(default_window.0..default_window.0 + WRAP_SPAN);
                    let approach = rng.random_range(0.0..=walk);
                    add(&mut rng, SceneObject::grounded(kind, x, z, w, h, labeled, &cam), approach, default_window);
                }
                (-2.0, 2.0)
            }
        };

        Self {
            spec,
            vip,
            actors,
            walkway,
        }
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn timestamp(&self, frame: u32) -> f64 {
        f64::from(frame) / self.spec.fps
    }

    pub fn scene_at(&self, frame: u32) -> Scene {
        let t = self.timestamp(frame);
        let objects = self
            .actors
            .iter()
            .map(|a| {
                let mut o = a.object.clone();
                let travelled = o.position[2] - a.near - a.approach_mps * t;
                o.position[2] = a.near + travelled.rem_euclid(a.span);
                o
            })
            .collect();
        Scene {
            vip: self.vip.clone(),
            objects,
            walkway: self.walkway,
        }
    }

    pub fn ground_truth(&self, frame: u32) -> GroundTruth {
        let dir = self.spec.kind.expected_direction();
        GroundTruth {
            frame_id: u64::from(frame),
            expected_partition: dir.map(|d| d.partition_of_three()),
            expected_direction: dir,
        }
    }

    pub fn frame(&self, frame: u32) -> PerceptionFrame {
        let cam = &self.spec.camera;
        let scene = self.scene_at(frame);
        // index 0 is the VIP, actors follow in layout order
        let mut all = Vec::with_capacity(scene.objects.len() + 1);
        all.push(scene.vip.clone());
        all.extend(scene.objects.iter().cloned());
        let rendered = render::render_scene(&all, cam, &self.spec.rev_law);
        let mut depth = rendered.depth;

        let (w, h) = (cam.width, cam.height);
        let mask_of = |idx: u32| -> MaskGrid {
            let bits = rendered.owner.iter().map(|o| *o == Some(idx)).collect();
            MaskGrid::new(w, h, bits).expect("owner map matches frame size")
        };

        let mut out = PerceptionFrame::bare(u64::from(frame), self.timestamp(frame), depth.clone());
        if let Some(b) = project_bbox(&scene.vip, cam) {
            let vip_mask = mask_of(0);
            if vip_mask.count_ones() > 0 {
                out.detections.push(Detection::new("vip", b, 0.9).with_track_id(0));
                out.vip_mask = Some(vip_mask.encode());
            }
        }
        for (i, obj) in scene.objects.iter().enumerate() {
            if !obj.labeled {
                continue;
            }
            let Some(b) = project_bbox(obj, cam) else { continue };
            let idx = i as u32 + 1;
            let mask = mask_of(idx);
            if mask.count_ones() == 0 {
                continue;
            }
            let id = u64::from(idx);
            out.detections
                .push(Detection::new(obj.kind.clone(), b, self.actors[i].confidence).with_track_id(id));
            out.instance_masks.insert(id, mask.encode());
        }

        let (lo, hi) = scene.walkway;
        let mut road = MaskGrid::empty(w, h);
        for v in 0..h {
            let Some(z) = cam.ground_depth(v) else { continue };
            for u in 0..w {
                if rendered.owner[(v * w + u) as usize].is_some() {
                    continue;
                }
                let x = (f64::from(u) + 0.5 - cam.cx()) * z / cam.fx();
                if x >= lo && x <= hi {
                    road.set(u, v, true);
                }
            }
        }
        out.road_mask = Some(road.encode());

        if self.spec.rev_jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed ^ 0x5eed_0000_0000);
            rng.set_stream(u64::from(frame));
            let noise = Normal::new(0.0, self.spec.rev_jitter).expect("finite jitter");
            for v in depth.values.iter_mut() {
                *v = (f64::from(*v) + noise.sample(&mut rng)).round().clamp(0.0, 65535.0) as u16;
            }
            out.depth = depth;
        }
        out
    }

    pub fn frames(&self) -> impl Iterator<Item = (PerceptionFrame, GroundTruth)> + '_ {
        (0..self.spec.n_frames).map(move |k| (self.frame(k), self.ground_truth(k)))
    }
}

/// Generates the stream for `spec`, lazily.
pub fn generate(spec: ScenarioSpec) -> impl Iterator<Item = (PerceptionFrame, GroundTruth)> {
    let scenario = Scenario::new(spec);
    (0..scenario.spec.n_frames).map(move |k| (scenario.frame(k), scenario.ground_truth(k)))
}

/// Ground-truth calibration pairs for a REV law: `n` depths evenly spaced in
/// `[z_lo, z_hi]`, REVs quantized to 16 bits as the renderer does.
pub fn calibration_samples(law: &RevLaw, n: usize, z_lo: f64, z_hi: f64) -> Vec<CalibrationSample> {
    (0..n)
        .map(|i| {
            let z = if n == 1 {
                z_lo
            } else {
                z_lo + (z_hi - z_lo) * i as f64 / (n - 1) as f64
            };
            CalibrationSample::new(f64::from(law.rev(z)) / 65535.0, z)
        })
        .collect()
}

/// Calibration fitted on noise-free samples of `law` over 1..15 m, as a
/// ground-truth rig would produce.
pub fn reference_calibration(law: &RevLaw) -> Result<CalibrationModel, CalibrationError> {
    let (lo, hi) = law.valid_range();
    let samples = calibration_samples(law, 64, lo.max(1.0), hi.min(15.0));
    fit(&samples)
}
