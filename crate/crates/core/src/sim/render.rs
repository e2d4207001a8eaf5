use serde::{Deserialize, Serialize};

use crate::perception::{BoundingBox, DepthMap};

/// Pinhole camera with a horizontal optical axis. Camera frame: x right,
/// y down, z forward; `height_m` is the optical center's height above ground.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    pub width: u32,
    pub height: u32,
    pub height_m: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            hfov_deg: 80.0,
            // square pixels at 640x480
            vfov_deg: 64.42,
            width: 640,
            height: 480,
            height_m: 3.5,
        }
    }
}

impl Camera {
    pub fn fx(&self) -> f64 {
        f64::from(self.width) / 2.0 / (self.hfov_deg.to_radians() / 2.0).tan()
    }

    pub fn fy(&self) -> f64 {
        f64::from(self.height) / 2.0 / (self.vfov_deg.to_radians() / 2.0).tan()
    }

    pub fn cx(&self) -> f64 {
        f64::from(self.width) / 2.0
    }

    pub fn cy(&self) -> f64 {
        f64::from(self.height) / 2.0
    }

    /// Forward distance of the ground seen through the center of row `v`,
    /// or `None` at and above the horizon.
    pub fn ground_depth(&self, v: u32) -> Option<f64> {
        let below = f64::from(v) + 0.5 - self.cy();
        (below > 0.0).then(|| self.height_m * self.fy() / below)
    }
}

/// Mapping from metric depth to a 16-bit REV (larger = nearer).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RevLaw {
    /// `65535 * clamp(z_near / z, 0, 1)`.
    InverseDepth { z_near: f64 },
    /// `65535 * (1 - sqrt(s))` with `s = clamp((z - z_near) / (z_far - z_near), 0, 1)`,
    /// so metric depth is exactly quadratic in the normalized REV.
    QuadraticFalloff { z_near: f64, z_far: f64 },
}

impl Default for RevLaw {
    fn default() -> Self {
        RevLaw::QuadraticFalloff {
            z_near: 1.0,
            z_far: 20.0,
        }
    }
}

impl RevLaw {
    pub fn rev(&self, z: f64) -> u16 {
        let r = match *self {
            RevLaw::InverseDepth { z_near } => (z_near / z).clamp(0.0, 1.0),
            RevLaw::QuadraticFalloff { z_near, z_far } => {
                1.0 - ((z - z_near) / (z_far - z_near)).clamp(0.0, 1.0).sqrt()
            }
        };
        (65535.0 * r).round() as u16
    }

    /// Depth range over which the law is invertible.
    pub fn valid_range(&self) -> (f64, f64) {
        match *self {
            RevLaw::InverseDepth { z_near } => (z_near, f64::INFINITY),
            RevLaw::QuadraticFalloff { z_near, z_far } => (z_near, z_far),
        }
    }
}

/// A camera-facing rectangle. `position` is the rectangle's center in the
/// camera frame; `size` is (width, height) in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub kind: String,
    pub position: [f64; 3],
    pub size: [f64; 2],
    /// Emitted as a detection; unlabeled objects only show up in depth.
    pub labeled: bool,
}

impl SceneObject {
    /// An object standing on the ground at lateral offset `x`, depth `z`.
    pub fn grounded(kind: &str, x: f64, z: f64, w: f64, h: f64, labeled: bool, camera: &Camera) -> Self {
        Self {
            kind: kind.to_string(),
            position: [x, camera.height_m - h / 2.0, z],
            size: [w, h],
            labeled,
        }
    }

    pub fn z(&self) -> f64 {
        self.position[2]
    }
}

/// Unclipped pixel rectangle `(x1, y1, x2, y2)` of an object, half-open.
/// Widths are `round(f * size / z)` so that the rasterized extent matches the
/// pinhole scale exactly.
pub(crate) fn project_rect(obj: &SceneObject, cam: &Camera) -> Option<(i64, i64, i64, i64)> {
    let [x, y, z] = obj.position;
    if !(z > 0.0) {
        return None;
    }
    let (fx, fy) = (cam.fx(), cam.fy());
    let w_px = (fx * obj.size[0] / z).round();
    let h_px = (fy * obj.size[1] / z).round();
    let u = cam.cx() + fx * x / z;
    let v = cam.cy() + fy * y / z;
    let x1 = (u - w_px / 2.0).round();
    let y1 = (v - h_px / 2.0).round();
    if !(x1.is_finite() && y1.is_finite()) || x1.abs() > 1e9 || y1.abs() > 1e9 {
        return None;
    }
    Some((x1 as i64, y1 as i64, (x1 + w_px) as i64, (y1 + h_px) as i64))
}

fn clip(rect: (i64, i64, i64, i64), cam: &Camera) -> Option<(u32, u32, u32, u32)> {
    let (w, h) = (i64::from(cam.width), i64::from(cam.height));
    let x1 = rect.0.clamp(0, w);
    let y1 = rect.1.clamp(0, h);
    let x2 = rect.2.clamp(0, w);
    let y2 = rect.3.clamp(0, h);
    (x1 < x2 && y1 < y2).then_some((x1 as u32, y1 as u32, x2 as u32, y2 as u32))
}

/// Image-plane box of the object, clipped to the frame. `None` when the object
/// is behind the camera or entirely off-frame.
pub fn project_bbox(obj: &SceneObject, cam: &Camera) -> Option<BoundingBox> {
    let (x1, y1, x2, y2) = clip(project_rect(obj, cam)?, cam)?;
    Some(BoundingBox::new(x1, y1, x2, y2))
}

/// Depth plus, per pixel, the index of the object that won it.
pub(crate) struct RenderedScene {
    pub depth: DepthMap,
    pub owner: Vec<Option<u32>>,
}

pub(crate) fn render_scene(objects: &[SceneObject], cam: &Camera, law: &RevLaw) -> RenderedScene {
    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut values = Vec::with_capacity(w * h);
    for v in 0..cam.height {
        let rev = cam.ground_depth(v).map_or(0, |z| law.rev(z));
        values.extend(std::iter::repeat_n(rev, w));
    }
    let mut owner = vec![None; w * h];

    // painter's order: farthest first, so the nearest object wins
    let mut order: Vec<usize> = (0..objects.len()).filter(|&i| objects[i].z() > 0.0).collect();
    order.sort_by(|&a, &b| objects[b].z().total_cmp(&objects[a].z()));
    for i in order {
        let obj = &objects[i];
        let Some((x1, y1, x2, y2)) = project_rect(obj, cam).and_then(|r| clip(r, cam)) else {
            continue;
        };
        let rev = law.rev(obj.z());
        for y in y1 as usize..y2 as usize {
            values[y * w + x1 as usize..y * w + x2 as usize].fill(rev);
            owner[y * w + x1 as usize..y * w + x2 as usize].fill(Some(i as u32));
        }
    }
    RenderedScene {
        depth: DepthMap {
            width: cam.width,
            height: cam.height,
            values,
        },
        owner,
    }
}

/// Ideal pinhole depth rendering: objects are flat rectangles over a
/// ground-plane gradient; the sky (at and above the horizon) is REV 0.
pub fn render_depth(objects: &[SceneObject], cam: &Camera, law: &RevLaw) -> DepthMap {
    render_scene(objects, cam, law).depth
}
