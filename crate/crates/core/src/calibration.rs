//! Relative-depth to metric-distance calibration.
//!
//! A quadratic `distance = a * rev^2 + b * rev + c` is fitted by ordinary least
//! squares over REVs normalized to `[0, 1]`. The normal equations are avoided;
//! the 3-column design matrix is reduced with Householder reflections.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::{BoundingBox, DepthMap, Detection, MaskGrid, PerceptionFrame};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("rank-deficient fit: need at least 3 distinct rev values, found {distinct}")]
    RankDeficient { distinct: usize },
    #[error("invalid sample {index}: {reason}")]
    InvalidSample { index: usize, reason: String },
    #[error("rev {0} outside [0, 1]")]
    RevOutOfRange(f64),
    #[error("no samples")]
    Empty,
    #[error("detection region contains no pixels")]
    EmptyRegion,
    #[error("calibration samples: {0}")]
    Csv(String),
    #[error("calibration model: {0}")]
    Model(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    /// Relative depth normalized from 16 bits to `[0, 1]`.
    pub rev: f64,
    #[serde(rename = "distance_m")]
    pub distance: f64,
}

impl CalibrationSample {
    pub fn new(rev: f64, distance: f64) -> Self {
        Self { rev, distance }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub rmse: f64,
    pub n_samples: usize,
}

impl CalibrationModel {
    pub fn from_coefficients(a: f64, b: f64, c: f64) -> Self {
        Self {
            a,
            b,
            c,
            rmse: 0.0,
            n_samples: 0,
        }
    }

    pub fn coefficients(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn predict(&self, rev: f64) -> Result<f64, CalibrationError> {
        predict(self, rev)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CalibrationError> {
        let m: Self = serde_json::from_str(s).map_err(|e| CalibrationError::Model(e.to_string()))?;
        if !(m.a.is_finite() && m.b.is_finite() && m.c.is_finite()) {
            return Err(CalibrationError::Model("non-finite coefficient".into()));
        }
        Ok(m)
    }
}

fn check_samples(samples: &[CalibrationSample]) -> Result<(), CalibrationError> {
    for (index, s) in samples.iter().enumerate() {
        if !(0.0..=1.0).contains(&s.rev) {
            return Err(CalibrationError::InvalidSample {
                index,
                reason: format!("rev {} outside [0, 1]", s.rev),
            });
        }
        if !(s.distance > 0.0 && s.distance.is_finite()) {
            return Err(CalibrationError::InvalidSample {
                index,
                reason: format!("distance {} must be positive", s.distance),
            });
        }
    }
    Ok(())
}

/// Least-squares quadratic fit. Requires at least three distinct rev values.
pub fn fit(samples: &[CalibrationSample]) -> Result<CalibrationModel, CalibrationError> {
    check_samples(samples)?;
    let mut revs: Vec<f64> = samples.iter().map(|s| s.rev).collect();
    revs.sort_by(f64::total_cmp);
    revs.dedup();
    if revs.len() < 3 {
        return Err(CalibrationError::RankDeficient {
            distinct: revs.len(),
        });
    }

    let n = samples.len();
    // column-major design matrix [rev^2, rev, 1]
    let mut cols: [Vec<f64>; 3] = [
        samples.iter().map(|s| s.rev * s.rev).collect(),
        samples.iter().map(|s| s.rev).collect(),
        vec![1.0; n],
    ];
    let mut rhs: Vec<f64> = samples.iter().map(|s| s.distance).collect();

    for k in 0..3 {
        let norm = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(CalibrationError::RankDeficient { distinct: revs.len() });
        }
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let v_norm_sq: f64 = v.iter().map(|x| x * x).sum();
        if v_norm_sq > 0.0 {
            for col in cols.iter_mut().skip(k) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum();
                let scale = 2.0 * dot / v_norm_sq;
                for (c, vi) in col[k..].iter_mut().zip(&v) {
                    *c -= scale * vi;
                }
            }
            let dot: f64 = v.iter().zip(&rhs[k..]).map(|(a, b)| a * b).sum();
            let scale = 2.0 * dot / v_norm_sq;
            for (r, vi) in rhs[k..].iter_mut().zip(&v) {
                *r -= scale * vi;
            }
        }
    }

    let diag_scale = (0..3).map(|k| cols[k][k].abs()).fold(0.0, f64::max);
    if (0..3).any(|k| cols[k][k].abs() <= 1e-13 * diag_scale) {
        return Err(CalibrationError::RankDeficient { distinct: revs.len() });
    }

    // back substitution on the 3x3 upper triangle
    let mut coef = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut acc = rhs[i];
        for j in i + 1..3 {
            acc -= cols[j][i] * coef[j];
        }
        coef[i] = acc / cols[i][i];
    }

    let mut model = CalibrationModel {
        a: coef[0],
        b: coef[1],
        c: coef[2],
        rmse: 0.0,
        n_samples: n,
    };
    model.rmse = rmse(&model, samples)?;
    Ok(model)
}

/// Metric distance for a normalized rev, floored at zero.
pub fn predict(model: &CalibrationModel, rev: f64) -> Result<f64, CalibrationError> {
    if !(0.0..=1.0).contains(&rev) {
        return Err(CalibrationError::RevOutOfRange(rev));
    }
    Ok((model.a * rev * rev + model.b * rev + model.c).max(0.0))
}

pub fn rmse(model: &CalibrationModel, samples: &[CalibrationSample]) -> Result<f64, CalibrationError> {
    if samples.is_empty() {
        return Err(CalibrationError::Empty);
    }
    let mut sum = 0.0;
    for s in samples {
        let e = predict(model, s.rev)? - s.distance;
        sum += e * e;
    }
    Ok((sum / samples.len() as f64).sqrt())
}

/// Median REV over the box, restricted to `mask` when given. Even counts take
/// the lower of the two middle values. `None` when no pixel qualifies.
pub fn region_median(depth: &DepthMap, bbox: &BoundingBox, mask: Option<&MaskGrid>) -> Option<u16> {
    let x2 = bbox.x2.min(depth.width);
    let y2 = bbox.y2.min(depth.height);
    if bbox.x1 >= x2 || bbox.y1 >= y2 {
        return None;
    }
    let mut values = Vec::with_capacity(((x2 - bbox.x1) * (y2 - bbox.y1)) as usize);
    for y in bbox.y1..y2 {
        let row = depth.row(y);
        match mask {
            Some(m) => values.extend(
                (bbox.x1..x2)
                    .filter(|&x| m.get(x, y))
                    .map(|x| row[x as usize]),
            ),
            None => values.extend_from_slice(&row[bbox.x1 as usize..x2 as usize]),
        }
    }
    if values.is_empty() {
        return None;
    }
    let mid = (values.len() - 1) / 2;
    Some(*values.select_nth_unstable(mid).1)
}

/// Camera-to-object distance of one detection. The region is the box,
/// intersected with the detection's instance mask (or the VIP mask for the
/// VIP) when the frame carries one.
pub fn detection_distance(
    frame: &PerceptionFrame,
    det: &Detection,
    model: &CalibrationModel,
) -> Result<f64, CalibrationError> {
    let mask = if det.is_vip() {
        frame.vip_mask.as_ref()
    } else {
        det.track_id.and_then(|id| frame.instance_masks.get(&id))
    };
    let grid = match mask {
        Some(m) => Some(m.decode().map_err(|e| CalibrationError::Model(e.to_string()))?),
        None => None,
    };
    let rev = region_median(&frame.depth, &det.bbox, grid.as_ref()).ok_or(CalibrationError::EmptyRegion)?;
    predict(model, f64::from(rev) / 65535.0)
}

/// Reads `rev,distance_m` rows.
pub fn read_samples_csv<R: Read>(reader: R) -> Result<Vec<CalibrationSample>, CalibrationError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CalibrationError::Csv(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "rev" || &headers[1] != "distance_m" {
        return Err(CalibrationError::Csv(format!(
            "expected header `rev,distance_m`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let s: CalibrationSample = row.map_err(|e| CalibrationError::Csv(e.to_string()))?;
        out.push(s);
    }
    check_samples(&out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::PerceptionFrame;

    fn on_curve(a: f64, b: f64, c: f64, revs: &[f64]) -> Vec<CalibrationSample> {
        revs.iter()
            .map(|&r| CalibrationSample::new(r, a * r * r + b * r + c))
            .collect()
    }

    #[test]
    fn exact_quadratic() {
        let m = fit(&on_curve(2.0, 3.0, 1.0, &[0.0, 0.25, 0.5, 0.75, 1.0])).unwrap();
        assert!((m.a - 2.0).abs() < 1e-9 && (m.b - 3.0).abs() < 1e-9 && (m.c - 1.0).abs() < 1e-9);
        assert!(m.rmse <= 1e-9);
        assert_eq!(m.n_samples, 5);
    }

    #[test]
    fn constant_fit() {
        let m = fit(&on_curve(0.0, 0.0, 5.0, &[0.1, 0.3, 0.6, 0.9])).unwrap();
        assert!(m.a.abs() < 1e-9 && m.b.abs() < 1e-9 && (m.c - 5.0).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient() {
        let s = on_curve(1.0, 1.0, 1.0, &[0.2, 0.2, 0.7, 0.7, 0.7]);
        assert_eq!(fit(&s), Err(CalibrationError::RankDeficient { distinct: 2 }));
        assert!(fit(&[]).is_err());
    }

    #[test]
    fn predict_examples() {
        let m = CalibrationModel::from_coefficients(0.0, 0.0, 5.0);
        assert_eq!(predict(&m, 0.37).unwrap(), 5.0);
        let m = CalibrationModel::from_coefficients(2.0, 3.0, 1.0);
        assert_eq!(predict(&m, 0.5).unwrap(), 3.0);
        let m = CalibrationModel::from_coefficients(0.0, -10.0, 1.0);
        assert_eq!(predict(&m, 0.5).unwrap(), 0.0);
        assert!(predict(&m, 1.5).is_err());
        assert!(predict(&m, f64::NAN).is_err());
    }

    #[test]
    fn rmse_examples() {
        let m = CalibrationModel::from_coefficients(0.0, 0.0, 5.0);
        assert_eq!(rmse(&m, &[CalibrationSample::new(0.5, 5.0)]).unwrap(), 0.0);
        assert_eq!(rmse(&m, &[CalibrationSample::new(0.5, 7.0)]).unwrap(), 2.0);
        let two = [CalibrationSample::new(0.1, 8.0), CalibrationSample::new(0.2, 9.0)];
        assert!((rmse(&m, &two).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(rmse(&m, &[]), Err(CalibrationError::Empty));
    }

    #[test]
    fn detection_distance_uniform() {
        let frame = PerceptionFrame::bare(0, 0.0, DepthMap::filled(20, 20, 32768));
        let det = Detection::new("car", BoundingBox::new(2, 2, 10, 10), 0.9);
        let m = CalibrationModel::from_coefficients(0.0, 1.0, 0.0);
        let d = detection_distance(&frame, &det, &m).unwrap();
        assert!((d - 32768.0 / 65535.0).abs() < 1e-12);
    }

    #[test]
    fn median_takes_lower_middle() {
        // left half 100, right half 40000
        let mut depth = DepthMap::filled(4, 2, 100);
        for y in 0..2 {
            for x in 2..4 {
                depth.values[y * 4 + x] = 40000;
            }
        }
        let bbox = BoundingBox::new(0, 0, 4, 2);
        assert_eq!(region_median(&depth, &bbox, None), Some(100));

        let mut mask = MaskGrid::empty(4, 2);
        mask.fill_rect(0, 0, 4, 2, true);
        mask.fill_rect(0, 0, 2, 2, false);
        assert_eq!(region_median(&depth, &bbox, Some(&mask)), Some(40000));
        assert_eq!(region_median(&depth, &bbox, Some(&MaskGrid::empty(4, 2))), None);
    }

    #[test]
    fn model_json_shape() {
        let m = CalibrationModel {
            a: 1.5,
            b: -2.0,
            c: 3.0,
            rmse: 0.25,
            n_samples: 10,
        };
        assert_eq!(m.to_json(), r#"{"a":1.5,"b":-2.0,"c":3.0,"rmse":0.25,"n_samples":10}"#);
        assert_eq!(CalibrationModel::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn csv_samples() {
        let text = "rev,distance_m\n0.1,9.0\n0.5, 3.0\n";
        let s = read_samples_csv(text.as_bytes()).unwrap();
        assert_eq!(s, vec![CalibrationSample::new(0.1, 9.0), CalibrationSample::new(0.5, 3.0)]);
        assert!(read_samples_csv("r,d\n0.1,2\n".as_bytes()).is_err());
        assert!(read_samples_csv("rev,distance_m\n1.5,2\n".as_bytes()).is_err());
    }
}
