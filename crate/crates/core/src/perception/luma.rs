use super::types::DepthMap;
use super::CodecError;

/// BT.601 luma: `round(0.299 R + 0.587 G + 0.114 B)` per pixel, computed in
/// exact integer arithmetic (halves round up).
pub fn luma_convert(rgb: &[u8]) -> Result<Vec<u8>, CodecError> {
    if rgb.len() % 3 != 0 {
        return Err(CodecError::field(
            "rgb",
            format!("length {} is not a multiple of 3", rgb.len()),
        ));
    }
    Ok(rgb
        .chunks_exact(3)
        .map(|p| {
            let weighted =
                299 * u32::from(p[0]) + 587 * u32::from(p[1]) + 114 * u32::from(p[2]) + 500;
            (weighted / 1000).min(255) as u8
        })
        .collect())
}

/// Ingests an 8-bit RGB depth rendering: gray conversion, then ×257 widening
/// so that 255 maps onto the full 16-bit range.
pub fn depth_from_rgb(width: u32, height: u32, rgb: &[u8]) -> Result<DepthMap, CodecError> {
    let gray = luma_convert(rgb)?;
    DepthMap::new(width, height, gray.into_iter().map(|g| u16::from(g) * 257).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primaries() {
        assert_eq!(luma_convert(&[255, 255, 255]).unwrap(), vec![255]);
        assert_eq!(luma_convert(&[0, 0, 0]).unwrap(), vec![0]);
        // 0.299 * 255 = 76.245
        assert_eq!(luma_convert(&[255, 0, 0]).unwrap(), vec![76]);
        // 0.587 * 255 = 149.685, 0.114 * 255 = 29.07
        assert_eq!(luma_convert(&[0, 255, 0, 0, 0, 255]).unwrap(), vec![150, 29]);
    }

    #[test]
    fn matches_float_formula() {
        for r in (0..=255u32).step_by(5) {
            for g in (0..=255u32).step_by(7) {
                for b in (0..=255u32).step_by(11) {
                    let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
                    if (y.fract() - 0.5).abs() < 1e-9 {
                        // exact halves are ambiguous in binary floating point
                        continue;
                    }
                    let expected = y.round().clamp(0.0, 255.0) as u8;
                    let got = luma_convert(&[r as u8, g as u8, b as u8]).unwrap()[0];
                    assert_eq!(got, expected, "rgb=({r},{g},{b})");
                }
            }
        }
    }

    #[test]
    fn rejects_ragged_input() {
        assert!(luma_convert(&[1, 2]).is_err());
    }

    #[test]
    fn widened_depth() {
        let d = depth_from_rgb(2, 1, &[255, 255, 255, 0, 0, 0]).unwrap();
        assert_eq!(d.values, vec![65535, 0]);
    }
}
