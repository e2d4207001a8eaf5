use crate::perception::{DepthMap, MaskGrid};

use super::PlannerError;

/// One vertical strip of the frame covering columns `x_start..x_end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Partition {
    pub index: usize,
    pub x_start: u32,
    pub x_end: u32,
}

impl Partition {
    pub fn width(&self) -> u32 {
        self.x_end - self.x_start
    }

    pub fn contains_column(&self, x: f64) -> bool {
        x >= f64::from(self.x_start) && x < f64::from(self.x_end)
    }

    pub fn center_column(&self) -> f64 {
        (f64::from(self.x_start) + f64::from(self.x_end)) / 2.0
    }
}

/// Splits `width` columns into `n` contiguous strips. Widths differ by at most
/// one pixel; the remainder goes to the leftmost strips.
pub fn partition_bounds(width: u32, n: usize) -> Result<Vec<Partition>, PlannerError> {
    if n == 0 || n % 2 == 0 {
        return Err(PlannerError::Partitions(format!("n = {n} must be odd and positive")));
    }
    if (width as usize) < n {
        return Err(PlannerError::Partitions(format!("width {width} smaller than n = {n}")));
    }
    let n32 = n as u32;
    let (base, rem) = (width / n32, width % n32);
    let mut out = Vec::with_capacity(n);
    let mut x = 0;
    for i in 0..n32 {
        let w = base + u32::from(i < rem);
        out.push(Partition {
            index: i as usize,
            x_start: x,
            x_end: x + w,
        });
        x += w;
    }
    Ok(out)
}

/// Sum and count of the REVs that entered a partition mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionMean {
    pub sum: u64,
    pub count: u64,
}

impl PartitionMean {
    /// Mean REV, `H(i)`; zero when every pixel was excluded.
    pub fn value(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum as f64 / self.count as f64
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Mean REV over the partition's columns, skipping pixels set in `exclude`.
pub fn mean_partition_depth(
    depth: &DepthMap,
    p: &Partition,
    exclude: Option<&MaskGrid>,
) -> PartitionMean {
    let (xs, xe) = (p.x_start as usize, (p.x_end.min(depth.width)) as usize);
    let w = depth.width as usize;
    let mut sum = 0u64;
    let mut count = 0u64;
    for y in 0..depth.height as usize {
        let row = &depth.values[y * w + xs..y * w + xe];
        match exclude {
            None => {
                sum += row.iter().map(|&v| u64::from(v)).sum::<u64>();
                count += row.len() as u64;
            }
            Some(mask) => {
                let bits = &mask.bits()[y * w + xs..y * w + xe];
                for (&v, &masked) in row.iter().zip(bits) {
                    if !masked {
                        sum += u64::from(v);
                        count += 1;
                    }
                }
            }
        }
    }
    PartitionMean { sum, count }
}
