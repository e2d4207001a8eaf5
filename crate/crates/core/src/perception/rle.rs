//! Run-length codec for binary masks.

use super::types::BitMask;
use super::CodecError;

/// Dense row-major boolean grid, `true` = foreground.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskGrid {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl MaskGrid {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, CodecError> {
        if width == 0 || height == 0 {
            return Err(CodecError::Consistency("mask dimensions must be positive".into()));
        }
        if bits.len() != width as usize * height as usize {
            return Err(CodecError::Consistency(format!(
                "mask has {} cells, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    /// Sets every cell of the half-open rectangle, clipped to the grid.
    pub fn fill_rect(&mut self, x1: u32, y1: u32, x2: u32, y2: u32, value: bool) {
        let (x2, y2) = (x2.min(self.width), y2.min(self.height));
        for y in y1..y2 {
            let row = y as usize * self.width as usize;
            for x in x1..x2 {
                self.bits[row + x as usize] = value;
            }
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn encode(&self) -> BitMask {
        rle_encode(self)
    }
}

/// Canonical encoding: leading background run (possibly zero), then strictly
/// positive alternating runs. No trailing zero run is emitted.
pub fn rle_encode(grid: &MaskGrid) -> BitMask {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0u32;
    for &bit in &grid.bits {
        if bit == current {
            len += 1;
        } else {
            runs.push(len);
            current = bit;
            len = 1;
        }
    }
    runs.push(len);
    BitMask {
        width: grid.width,
        height: grid.height,
        runs,
    }
}

pub fn rle_decode(mask: &BitMask) -> Result<MaskGrid, CodecError> {
    if mask.width == 0 || mask.height == 0 {
        return Err(CodecError::Consistency("mask dimensions must be positive".into()));
    }
    let total = mask.pixel_count();
    if mask.run_total() != total {
        return Err(CodecError::Consistency(format!(
            "mask runs sum to {}, expected {}x{} = {}",
            mask.run_total(),
            mask.width,
            mask.height,
            total
        )));
    }
    let mut bits = Vec::with_capacity(total as usize);
    let mut value = false;
    for &run in &mask.runs {
        bits.resize(bits.len() + run as usize, value);
        value = !value;
    }
    Ok(MaskGrid {
        width: mask.width,
        height: mask.height,
        bits,
    })
}
