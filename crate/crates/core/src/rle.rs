//! Uncompressed COCO run-length encoding.
//!
//! Runs are laid out in column-major order (down each column, then across
//! columns) and always start with a run of zeros, which may be empty.
//! [`Bitmask`] itself is stored row-major so it lines up with image buffers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RleError {
    #[error("rle counts sum to {sum}, expected {expected} for a {height}x{width} mask")]
    SumMismatch {
        sum: u64,
        expected: u64,
        height: u32,
        width: u32,
    },
}

/// Run-length encoded binary mask, `size` is `(height, width)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub size: (u32, u32),
    pub counts: Vec<u32>,
}

impl RleMask {
    pub fn height(&self) -> u32 {
        self.size.0
    }

    pub fn width(&self) -> u32 {
        self.size.1
    }

    /// Checks that the runs cover exactly `height * width` pixels.
    pub fn validate(&self) -> Result<(), RleError> {
        let sum: u64 = self.counts.iter().map(|&c| u64::from(c)).sum();
        let expected = u64::from(self.size.0) * u64::from(self.size.1);
        if sum != expected {
            return Err(RleError::SumMismatch {
                sum,
                expected,
                height: self.size.0,
                width: self.size.1,
            });
        }
        Ok(())
    }

    /// Number of set pixels, computed without decoding.
    pub fn area(&self) -> u64 {
        self.counts
            .iter()
            .skip(1)
            .step_by(2)
            .map(|&c| u64::from(c))
            .sum()
    }
}

/// Dense binary mask in row-major order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitmask {
    height: u32,
    width: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for Bitmask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Bitmask({}x{}", self.height, self.width)?;
        if self.bits.len() <= 64 {
            for r in 0..self.height {
                f.write_str(if r == 0 { ": " } else { "/" })?;
                for c in 0..self.width {
                    f.write_str(if self.get(r, c) { "1" } else { "0" })?;
                }
            }
        } else {
            write!(f, ", {} set", self.count_ones())?;
        }
        f.write_str(")")
    }
}

impl Bitmask {
    pub fn zeros(height: u32, width: u32) -> Self {
        Self::filled(height, width, false)
    }

    pub fn ones(height: u32, width: u32) -> Self {
        Self::filled(height, width, true)
    }

    pub fn filled(height: u32, width: u32, value: bool) -> Self {
        Self {
            height,
            width,
            bits: vec![value; height as usize * width as usize],
        }
    }

    /// Builds a mask from row-major bits. Returns `None` if the length is wrong.
    pub fn from_bits(height: u32, width: u32, bits: Vec<bool>) -> Option<Self> {
        (bits.len() == height as usize * width as usize).then_some(Self {
            height,
            width,
            bits,
        })
    }

    pub fn from_fn(height: u32, width: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(height as usize * width as usize);
        for r in 0..height {
            for c in 0..width {
                bits.push(f(r, c));
            }
        }
        Self {
            height,
            width,
            bits,
        }
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// `(height, width)`, the same convention as [`RleMask::size`].
    pub fn size(&self) -> (u32, u32) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> bool {
        self.bits[row as usize * self.width as usize + col as usize]
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, value: bool) {
        let idx = row as usize * self.width as usize + col as usize;
        self.bits[idx] = value;
    }

    /// Row-major bits.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Tight bounding box of the set pixels, `None` for an empty mask.
    pub fn bounding_rect(&self) -> Option<crate::mask::Rect> {
        let (mut r0, mut r1, mut c0, mut c1) = (u32::MAX, 0, u32::MAX, 0);
        for r in 0..self.height {
            for c in 0..self.width {
                if self.get(r, c) {
                    r0 = r0.min(r);
                    r1 = r1.max(r);
                    c0 = c0.min(c);
                    c1 = c1.max(c);
                }
            }
        }
        (r0 != u32::MAX).then(|| crate::mask::Rect::new(c0, r0, c1 - c0 + 1, r1 - r0 + 1))
    }
}

/// Expands runs column-major into a dense mask.
pub fn rle_decode(m: &RleMask) -> Result<Bitmask, RleError> {
    m.validate()?;
    let (h, w) = m.size;
    let mut out = Bitmask::zeros(h, w);
    if h == 0 || w == 0 {
        return Ok(out);
    }
    let h = h as usize;
    let w = w as usize;
    let bits = out.bits_mut();
    let mut pos = 0usize;
    let mut value = false;
    for &run in &m.counts {
        let run = run as usize;
        if value {
            for k in pos..pos + run {
                // column-major index k -> (row, col)
                let (row, col) = (k % h, k / h);
                bits[row * w + col] = true;
            }
        }
        pos += run;
        value = !value;
    }
    Ok(out)
}

/// Canonical encoding: a leading zero-run (possibly 0), then strictly
/// positive alternating runs.
pub fn rle_encode(b: &Bitmask) -> RleMask {
    let (h, w) = (b.height as usize, b.width as usize);
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for col in 0..w {
        for row in 0..h {
            let v = b.bits[row * w + col];
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    if h * w > 0 {
        counts.push(run);
    }
    RleMask {
        size: (b.height, b.width),
        counts,
    }
}
