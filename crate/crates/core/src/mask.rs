//! Dense mask algebra used to build transform regions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rle::Bitmask;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaskError {
    #[error("cannot take the union of an empty mask list")]
    EmptyUnion,
    #[error("mask size mismatch: expected {expected:?}, got {found:?}")]
    SizeMismatch {
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("rect {rect:?} does not fit inside a {height}x{width} mask")]
    OutOfBounds { rect: Rect, height: u32, width: u32 },
}

/// Axis-aligned pixel rectangle, top-left anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> u64 {
        u64::from(self.x) + u64::from(self.w)
    }

    pub fn bottom(&self) -> u64 {
        u64::from(self.y) + u64::from(self.h)
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    /// True if the rect lies inside an image of `(height, width)`.
    pub fn fits_within(&self, height: u32, width: u32) -> bool {
        self.right() <= u64::from(width) && self.bottom() <= u64::from(height)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    /// Overlap of two rects; a zero-sized rect when they are disjoint.
    pub fn intersect(&self, other: &Rect) -> Rect {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if u64::from(x0) >= x1 || u64::from(y0) >= y1 {
            return Rect::new(x0.min(x1 as u32), y0.min(y1 as u32), 0, 0);
        }
        Rect::new(
            x0,
            y0,
            (x1 - u64::from(x0)) as u32,
            (y1 - u64::from(y0)) as u32,
        )
    }
}

/// Flips every bit. Foreground becomes background and vice versa.
pub fn invert(b: &Bitmask) -> Bitmask {
    let mut out = b.clone();
    for bit in out.bits_mut() {
        *bit = !*bit;
    }
    out
}

/// Bitwise OR over a non-empty list of equally sized masks.
pub fn union<'a, I>(masks: I) -> Result<Bitmask, MaskError>
where
    I: IntoIterator<Item = &'a Bitmask>,
{
    let mut iter = masks.into_iter();
    let mut acc = iter.next().ok_or(MaskError::EmptyUnion)?.clone();
    for m in iter {
        if m.size() != acc.size() {
            return Err(MaskError::SizeMismatch {
                expected: acc.size(),
                found: m.size(),
            });
        }
        for (a, &b) in acc.bits_mut().iter_mut().zip(m.bits()) {
            *a |= b;
        }
    }
    Ok(acc)
}

/// Copies the window `r` out of `b`.
pub fn crop(b: &Bitmask, r: Rect) -> Result<Bitmask, MaskError> {
    if !r.fits_within(b.height(), b.width()) {
        return Err(MaskError::OutOfBounds {
            rect: r,
            height: b.height(),
            width: b.width(),
        });
    }
    Ok(Bitmask::from_fn(r.h, r.w, |row, col| {
        b.get(r.y + row, r.x + col)
    }))
}

/// Nearest-neighbour source index for destination index `dst` using
/// pixel-center mapping: `floor((dst + 0.5) * in / out)`.
#[inline]
pub fn nearest_source_index(dst: u32, in_len: u32, out_len: u32) -> u32 {
    // exact integer form of floor((2*dst + 1) * in / (2 * out))
    let num = (2 * u64::from(dst) + 1) * u64::from(in_len);
    let idx = num / (2 * u64::from(out_len));
    (idx as u32).min(in_len.saturating_sub(1))
}

/// Nearest-neighbour resize to `(height, width)`; the result stays binary.
///
/// # Panics
/// If either output dimension is zero.
pub fn resize_mask(b: &Bitmask, out: (u32, u32)) -> Bitmask {
    let (oh, ow) = out;
    assert!(oh > 0 && ow > 0, "resize_mask target must be non-empty");
    if b.size() == out {
        return b.clone();
    }
    let cols: Vec<u32> = (0..ow)
        .map(|c| nearest_source_index(c, b.width(), ow))
        .collect();
    Bitmask::from_fn(oh, ow, |r, c| {
        b.get(nearest_source_index(r, b.height(), oh), cols[c as usize])
    })
}
