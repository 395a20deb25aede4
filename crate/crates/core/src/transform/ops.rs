use image::imageops::{self, FilterType};
use image::{Rgb, RgbImage};

use super::{gaussian_kernel, KernelSize, TransformError, TransformKind};
use crate::rle::Bitmask;

/// Mirror index into `0..n` without repeating the edge sample
/// (`-1 -> 1`, `n -> n - 2`). Handles offsets larger than `n`.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Convolves one channel-interleaved line of `len` pixels (3 channels)
/// read through `get`, writing into `out`.
fn convolve_line(
    len: usize,
    weights: &[f32],
    padded: &mut Vec<[f32; 3]>,
    get: impl Fn(usize) -> [f32; 3],
    out: &mut [[f32; 3]],
) {
    let r = weights.len() / 2;
    padded.clear();
    padded.extend((0..len + 2 * r).map(|i| get(reflect(i as isize - r as isize, len))));
    for (x, o) in out.iter_mut().enumerate().take(len) {
        let mut acc = [0f32; 3];
        for (w, px) in weights.iter().zip(&padded[x..x + weights.len()]) {
            acc[0] += w * px[0];
            acc[1] += w * px[1];
            acc[2] += w * px[2];
        }
        *o = acc;
    }
}

/// Separable Gaussian blur, horizontal pass then vertical pass, with
/// mirrored borders. Intermediate values are kept in floating point and
/// rounded once at the end.
pub fn blur(img: &RgbImage, k: KernelSize) -> RgbImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return img.clone();
    }
    let weights: Vec<f32> = gaussian_kernel(k).into_iter().map(|v| v as f32).collect();
    let src = img.as_raw();
    let mut tmp = vec![[0f32; 3]; w * h];
    let mut padded = Vec::new();

    for y in 0..h {
        let row = &src[y * w * 3..(y + 1) * w * 3];
        convolve_line(
            w,
            &weights,
            &mut padded,
            |x| {
                let p = &row[x * 3..x * 3 + 3];
                [f32::from(p[0]), f32::from(p[1]), f32::from(p[2])]
            },
            &mut tmp[y * w..(y + 1) * w],
        );
    }

    let mut out = RgbImage::new(w as u32, h as u32);
    let mut column = vec![[0f32; 3]; h];
    let dst: &mut [u8] = &mut out;
    for x in 0..w {
        convolve_line(h, &weights, &mut padded, |y| tmp[y * w + x], &mut column);
        for (y, v) in column.iter().enumerate() {
            let o = (y * w + x) * 3;
            for c in 0..3 {
                dst[o + c] = v[c].round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    out
}

pub fn solid_fill(img: &RgbImage, color: [u8; 3]) -> RgbImage {
    RgbImage::from_pixel(img.width(), img.height(), Rgb(color))
}

/// BT.601 luma `0.299 R + 0.587 G + 0.114 B`, rounded half-up.
#[inline]
pub fn luma(p: [u8; 3]) -> u8 {
    let y = 299 * u32::from(p[0]) + 587 * u32::from(p[1]) + 114 * u32::from(p[2]);
    ((y + 500) / 1000) as u8
}

pub fn grayscale(img: &RgbImage) -> RgbImage {
    let mut out = img.clone();
    for px in out.pixels_mut() {
        let y = luma(px.0);
        px.0 = [y, y, y];
    }
    out
}

/// Applies `t` to the whole image.
pub fn apply_transform(img: &RgbImage, t: TransformKind) -> RgbImage {
    match t {
        TransformKind::SolidColor(c) => solid_fill(img, c),
        TransformKind::GaussianBlur(k) => blur(img, k),
        TransformKind::Grayscale => grayscale(img),
    }
}

/// Transforms the whole image, then keeps transformed pixels only where
/// `region` is set. Pixels outside the region are returned untouched.
pub fn apply_masked(
    img: &RgbImage,
    region: &Bitmask,
    t: TransformKind,
) -> Result<RgbImage, TransformError> {
    let image_size = (img.height(), img.width());
    if region.size() != image_size {
        return Err(TransformError::SizeMismatch {
            mask: region.size(),
            image: image_size,
        });
    }
    if region.is_empty() {
        return Ok(img.clone());
    }
    let transformed = apply_transform(img, t);
    let mut out = img.clone();
    for ((o, t), &bit) in out
        .pixels_mut()
        .zip(transformed.pixels())
        .zip(region.bits())
    {
        if bit {
            *o = *t;
        }
    }
    Ok(out)
}

/// Bilinear (antialiased when downscaling) resize to `(height, width)`.
pub fn resize_image(img: &RgbImage, size: (u32, u32)) -> RgbImage {
    let (h, w) = size;
    if img.dimensions() == (w, h) {
        return img.clone();
    }
    imageops::resize(img, w, h, FilterType::Triangle)
}
