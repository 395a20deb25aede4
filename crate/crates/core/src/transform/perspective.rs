use image::{Rgb, RgbImage};
use nalgebra::{SMatrix, SVector};
use rand::Rng;

/// Corner correspondences for one perspective warp, in pixel coordinates
/// ordered top-left, top-right, bottom-right, bottom-left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerspectiveDraw {
    pub start: [[f64; 2]; 4],
    pub end: [[f64; 2]; 4],
}

impl PerspectiveDraw {
    /// Each corner moves inward by independent uniform offsets in
    /// `[0, scale * width / 2]` horizontally and `[0, scale * height / 2]`
    /// vertically.
    pub fn sample<R: Rng + ?Sized>(width: u32, height: u32, scale: f64, rng: &mut R) -> Self {
        let (w, h) = (f64::from(width) - 1.0, f64::from(height) - 1.0);
        let max_dx = scale * f64::from(width) / 2.0;
        let max_dy = scale * f64::from(height) / 2.0;
        let mut draw = |max: f64| {
            if max > 0.0 {
                rng.gen_range(0.0..=max)
            } else {
                0.0
            }
        };
        let (tl, tr, br, bl) = (
            [draw(max_dx), draw(max_dy)],
            [draw(max_dx), draw(max_dy)],
            [draw(max_dx), draw(max_dy)],
            [draw(max_dx), draw(max_dy)],
        );
        Self {
            start: [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]],
            end: [
                [tl[0], tl[1]],
                [w - tr[0], tr[1]],
                [w - br[0], h - br[1]],
                [bl[0], h - bl[1]],
            ],
        }
    }
}

/// Homography coefficients `[a, b, c, d, e, f, g, h]` mapping each `from`
/// point onto the matching `to` point.
fn homography(from: &[[f64; 2]; 4], to: &[[f64; 2]; 4]) -> Option<[f64; 8]> {
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for (i, (p, q)) in from.iter().zip(to).enumerate() {
        let (x, y, u, v) = (p[0], p[1], q[0], q[1]);
        let r = 2 * i;
        a.row_mut(r)
            .copy_from_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]);
        a.row_mut(r + 1)
            .copy_from_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]);
        b[r] = u;
        b[r + 1] = v;
    }
    let sol = a.lu().solve(&b)?;
    let mut out = [0.0; 8];
    out.copy_from_slice(sol.as_slice());
    Some(out)
}

/// Warps `img` so that the `start` corners land on the `end` corners.
/// Output pixels whose preimage falls outside the source are black;
/// everything else is bilinearly sampled.
pub fn perspective_warp(img: &RgbImage, draw: &PerspectiveDraw) -> RgbImage {
    let (w, h) = img.dimensions();
    // inverse mapping: output coordinates -> source coordinates
    let Some(m) = homography(&draw.end, &draw.start) else {
        return img.clone();
    };
    let (max_x, max_y) = (f64::from(w) - 1.0, f64::from(h) - 1.0);
    const EPS: f64 = 1e-9;
    RgbImage::from_fn(w, h, |x, y| {
        let (x, y) = (f64::from(x), f64::from(y));
        let den = m[6] * x + m[7] * y + 1.0;
        let sx = (m[0] * x + m[1] * y + m[2]) / den;
        let sy = (m[3] * x + m[4] * y + m[5]) / den;
        if !(sx >= -EPS && sy >= -EPS && sx <= max_x + EPS && sy <= max_y + EPS) {
            return Rgb([0, 0, 0]);
        }
        let sx = sx.clamp(0.0, max_x);
        let sy = sy.clamp(0.0, max_y);
        let (x0, y0) = (sx.floor() as u32, sy.floor() as u32);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (sx - f64::from(x0), sy - f64::from(y0));
        let p00 = img.get_pixel(x0, y0).0;
        let p10 = img.get_pixel(x1, y0).0;
        let p01 = img.get_pixel(x0, y1).0;
        let p11 = img.get_pixel(x1, y1).0;
        let mut out = [0u8; 3];
        for c in 0..3 {
            let top = f64::from(p00[c]) * (1.0 - fx) + f64::from(p10[c]) * fx;
            let bottom = f64::from(p01[c]) * (1.0 - fx) + f64::from(p11[c]) * fx;
            out[c] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
        }
        Rgb(out)
    })
}

/// Samples a perspective draw and applies it.
pub fn random_perspective<R: Rng + ?Sized>(img: &RgbImage, scale: f64, rng: &mut R) -> RgbImage {
    let draw = PerspectiveDraw::sample(img.width(), img.height(), scale, rng);
    perspective_warp(img, &draw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gradient(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            Rgb([(x * 7 % 256) as u8, (y * 11 % 256) as u8, 90])
        })
    }

    #[test]
    fn zero_scale_is_identity() {
        let img = gradient(20, 15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(random_perspective(&img, 0.0, &mut rng), img);
    }

    #[test]
    fn offsets_stay_within_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let d = PerspectiveDraw::sample(100, 60, 0.4, &mut rng);
            for (s, e) in d.start.iter().zip(&d.end) {
                assert!((s[0] - e[0]).abs() <= 0.4 * 100.0 / 2.0 + 1e-12);
                assert!((s[1] - e[1]).abs() <= 0.4 * 60.0 / 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn homography_maps_corners() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = PerspectiveDraw::sample(64, 48, 0.4, &mut rng);
        let m = homography(&d.start, &d.end).unwrap();
        for (s, e) in d.start.iter().zip(&d.end) {
            let den = m[6] * s[0] + m[7] * s[1] + 1.0;
            let u = (m[0] * s[0] + m[1] * s[1] + m[2]) / den;
            let v = (m[3] * s[0] + m[4] * s[1] + m[5]) / den;
            assert!((u - e[0]).abs() < 1e-8 && (v - e[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn inward_warp_blackens_outer_corners() {
        let img = RgbImage::from_pixel(40, 40, Rgb([200, 200, 200]));
        let d = PerspectiveDraw {
            start: [[0.0, 0.0], [39.0, 0.0], [39.0, 39.0], [0.0, 39.0]],
            end: [[8.0, 8.0], [31.0, 8.0], [31.0, 31.0], [8.0, 31.0]],
        };
        let out = perspective_warp(&img, &d);
        assert_eq!(out.get_pixel(0, 0).0, [0, 0, 0]);
        assert_eq!(out.get_pixel(20, 20).0, [200, 200, 200]);
    }
}
