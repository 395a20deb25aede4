//! Input generators shared by the benchmarks.

use ctxaug_core::synth::scene;
use ctxaug_core::{Bitmask, KeyObject, ObjectMasks, RgbImage};
use image::Rgb;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn noise_image(w: u32, h: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::from_fn(w, h, |_, _| Rgb([rng.gen(), rng.gen(), rng.gen()]))
}

/// Independent bits with the given density; worst case for run-length coding.
pub fn speckle_mask(h: u32, w: u32, density: f64, seed: u64) -> Bitmask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Bitmask::from_fn(h, w, |_, _| rng.gen_bool(density))
}

/// A centered ellipse covering about a third of the frame, like a person mask.
pub fn ellipse_mask(h: u32, w: u32) -> Bitmask {
    let (cy, cx) = (h as f64 / 2.0, w as f64 / 2.0);
    let (ry, rx) = (h as f64 * 0.4, w as f64 * 0.25);
    Bitmask::from_fn(h, w, |r, c| {
        let dy = (r as f64 + 0.5 - cy) / ry;
        let dx = (c as f64 + 0.5 - cx) / rx;
        dy * dy + dx * dx <= 1.0
    })
}

/// A synthetic scene and its masks, ready for the pipeline.
pub fn scene_input(w: u32, h: u32, seed: u64) -> (RgbImage, ObjectMasks) {
    let (img, objects) = scene(w, h, seed);
    let mut masks = ObjectMasks::new((h, w));
    for (k, m) in objects {
        masks.push(k, m).expect("scene masks match the image");
    }
    debug_assert!(masks.object(KeyObject::Person).is_some());
    (img, masks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_have_requested_shapes() {
        assert_eq!(noise_image(7, 5, 0).dimensions(), (7, 5));
        assert_eq!(speckle_mask(5, 7, 0.5, 0).size(), (5, 7));
        let e = ellipse_mask(100, 80);
        assert!(e.get(50, 40) && !e.get(0, 0));
        assert_eq!(scene_input(32, 24, 1).1.size(), (24, 32));
    }
}
