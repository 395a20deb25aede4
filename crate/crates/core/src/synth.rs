//! Synthetic datasets and scenes for tests, benchmarks and demos.

use std::io;
use std::path::Path;

use image::Rgb;
use rand::Rng;

use crate::coco::{
    Annotation, Category, Dataset, FallLabel, ImageRecord, KeyObject, Provenance, Source,
};
use crate::rle::{rle_encode, Bitmask};
use crate::rng::seeded;
use crate::RgbImage;

/// A block of images sharing a source and camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stratum {
    pub source: Source,
    pub camera: Option<u32>,
    pub fall: u64,
    pub non_fall: u64,
}

/// Annotation-free dataset with the given per-stratum label counts. Frames
/// are numbered consecutively inside sequences of `sequence_len` images;
/// falls and non-falls never share a sequence.
pub fn composition(strata: &[Stratum], sequence_len: u32) -> Dataset {
    assert!(sequence_len > 0, "sequence length must be positive");
    let mut images = Vec::new();
    for (si, s) in strata.iter().enumerate() {
        for (label, n) in [(FallLabel::Fall, s.fall), (FallLabel::NonFall, s.non_fall)] {
            for i in 0..n {
                let id = images.len() as u64 + 1;
                let seq = i / u64::from(sequence_len);
                images.push(ImageRecord {
                    id,
                    file_name: format!("{id:06}.png"),
                    width: 32,
                    height: 32,
                    ctx: Some(Provenance {
                        label,
                        source: s.source,
                        camera: s.camera,
                        sequence: format!("s{si}-{label}-{seq:04}"),
                        frame: (i % u64::from(sequence_len)) as u32,
                    }),
                });
            }
        }
    }
    Dataset {
        images,
        annotations: Vec::new(),
        categories: Category::standard_table(),
    }
}

fn ellipse(h: u32, w: u32, cy: f64, cx: f64, ry: f64, rx: f64) -> Bitmask {
    Bitmask::from_fn(h, w, |r, c| {
        let dy = (r as f64 + 0.5 - cy) / ry;
        let dx = (c as f64 + 0.5 - cx) / rx;
        dy * dy + dx * dx <= 1.0
    })
}

fn rect(h: u32, w: u32, y0: u32, x0: u32, y1: u32, x1: u32) -> Bitmask {
    Bitmask::from_fn(h, w, |r, c| r >= y0 && r < y1 && c >= x0 && c < x1)
}

/// A textured `w`x`h` scene with a person and a few objects.
///
/// The person is always present; chair, bed and floor appear depending on
/// the seed. Pixels are painted per object so regions are distinguishable.
pub fn scene(w: u32, h: u32, seed: u64) -> (RgbImage, Vec<(KeyObject, Bitmask)>) {
    assert!(w >= 8 && h >= 8, "scene needs at least 8x8 pixels");
    let mut rng = seeded(seed);
    let (wf, hf) = (w as f64, h as f64);

    let mut masks = Vec::new();
    if rng.gen_bool(0.7) {
        masks.push((KeyObject::Floor, rect(h, w, h * 3 / 4, 0, h, w)));
    }
    if rng.gen_bool(0.5) {
        let y0 = rng.gen_range(h / 2..h * 3 / 4);
        masks.push((
            KeyObject::Bed,
            rect(h, w, y0, w / 2, y0 + h / 5, w - w / 16),
        ));
    }
    if rng.gen_bool(0.5) {
        let x0 = rng.gen_range(0..w / 4);
        masks.push((
            KeyObject::Chair,
            rect(h, w, h / 2, x0, h * 7 / 8, x0 + w / 6),
        ));
    }
    let person = ellipse(
        h,
        w,
        hf * rng.gen_range(0.35..0.65),
        wf * rng.gen_range(0.35..0.65),
        hf * rng.gen_range(0.15..0.3),
        wf * rng.gen_range(0.08..0.2),
    );
    masks.push((KeyObject::Person, person));

    let base: [f64; 3] = [
        rng.gen_range(40.0..120.0),
        rng.gen_range(40.0..120.0),
        rng.gen_range(40.0..120.0),
    ];
    let tint = |k: KeyObject| -> [u8; 3] {
        match k {
            KeyObject::Person => [200, 80, 60],
            KeyObject::Chair => [60, 160, 60],
            KeyObject::Bed => [220, 220, 180],
            KeyObject::Floor => [90, 70, 50],
            _ => [128, 128, 128],
        }
    };
    let mut img = RgbImage::from_fn(w, h, |x, y| {
        let g = 60.0 * (x as f64 / wf) + 40.0 * (y as f64 / hf);
        Rgb(base.map(|b| (b + g) as u8))
    });
    for (k, m) in &masks {
        let t = tint(*k);
        for (x, y, px) in img.enumerate_pixels_mut() {
            if m.get(y, x) {
                *px = Rgb(t);
            }
        }
    }
    // texture, so blur and resize have something to act on
    for px in img.pixels_mut() {
        for c in px.0.iter_mut() {
            *c = c.saturating_add(rng.gen_range(0..40));
        }
    }
    (img, masks)
}

/// Writes `n` scenes as PNG files into `image_dir` and returns the matching
/// dataset (file names relative to `image_dir`).
pub fn scene_dataset(n: u64, w: u32, h: u32, seed: u64, image_dir: &Path) -> io::Result<Dataset> {
    std::fs::create_dir_all(image_dir)?;
    let categories = Category::standard_table();
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    for i in 0..n {
        let id = i + 1;
        let (img, masks) = scene(w, h, seed.wrapping_add(id));
        let file_name = format!("scene_{id:04}.png");
        img.save(image_dir.join(&file_name))
            .map_err(io::Error::other)?;
        for (k, m) in masks {
            let Some(bbox) = m.bounding_rect() else {
                continue;
            };
            annotations.push(Annotation {
                id: annotations.len() as u64 + 1,
                image_id: id,
                category_id: k.standard_id(),
                bbox,
                mask: rle_encode(&m),
            });
        }
        images.push(ImageRecord {
            id,
            file_name,
            width: w,
            height: h,
            ctx: Some(Provenance {
                label: if i % 3 == 0 {
                    FallLabel::Fall
                } else {
                    FallLabel::NonFall
                },
                source: Source::CaucaFall,
                camera: None,
                sequence: format!("{}", i / 5),
                frame: (i % 5) as u32,
            }),
        });
    }
    Ok(Dataset {
        images,
        annotations,
        categories,
    })
}
