use ctxaug_core::mask::{invert, resize_mask};
use ctxaug_core::synth::scene;
use ctxaug_core::transform::{apply_masked, resize_image};
use ctxaug_core::{
    parse_scenario, run_pipeline, Bitmask, BlurPlacement, KernelSize, KeyObject, ObjectMasks,
    PipelineConfig, RgbImage, TransformKind,
};

fn fixture(w: u32, h: u32, seed: u64) -> (RgbImage, ObjectMasks) {
    let (img, objects) = scene(w, h, seed);
    let mut masks = ObjectMasks::new((h, w));
    for (k, m) in objects {
        masks.push(k, m).unwrap();
    }
    (img, masks)
}

fn cfg(placement: BlurPlacement) -> PipelineConfig {
    PipelineConfig {
        placement: Some(placement),
        seed: 42,
        ..PipelineConfig::default()
    }
}

#[test]
fn placements_differ_and_each_reproduces() {
    let (img, masks) = fixture(512, 512, 3);
    let sc = parse_scenario("F+B:Blur11").unwrap();
    let run = |p| run_pipeline(&img, &masks, &sc, &cfg(p), 1).unwrap();
    let before = run(BlurPlacement::BeforeResize);
    let after = run(BlurPlacement::AfterResize);
    assert_ne!(before.image, after.image);
    assert_eq!(before, run(BlurPlacement::BeforeResize));
    assert_eq!(after, run(BlurPlacement::AfterResize));
}

#[test]
fn pipeline_matches_hand_composed_steps() {
    let (img, masks) = fixture(300, 200, 8);
    let person = masks.object(KeyObject::Person).unwrap();
    let bg = invert(&person);
    let blur = TransformKind::GaussianBlur(KernelSize::new(11).unwrap());
    let sc = parse_scenario("F+B:Blur11").unwrap();

    let before = run_pipeline(&img, &masks, &sc, &cfg(BlurPlacement::BeforeResize), 5).unwrap();
    let by_hand = resize_image(&apply_masked(&img, &bg, blur).unwrap(), (256, 256));
    assert_eq!(before.image, by_hand);

    let after = run_pipeline(&img, &masks, &sc, &cfg(BlurPlacement::AfterResize), 5).unwrap();
    let small = resize_image(&img, (256, 256));
    let by_hand = apply_masked(&small, &resize_mask(&bg, (256, 256)), blur).unwrap();
    assert_eq!(after.image, by_hand);
}

#[test]
fn background_blur_after_resize_keeps_person_pixels() {
    let (img, masks) = fixture(320, 240, 4);
    let plain = run_pipeline(
        &img,
        &masks,
        &parse_scenario("F+B").unwrap(),
        &PipelineConfig::default(),
        2,
    )
    .unwrap();
    let sc = parse_scenario("F+B:Blur11").unwrap();
    let out = run_pipeline(&img, &masks, &sc, &cfg(BlurPlacement::AfterResize), 2).unwrap();
    let person = resize_mask(&masks.object(KeyObject::Person).unwrap(), (256, 256));
    let mut changed_bg = false;
    for (x, y, px) in out.image.enumerate_pixels() {
        if person.get(y, x) {
            assert_eq!(px, plain.image.get_pixel(x, y));
        } else if px != plain.image.get_pixel(x, y) {
            changed_bg = true;
        }
    }
    assert!(changed_bg);
}

#[test]
fn solid_black_background_leaves_only_the_person() {
    let (img, masks) = fixture(256, 256, 6);
    let out = run_pipeline(
        &img,
        &masks,
        &parse_scenario("F+B:SolidBlack").unwrap(),
        &PipelineConfig::default(),
        1,
    )
    .unwrap();
    let person = masks.object(KeyObject::Person).unwrap();
    for (x, y, px) in out.image.enumerate_pixels() {
        if person.get(y, x) {
            assert_eq!(px, img.get_pixel(x, y));
        } else {
            assert_eq!(px.0, [0, 0, 0]);
        }
    }
}

#[test]
fn train_mode_augmentation_depends_only_on_seed_and_id() {
    let (img, masks) = fixture(128, 96, 2);
    let sc = parse_scenario("F:Grayscale+B").unwrap();
    let c = PipelineConfig {
        train: true,
        seed: 42,
        resize: (64, 64),
        ..PipelineConfig::default()
    };
    let mut flips = 0;
    let mut warps = 0;
    for id in 0..64 {
        let a = run_pipeline(&img, &masks, &sc, &c, id).unwrap();
        let b = run_pipeline(&img, &masks, &sc, &c, id).unwrap();
        assert_eq!(a, b);
        flips += a.flipped as u32;
        warps += a.perspective as u32;
    }
    // both augmentations fire with probability one half
    assert!((16..=48).contains(&flips), "flips {flips}");
    assert!((16..=48).contains(&warps), "warps {warps}");
}

#[test]
fn key_object_scenario_blurs_only_that_object() {
    let w = 64;
    let img = RgbImage::from_fn(w, w, |x, y| {
        image::Rgb([(x * 4) as u8, (y * 4) as u8, ((x + y) * 2) as u8])
    });
    let mut masks = ObjectMasks::new((w, w));
    let person = Bitmask::from_fn(w, w, |r, c| r < 20 && c < 20);
    let bed = Bitmask::from_fn(w, w, |r, c| r >= 40 && c >= 30);
    masks.push(KeyObject::Person, person.clone()).unwrap();
    masks.push(KeyObject::Bed, bed.clone()).unwrap();
    let sc = parse_scenario("F+B+bed:Grayscale").unwrap();
    let c = PipelineConfig {
        resize: (w, w),
        ..PipelineConfig::default()
    };
    let out = run_pipeline(&img, &masks, &sc, &c, 1).unwrap();
    for (x, y, px) in out.image.enumerate_pixels() {
        let p = img.get_pixel(x, y).0;
        if bed.get(y, x) {
            assert!(px.0[0] == px.0[1] && px.0[1] == px.0[2]);
        } else {
            assert_eq!(px.0, p);
        }
    }
}
