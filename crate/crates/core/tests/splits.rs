use std::collections::{BTreeMap, HashMap, HashSet};

use ctxaug_core::builder::{frame_groups, group_split_validation};
use ctxaug_core::synth::{composition, Stratum};
use ctxaug_core::{build_split, split_train_test, stats, Dataset, FallLabel, Source, SplitRules};

/// Published dataset composition, with KULeuven spread over cameras 1-5.
fn published_strata() -> Vec<Stratum> {
    let s = |source, camera, fall, non_fall| Stratum {
        source,
        camera,
        fall,
        non_fall,
    };
    vec![
        s(Source::CaucaFall, None, 1538, 1575),
        s(Source::KuLeuven, Some(1), 142, 388),
        s(Source::KuLeuven, Some(2), 142, 388),
        s(Source::KuLeuven, Some(3), 143, 391),
        s(Source::KuLeuven, Some(4), 143, 391),
        s(Source::KuLeuven, Some(5), 143, 392),
        s(Source::UrFall, None, 42, 275),
    ]
}

/// (source, camera) -> (fall, non_fall), tallied directly from provenance.
fn tally(d: &Dataset) -> BTreeMap<(Source, Option<u32>), (u64, u64)> {
    let mut out = BTreeMap::new();
    for im in &d.images {
        let ctx = im.ctx.as_ref().unwrap();
        let e = out.entry((ctx.source, ctx.camera)).or_insert((0, 0));
        match ctx.label {
            FallLabel::Fall => e.0 += 1,
            FallLabel::NonFall => e.1 += 1,
        }
    }
    out
}

fn by_source_and_cameras(d: &Dataset, cams: &[u32], source: Source) -> (u64, u64) {
    tally(d)
        .into_iter()
        .filter(|((s, c), _)| *s == source && c.is_none_or(|c| cams.contains(&c)))
        .fold((0, 0), |acc, (_, v)| (acc.0 + v.0, acc.1 + v.1))
}

#[test]
fn composition_matches_published_totals() {
    let d = composition(&published_strata(), 25);
    d.validate().unwrap();
    let r = stats(&d);
    let get = |s: Source| r.sources.iter().find(|x| x.source == s).unwrap().counts;
    assert_eq!(
        (get(Source::CaucaFall).fall, get(Source::CaucaFall).non_fall),
        (1538, 1575)
    );
    assert_eq!(
        (get(Source::KuLeuven).fall, get(Source::KuLeuven).non_fall),
        (713, 1950)
    );
    assert_eq!(
        (get(Source::UrFall).fall, get(Source::UrFall).non_fall),
        (42, 275)
    );
    assert_eq!(
        (r.total.fall, r.total.non_fall, r.total.total),
        (2293, 3800, 6093)
    );
}

#[test]
fn standard_rules_reproduce_published_split() {
    let d = composition(&published_strata(), 25);
    let (train, test) = split_train_test(&d, &SplitRules::standard()).unwrap();
    assert_eq!(
        by_source_and_cameras(&train, &[], Source::CaucaFall),
        (1538, 1575)
    );
    assert_eq!(
        by_source_and_cameras(&train, &[3, 4, 5], Source::KuLeuven),
        (429, 1174)
    );
    assert_eq!(
        by_source_and_cameras(&train, &[1, 2], Source::KuLeuven),
        (0, 0)
    );
    assert_eq!(by_source_and_cameras(&train, &[], Source::UrFall), (0, 0));
    assert_eq!(
        by_source_and_cameras(&test, &[1, 2], Source::KuLeuven),
        (284, 776)
    );
    assert_eq!(
        by_source_and_cameras(&test, &[3, 4, 5], Source::KuLeuven),
        (0, 0)
    );
    assert_eq!(by_source_and_cameras(&test, &[], Source::UrFall), (42, 275));
    assert_eq!(by_source_and_cameras(&test, &[], Source::CaucaFall), (0, 0));
    assert_eq!(train.images.len() + test.images.len(), d.images.len());
}

#[test]
fn split_is_deterministic_and_partitions() {
    let d = composition(&published_strata(), 25);
    let a = build_split(&d, &SplitRules::standard(), 42).unwrap();
    let b = build_split(&d, &SplitRules::standard(), 42).unwrap();
    assert_eq!(a, b);
    a.check_partition(&d).unwrap();
    assert_eq!(a.test.len(), 284 + 776 + 42 + 275);
    let train_side = a.train.len() + a.val.len();
    assert_eq!(train_side, 1538 + 1575 + 429 + 1174);
    assert!(a.val.len() >= (0.1 * train_side as f64).round() as usize);
    assert!(a.val.len() < (0.1 * train_side as f64).round() as usize + 5);
}

fn single_sequence(n: u64) -> Dataset {
    composition(
        &[Stratum {
            source: Source::CaucaFall,
            camera: None,
            fall: n,
            non_fall: 0,
        }],
        n as u32,
    )
}

#[test]
fn hundred_frames_give_two_whole_validation_groups() {
    let d = single_sequence(100);
    let frame_of: HashMap<u64, u32> = d
        .images
        .iter()
        .map(|im| (im.id, im.ctx.as_ref().unwrap().frame))
        .collect();
    // groups are runs of 5 consecutive frames, by frame number alone
    let group_of = |id: u64| frame_of[&id] / 5;

    let mut distinct = HashSet::new();
    for seed in 0..100 {
        let m = group_split_validation(&d, 5, 0.1, seed).unwrap();
        assert_eq!(m.val.len(), 10, "seed {seed}");
        assert_eq!(m.train.len(), 90);
        let val_groups: HashSet<u32> = m.val.iter().map(|&id| group_of(id)).collect();
        let train_groups: HashSet<u32> = m.train.iter().map(|&id| group_of(id)).collect();
        assert_eq!(val_groups.len(), 2, "seed {seed}");
        assert!(
            val_groups.is_disjoint(&train_groups),
            "seed {seed}: a group straddles"
        );
        distinct.insert(m.val.clone());
    }
    // the seed actually matters
    assert!(distinct.len() > 10);
}

#[test]
fn groups_never_mix_sequences() {
    let d = composition(&published_strata()[1..3], 7);
    let seq_of: HashMap<u64, (Source, String)> = d
        .images
        .iter()
        .map(|im| {
            let c = im.ctx.as_ref().unwrap();
            (im.id, (c.source, c.sequence.clone()))
        })
        .collect();
    for g in frame_groups(&d, 5).unwrap() {
        assert!(!g.is_empty() && g.len() <= 5);
        let first = &seq_of[&g[0]];
        assert!(g.iter().all(|id| &seq_of[id] == first));
    }
}
