#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ctxaug_core::synth::scene_dataset;
use ctxaug_core::{save_dataset, Dataset};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ctxaug"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// A scene dataset saved as `dir/coco.json` with images beside it.
pub fn scene_fixture(dir: &Path, n: u64, w: u32, h: u32) -> (Dataset, PathBuf) {
    let d = scene_dataset(n, w, h, 77, dir).unwrap();
    let path = dir.join("coco.json");
    save_dataset(&d, &path).unwrap();
    (d, path)
}

/// Every file under `root`, keyed by relative path.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
