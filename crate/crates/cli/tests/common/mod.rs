#![allow(dead_code)]

use std::fs::File;
use std::path::{Path, PathBuf};

use ovmil::feature_store::{write_feature_bag, write_manifest};
use ovmil::{FeatureBag, SlideRecord, SubtypeLabel};
use ovmil_testkit::{MilTask, SyntheticBag};

/// Synthetic bags in memory, with their manifest records.
pub struct Cohort {
    pub raw: Vec<SyntheticBag>,
    pub bags: Vec<FeatureBag>,
    pub records: Vec<SlideRecord>,
}

/// `n` bags from `task`, two slides per case, ids prefixed by `tag`.
pub fn cohort(task: &MilTask, directions: &[Vec<f64>], n: usize, seed: u64, tag: &str) -> Cohort {
    let raw = task.sample(n, directions, seed);
    let mut bags = Vec::new();
    let mut records = Vec::new();
    for (i, b) in raw.iter().enumerate() {
        let id = format!("{tag}{i:04}");
        let coords = (0..b.n_patches as u32).map(|p| ((p % 16) * 256, (p / 16) * 256)).collect();
        bags.push(FeatureBag::new(id.clone(), task.dim, 256, coords, b.features.clone()).unwrap());
        // Labels cycle through the classes, so bags i and i + n_classes share a case.
        let case = format!("{tag}case{}_{}", b.label, i / (2 * task.n_classes));
        records.push(SlideRecord {
            slide_id: id.clone(),
            case_id: case,
            label: SubtypeLabel::from_code(b.label).unwrap(),
            feature_path: PathBuf::from(format!("{id}.fbag")),
            cohort_tag: tag.to_string(),
        });
    }
    Cohort { raw, bags, records }
}

impl Cohort {
    /// Writes the bags and `manifest.csv` into `dir`, returning the manifest path.
    pub fn write(&self, dir: &Path) -> PathBuf {
        std::fs::create_dir_all(dir).unwrap();
        for (bag, r) in self.bags.iter().zip(&self.records) {
            write_feature_bag(bag, dir.join(&r.feature_path)).unwrap();
        }
        let path = dir.join("manifest.csv");
        write_manifest(&self.records, File::create(&path).unwrap()).unwrap();
        path
    }
}

/// Runs the CLI in-process with string arguments.
pub fn ovmil<S: AsRef<str>>(args: &[S]) -> i32 {
    let mut full = vec!["ovmil".to_string()];
    full.extend(args.iter().map(|s| s.as_ref().to_string()));
    ovmil_cli::run(full)
}

pub fn p(path: &Path) -> String {
    path.display().to_string()
}

/// Every file under `dir`, relative path to bytes.
pub fn snapshot(dir: &Path) -> std::collections::BTreeMap<PathBuf, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}
