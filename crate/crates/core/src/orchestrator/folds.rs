use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::OrchestratorError;
use crate::feature_store::validate_records;
use crate::{SlideRecord, SubtypeLabel, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Case-level partition for one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train_cases: BTreeSet<String>,
    pub val_cases: BTreeSet<String>,
    pub test_cases: BTreeSet<String>,
}

impl FoldSplit {
    pub fn split_of(&self, case_id: &str) -> Option<Split> {
        if self.train_cases.contains(case_id) {
            Some(Split::Train)
        } else if self.val_cases.contains(case_id) {
            Some(Split::Val)
        } else if self.test_cases.contains(case_id) {
            Some(Split::Test)
        } else {
            None
        }
    }

    pub fn cases(&self, split: Split) -> &BTreeSet<String> {
        match split {
            Split::Train => &self.train_cases,
            Split::Val => &self.val_cases,
            Split::Test => &self.test_cases,
        }
    }
}

/// Case label per case id, from validated records.
pub fn case_labels(records: &[SlideRecord]) -> Result<BTreeMap<String, SubtypeLabel>, OrchestratorError> {
    validate_records(records)?;
    Ok(records.iter().map(|r| (r.case_id.clone(), r.label)).collect())
}

/// Assigns every case to one of `k` groups, stratified by class.
///
/// Within each class the sorted case ids are shuffled by `seed` and dealt
/// round-robin; the dealing position carries over from one class to the
/// next so that group sizes also stay within one of each other.
pub fn case_groups(records: &[SlideRecord], k: usize, seed: u64) -> Result<BTreeMap<String, usize>, OrchestratorError> {
    if k < 2 {
        return Err(OrchestratorError::Stratification(format!("need at least 2 folds, got {k}")));
    }
    let labels = case_labels(records)?;
    let mut by_class: [Vec<&String>; NUM_CLASSES] = Default::default();
    for (case, label) in &labels {
        by_class[label.code()].push(case);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups = BTreeMap::new();
    let mut next = 0usize;
    for (code, cases) in by_class.iter_mut().enumerate() {
        if cases.is_empty() {
            continue;
        }
        if cases.len() < k {
            return Err(OrchestratorError::Stratification(format!(
                "class {} has {} cases, fewer than {k} folds",
                SubtypeLabel::ALL[code],
                cases.len()
            )));
        }
        cases.shuffle(&mut rng);
        for case in cases.iter() {
            groups.insert((*case).clone(), next % k);
            next += 1;
        }
    }
    Ok(groups)
}

/// Stratified case-level k-fold splits: fold `i` tests on group `i`,
/// validates on group `(i + 1) mod k` and trains on the rest.
pub fn stratified_case_kfold(records: &[SlideRecord], k: usize, seed: u64) -> Result<Vec<FoldSplit>, OrchestratorError> {
    let groups = case_groups(records, k, seed)?;
    Ok((0..k)
        .map(|i| {
            let mut fold = FoldSplit {
                fold_index: i,
                train_cases: BTreeSet::new(),
                val_cases: BTreeSet::new(),
                test_cases: BTreeSet::new(),
            };
            for (case, &g) in &groups {
                let set = if g == i {
                    &mut fold.test_cases
                } else if g == (i + 1) % k {
                    &mut fold.val_cases
                } else {
                    &mut fold.train_cases
                };
                set.insert(case.clone());
            }
            fold
        })
        .collect())
}

/// Writes `fold,case_id,split` rows, folds in order and cases sorted.
pub fn write_folds_csv(folds: &[FoldSplit], out: impl Write) -> Result<(), OrchestratorError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fold", "case_id", "split"])?;
    for f in folds {
        let mut rows: Vec<(&String, Split)> = Vec::new();
        for split in [Split::Train, Split::Val, Split::Test] {
            rows.extend(f.cases(split).iter().map(|c| (c, split)));
        }
        rows.sort();
        for (case, split) in rows {
            w.write_record([f.fold_index.to_string().as_str(), case, split.name()])?;
        }
    }
    w.flush().map_err(|e| OrchestratorError::Csv(e.into()))?;
    Ok(())
}

pub fn read_folds_csv(input: impl Read) -> Result<Vec<FoldSplit>, OrchestratorError> {
    let mut r = csv::Reader::from_reader(input);
    let mut folds: BTreeMap<usize, FoldSplit> = BTreeMap::new();
    for row in r.records() {
        let row = row?;
        let bad = || OrchestratorError::Format(format!("bad folds row {:?}", row));
        let fold: usize = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let case = row.get(1).ok_or_else(bad)?.to_string();
        let entry = folds.entry(fold).or_insert_with(|| FoldSplit {
            fold_index: fold,
            train_cases: BTreeSet::new(),
            val_cases: BTreeSet::new(),
            test_cases: BTreeSet::new(),
        });
        match row.get(2) {
            Some("train") => entry.train_cases.insert(case),
            Some("val") => entry.val_cases.insert(case),
            Some("test") => entry.test_cases.insert(case),
            _ => return Err(bad()),
        };
    }
    Ok(folds.into_values().collect())
}
