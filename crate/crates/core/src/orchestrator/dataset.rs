use std::collections::BTreeSet;

use rayon::prelude::*;

use super::OrchestratorError;
use crate::abmil::Sample;
use crate::feature_store::{read_feature_bag, validate_records};
use crate::{FeatureBag, SlideRecord};

/// Manifest records with their feature bags loaded, index-aligned.
#[derive(Debug, Clone)]
pub struct Dataset {
    records: Vec<SlideRecord>,
    bags: Vec<FeatureBag>,
}

impl Dataset {
    /// Reads every record's bag. The bag takes the record's slide id.
    pub fn load(records: Vec<SlideRecord>) -> Result<Self, OrchestratorError> {
        validate_records(&records)?;
        let bags = records
            .par_iter()
            .map(|r| {
                let mut bag = read_feature_bag(&r.feature_path)?;
                bag.slide_id = r.slide_id.clone();
                Ok(bag)
            })
            .collect::<Result<Vec<_>, OrchestratorError>>()?;
        Self::from_parts(records, bags)
    }

    pub fn from_parts(records: Vec<SlideRecord>, bags: Vec<FeatureBag>) -> Result<Self, OrchestratorError> {
        validate_records(&records)?;
        if records.len() != bags.len() {
            return Err(OrchestratorError::Shape(format!("{} records but {} bags", records.len(), bags.len())));
        }
        if records.is_empty() {
            return Err(OrchestratorError::Shape("dataset is empty".into()));
        }
        if let Some(b) = bags.iter().find(|b| b.dim != bags[0].dim) {
            return Err(OrchestratorError::Shape(format!(
                "bag {} has dim {}, others have {}",
                b.slide_id, b.dim, bags[0].dim
            )));
        }
        Ok(Dataset { records, bags })
    }

    pub fn records(&self) -> &[SlideRecord] {
        &self.records
    }

    pub fn bags(&self) -> &[FeatureBag] {
        &self.bags
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.bags[0].dim
    }

    pub fn samples(&self) -> Vec<Sample<'_>> {
        self.bags.iter().zip(&self.records).map(|(bag, r)| Sample { bag, label: r.label }).collect()
    }

    /// Slides whose case is in `cases`, in manifest order.
    pub fn samples_for(&self, cases: &BTreeSet<String>) -> Vec<Sample<'_>> {
        self.bags
            .iter()
            .zip(&self.records)
            .filter(|(_, r)| cases.contains(&r.case_id))
            .map(|(bag, r)| Sample { bag, label: r.label })
            .collect()
    }
}
