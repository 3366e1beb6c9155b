use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{FeatureStoreError, SubtypeLabel};

/// Exact header required of every manifest file.
pub const MANIFEST_HEADER: [&str; 5] = ["slide_id", "case_id", "label", "feature_path", "cohort_tag"];

/// One slide's binding to its case, label and feature file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlideRecord {
    pub slide_id: String,
    pub case_id: String,
    pub label: SubtypeLabel,
    pub feature_path: PathBuf,
    pub cohort_tag: String,
}

/// Loads a manifest CSV. Relative feature paths are resolved against the
/// manifest's own directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<SlideRecord>, FeatureStoreError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| FeatureStoreError::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    parse_manifest(file, base)
}

/// Parses manifest rows from any reader; see [`load_manifest`].
pub fn parse_manifest(reader: impl Read, base_dir: &Path) -> Result<Vec<SlideRecord>, FeatureStoreError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers().map_err(FeatureStoreError::Csv)?.clone();
    if header.iter().ne(MANIFEST_HEADER.iter().copied()) {
        return Err(FeatureStoreError::Manifest(format!(
            "expected header `{}`, found `{}`",
            MANIFEST_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut records = Vec::new();
    for (row, result) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = result.map_err(FeatureStoreError::Csv)?;
        if rec.len() != MANIFEST_HEADER.len() {
            return Err(FeatureStoreError::Manifest(format!(
                "line {line}: expected {} fields, found {}",
                MANIFEST_HEADER.len(),
                rec.len()
            )));
        }
        let field = |i: usize| -> Result<String, FeatureStoreError> {
            let v = &rec[i];
            if v.is_empty() {
                Err(FeatureStoreError::Manifest(format!(
                    "line {line}: empty `{}`",
                    MANIFEST_HEADER[i]
                )))
            } else {
                Ok(v.to_string())
            }
        };
        let label: SubtypeLabel = rec[2].parse()?;
        let raw_path = PathBuf::from(field(3)?);
        let feature_path = if raw_path.is_absolute() { raw_path } else { base_dir.join(raw_path) };
        records.push(SlideRecord {
            slide_id: field(0)?,
            case_id: field(1)?,
            label,
            feature_path,
            cohort_tag: field(4)?,
        });
    }
    validate_records(&records)?;
    Ok(records)
}

/// Checks slide-id uniqueness and the one-label-per-case rule.
pub fn validate_records(records: &[SlideRecord]) -> Result<(), FeatureStoreError> {
    let mut seen = HashSet::new();
    let mut case_labels: BTreeMap<&str, SubtypeLabel> = BTreeMap::new();
    for r in records {
        if !seen.insert(r.slide_id.as_str()) {
            return Err(FeatureStoreError::DuplicateSlide(r.slide_id.clone()));
        }
        match case_labels.get(r.case_id.as_str()) {
            Some(&l) if l != r.label => {
                return Err(FeatureStoreError::LabelConflict {
                    case_id: r.case_id.clone(),
                    first: l,
                    second: r.label,
                })
            }
            Some(_) => {}
            None => {
                case_labels.insert(&r.case_id, r.label);
            }
        }
    }
    Ok(())
}

/// Writes records in manifest format. Paths are written as given.
pub fn write_manifest(records: &[SlideRecord], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", MANIFEST_HEADER.join(","))?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.slide_id,
            r.case_id,
            r.label,
            r.feature_path.display(),
            r.cohort_tag
        )?;
    }
    Ok(())
}
