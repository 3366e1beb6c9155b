use std::fmt;
use std::str::FromStr;

use super::FeatureStoreError;

/// Number of subtype classes.
pub const NUM_CLASSES: usize = 5;

/// The five epithelial ovarian carcinoma subtypes, with stable integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubtypeLabel {
    /// High-grade serous carcinoma.
    Hgsc = 0,
    /// Low-grade serous carcinoma.
    Lgsc = 1,
    /// Clear cell carcinoma.
    Ccc = 2,
    /// Endometrioid carcinoma.
    Ec = 3,
    /// Mucinous carcinoma.
    Mc = 4,
}

impl SubtypeLabel {
    pub const ALL: [SubtypeLabel; NUM_CLASSES] = [
        SubtypeLabel::Hgsc,
        SubtypeLabel::Lgsc,
        SubtypeLabel::Ccc,
        SubtypeLabel::Ec,
        SubtypeLabel::Mc,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SubtypeLabel::Hgsc => "HGSC",
            SubtypeLabel::Lgsc => "LGSC",
            SubtypeLabel::Ccc => "CCC",
            SubtypeLabel::Ec => "EC",
            SubtypeLabel::Mc => "MC",
        }
    }
}

impl fmt::Display for SubtypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubtypeLabel {
    type Err = FeatureStoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| FeatureStoreError::UnknownLabel(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_and_names_are_stable() {
        let names: Vec<_> = SubtypeLabel::ALL.iter().map(|l| l.name()).collect();
        assert_eq!(names, ["HGSC", "LGSC", "CCC", "EC", "MC"]);
        for (i, l) in SubtypeLabel::ALL.iter().enumerate() {
            assert_eq!(l.code(), i);
            assert_eq!(SubtypeLabel::from_code(i), Some(*l));
            assert_eq!(l.name().parse::<SubtypeLabel>().unwrap(), *l);
        }
        assert_eq!(SubtypeLabel::from_code(5), None);
        assert!("Serous".parse::<SubtypeLabel>().is_err());
    }
}
