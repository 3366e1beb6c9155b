//! The guide in `book/` has no way to compile its listings against this
//! workspace, so each chapter is included here as module docs and its code
//! blocks run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/feature-bags.md")]
pub mod feature_bags {}
#[doc = include_str!("../../../book/src/preprocessing.md")]
pub mod preprocessing {}
#[doc = include_str!("../../../book/src/abmil.md")]
pub mod abmil {}
#[doc = include_str!("../../../book/src/cross-validation.md")]
pub mod cross_validation {}
#[doc = include_str!("../../../book/src/tuning.md")]
pub mod tuning {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/heatmaps.md")]
pub mod heatmaps {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
