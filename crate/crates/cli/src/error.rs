use ovmil::abmil::AbmilError;
use ovmil::feature_store::FeatureStoreError;
use ovmil::heatmap::HeatmapError;
use ovmil::orchestrator::OrchestratorError;
use ovmil::preprocess::PreprocessError;
use ovmil::stats::StatsError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

fn csv_is_io(e: &csv::Error) -> bool {
    matches!(e.kind(), csv::ErrorKind::Io(_))
}

impl From<AbmilError> for CliError {
    fn from(e: AbmilError) -> Self {
        match &e {
            AbmilError::Io { .. } => CliError::Io(e.to_string()),
            AbmilError::Csv(c) if csv_is_io(c) => CliError::Io(e.to_string()),
            AbmilError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<FeatureStoreError> for CliError {
    fn from(e: FeatureStoreError) -> Self {
        match &e {
            FeatureStoreError::Io { .. } => CliError::Io(e.to_string()),
            FeatureStoreError::Csv(c) if csv_is_io(c) => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match &e {
            StatsError::Csv(c) if csv_is_io(c) => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<PreprocessError> for CliError {
    fn from(e: PreprocessError) -> Self {
        match &e {
            PreprocessError::Image(_) => CliError::Io(e.to_string()),
            PreprocessError::Parameter(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<HeatmapError> for CliError {
    fn from(e: HeatmapError) -> Self {
        match e {
            HeatmapError::Io { .. } => CliError::Io(e.to_string()),
            HeatmapError::Spec(_) => CliError::Usage(e.to_string()),
            HeatmapError::Abmil(a) => a.into(),
            HeatmapError::Image(p) => p.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<OrchestratorError> for CliError {
    fn from(e: OrchestratorError) -> Self {
        match e {
            OrchestratorError::Abmil(a) => a.into(),
            OrchestratorError::Store(s) => s.into(),
            OrchestratorError::Stats(s) => s.into(),
            OrchestratorError::Io { .. } => CliError::Io(e.to_string()),
            OrchestratorError::Csv(ref c) if csv_is_io(c) => CliError::Io(e.to_string()),
            OrchestratorError::Schedule(_) | OrchestratorError::Grid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
