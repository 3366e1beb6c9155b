pub mod compare;
pub mod evaluate;
pub mod heatmap;
pub mod preprocess;
pub mod train;
pub mod tune;

use crate::config::{pick, ConfigFile};
use crate::error::CliError;
use crate::GlobalArgs;

/// Worker count: flag, else config file, else logical CPUs.
pub(crate) fn workers(g: &GlobalArgs, file: &mut ConfigFile) -> Result<usize, CliError> {
    let default = std::thread::available_parallelism().map_or(1, |n| n.get());
    let w = pick(g.workers, file, "workers", default)?;
    if w == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    Ok(w)
}

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Runtime(e.to_string()))
}
