pub mod ablate;
pub mod budget;
pub mod dataset;
pub mod tokenize;
pub mod train;

use std::path::{Path, PathBuf};

use smolpipe_core::budget::{PipelineConfig, PRESET_NAMES};
use smolpipe_core::kv::KvMap;

use crate::error::{CliError, Result};

/// A config argument: a file path, or one of the bundled preset names.
pub fn pipeline_config(arg: &str) -> Result<(PipelineConfig, Option<PathBuf>)> {
    let path = Path::new(arg);
    if path.is_file() {
        let cfg = PipelineConfig::load(path).map_err(|e| CliError::from(e).context(path.display()))?;
        return Ok((cfg, Some(path.to_path_buf())));
    }
    if PRESET_NAMES.contains(&arg) {
        return Ok((PipelineConfig::preset(arg)?, None));
    }
    Err(CliError::input(format!(
        "{arg}: no such config file or preset (presets: {})",
        PRESET_NAMES.join(", ")
    )))
}

/// Reads a `key = value` file, naming it in any error.
pub fn load_kv(path: &Path) -> Result<KvMap> {
    KvMap::load(path).map_err(|e| CliError::from(e).context(path.display()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::from(e).context(path.display()))
}
