//! Run configuration file: a TOML manifest whose values back-fill any
//! flag the command line leaves unset. Flags always win.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Optional defaults for the pipeline commands. Every field mirrors a
/// command-line flag of the same name.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub stage1_logits: Option<Vec<PathBuf>>,
    pub stage2_logits: Option<Vec<PathBuf>>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub seed: Option<u64>,
    pub agg: Option<String>,
    pub keywords: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
