pub mod audit;
pub mod curate;
pub mod evaluate;
pub mod generate;
pub mod train;

use std::path::Path;

use crate::error::{CliError, Result};

pub(crate) fn require(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::user(format!("missing input: {what} not found at {}", path.display())))
    }
}

pub(crate) fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::user(format!("cannot create {}: {e}", path.display())))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::user(format!("cannot write {}: {e}", path.display())))
}
