use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::CliError;

/// Output directory whose files appear only once fully written.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes through a temporary file in the same directory, then renames
    /// it over `name`.
    pub fn write<F, E>(&self, name: &str, fill: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut BufWriter<&mut NamedTempFile>) -> Result<(), E>,
        E: Into<CliError>,
    {
        let target = self.path(name);
        let mut tmp = NamedTempFile::new_in(&self.root).map_err(|e| CliError::io(&self.root, e))?;
        {
            let mut w = BufWriter::new(&mut tmp);
            fill(&mut w).map_err(Into::into)?;
            w.flush().map_err(|e| CliError::io(&target, e))?;
        }
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            fs::set_permissions(tmp.path(), fs::Permissions::from_mode(0o644))
                .map_err(|e| CliError::io(tmp.path(), e))?;
        }
        tmp.persist(&target)
            .map_err(|e| CliError::io(&target, e.error))?;
        log::info!("wrote {}", target.display());
        Ok(target)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        self.write(name, |w| {
            w.write_all(text.as_bytes())
                .map_err(|e| CliError::io(self.path(name), e))
        })
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Ledger(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Ledger(e.into())
    }
}
