pub mod attribute;
pub mod report;
pub mod synth;
pub mod train;

use std::path::Path;

use graphcam::error::{Error, Result};

/// Write a file, mapping IO failures onto located errors.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_text(path: &Path, context: &str) -> Result<String> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile {
            path: path.to_path_buf(),
            context: context.to_string(),
        }),
        Err(err) => Err(Error::Io {
            path: path.to_path_buf(),
            source: err,
        }),
    }
}
