//! Snapshot containers, diagnostics files and run configurations. Every
//! write goes to a temporary file in the target directory and is renamed
//! into place.

mod config;
mod diagnostics;
mod snapshot;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};

pub use config::*;
pub use diagnostics::{to_csv, write_diagnostics, write_json, Diagnostics, DiagnosticsFormat};
pub use snapshot::{
    read_container, read_ensemble, read_fields, read_observations, read_snapshot, read_trajectory, write_ensemble,
    write_fields, write_observations, write_snapshot, write_trajectory, ContainerKind, SnapshotHeader, FLAG_DIV_FREE,
    FLAG_MEAN_ZERO, FORMAT_VERSION, HEADER_LEN, MAGIC,
};

/// Write-temp-then-rename.
pub fn atomic_write(path: &Path, write: impl FnOnce(&mut BufWriter<&mut File>) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w).map_err(|e| Error::io(path, e))?;
        std::io::Write::flush(&mut w).map_err(|e| Error::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
