use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Content hash in the style of a git blob id: sha256("blob <len>\0" ‖ bytes).
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

fn file_hash(path: &Path) -> anyhow::Result<String> {
    let b = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(blob_hash(&b))
}

/// Output files of one run, named relative to the output directory.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Registers `name` and returns its full path.
    pub fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Value,
    inputs: Vec<FileEntry>,
    /// Hash of the resolved config together with every input file.
    input_hash: String,
    outputs: Vec<FileEntry>,
    summary: &'a Value,
}

/// Writes manifest.json for a finished run. It holds no timestamps, so
/// identical inputs give byte-identical manifests.
pub fn write_manifest(
    out: &mut Outputs,
    command: &str,
    resolved: &Value,
    inputs: &[PathBuf],
    summary: &Value,
) -> anyhow::Result<PathBuf> {
    let mut combined = Sha256::new();
    combined.update(serde_json::to_vec(resolved)?);
    let mut input_entries = Vec::new();
    for p in inputs {
        let h = file_hash(p)?;
        combined.update(h.as_bytes());
        input_entries.push(FileEntry {
            path: p.display().to_string(),
            sha256: h,
        });
    }
    let mut outputs = Vec::new();
    for f in &out.files {
        outputs.push(FileEntry {
            path: f.clone(),
            sha256: file_hash(&out.dir.join(f))?,
        });
    }
    let m = Manifest {
        tool: "nudge-nse",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: resolved,
        inputs: input_entries,
        input_hash: hex::encode(combined.finalize()),
        outputs,
        summary,
    };
    let path = out.dir.join("manifest.json");
    let bytes = serde_json::to_vec_pretty(&m)?;
    nudge_nse::io::atomic_write(&path, |w| std::io::Write::write_all(w, &bytes))?;
    Ok(path)
}
