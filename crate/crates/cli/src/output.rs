use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};

/// Metadata embedded in every artifact. Thread count and output path are
/// left out since they never change the content.
pub fn meta(command: Command, config: &RunConfig) -> Value {
    json!({
        "tool": "insitu",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": command.name(),
        "config": config,
        "seed": config.seed,
    })
}

/// One `# meta: {...}` line for text formats.
pub fn comment_header(meta: &Value) -> String {
    format!("# meta: {meta}\n")
}

/// An emitted artifact: the bytes, plus whether a cross-check failed.
pub struct Artifact {
    pub bytes: Vec<u8>,
    /// Raw binary streams carry their metadata in a `<out>.meta.json` sidecar.
    pub sidecar: Option<Value>,
    pub failed: bool,
}

impl Artifact {
    pub fn text(s: String) -> Self {
        Self {
            bytes: s.into_bytes(),
            sidecar: None,
            failed: false,
        }
    }

    pub fn json(value: &Value) -> Self {
        let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
        s.push('\n');
        Self::text(s)
    }
}

/// Writes to `out` through a temporary file in the same directory, so a
/// failed run leaves nothing behind; `None` writes to standard output.
pub fn emit(artifact: &Artifact, out: Option<&Path>) -> Result<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&artifact.bytes)?;
            stdout.flush()?;
        }
        Some(path) => {
            let sidecar_path = artifact.sidecar.as_ref().map(|meta| {
                let mut p = path.as_os_str().to_owned();
                p.push(".meta.json");
                (std::path::PathBuf::from(p), meta)
            });
            atomic_write(path, &artifact.bytes)?;
            if let Some((p, meta)) = sidecar_path {
                let mut text = serde_json::to_string_pretty(meta)?;
                text.push('\n');
                atomic_write(&p, text.as_bytes())?;
            }
        }
    }
    Ok(())
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
