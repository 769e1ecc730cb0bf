//! File helpers: every output goes through a temp file and a rename so a
//! failed run never leaves a half-written artifact behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use slp_core::tensor::Tensor;
use slp_core::{load_dataset, load_model, Dataset, Model};

use crate::CliResult;

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()).into())
}

pub fn model(path: &Path) -> CliResult<Model> {
    load_model(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

pub fn dataset(path: &Path) -> CliResult<Dataset> {
    load_dataset(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

pub fn tensor(path: &Path) -> CliResult<Tensor> {
    Tensor::from_bytes(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| format!("{} is not a file path", path.display()))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(format!("cannot write {}: {e}", path.display()).into());
    }
    Ok(())
}

/// Creates `dir` if needed and returns it.
pub fn out_dir(dir: &Path) -> CliResult<&Path> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    Ok(dir)
}

pub fn write_tensor(dir: &Path, stem: &str, t: &Tensor) -> CliResult<()> {
    write_atomic(&dir.join(format!("{stem}.slpt")), &t.to_bytes())
}
