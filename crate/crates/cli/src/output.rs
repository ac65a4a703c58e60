use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(CliError::io(path))
}

/// Pretty JSON with a trailing newline. Field order follows the struct
/// definitions, so identical inputs give identical bytes.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create_file(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    writeln!(out).and_then(|_| out.flush()).map_err(CliError::io(path))
}
