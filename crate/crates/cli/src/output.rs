use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// 17 significant digits, '.' decimal point, no locale.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Minimal CSV builder; all fields are numbers or plain identifiers.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")) }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn from_text(text: String) -> Self {
        Self { text }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(dir: &Path, file: &str, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.join(file).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(dir.join(file)).map_err(|e| io(e.error))?;
    Ok(())
}
