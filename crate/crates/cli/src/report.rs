use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::CliError;

/// Rounds to 10 significant digits, the precision angles are reported at.
pub fn sig10(x: f64) -> f64 {
    format!("{x:.9e}").parse().unwrap_or(x)
}

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn file(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    pub fn csv(&self, name: &str) -> Result<csv::Writer<File>, CliError> {
        csv::Writer::from_path(self.path(name)).map_err(|e| CliError::Io(e.into()))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<(), CliError> {
        fs::write(self.path(name), body)?;
        Ok(())
    }

    /// Writes `summary.json` and echoes it on stdout.
    pub fn summary(&self, v: &Value) -> Result<(), CliError> {
        let s = serde_json::to_string_pretty(v).expect("summary is valid JSON");
        self.text("summary.json", &(s.clone() + "\n"))?;
        // a closed pipe on stdout is not an error of the run
        let _ = writeln!(std::io::stdout().lock(), "{s}");
        Ok(())
    }
}

pub fn csv_row<I, S>(w: &mut csv::Writer<File>, row: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(row).map_err(|e| CliError::Io(e.into()))
}
