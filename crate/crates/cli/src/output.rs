//! Output helpers: every file starts with a `#` metadata line carrying the
//! config hash, library version, and seed, so results are traceable to the
//! exact configuration. JSON reports repeat the metadata in a "meta" object
//! (strip the first line before feeding the file to a strict JSON parser).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use fluxtrack::csvio::fmt_full;
use fluxtrack::signal::Signal;

use crate::CliError;

pub struct OutputWriter {
    dir: PathBuf,
    header: String,
}

impl OutputWriter {
    pub fn new(dir: &Path, config_sha256: &str, seed: u64) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
        let header = format!(
            "config_sha256={config_sha256} version={} seed={seed}",
            env!("CARGO_PKG_VERSION")
        );
        Ok(Self { dir: dir.to_path_buf(), header })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_signal(&self, name: &str, s: &Signal<f64>) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut buf = Vec::new();
        fluxtrack::csvio::write_signal(&mut buf, s, &[self.header.clone()])
            .map_err(|e| CliError::io(e.to_string()))?;
        fs::write(&path, buf).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn write_csv(&self, name: &str, columns: &str, rows: &[Vec<f64>]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut buf = Vec::new();
        writeln!(buf, "# {}", self.header).unwrap();
        writeln!(buf, "{columns}").unwrap();
        for row in rows {
            let line: Vec<String> = row.iter().map(|v| fmt_full(*v)).collect();
            writeln!(buf, "{}", line.join(",")).unwrap();
        }
        fs::write(&path, buf).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut body = serde_json::to_value(value)
            .map_err(|e| CliError::io(format!("serialize {name}: {e}")))?;
        if let Some(obj) = body.as_object_mut() {
            obj.insert("meta".into(), json!({ "header": self.header }));
        }
        let text = serde_json::to_string_pretty(&body)
            .map_err(|e| CliError::io(format!("serialize {name}: {e}")))?;
        let contents = format!("# {}\n{}\n", self.header, text);
        fs::write(&path, contents).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
