use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use tempfile::NamedTempFile;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub version: String,
    pub outputs: Vec<String>,
}

/// Output directory that writes every file through a temp file and rename.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn atomic(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let tmp = NamedTempFile::new_in(&self.dir)
            .with_context(|| format!("creating temp file in {}", self.dir.display()))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            body(&mut w)?;
            w.flush()?;
        }
        tmp.persist(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.display().to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.atomic(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        self.atomic(name, |w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(header)?;
            for row in rows {
                out.write_record(&row)?;
            }
            out.flush()?;
            Ok(())
        })
    }

    /// Writes `<command>-manifest.json` listing everything written so far.
    pub fn finish<C: Serialize>(mut self, command: &str, config: &C, seeds: Vec<u64>) -> Result<()> {
        let manifest = RunManifest {
            command: command.into(),
            config: serde_json::to_value(config)?,
            seeds,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: self.written.clone(),
        };
        self.json(&format!("{command}-manifest.json"), &manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [1.0 / 3.0, 0.1, 2.0f64.sqrt(), 1e-300, -123456.789, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }
}
