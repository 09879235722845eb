//! Deterministic report emission: JSON documents, CSV tables with
//! 17-significant-digit floats, field dumps, and PGM previews.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use vortexpatch::{field_io, ScalarField};

use crate::config::RunConfig;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(path: &Path, cfg: &RunConfig) -> std::io::Result<OutDir> {
        fs::create_dir_all(path)?;
        let dir = OutDir {
            root: path.to_path_buf(),
        };
        dir.write_json("resolved_config.json", cfg)?;
        Ok(dir)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.root.join(name), text)
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        let mut f = fs::File::create(self.root.join(name))?;
        writeln!(f, "{}", header.join(","))?;
        for row in rows {
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_field(&self, name: &str, field: &ScalarField) -> vortexpatch::Result<()> {
        field_io::write_field_file(&self.path(name), field)
    }

    pub fn write_pgm(&self, name: &str, field: &ScalarField) -> vortexpatch::Result<()> {
        field_io::write_pgm_file(&self.path(name), field)
    }
}

/// 17 significant digits, locale-free; round-trips f64 exactly.
pub fn f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fu(x: usize) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.1, -3.25e-17, 1.0 / 3.0, 6.02e23, 0.0] {
            let s = f(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }
}
