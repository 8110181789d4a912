//! Number formatting and the all-or-nothing output writer.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Significant digits for rates in bit/s.
pub const RATE_DIGITS: usize = 9;
/// Significant digits for lengths, velocities and times.
pub const LENGTH_DIGITS: usize = 4;

/// Formats `x` with `digits` significant digits, trailing zeros dropped.
/// Plain decimal for ordinary magnitudes, scientific beyond them.
pub fn sig(x: f64, digits: usize) -> String {
    assert!(digits > 0);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    let mut d: String = mantissa.chars().filter(|c| *c != '.').collect();
    while d.len() > 1 && d.ends_with('0') {
        d.pop();
    }
    let sign = if x < 0.0 { "-" } else { "" };
    let body = if !(-7..=20).contains(&exp) {
        let (head, tail) = d.split_at(1);
        if tail.is_empty() {
            format!("{head}e{exp}")
        } else {
            format!("{head}.{tail}e{exp}")
        }
    } else if exp < 0 {
        format!("0.{}{d}", "0".repeat((-exp - 1) as usize))
    } else {
        let int_len = exp as usize + 1;
        if d.len() <= int_len {
            format!("{d}{}", "0".repeat(int_len - d.len()))
        } else {
            format!("{}.{}", &d[..int_len], &d[int_len..])
        }
    };
    format!("{sign}{body}")
}

pub fn rate(x: f64) -> String {
    sig(x, RATE_DIGITS)
}

pub fn length(x: f64) -> String {
    sig(x, LENGTH_DIGITS)
}

/// Comment lines that open every output file.
pub fn header(command: &str, cfg: &RunConfig) -> String {
    format!(
        "# mmv2x {VERSION}\n# command: {command}\n# config_hash: {}\n# seed: {}\n",
        cfg.config_hash(),
        cfg.seed
    )
}

/// Builds a CSV body with LF line endings.
pub fn csv_body<I, R>(columns: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(columns).expect("in-memory write");
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV of UTF-8 fields")
}

/// Files produced by one command. Nothing touches the disk until
/// [`commit`](Self::commit), which either writes every file or none.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file into `dir`; on any failure removes what it wrote.
    pub fn commit(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let path = dir.join(name);
            if let Err(e) = fs::write(&path, contents) {
                let _ = fs::remove_file(&path);
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(e);
            }
            written.push(path);
        }
        Ok(written)
    }
}
