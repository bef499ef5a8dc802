//! Text formats: matrix and label CSV, flat `key = value` config files, and
//! all-or-nothing output directories.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Formats a value with 17 significant digits, enough to round-trip any
/// finite `f64`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let field = field.trim();
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(line, format!("'{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("'{field}' is not finite")));
    }
    Ok(v)
}

// lines with their 1-based numbers; a single trailing newline is not a line
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let text = text.strip_suffix('\n').unwrap_or(text);
    text.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l))
}

/// Parses a headerless, comma-separated matrix, one row per line.
pub fn parse_matrix_csv(text: &str) -> Result<Matrix> {
    if text.trim().is_empty() {
        return Err(Error::parse(1, "empty matrix file"));
    }
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, content) in numbered_lines(text) {
        if content.trim().is_empty() {
            return Err(Error::parse(line, "blank line"));
        }
        let before = data.len();
        for field in content.split(',') {
            data.push(parse_f64(field, line)?);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::parse(
                    line,
                    format!("row has {width} fields, expected {c}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    Matrix::from_vec(rows, cols.unwrap_or(0), data)
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::with_capacity(m.rows() * m.cols() * 24);
    for i in 0..m.rows() {
        for (j, &v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_f64(v));
        }
        out.push('\n');
    }
    out
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text).map_err(|e| with_path(e, path))
}

pub fn write_matrix_csv(matrix: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &matrix_to_csv(matrix))
}

/// One `0`/`1` per line.
pub fn parse_labels(text: &str) -> Result<Vec<bool>> {
    if text.trim().is_empty() {
        return Err(Error::parse(1, "empty labels file"));
    }
    numbered_lines(text)
        .map(|(line, l)| match l.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::parse(
                line,
                format!("label must be 0 or 1, got '{other}'"),
            )),
        })
        .collect()
}

pub fn labels_to_csv(labels: &[bool]) -> String {
    labels
        .iter()
        .map(|&l| if l { "1\n" } else { "0\n" })
        .collect()
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<bool>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// One `key = value` line of a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped;
/// repeated keys are an error.
pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>> {
    let mut entries: Vec<ConfigEntry> = Vec::new();
    for (line, raw) in numbered_lines(text) {
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            Error::parse(line, format!("expected 'key = value', got '{content}'"))
        })?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::parse(line, format!("invalid key '{key}'")));
        }
        if let Some(prev) = entries.iter().find(|e| e.key == key) {
            return Err(Error::parse(
                line,
                format!("key '{key}' already set on line {}", prev.line),
            ));
        }
        entries.push(ConfigEntry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(entries)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<Vec<ConfigEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| with_path(e, path))
}

/// Renders entries back to `key = value` text.
pub fn config_to_text(header: &[&str], entries: &[(&str, String)]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    for (k, v) in entries {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Files written into one directory that are removed again unless
/// [`OutputSet::commit`] is called.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let created_dir = !dir.exists();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(OutputSet {
            dir,
            created_dir,
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` inside the directory; each file appears whole or not at all.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, contents)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            // only succeeds if nothing else landed there
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
