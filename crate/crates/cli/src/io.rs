//! File input with located parse errors, and all-or-nothing artifact output.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use cgft::Point;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Parse a JSON file; errors name the path and the byte offset of the problem.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| {
        let offset = byte_offset(&text, e.line(), e.column());
        anyhow!("{}: invalid JSON at byte offset {offset} (line {}, column {}): {e}", path.display(), e.line(), e.column())
    })
}

/// serde_json reports 1-based lines and 1-based byte columns.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Space-separated coordinates, used for points inside CSV cells.
pub fn fmt_point(p: &Point) -> String {
    p.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Build a CSV document from string records.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Named files to be written together.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    /// Write through temporary names, then rename, so a failed run leaves no
    /// half-written report behind.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let mut staged = Vec::new();
        for (name, contents) in &self.files {
            let tmp = dir.join(format!(".{name}.partial"));
            if let Err(e) = fs::write(&tmp, contents) {
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                let _ = fs::remove_file(&tmp);
                return Err(e).with_context(|| format!("cannot write {}", tmp.display()));
            }
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::new();
        for (tmp, dest) in staged {
            fs::rename(&tmp, &dest).with_context(|| format!("cannot write {}", dest.display()))?;
            written.push(dest);
        }
        Ok(written)
    }
}
