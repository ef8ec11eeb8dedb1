//! Output formatting and atomic file writes.
//!
//! Every artifact is written through [`write_output`], which stages the
//! content in a sibling temporary file and renames it into place so a
//! crashed run never leaves a half-written artifact. Floats are printed
//! with Rust's shortest round-trip formatting, so re-parsing an artifact
//! reproduces the computed bits exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// Escapes one CSV field, quoting it only when it contains a delimiter,
/// quote, or line break.
pub fn csv_field(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        let mut escaped = String::with_capacity(field.len() + 2);
        escaped.push('"');
        for ch in field.chars() {
            if ch == '"' {
                escaped.push('"');
            }
            escaped.push(ch);
        }
        escaped.push('"');
        escaped
    } else {
        field.to_string()
    }
}

/// Builds a CSV document from a header line and row fields, with a
/// trailing newline.
pub fn csv_document(header: &str, rows: &[Vec<String>]) -> String {
    let mut doc = String::new();
    doc.push_str(header);
    doc.push('\n');
    for row in rows {
        let mut first = true;
        for field in row {
            if !first {
                doc.push(',');
            }
            let _ = write!(doc, "{}", csv_field(field));
            first = false;
        }
        doc.push('\n');
    }
    doc
}

/// Writes `content` to `path` atomically, or to stdout when no path is
/// given.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => write_file(path, content),
    }
}

/// Atomically replaces `path` with `content` via a same-directory rename.
pub fn write_file(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let name = path
        .file_name()
        .with_context(|| format!("output path {} has no file name", path.display()))?;
    let staging = match dir {
        Some(dir) => dir.join(format!(".{}.tmp", name.to_string_lossy())),
        None => Path::new(&format!(".{}.tmp", name.to_string_lossy())).to_path_buf(),
    };
    fs::write(&staging, content)
        .with_context(|| format!("cannot write {}", staging.display()))?;
    fs::rename(&staging, path)
        .with_context(|| format!("cannot move output into {}", path.display()))?;
    Ok(())
}
