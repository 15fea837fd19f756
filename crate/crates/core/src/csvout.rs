//! CSV emission: UTF-8, comma separated, LF line endings, `#`-prefixed
//! provenance header embedding the resolved configuration, atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

const CONFIG_BEGIN: &str = "# config-begin";
const CONFIG_END: &str = "# config-end";

/// Twelve significant digits.
pub fn format_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// A CSV document: comment lines, one header row, data rows.
#[derive(Debug, Clone, Default)]
pub struct CsvDocument {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvDocument {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Prepend the provenance block: tool version plus the full resolved
    /// configuration, each line `# `-prefixed so the file stays valid CSV.
    pub fn with_provenance(mut self, version: &str, config_toml: &str) -> Self {
        let mut lines = vec![format!("# spdc-focus {version}"), CONFIG_BEGIN.to_string()];
        for line in config_toml.lines() {
            lines.push(format!("# {line}"));
        }
        lines.push(CONFIG_END.to_string());
        lines.extend(self.comments);
        self.comments = lines;
        self
    }

    pub fn comment(&mut self, text: impl Into<String>) {
        self.comments.push(format!("# {}", text.into()));
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.comments {
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Recover the embedded configuration from a rendered document.
pub fn extract_embedded_config(text: &str) -> Option<String> {
    let mut in_block = false;
    let mut config = String::new();
    for line in text.lines() {
        if line == CONFIG_BEGIN {
            in_block = true;
            continue;
        }
        if line == CONFIG_END {
            return Some(config);
        }
        if in_block {
            config.push_str(line.strip_prefix("# ").unwrap_or(line));
            config.push('\n');
        }
    }
    None
}

/// Write through a sibling temporary file and rename, so a failed run never
/// leaves a partial output behind.
pub fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let directory = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| std::io::Error::other("output path has no file name"))?;
    let mut temp = directory.map(Path::to_path_buf).unwrap_or_default();
    temp.push(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut file = fs::File::create(&temp)?;
        file.write_all(content.as_bytes())?;
        file.sync_all()?;
    }
    match fs::rename(&temp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&temp);
            Err(e)
        }
    }
}
