//! CSV tables and text reports with a `#` provenance header.

use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: String,
    pub constants_sha256: String,
    pub seed: Option<u64>,
    pub timestamp: Option<u64>,
}

impl Provenance {
    pub fn new(command: &str, constants_text: &str, seed: Option<u64>, stamp: bool) -> Self {
        let digest = Sha256::digest(constants_text.as_bytes());
        let timestamp = stamp.then(|| {
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
        });
        Self {
            command: command.to_string(),
            constants_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed,
            timestamp,
        }
    }

    pub fn header(&self) -> String {
        let mut s = format!(
            "# cascade {}\n# command: {}\n# constants-sha256: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.constants_sha256
        );
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "# seed: {seed}");
        }
        if let Some(t) = self.timestamp {
            let _ = writeln!(s, "# generated-unix: {t}");
        }
        s
    }
}

/// Nine significant digits.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_finite() {
        format!("{x:.8e}")
    } else {
        format!("{x}")
    }
}

pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, prov: &Provenance) -> String {
        let mut s = prov.header();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => fmt9(*x),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Writes `contents` to `dir/name` via a temporary file and rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, dir.join(name))
}
