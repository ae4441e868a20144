use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use super::config::{StudyConfig, StudyKind};
use crate::error::{Error, Result};

/// Version of the JSON summary layout.
pub const SUMMARY_SCHEMA: u32 = 1;

/// CSV cell; floats print in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(v) => f.write_str(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Named table with a fixed column schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width differs from table `{}`",
            self.name
        );
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))
                .map_err(csv_err)?;
        }
        w.into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Everything a study run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub kind: StudyKind,
    pub metrics: Map<String, Value>,
    /// The first table is the study's main CSV.
    pub tables: Vec<Table>,
}

impl StudyOutput {
    pub fn new(kind: StudyKind) -> Self {
        StudyOutput {
            kind,
            metrics: Map::new(),
            tables: Vec::new(),
        }
    }

    pub fn metric(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("metric serializes");
        self.metrics.insert(key.into(), v);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub study: String,
    pub params: Value,
    pub metrics: Map<String, Value>,
    pub seed: u64,
    pub build_id: String,
    pub config_hash: String,
}

/// Package version plus the `git describe` of the source tree at build time.
pub fn build_id() -> String {
    let version = env!("CARGO_PKG_VERSION");
    match option_env!("FRACPOST_GIT_DESCRIBE") {
        Some(d) if !d.is_empty() => format!("fracpost-{version}-{d}"),
        _ => format!("fracpost-{version}"),
    }
}

pub fn summary(cfg: &StudyConfig, out: &StudyOutput) -> Summary {
    Summary {
        schema: SUMMARY_SCHEMA,
        study: out.kind.name().to_string(),
        params: cfg.params_json(),
        metrics: out.metrics.clone(),
        seed: cfg.seed(),
        build_id: build_id(),
        config_hash: cfg.config_hash(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputFormats {
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputFormats {
    fn default() -> Self {
        OutputFormats {
            csv: true,
            json: true,
        }
    }
}

/// File name of a table: the main table is `<study>.csv`, others `<study>_<name>.csv`.
pub fn table_file_name(kind: StudyKind, index: usize, table: &Table) -> String {
    if index == 0 {
        format!("{}.csv", kind.name())
    } else {
        format!("{}_{}.csv", kind.name(), table.name)
    }
}

/// Writes the requested artifacts into `dir` and returns their paths.
pub fn write_outputs(
    cfg: &StudyConfig,
    out: &StudyOutput,
    dir: &Path,
    formats: OutputFormats,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    if formats.csv {
        for (i, t) in out.tables.iter().enumerate() {
            let path = dir.join(table_file_name(out.kind, i, t));
            std::fs::write(&path, t.to_csv()?)?;
            paths.push(path);
        }
    }
    if formats.json {
        let path = dir.join(format!("{}.json", out.kind.name()));
        let mut text = serde_json::to_string_pretty(&summary(cfg, out))?;
        text.push('\n');
        std::fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e17, 0.0] {
            let s = Cell::Float(v).to_string();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(Cell::Float(0.1).to_string(), "0.1");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("main", &["a", "b", "c"]);
        t.push(vec![1.5.into(), true.into(), "x,y".into()]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "a,b,c\n1.5,true,\"x,y\"\n");
    }
}
