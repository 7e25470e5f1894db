//! Records grouped into named tables, written as JSON lines or CSV.
//!
//! Every JSON line starts with `schema_version` and `record` (the table name).
//! CSV writes one table per file: the first goes to the output path and each
//! further table to `<stem>.<table>.csv` beside it. On stdout, tables are
//! separated by a blank line and introduced by `# <table>`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Format;
use crate::error::{usage, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Only environment variable read by the tool.
pub const OUTPUT_DIR_ENV: &str = "POLYMER_OUTPUT_DIR";

#[derive(Debug, Default)]
pub struct Sink {
    tables: Vec<(String, Vec<Map<String, Value>>)>,
}

impl Sink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, table: &str, record: &impl Serialize) -> CliResult<()> {
        self.push_with(table, Vec::new(), record)
    }

    /// Like [`Sink::push`], with extra leading fields.
    pub fn push_with(&mut self, table: &str, extra: Vec<(&str, Value)>, record: &impl Serialize) -> CliResult<()> {
        let body = match serde_json::to_value(record).map_err(|e| usage(format!("cannot encode record: {e}")))? {
            Value::Object(m) => m,
            other => Map::from_iter([("value".to_string(), other)]),
        };
        let mut row = Map::new();
        row.insert("schema_version".into(), SCHEMA_VERSION.into());
        row.insert("record".into(), table.into());
        row.extend(extra.into_iter().map(|(k, v)| (k.to_string(), v)));
        row.extend(body);
        match self.tables.iter_mut().find(|(name, _)| name == table) {
            Some((_, rows)) => rows.push(row),
            None => self.tables.push((table.to_string(), vec![row])),
        }
        Ok(())
    }

    fn json_lines(&self) -> CliResult<String> {
        let mut out = String::new();
        for (_, rows) in &self.tables {
            for row in rows {
                out.push_str(&serde_json::to_string(row).map_err(|e| usage(e.to_string()))?);
                out.push('\n');
            }
        }
        Ok(out)
    }

    pub fn write(&self, format: Format, path: Option<&Path>) -> CliResult<()> {
        match (format, path) {
            (Format::Json, None) => {
                std::io::stdout().write_all(self.json_lines()?.as_bytes())?;
            }
            (Format::Json, Some(p)) => write_file(p, &self.json_lines()?)?,
            (Format::Csv, None) => {
                let mut out = String::new();
                for (k, (name, rows)) in self.tables.iter().enumerate() {
                    if k > 0 {
                        out.push('\n');
                    }
                    if self.tables.len() > 1 {
                        out.push_str(&format!("# {name}\n"));
                    }
                    out.push_str(&csv_table(rows)?);
                }
                std::io::stdout().write_all(out.as_bytes())?;
            }
            (Format::Csv, Some(p)) => {
                for (k, (name, rows)) in self.tables.iter().enumerate() {
                    let target = if k == 0 { p.to_path_buf() } else { sibling(p, name) };
                    write_file(&target, &csv_table(rows)?)?;
                }
            }
        }
        Ok(())
    }
}

/// `<stem>.<table>.csv` in the directory of `path`.
fn sibling(path: &Path, table: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into());
    path.with_file_name(format!("{stem}.{table}.csv"))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Columns in first-seen order over all rows; the envelope fields are dropped.
fn csv_table(rows: &[Map<String, Value>]) -> CliResult<String> {
    let mut columns: Vec<&str> = Vec::new();
    for row in rows {
        for key in row.keys() {
            if key != "schema_version" && key != "record" && !columns.contains(&key.as_str()) {
                columns.push(key);
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| usage(format!("cannot write csv: {e}"));
    w.write_record(&columns).map_err(csv_err)?;
    for row in rows {
        let cells: Vec<String> = columns
            .iter()
            .map(|c| match row.get(*c) {
                None | Some(Value::Null) => String::new(),
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
            })
            .collect();
        w.write_record(&cells).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| usage(format!("cannot write csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| usage(e.to_string()))
}

/// Joins a relative output path onto the output directory variable, if set.
pub fn resolve_output(path: Option<PathBuf>) -> Option<PathBuf> {
    let path = path?;
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Some(PathBuf::from(dir).join(path)),
        _ => Some(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
        name: String,
    }

    #[test]
    fn json_lines_carry_the_envelope() {
        let mut s = Sink::new();
        s.push("t", &Row { a: 1, b: None, name: "x".into() }).unwrap();
        assert_eq!(s.json_lines().unwrap(), "{\"schema_version\":1,\"record\":\"t\",\"a\":1,\"name\":\"x\"}\n");
    }

    #[test]
    fn csv_takes_the_union_of_columns() {
        let mut s = Sink::new();
        s.push("t", &Row { a: 1, b: None, name: "x,y".into() }).unwrap();
        s.push("t", &Row { a: 2, b: Some(0.5), name: "z".into() }).unwrap();
        assert_eq!(csv_table(&s.tables[0].1).unwrap(), "a,name,b\n1,\"x,y\",\n2,z,0.5\n");
    }

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("out/run.csv"), "rate_row"), PathBuf::from("out/run.rate_row.csv"));
    }
}
