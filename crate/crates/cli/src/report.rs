//! Report assembly and rendering.

use std::fmt::Write as _;

use clap::ValueEnum;
use indexmap::IndexMap;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub results: IndexMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn new(command: &str, config: impl Serialize, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            seed,
            results: IndexMap::new(),
            wall_time_s: None,
        }
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_string(), serde_json::to_value(value).expect("result serializes"));
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(self).expect("report serializes") + "\n"),
            Format::Csv => self.render_csv(),
            Format::Table => Ok(self.render_table()),
        }
    }

    fn rows(&self) -> Vec<(String, String, String)> {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut rows = Vec::new();
        if let Value::Object(top) = value {
            for (section, v) in top {
                let mut flat = Vec::new();
                flatten("", &v, &mut flat);
                for (key, text) in flat {
                    rows.push((section.clone(), key, text));
                }
            }
        }
        rows
    }

    fn render_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "key", "value"]).map_err(csv_err)?;
        for (section, key, value) in self.rows() {
            w.write_record([section, key, value]).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn render_table(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|(_, k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        let mut current = "";
        for (section, key, value) in &rows {
            if key.is_empty() {
                let _ = writeln!(out, "{section}: {value}");
                continue;
            }
            if section != current {
                out.push('\n');
                let _ = writeln!(out, "[{section}]");
                current = section;
            }
            let _ = writeln!(out, "  {key:<width$}  {value}");
        }
        out
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Flattens nested objects (and arrays of objects) into dotted keys; arrays
/// of scalars stay inline as JSON.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object()) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), item, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Report {
        let mut r = Report::new("solve", json!({"n": 2, "horizon": "inf"}), Some(7));
        r.put("value", 1.38);
        r.put("actions", vec![2, 3]);
        r.put("witness", json!({"stage": 1, "belief": [0.5, 0.6]}));
        r
    }

    #[test]
    fn csv_flattens_sections() {
        let text = sample().render(Format::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "section,key,value");
        assert!(lines.contains(&"command,,solve"));
        assert!(lines.contains(&"config,horizon,inf"));
        assert!(lines.contains(&"results,actions,\"[2,3]\""));
        assert!(lines.contains(&"results,witness.belief,\"[0.5,0.6]\""));
        assert!(lines.contains(&"seed,,7"));
    }

    #[test]
    fn table_groups_sections() {
        let text = sample().render(Format::Table).unwrap();
        assert!(text.starts_with("command: solve\n"));
        assert!(text.contains("[results]\n"));
        assert!(text.contains("witness.stage"));
    }

    #[test]
    fn json_keeps_insertion_order() {
        let text = sample().render(Format::Json).unwrap();
        let a = text.find("\"value\"").unwrap();
        let b = text.find("\"actions\"").unwrap();
        assert!(a < b);
        assert!(!text.contains("wall_time_s"));
    }
}
