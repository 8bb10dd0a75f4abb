//! Number formatting and CSV/JSON writers. Every number leaves the program
//! rounded to 12 significant digits.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::config::Format;
use crate::error::CliError;

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Text form of a number with 12 significant digits.
pub fn num(x: f64) -> String {
    round_sig(x).to_string()
}

/// Rounds every non-integer number in a JSON document.
pub fn round_json(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Rows of text cells under fixed headers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Self {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(&self.headers)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
        self.write_csv(file)
    }
}

/// Result of a command in both shapes; the format picks one.
pub struct Report {
    pub table: Table,
    pub json: Value,
    pub default_format: Format,
}

impl Report {
    pub fn emit(&self, format: Option<Format>, path: Option<&Path>) -> Result<(), CliError> {
        let format = format.unwrap_or(self.default_format);
        let mut buf = Vec::new();
        match format {
            Format::Csv => self.table.write_csv(&mut buf)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut buf, &round_json(self.json.clone()))?;
                buf.push(b'\n');
            }
        }
        match path {
            Some(path) => std::fs::write(path, &buf)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?,
            None => std::io::stdout().write_all(&buf)?,
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(7.859461020361572), "7.85946102036");
        assert_eq!(num(570.0), "570");
        assert_eq!(num(0.0), "0");
        let v = round_json(serde_json::json!({"a": [2.0f64 / 3.0, 5], "b": "x"}));
        assert_eq!(v, serde_json::json!({"a": [0.666666666667, 5], "b": "x"}));
    }
}
