//! Deterministic report emission: JSON and CSV writers with floating-point
//! formatting fixed at 17 significant digits, so identical runs produce
//! byte-identical files and every number re-parses to the same f64.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize with the fixed float format.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    String::from_utf8(out).map_err(|e| Error::Config(format!("non-utf8 JSON: {e}")))
}

/// Minimal CSV assembly; fields never need quoting here.
pub struct Csv {
    buffer: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buffer = String::new();
        buffer.push_str(header);
        buffer.push('\n');
        Self { buffer }
    }

    pub fn row(&mut self, fields: &[CsvField]) {
        let mut first = true;
        for field in fields {
            if !first {
                self.buffer.push(',');
            }
            first = false;
            match field {
                CsvField::Int(v) => self.buffer.push_str(&v.to_string()),
                CsvField::Float(v) => self.buffer.push_str(&fmt_f64(*v)),
                CsvField::Text(v) => self.buffer.push_str(v),
            }
        }
        self.buffer.push('\n');
    }

    pub fn finish(self) -> String {
        self.buffer
    }
}

pub enum CsvField {
    Int(i64),
    Float(f64),
    Text(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.5, 1.0 / 3.0, -2.7182818284590455e-9, 1234567.89] {
            let printed = fmt_f64(x);
            let back: f64 = printed.parse().unwrap();
            assert_eq!(back, x, "{printed}");
        }
    }

    #[test]
    fn json_floats_use_fixed_format() {
        #[derive(Serialize)]
        struct Row {
            a: f64,
            n: u32,
        }
        let text = to_json(&Row { a: 0.5, n: 3 }).unwrap();
        assert_eq!(text, r#"{"a":5.0000000000000000e-1,"n":3}"#);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["a"].as_f64(), Some(0.5));
    }
}
