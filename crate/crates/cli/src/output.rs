//! Fixed-precision serialisation shared by every artifact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use lapswim_core::ingest::fmt_sig;
use serde_json::Value;

pub const DIGITS: usize = 9;

/// Number cell: 9 significant digits, empty when not finite.
pub fn num(x: f64) -> String {
    fmt_sig(x, DIGITS)
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Rounds every number in a JSON tree to 9 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            num(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn write_json(path: &Path, v: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(&round_json(v.clone()))?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

pub fn finish<W: Write>(w: csv::Writer<W>, path: &Path) -> anyhow::Result<()> {
    w.into_inner()
        .map_err(|e| anyhow::anyhow!("{}", e.error()))
        .and_then(|mut inner| inner.flush().map_err(Into::into))
        .with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn json_numbers_rounded() {
        let v = round_json(json!({"a": 0.1 + 0.2, "b": [1, 2.0000000001], "c": f64::NAN, "d": "x"}));
        assert_eq!(v, json!({"a": 0.3, "b": [1, 2.0], "c": null, "d": "x"}));
    }

    #[test]
    fn cells() {
        assert_eq!(num(1.0 / 3.0), "0.333333333");
        assert_eq!(num(f64::INFINITY), "");
        assert_eq!(opt(None), "");
    }
}
