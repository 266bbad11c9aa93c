//! Byte-stable JSON output.
//!
//! Floats are written with 17 significant digits in lowercase scientific
//! notation (`1.2500000000000000e-1`), integers verbatim, non-finite values as
//! `null`. Object keys keep insertion order.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Number, Value};

/// Schema tag embedded in every report document.
pub const SCHEMA: &str = "wco-report/1";

pub fn to_value<T: Serialize + ?Sized>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize to JSON")
}

/// Pretty-printed canonical form with two-space indentation and a trailing newline.
pub fn to_string<T: Serialize + ?Sized>(v: &T) -> String {
    let mut out = String::new();
    write_value(&mut out, &to_value(v), 0);
    out.push('\n');
    out
}

pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_number(out: &mut String, n: &Number) {
    if let Some(i) = n.as_i64() {
        write!(out, "{i}").unwrap();
    } else if let Some(u) = n.as_u64() {
        write!(out, "{u}").unwrap();
    } else {
        out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN)));
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn is_scalar_array(items: &[Value]) -> bool {
    items.iter().all(|v| !matches!(v, Value::Array(_) | Value::Object(_)))
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if is_scalar_array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, level);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, item, level + 1);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => write_object(out, map, level),
    }
}

fn write_object(out: &mut String, map: &Map<String, Value>, level: usize) {
    if map.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for (i, (k, v)) in map.iter().enumerate() {
        indent(out, level + 1);
        out.push_str(&serde_json::to_string(k).expect("keys serialize"));
        out.push_str(": ");
        write_value(out, v, level + 1);
        if i + 1 < map.len() {
            out.push(',');
        }
        out.push('\n');
    }
    indent(out, level);
    out.push('}');
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn float_format() {
        assert_eq!(format_f64(0.125), "1.2500000000000000e-1");
        assert_eq!(format_f64(-3.0), "-3.0000000000000000e0");
        assert_eq!(format_f64(f64::NAN), "null");
        assert_eq!(format_f64(f64::INFINITY), "null");
        let x = 0.1f64 + 0.2;
        assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn document_layout() {
        let v = json!({"b": 1, "a": [0.5, 2], "c": {"n": null, "s": "x\"y"}, "d": [[1.0, 0.0]]});
        let s = to_string(&v);
        let expected = "{\n  \"b\": 1,\n  \"a\": [5.0000000000000000e-1, 2],\n  \"c\": {\n    \"n\": null,\n    \"s\": \"x\\\"y\"\n  },\n  \"d\": [\n    [1.0000000000000000e0, 0.0000000000000000e0]\n  ]\n}\n";
        assert_eq!(s, expected);
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"][0], json!(0.5));
    }

    #[test]
    fn non_finite_serializes_as_null() {
        #[derive(Serialize)]
        struct S {
            x: f64,
        }
        assert_eq!(to_string(&S { x: f64::NAN }), "{\n  \"x\": null\n}\n");
    }
}
