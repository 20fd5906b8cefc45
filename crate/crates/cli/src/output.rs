//! JSON, text and CSV renderings.
//!
//! JSON numbers use the shortest decimal that reads back to the same `f64`
//! (never more than 17 significant digits), so equal values print equal bytes.

use hermlab_core::tensor::ComplexTensor;
use hermlab_core::verify::PlotRow;
use hermlab_core::C64;
use serde_json::{Map, Value};

fn nested(dims: &[usize], data: &[C64], part: fn(&C64) -> f64) -> Value {
    match dims.split_first() {
        None => Value::from(part(&data[0])),
        Some((&d, rest)) => {
            let stride = data.len() / d.max(1);
            Value::Array(
                (0..d)
                    .map(|k| nested(rest, &data[k * stride..(k + 1) * stride], part))
                    .collect(),
            )
        }
    }
}

/// Inserts `key` (real parts) and `key_im` (imaginary parts) as nested arrays.
pub fn insert_tensor(obj: &mut Map<String, Value>, key: &str, t: &ComplexTensor) {
    obj.insert(key.to_string(), nested(t.dims(), t.data(), |z| z.re));
    obj.insert(format!("{key}_im"), nested(t.dims(), t.data(), |z| z.im));
}

/// Replaces `-0.0` by `0.0` everywhere.
pub fn normalize(v: &mut Value) {
    match v {
        Value::Number(x) => {
            if x.as_f64() == Some(0.0) && x.is_f64() {
                *v = Value::from(0.0);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(normalize),
        Value::Object(o) => o.values_mut().for_each(normalize),
        _ => {}
    }
}

pub fn json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(x) => Some(x.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a)
            if a.iter().all(|x| !x.is_object())
                && a.iter().all(|x| !x.is_array() || scalar(x).is_some()) =>
        {
            let parts: Option<Vec<String>> = a.iter().map(scalar).collect();
            parts.map(|p| format!("[{}]", p.join(", ")))
        }
        _ => None,
    }
}

fn text_into(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        text_into(x, indent + 1, out);
                    }
                }
            }
        }
        Value::Array(a) => {
            for x in a {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}-\n"));
                        text_into(x, indent + 1, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}

/// Indented `key: value` rendering of the JSON structure.
pub fn text(v: &Value) -> String {
    let mut out = String::new();
    text_into(v, 0, &mut out);
    out
}

/// Plain decimals for moderate magnitudes, exponent form otherwise; both round-trip.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Column names of the plot export for complex dimension `n`.
pub fn plot_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=n)
        .flat_map(|k| [format!("x{k}"), format!("y{k}")])
        .collect();
    h.extend(["u", "grad_sq", "q", "p", "bochner_residual"].map(String::from));
    h
}

pub fn plot_csv(n: usize, rows: &[PlotRow]) -> String {
    let mut s = plot_header(n).join(",");
    s.push('\n');
    for r in rows {
        let mut cells: Vec<String> = r.coords.iter().map(|&x| num(x)).collect();
        cells.push(num(r.u));
        cells.push(num(r.grad_sq));
        cells.push(num(r.q));
        cells.push(r.p.map(num).unwrap_or_default());
        cells.push(num(r.bochner_residual));
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}
