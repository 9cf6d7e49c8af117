//! CSV and JSON rendering. Floats use Rust's shortest round-trip
//! formatting, so every value parses back to the same `f64`.

use std::fmt::Write;

use chiral_router::C64;
use nalgebra::DMatrix;
use serde_json::{json, Value};

/// Header line plus one line per row; `None` cells are left empty.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            if let Some(v) = cell {
                write!(out, "{v}").expect("write to String");
            }
        }
        out.push('\n');
    }
    out
}

/// Rows as JSON objects keyed by the header; `None` becomes `null`.
pub fn json_rows(header: &[&str], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> String {
    let rows: Vec<Value> = rows
        .into_iter()
        .map(|row| {
            let obj: serde_json::Map<String, Value> = header
                .iter()
                .zip(row)
                .map(|(k, v)| (k.to_string(), v.map_or(Value::Null, |x| json!(x))))
                .collect();
            Value::Object(obj)
        })
        .collect();
    pretty(&Value::Array(rows))
}

/// Row-major `[[re, im], ...]` rows.
pub fn complex_matrix(m: &DMatrix<C64>) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|r| {
            Value::Array(
                (0..m.ncols())
                    .map(|c| json!([m[(r, c)].re + 0.0, m[(r, c)].im + 0.0]))
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

pub fn compact(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_floats() {
        let x = 0.1 + 0.2;
        let text = csv(
            &["a", "b"],
            vec![vec![Some(x), None], vec![Some(1e-300), Some(-0.0)]],
        );
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "a,b");
        assert_eq!(
            lines[1].split(',').next().unwrap().parse::<f64>().unwrap(),
            x
        );
        assert!(lines[1].ends_with(','));
        assert_eq!(
            lines[2].split(',').next().unwrap().parse::<f64>().unwrap(),
            1e-300
        );
    }

    #[test]
    fn matrix_layout() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, 1.0),
                C64::new(2.5, 0.0),
            ],
        );
        let v = complex_matrix(&m);
        assert_eq!(v[0][1], json!([0.0, -1.0]));
        assert_eq!(v[1][0], json!([0.0, 1.0]));
        assert_eq!(v[1][1], json!([2.5, 0.0]));
    }

    #[test]
    fn json_rows_use_null_for_missing() {
        let s = json_rows(&["t", "stderr"], vec![vec![Some(0.5), None]]);
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v[0]["t"], json!(0.5));
        assert_eq!(v[0]["stderr"], Value::Null);
    }
}
