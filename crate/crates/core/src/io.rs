//! Output formats: JSON with every float at 17 significant digits, and CSV tables.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::billiard::PhasePoint;
use crate::generating::{ChordCoords, SDerivatives};
use crate::jacobi::ConjugateRow;

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // JSON has no non-finite literals; CSV readers accept these spellings.
        if x.is_nan() { "nan" } else if x > 0.0 { "inf" } else { "-inf" }.to_string()
    }
}

/// Pretty JSON with floats written by [`fmt_f64`].
///
/// Non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| {
        for _ in 0..d {
            out.push_str("  ");
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                match n.as_f64() {
                    Some(x) if x.is_finite() => out.push_str(&fmt_f64(x)),
                    _ => out.push_str("null"),
                }
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let len = map.len();
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < len { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

pub fn orbit_csv(points: &[PhasePoint]) -> String {
    let mut out = String::from("n,x,y,p,phi\n");
    for (n, a) in points.iter().enumerate() {
        let _ = writeln!(
            out,
            "{n},{},{},{},{}",
            fmt_f64(a.cartesian.x),
            fmt_f64(a.cartesian.y),
            fmt_f64(a.p),
            fmt_f64(a.phi)
        );
    }
    out
}

/// Several orbits in one table, tagged by orbit number.
pub fn portrait_csv(orbits: &[Vec<PhasePoint>]) -> String {
    let mut out = String::from("orbit,n,x,y,p,phi\n");
    for (k, orbit) in orbits.iter().enumerate() {
        for (n, a) in orbit.iter().enumerate() {
            let _ = writeln!(
                out,
                "{k},{n},{},{},{},{}",
                fmt_f64(a.cartesian.x),
                fmt_f64(a.cartesian.y),
                fmt_f64(a.p),
                fmt_f64(a.phi)
            );
        }
    }
    out
}

pub fn conjugate_csv(rows: &[ConjugateRow]) -> String {
    let mut out = String::from("seed_phi,seed_t,n_conjugate\n");
    for r in rows {
        let n = r.n_conjugate.map(|n| n.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{n}", fmt_f64(r.seed_phi), fmt_f64(r.seed_t));
    }
    out
}

pub fn derivative_csv(rows: &[(ChordCoords, SDerivatives)]) -> String {
    let mut out = String::from("phi,t,S,S1,S2,S11,S12,S22,J\n");
    for (c, d) in rows {
        let cols = [c.phi, c.t, d.s, d.s1, d.s2, d.s11, d.s12, d.s22, d.jac_det];
        let line: Vec<String> = cols.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        x: f64,
        n: usize,
        name: &'static str,
        list: Vec<f64>,
        missing: Option<f64>,
    }

    #[test]
    fn floats_round_trip() {
        let text = to_json(&Sample { x: 0.1, n: 3, name: "a\"b", list: vec![1.0 / 3.0, -2.5e-300], missing: None }).unwrap();
        assert!(text.contains("\"x\": 1.0000000000000001e-1"));
        assert!(text.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
        assert_eq!(back["list"][0].as_f64(), Some(1.0 / 3.0));
        assert_eq!(back["list"][1].as_f64(), Some(-2.5e-300));
        assert_eq!(back["name"], "a\"b");
        assert!(back["missing"].is_null());
    }

    #[test]
    fn conjugate_rows_leave_blank_for_none() {
        let rows = [
            ConjugateRow { seed_phi: 0.0, seed_t: 1.0, n_conjugate: None },
            ConjugateRow { seed_phi: 0.5, seed_t: 1.0, n_conjugate: Some(7) },
        ];
        let csv = conjugate_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "0.0000000000000000e0,1.0000000000000000e0,");
        assert!(lines[2].ends_with(",7"));
    }
}
