//! Number formatting shared by the text outputs.
//!
//! Every float leaves the library with 17 significant digits, enough to
//! round-trip any f64 exactly.

use serde_json::{Number, Value};

/// Version tag carried by every JSON document.
pub const SCHEMA: &str = "qcdl-1";

/// `x` in scientific notation with 17 significant digits; `inf`, `-inf`
/// and `nan` for the non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// JSON number with 17 significant digits; `null` when not finite.
pub fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        let n: Number = serde_json::from_str(&fmt_f64(x)).expect("formatted float is valid JSON");
        Value::Number(n)
    } else {
        Value::Null
    }
}

pub fn json_f64_opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, json_f64)
}

pub fn json_vec(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| json_f64(*x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        for x in [0.0, 1.0, -2.5, std::f64::consts::PI, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(json_f64(f64::NAN), Value::Null);
        assert_eq!(serde_json::to_string(&json_f64(0.5)).unwrap(), "5.0000000000000000e-1");
    }
}
