//! Deterministic JSON helpers.

use serde_json::Value;

/// Decimal places kept for floats in reports.
pub const FLOAT_DIGITS: i32 = 12;

/// Rounds `x` to a fixed number of decimals so reruns serialize identically.
pub fn fixed(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(format!("{x}"));
    }
    let s = format!("{:.*}", FLOAT_DIGITS as usize, x);
    let v: f64 = s.parse().expect("formatted float");
    let v = if v == 0.0 { 0.0 } else { v };
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

pub fn to_string(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json")
}

/// Serializes through `Display` (big integers, rationals).
pub fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn display_vec<T: std::fmt::Display, S: serde::Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

/// Rounds every float in a JSON tree to [`FLOAT_DIGITS`] decimals.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => fixed(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, x)| (k, normalize(x))).collect()),
        other => other,
    }
}
