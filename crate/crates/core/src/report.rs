//! Serialization helpers shared by the reports: non-finite numbers are
//! written as the strings `"inf"`, `"-inf"` and `"nan"` so that divergent
//! norms survive a JSON round trip.

use serde::Serializer;

pub const SCHEMA_VERSION: u32 = 1;

pub fn ser_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&crate::functions::fmt_f64(*v))
    }
}

pub fn ser_opt_f64<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser_f64(v, s),
        None => s.serialize_none(),
    }
}

pub fn ser_vec_f64<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.is_finite() {
            seq.serialize_element(x)?;
        } else {
            seq.serialize_element(&crate::functions::fmt_f64(*x))?;
        }
    }
    seq.end()
}

/// JSON value for a number, with the same convention.
pub fn json_f64(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::String(crate::functions::fmt_f64(v))
    }
}
