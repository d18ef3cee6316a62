//! Canonical JSON: sorted keys, `%.17g` float formatting, no whitespace
//! variation. Identical values serialize to identical bytes on every
//! platform, which is what the golden tests and report digests rely on.

use serde_json::Value;

use crate::error::{Error, Result};

/// Format a finite double the way C's `printf("%.17g", x)` would:
/// 17 significant digits, trailing zeros trimmed, scientific notation
/// outside the exponent window `[-4, 17)`.
pub fn format_g17(x: f64) -> String {
    assert!(x.is_finite(), "canonical JSON only holds finite numbers");
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.16e}", x);
    let (_, exp_str) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp_str.parse().expect("numeric exponent");
    if (-4..17).contains(&exp) {
        let precision = (16 - exp).max(0) as usize;
        trim_fraction(format!("{x:.precision$}"))
    } else {
        let (mantissa, _) = sci.split_once('e').unwrap();
        let mantissa = trim_fraction(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn trim_fraction(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Serialize a JSON value canonically.
pub fn to_canonical_string(value: &Value) -> Result<String> {
    let mut out = String::new();
    write_value(&mut out, value)?;
    Ok(out)
}

/// Canonical bytes of any serializable value, with a trailing newline.
pub fn canonical_document<T: serde::Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = to_canonical_string(&v)?;
    s.push('\n');
    Ok(s)
}

fn write_value(out: &mut String, value: &Value) -> Result<()> {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let f = n.as_f64().ok_or_else(|| {
                    Error::Internal("non-finite number reached canonical JSON".into())
                })?;
                if !f.is_finite() {
                    return Err(Error::Internal(
                        "non-finite number reached canonical JSON".into(),
                    ));
                }
                out.push_str(&format_g17(f));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s)?);
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item)?;
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key)?);
                out.push(':');
                write_value(out, &map[*key])?;
            }
            out.push('}');
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn g17_matches_printf_cases() {
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(-2.5), "-2.5");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_g17(1.5e-5), "1.5e-05");
        assert_eq!(format_g17(std::f64::consts::PI), "3.1415926535897931");
        assert_eq!(format_g17(123456.75), "123456.75");
    }

    #[test]
    fn g17_round_trips_bit_exactly() {
        let samples = [
            0.1,
            -1.0 / 3.0,
            std::f64::consts::PI,
            6.02214076e23,
            -4.9e-324,
            f64::MIN_POSITIVE,
            1234567890.123456,
        ];
        for &x in &samples {
            let s = format_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s}");
        }
    }

    #[test]
    fn objects_serialize_with_sorted_keys() {
        let v = json!({"zeta": 1, "alpha": [1.0, 2.0], "mid": {"b": true, "a": null}});
        assert_eq!(
            to_canonical_string(&v).unwrap(),
            r#"{"alpha":[1,2],"mid":{"a":null,"b":true},"zeta":1}"#
        );
    }
}
