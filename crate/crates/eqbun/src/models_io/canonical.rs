//! Canonical JSON: object keys sorted, floats printed with 17 significant
//! digits so serialization round-trips bit-exactly and files diff cleanly.

use serde_json::Value;

/// Render a JSON value canonically.  Integers print as integers; all other
/// numbers use scientific notation with 17 significant digits, which is
/// lossless for binary64.
pub fn to_canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let x = n.as_f64().unwrap_or(0.0);
                out.push_str(&format!("{x:.16e}"));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json without preserve_order keeps object keys sorted
            out.push('{');
            for (i, (key, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("key serialization"));
                out.push(':');
                write_value(item, out);
            }
            out.push('}');
        }
    }
}

/// `[re, im]` pair for a complex entry.
pub fn complex_to_value(z: num_complex::Complex64) -> Value {
    Value::Array(vec![float_value(z.re), float_value(z.im)])
}

pub fn float_value(x: f64) -> Value {
    Value::Number(serde_json::Number::from_f64(x).unwrap_or_else(|| 0.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sort_and_floats_round_trip() {
        let value = json!({"zeta": 1, "alpha": [0.1, 2.0_f64.sqrt(), -0.0, 3.0]});
        let text = to_canonical_string(&value);
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
        let reparsed: Value = serde_json::from_str(&text).unwrap();
        let again = to_canonical_string(&reparsed);
        assert_eq!(text, again);
        let numbers = reparsed["alpha"].as_array().unwrap();
        assert_eq!(numbers[1].as_f64().unwrap().to_bits(), 2.0_f64.sqrt().to_bits());
        assert_eq!(numbers[2].as_f64().unwrap().to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn bit_exact_for_awkward_floats() {
        for &x in &[1.0 / 3.0, f64::MIN_POSITIVE, 1e300, -7.1e-17, 0.1 + 0.2] {
            let text = to_canonical_string(&float_value(x));
            let back: f64 = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} reprinted as {text}");
        }
    }
}
