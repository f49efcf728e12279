//! Small numeric helpers shared across modules.

/// Neumaier-compensated summation.
///
/// Order-independent to well below 1e-12 relative for the magnitudes this
/// crate deals with, which keeps aggregate totals stable under reordering.
pub fn compensated_sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Round to `digits` significant decimal digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 || digits == 0 {
        return x;
    }
    let s = format!("{:.*e}", digits - 1, x);
    s.parse().unwrap_or(x)
}

/// Walk a JSON tree and round every non-integer number to six significant
/// digits. Integers (counts, years) are left untouched.
pub fn round_json_floats(value: &mut serde_json::Value) {
    use serde_json::Value;
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                let r = round_significant(x, 6);
                if let Some(num) = serde_json::Number::from_f64(r) {
                    *n = num;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json_floats),
        Value::Object(map) => map.values_mut().for_each(round_json_floats),
        _ => {}
    }
}

/// `true` when `a` and `b` agree to `rel` relative tolerance (absolute near zero).
pub fn approx_eq(a: f64, b: f64, rel: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= rel * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let vals = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(vals), 2.0);
    }

    #[test]
    fn rounding_six_digits() {
        assert_eq!(round_significant(22_399_392.0, 6), 22_399_400.0);
        assert_eq!(round_significant(0.0251234567, 6), 0.0251235);
        assert_eq!(round_significant(-1.0, 6), -1.0);
        assert_eq!(round_significant(0.0, 6), 0.0);
    }

    #[test]
    fn json_rounding_keeps_integers() {
        let mut v = serde_json::json!({"n": 12857, "x": 1.23456789, "a": [0.333333333]});
        round_json_floats(&mut v);
        assert_eq!(v, serde_json::json!({"n": 12857, "x": 1.23457, "a": [0.333333]}));
    }
}
