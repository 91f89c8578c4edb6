use serde_json::Value;

/// Significant digits in every printed number.
pub const SIG_DIGITS: usize = 12;

/// `v` with [`SIG_DIGITS`] significant digits, fixed-point for moderate
/// magnitudes and scientific otherwise.
pub fn fmt_sig(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return format!("{:.*}", SIG_DIGITS - 1, 0.0);
    }
    // exponent after rounding, so 9.99999999999951 moves to the next decade
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
        format!("{v:.decimals$}")
    } else {
        sci
    }
}

/// Rounds `v` to [`SIG_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIG_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Rounds every float in a JSON tree to [`SIG_DIGITS`] significant digits.
/// Non-finite values become strings so the document stays valid JSON.
pub fn round_json(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let v = n.as_f64().unwrap_or(f64::NAN);
            serde_json::Number::from_f64(round_sig(v)).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Plain comma-separated table; cells are preformatted.
#[derive(Debug, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn cell(v: f64) -> String {
    fmt_sig(v)
}

pub fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(5.0), "5.00000000000");
        assert_eq!(fmt_sig(2.644934066848226), "2.64493406685");
        assert_eq!(fmt_sig(-0.000123456789012345), "-0.000123456789012");
        assert_eq!(fmt_sig(1.5e20), "1.50000000000e20");
        assert_eq!(fmt_sig(9.999999999999951), "10.0000000000");
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
    }

    #[test]
    fn json_rounding_keeps_integers() {
        let v = round_json(serde_json::json!({"a": 1.0 / 3.0, "n": 7, "xs": [0.1, 2.0 / 3.0]}));
        assert_eq!(v.to_string(), r#"{"a":0.333333333333,"n":7,"xs":[0.1,0.666666666667]}"#);
    }
}
