//! Numeric text output: every number written by the pipeline carries 12
//! significant digits.

/// Format `x` with 12 significant digits, `%g` style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s
    }
}

/// Round to 12 significant digits (what a write/read cycle preserves).
pub fn round12(x: f64) -> f64 {
    fmt12(x).parse().unwrap_or(x)
}
