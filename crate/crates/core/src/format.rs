//! Number formatting shared by every text output.

/// Significant digits used for all printed floating-point values.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats `x` with 12 significant digits in `%g` style (trailing zeros
/// trimmed, exponent notation outside `[1e-5, 1e12)`).
pub fn sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

/// Rounds `x` to 12 significant digits, so that serializers emit at most
/// that many digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    sig(x).parse().unwrap_or(x)
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_like_percent_g() {
        assert_eq!(sig(7.0), "7");
        assert_eq!(sig(0.4375), "0.4375");
        assert_eq!(sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig(-0.153870839062895), "-0.153870839063");
        assert_eq!(sig(42.666666666666664), "42.6666666667");
        assert_eq!(sig(1.5e-9), "1.5e-9");
        assert_eq!(sig(f64::NEG_INFINITY), "-inf");
        assert_eq!(sig(0.0), "0");
    }

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1538708390628949), 0.153870839063);
        assert_eq!(round_sig(f64::INFINITY), f64::INFINITY);
    }
}
