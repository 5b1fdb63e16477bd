//! Decimal formatting with a fixed number of significant digits.

/// Formats `x` with `digits` significant digits in the style of C's `%.Ng`:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros stripped.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integral exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", strip_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::format_significant;

    #[test]
    fn fixed_and_scientific() {
        assert_eq!(format_significant(0.0, 9), "0");
        assert_eq!(format_significant(-0.0, 9), "0");
        assert_eq!(format_significant(1.0, 9), "1");
        assert_eq!(format_significant(0.598369600123, 9), "0.5983696");
        assert_eq!(format_significant(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(format_significant(1440.0, 9), "1440");
        assert_eq!(format_significant(1.5e-7, 9), "1.5e-7");
        assert_eq!(format_significant(1.23456789e12, 9), "1.23456789e12");
        assert_eq!(format_significant(-2.5, 9), "-2.5");
        assert_eq!(format_significant(0.99999999999, 9), "1");
    }

    #[test]
    fn parses_back_within_precision() {
        for &x in &[0.1234567891234, 7.0e-9, 123456.789, 0.5623351446188] {
            let back: f64 = format_significant(x, 9).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-8, "{x} -> {back}");
        }
    }
}
