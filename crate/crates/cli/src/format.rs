/// `%.9g`: nine significant digits, trailing zeros dropped, scientific
/// notation outside `1e-4 <= |v| < 1e9`.
pub fn sig9(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        return format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (8 - exp) as usize;
    trim(&format!("{v:.decimals$}")).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig9;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig9(1.0 / 12.0), "0.0833333333");
        assert_eq!(sig9(2.0), "2");
        assert_eq!(sig9(1.8776753), "1.8776753");
        assert_eq!(sig9(-0.5), "-0.5");
        assert_eq!(sig9(1.0 / 48.0), "0.0208333333");
        assert_eq!(sig9(1e-9), "1e-09");
        assert_eq!(sig9(123456789.0), "123456789");
        assert_eq!(sig9(1234567891.0), "1.23456789e+09");
        assert_eq!(sig9(0.0000123456789123), "1.23456789e-05");
        assert_eq!(sig9(9.999999999), "10");
        assert_eq!(sig9(f64::INFINITY), "inf");
    }
}
