//! Locale-independent float formatting shared by the SVG and CSV writers.

/// `x` with six significant digits, trailing zeros dropped. Plain decimal
/// notation for exponents in `-5..6`, scientific notation otherwise.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // the exponent after rounding to six digits
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let e: i32 = exp.parse().unwrap();
    if (-5..6).contains(&e) {
        let s = format!("{:.*}", (5 - e).max(0) as usize, x);
        trim(&s).to_string()
    } else {
        format!("{}e{}", trim(mant), e)
    }
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
    use super::sig6;

    #[test]
    fn formats() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(1.23456789), "1.23457");
        assert_eq!(sig6(999999.7), "1e6");
        assert_eq!(sig6(123456.4), "123456");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(1.5e-9), "1.5e-9");
        assert_eq!(sig6(f64::NEG_INFINITY), "-inf");
        assert_eq!(sig6(0.86602540378), "0.866025");
    }
}
