//! Fixed-precision decimal formatting shared by every text format.
//!
//! All numbers are written with 9 significant digits. Values that already
//! sit on that grid (see [`quantize9`]) survive a write/read cycle bit-exactly.

/// Formats `x` with 9 significant digits, trimming trailing zeros.
///
/// Plain notation is used for decimal exponents in `-5..9`, scientific
/// notation otherwise. Negative zero prints as `0`.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if negative { "-" } else { "" };

    if (-5..9).contains(&exp) {
        let mut out = String::with_capacity(20);
        out.push_str(sign);
        if exp < 0 {
            out.push_str("0.");
            for _ in 0..(-exp - 1) {
                out.push('0');
            }
            out.push_str(digits.trim_end_matches('0'));
        } else {
            let int_len = exp as usize + 1;
            out.push_str(&digits[..int_len]);
            let frac = digits[int_len..].trim_end_matches('0');
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        }
        out
    } else {
        let frac = digits[1..].trim_end_matches('0');
        if frac.is_empty() {
            format!("{sign}{}e{exp}", &digits[..1])
        } else {
            format!("{sign}{}.{frac}e{exp}", &digits[..1])
        }
    }
}

/// Rounds `x` onto the 9-significant-digit grid used by the file formats.
pub fn quantize9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    fmt9(x).parse().expect("fmt9 output parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_common_values() {
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(-0.0), "0");
        assert_eq!(fmt9(1.0), "1");
        assert_eq!(fmt9(0.25), "0.25");
        assert_eq!(fmt9(-12.5), "-12.5");
        assert_eq!(fmt9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt9(0.28209479177387814), "0.282094792");
        assert_eq!(fmt9(123456789.0), "123456789");
        assert_eq!(fmt9(1.5e9), "1.5e9");
        assert_eq!(fmt9(1e-6), "1e-6");
        assert_eq!(fmt9(2.5e-5), "0.000025");
    }

    proptest! {
        #[test]
        fn quantized_values_round_trip_exactly(x in -1e12f64..1e12) {
            let q = quantize9(x);
            let back: f64 = fmt9(q).parse().unwrap();
            prop_assert_eq!(back.to_bits(), q.to_bits());
            prop_assert_eq!(quantize9(q).to_bits(), q.to_bits());
        }

        #[test]
        fn keeps_nine_significant_digits(x in 1e-30f64..1e30) {
            let q = quantize9(x);
            prop_assert!(((q - x) / x).abs() <= 5.1e-9);
        }
    }
}
