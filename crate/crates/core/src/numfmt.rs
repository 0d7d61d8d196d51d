//! C `printf("%.*g")`-style float formatting, the form LibSVM writes.

use std::fmt;

/// Formats `value` like C's `%.{precision}g`.
pub(crate) struct G {
    value: f64,
    precision: usize,
}

/// `%.17g`: enough digits to round-trip every `f64`.
pub(crate) fn g17(value: f64) -> G {
    G {
        value,
        precision: 17,
    }
}

impl fmt::Display for G {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.value;
        let p = self.precision.max(1);
        if !v.is_finite() {
            return write!(f, "{v}");
        }
        if v == 0.0 {
            return f.write_str(if v.is_sign_negative() { "-0" } else { "0" });
        }
        // The exponent is taken after rounding to `p` significant digits.
        let sci = format!("{:.*e}", p - 1, v);
        let (mantissa, exp) = sci.split_once('e').expect("exponent form");
        let exp: i32 = exp.parse().expect("integer exponent");
        if exp < -4 || exp >= p as i32 {
            let mantissa = strip_zeros(mantissa);
            let sign = if exp < 0 { '-' } else { '+' };
            write!(f, "{mantissa}e{sign}{:02}", exp.abs())
        } else {
            let decimals = (p as i32 - 1 - exp).max(0) as usize;
            let fixed = format!("{:.*}", decimals, v);
            f.write_str(strip_zeros(&fixed))
        }
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
    use super::*;

    #[test]
    fn matches_c_printf() {
        assert_eq!(g17(0.5).to_string(), "0.5");
        assert_eq!(g17(0.1).to_string(), "0.10000000000000001");
        assert_eq!(g17(1.0).to_string(), "1");
        assert_eq!(g17(-0.25).to_string(), "-0.25");
        assert_eq!(g17(1e-5).to_string(), "1.0000000000000001e-05");
        assert_eq!(g17(1e20).to_string(), "1e+20");
        assert_eq!(g17(123456.0).to_string(), "123456");
        assert_eq!(g17(0.0).to_string(), "0");
    }

    #[test]
    fn round_trips() {
        for &v in &[0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = g17(v).to_string();
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }
}
