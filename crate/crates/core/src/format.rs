//! Numeric rendering shared by the CSV and JSON writers.

/// Renders `x` with 17 significant digits, following C's `%.17g`: fixed
/// notation for decimal exponents in `[-4, 17)`, scientific otherwise, with
/// trailing zeros removed.
pub fn g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    }
}

/// p-values below this are reported as zero in experiment tables.
pub const P_VALUE_FLOOR: f64 = 1e-300;

/// [`g17`] with p-values under [`P_VALUE_FLOOR`] shown as `0.0`.
pub fn p_value(p: f64) -> String {
    if p < P_VALUE_FLOOR {
        "0.0".into()
    } else {
        g17(p)
    }
}

fn trim_zeros(s: &str) -> &str {
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
    fn matches_printf_g17() {
        assert_eq!(g17(0.0), "0");
        assert_eq!(g17(1.0), "1");
        assert_eq!(g17(0.1), "0.10000000000000001");
        assert_eq!(g17(-2.5), "-2.5");
        assert_eq!(g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(g17(0.0001), "0.0001");
        assert_eq!(g17(1e17), "1e+17");
        assert_eq!(g17(123456.0), "123456");
        assert_eq!(g17(7.4e-42), "7.4000000000000004e-42");
    }

    #[test]
    fn round_trips() {
        for x in [0.3684, 1.0 / 3.0, -1.2345e-200, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn tiny_p_values_print_as_zero() {
        assert_eq!(p_value(1e-320), "0.0");
        assert_eq!(p_value(0.0), "0.0");
        assert_eq!(p_value(0.5), "0.5");
    }
}
