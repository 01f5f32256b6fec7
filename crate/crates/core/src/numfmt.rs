/// Format like C's `%.6g`: six significant digits, trailing zeros removed,
/// exponent notation below 1e-4 and from 1e6 upwards.
pub fn sig6(x: f64) -> String {
    const DIGITS: i32 = 6;
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
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
    use super::sig6;

    #[test]
    fn matches_c_percent_g() {
        let cases = [
            (0.0, "0"),
            (52.1875, "52.1875"),
            (0.15, "0.15"),
            (300.0, "300"),
            (1_507_964.473_723_1, "1.50796e+06"),
            (999_999.4, "999999"),
            (999_999.6, "1e+06"),
            (0.000_123_456_78, "0.000123457"),
            (0.000_012_345, "1.2345e-05"),
            (-2.5, "-2.5"),
            (1.0 / 3.0, "0.333333"),
            (424.413_181_578_387_6, "424.413"),
            (18_849.555_921_538_76, "18849.6"),
        ];
        for (x, want) in cases {
            assert_eq!(sig6(x), want, "{x}");
        }
    }
}
