//! Shared number formatting for the file writers: at most 12 significant
//! digits, `%g` style, so that parsing and re-printing is a fixed point.

pub(crate) fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..12).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (11 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, v))
    }
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Valid identifier for both file formats: starts with a letter or `_`, then
/// letters, digits, `_`, `.`, `#`, `[`, `]`.
pub(crate) fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    let lower = name.to_ascii_lowercase();
    if matches!(lower.as_str(), "inf" | "infinity" | "free") {
        return false;
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '#' | '[' | ']'))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g_style() {
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(1e-7), "1e-07");
        assert_eq!(fmt_num(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_num(200.0), "200");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn names() {
        assert!(valid_name("p_da[1].t2"));
        assert!(!valid_name("1x"));
        assert!(!valid_name("a b"));
        assert!(!valid_name("inf"));
        assert!(!valid_name(""));
    }

    proptest! {
        #[test]
        fn print_parse_print_is_fixed_point(v in -1e15f64..1e15) {
            let s = fmt_num(v);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(fmt_num(back), s);
            prop_assert!((back - v).abs() <= 1e-11 * v.abs().max(1e-300));
        }
    }
}
