//! Number formatting shared by reports.

/// `%.12g`-style formatting: 12 significant digits, trailing zeros
/// removed, scientific notation outside `[1e-5, 1e12)`.
pub fn format_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if (-5..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
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
    fn examples() {
        assert_eq!(format_g12(1.0), "1");
        assert_eq!(format_g12(0.1), "0.1");
        assert_eq!(format_g12(-2.5), "-2.5");
        assert_eq!(format_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_g12(14.840642115557752), "14.8406421156");
        assert_eq!(format_g12(6.738_252_915_294_543e-3), "0.00673825291529");
        assert_eq!(format_g12(1.5e-7), "1.5e-7");
        assert_eq!(format_g12(2e15), "2e15");
        assert_eq!(format_g12(999999999999.7), "1e12");
        assert_eq!(format_g12(f64::INFINITY), "inf");
    }
}
