//! Float formatting for TSV output.
//!
//! Values print as the shortest string that parses back to the same `f64`.
//! Plain decimal notation is used for magnitudes in `[1e-4, 1e16)` and
//! scientific notation otherwise, so very small p-values stay compact.

/// Marker for undefined values.
pub const NA: &str = "NA";

pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        return NA.to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn format_opt(x: Option<f64>) -> String {
    x.map_or_else(|| NA.to_string(), format_f64)
}

/// Inverse of [`format_opt`]: `NA` is `None`.
pub fn parse_opt(s: &str) -> Result<Option<f64>, String> {
    let s = s.trim();
    if s == NA {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| format!("not a number: `{s}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(format_f64(0.0), "0");
        assert_eq!(format_f64(-0.0), "-0");
        assert_eq!(format_f64(0.05), "0.05");
        assert_eq!(format_f64(1.5e-7), "1.5e-7");
        assert_eq!(format_f64(2.0), "2");
        assert_eq!(format_f64(1e20), "1e20");
        assert_eq!(format_f64(f64::NAN), "NA");
        assert_eq!(format_opt(None), "NA");
    }

    #[test]
    fn round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 1e-300, 5e-324, 123456.789, -2.5e-5, 9.999e15, f64::MAX] {
            assert_eq!(parse_opt(&format_f64(x)).unwrap(), Some(x));
        }
        assert_eq!(parse_opt("NA").unwrap(), None);
    }
}
