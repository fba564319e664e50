//! Plain-text output helpers shared by the CSV writers.

/// Decimal (never exponential) notation with 17 significant digits.
///
/// ```
/// use folbm::io::format_decimal;
/// assert_eq!(format_decimal(0.0), "0");
/// assert_eq!(format_decimal(1.5), "1.5000000000000000");
/// assert_eq!(format_decimal(-0.001), "-0.0010000000000000000");
/// ```
pub fn format_decimal(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (16 - exponent).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding can carry into a new leading digit (9.99… → 10.0…).
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
    let leading_zeros = s
        .trim_start_matches('-')
        .chars()
        .take_while(|&c| c == '0' || c == '.')
        .filter(|&c| c == '0')
        .count();
    if digits - leading_zeros > 17 && decimals > 0 {
        let decimals = decimals - 1;
        return format!("{v:.decimals$}");
    }
    s
}
