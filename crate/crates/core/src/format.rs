//! Fixed six-significant-digit number formatting used by every text output.

/// Formats `v` with six significant digits, trimming nothing, so golden files
/// stay stable across platforms.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..=9).contains(&exp) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding may carry into a new digit (9.999995 -> 10.00000); reformat once.
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
    let leading_zeros = if exp < 0 { (-exp) as usize } else { 0 };
    if digits > 6 + leading_zeros && decimals > 0 {
        let decimals = decimals - 1;
        return format!("{v:.decimals$}");
    }
    s
}
