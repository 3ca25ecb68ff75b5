//! Decimal cell parsing.
//!
//! Unit changes by powers of ten are applied to the decimal exponent before
//! conversion, so `"808975.476"` shifted by -3 is the double nearest to
//! 808.975476 rather than the result of a rounded division.

/// Strips surrounding whitespace and thousands separators.
pub(crate) fn clean(raw: &str) -> String {
    raw.chars().filter(|c| !c.is_whitespace() && *c != ',').collect()
}

/// Parses a decimal string and multiplies it by `10^shift`.
pub(crate) fn parse_scaled(raw: &str, shift: i32) -> Option<f64> {
    let s = clean(raw);
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s.as_str(), 0),
    };
    let body = mantissa.strip_prefix(['+', '-']).unwrap_or(mantissa);
    let digits = body.chars().filter(char::is_ascii_digit).count();
    let dots = body.chars().filter(|&c| c == '.').count();
    if digits == 0 || dots > 1 || digits + dots != body.len() {
        return None;
    }
    let v: f64 = format!("{mantissa}e{}", exponent.checked_add(shift)?)
        .parse()
        .ok()?;
    v.is_finite().then_some(v)
}

/// Parses a non-negative integer counter. Integral values written in
/// decimal or exponent notation (`"1.2561024e8"`) are accepted.
pub(crate) fn parse_counter(raw: &str) -> Option<u64> {
    let s = clean(raw);
    if let Ok(v) = s.parse::<u64>() {
        return Some(v);
    }
    let v = parse_scaled(&s, 0)?;
    // 2^64 is exactly representable; anything at or above it does not fit.
    (v >= 0.0 && v.fract() == 0.0 && v < 18_446_744_073_709_551_616.0).then_some(v as u64)
}
