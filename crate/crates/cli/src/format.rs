//! Angle parsing and number formatting.

use std::f64::consts::PI;

/// Parses decimal radians or multiples of π: `pi`, `-pi`, `pi/30`,
/// `11pi/30`, `11*pi/30`, `0.5pi`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s = text.trim().to_ascii_lowercase().replace('π', "pi");
    let bad = || format!("invalid angle `{text}`");
    let Some(at) = s.find("pi") else {
        return s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    };
    let coef = s[..at].trim_end_matches('*');
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = &s[at + 2..];
    let den = match rest.strip_prefix('/') {
        None if rest.is_empty() => 1.0,
        None => return Err(bad()),
        Some(d) => d.parse::<f64>().map_err(|_| bad())?,
    };
    if den == 0.0 || !coef.is_finite() || !den.is_finite() {
        return Err(bad());
    }
    Ok(coef * PI / den)
}

/// Ten significant digits, `.` separator, no locale.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.9e}")
    }
}
