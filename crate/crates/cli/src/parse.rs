//! Parsers for angle literals and `n` ranges.

use std::f64::consts::PI;

/// Parses an angle: a plain decimal (`1.047`) or a rational multiple of π
/// (`pi`, `pi/3`, `2pi/3`, `2*pi/3`, `-pi/4`).
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let s = s.replace('π', "pi");
    let Some(pos) = s.find("pi") else {
        return s.parse::<f64>().map_err(|_| format!("cannot parse angle '{text}'"));
    };
    let (head, tail) = (&s[..pos], &s[pos + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let num: i64 = match head {
        "" | "+" => 1,
        "-" => -1,
        h => h.parse().map_err(|_| format!("bad multiplier in angle '{text}'"))?,
    };
    let den: i64 = match tail {
        "" => 1,
        t => t
            .strip_prefix('/')
            .and_then(|d| d.parse().ok())
            .filter(|&d: &i64| d > 0)
            .ok_or_else(|| format!("bad divisor in angle '{text}'"))?,
    };
    Ok(PI * num as f64 / den as f64)
}

/// Parses `a`, `a:b` or `a:b:step` into the inclusive list of `n` values.
pub fn parse_range(text: &str) -> Result<Vec<u32>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<u32>().map_err(|_| format!("bad number '{s}' in range '{text}'"));
    let (start, end, step) = match parts.as_slice() {
        [a] => (num(a)?, num(a)?, 1),
        [a, b] => (num(a)?, num(b)?, 1),
        [a, b, c] => (num(a)?, num(b)?, num(c)?),
        _ => return Err(format!("range '{text}' must look like a, a:b or a:b:step")),
    };
    if step == 0 {
        return Err("range step must be positive".into());
    }
    if start > end {
        return Err(format!("range '{text}' is empty"));
    }
    Ok((start..=end).step_by(step as usize).collect())
}

/// Comma-separated list of values.
pub fn parse_list<T>(text: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let out: Vec<T> = text.split(',').map(|s| item(s.trim())).collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}
