//! Grid syntax: `0.1,1/3,0.4` or `start..end:step`, mixed freely
//! (`0,0.25..0.35:0.05`).

use crate::error::{Error, Result};

/// Range points are snapped to this many decimals so `0.2 + 5·0.1` prints as `0.7`.
const SNAP_DIGITS: i32 = 12;

/// A decimal or a fraction `p/q`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("'{s}' is not a number or fraction"));
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(Error::Parse(format!("'{s}' divides by zero")));
            }
            p / q
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

// only absorbs accumulated rounding; `1/3` stays `1/3`
fn snap(v: f64) -> f64 {
    let scale = 10f64.powi(SNAP_DIGITS);
    let snapped = (v * scale).round() / scale;
    if (snapped - v).abs() <= 8.0 * f64::EPSILON * v.abs() {
        snapped
    } else {
        v
    }
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let (bounds, step) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("range '{s}' needs a step, as in 0.1..0.5:0.1")))?;
    let (a, b) = bounds
        .split_once("..")
        .ok_or_else(|| Error::Parse(format!("malformed range '{s}'")))?;
    let (a, b, h) = (parse_number(a)?, parse_number(b)?, parse_number(step)?);
    if h <= 0.0 {
        return Err(Error::Parse(format!(
            "range step must be positive in '{s}'"
        )));
    }
    if b < a {
        return Err(Error::Parse(format!("range '{s}' is empty")));
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let v = a + i as f64 * h;
            if (v - b).abs() <= 1e-9 * h {
                b
            } else {
                snap(v)
            }
        })
        .collect())
}

/// Points in the order written; duplicates are kept.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if part.contains("..") {
            out.extend(parse_range(part)?);
        } else {
            out.push(parse_number(part)?);
        }
    }
    if out.is_empty() {
        return Err(Error::Parse(format!("grid '{s}' is empty")));
    }
    Ok(out)
}

/// Grid with every point in `[lo, hi)` (or `[lo, hi]` when `closed`).
pub fn parse_bounded_grid(s: &str, what: &str, lo: f64, hi: f64, closed: bool) -> Result<Vec<f64>> {
    let grid = parse_grid(s)?;
    for &v in &grid {
        let ok = v >= lo && if closed { v <= hi } else { v < hi };
        if !ok {
            let close = if closed { ']' } else { ')' };
            return Err(Error::Parse(format!(
                "{what} value {v} outside [{lo}, {hi}{close}"
            )));
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_are_exact() {
        assert_eq!(parse_number("1/3").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_number(" 2 / 4 ").unwrap(), 0.5);
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("abc").is_err());
        assert!(parse_number("inf").is_err());
    }

    #[test]
    fn ranges_include_the_end() {
        let g = parse_grid("0.2..0.7:0.1").unwrap();
        assert_eq!(g, vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
        let g = parse_grid("0..1/3:1/9").unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g[3], 1.0 / 3.0);
        assert_eq!(parse_grid("0.3,1/3..0.4:0.1").unwrap().len(), 2);
    }

    #[test]
    fn malformed_grids() {
        for s in [
            "",
            ",",
            "0.5..0.1:0.1",
            "0.1..0.5",
            "0.1..0.5:0",
            "0.1..0.5:-1",
            "x",
        ] {
            assert!(parse_grid(s).is_err(), "{s}");
        }
        assert!(parse_bounded_grid("0.5,1", "eps", 0.0, 1.0, false).is_err());
        assert!(parse_bounded_grid("0.5,1", "q", 0.0, 1.0, true).is_ok());
    }
}
