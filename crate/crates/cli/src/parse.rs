//! Literal parsers for command-line and config values.

use std::f64::consts::PI;

use estermann::{ShiftTriple, C64};

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also `i`, `-i`, exponents like `1e-3-2i`).
pub fn complex(text: &str) -> Result<C64, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || format!("`{text}` is not a complex literal (expected a+bi)");
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| err());
    };
    // Split at the last sign that is neither leading nor part of an exponent.
    let bytes = body.as_bytes();
    let split =
        (1..bytes.len()).rev().find(|&j| matches!(bytes[j], b'+' | b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(j) => (&body[..j], &body[j..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => s.parse::<f64>().map_err(|_| err())?,
    };
    let re = re.parse::<f64>().map_err(|_| err())?;
    Ok(C64::new(re, im))
}

/// Parses a phase given as a multiple of π: `1.5pi`, `-pi`, `pi`, or `0`.
pub fn phase(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let err = || format!("`{text}` is not a phase (expected a multiple of pi such as 1.5pi)");
    match t.strip_suffix("pi") {
        Some("") | Some("+") => Ok(PI),
        Some("-") => Ok(-PI),
        Some(coeff) => coeff.parse::<f64>().map(|c| c * PI).map_err(|_| err()),
        None if t.parse::<f64>() == Ok(0.0) => Ok(0.0),
        None => Err(err()),
    }
}

/// Parses `α,β,γ` as a shift triple.
pub fn shifts(text: &str) -> Result<ShiftTriple, String> {
    let parts: Vec<C64> = text.split(',').map(complex).collect::<Result<_, _>>()?;
    let [a, b, g] = parts[..] else {
        return Err(format!("`{text}` needs exactly three comma-separated shifts"));
    };
    ShiftTriple::new(a, b, g).map_err(|e| e.to_string())
}

/// Parses moduli: a comma list of values or inclusive ranges `lo..hi`.
pub fn moduli(text: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        let err = || format!("`{part}` is not a modulus or range lo..hi");
        match part.split_once("..") {
            Some((lo, hi)) => {
                let hi = hi.strip_prefix('=').unwrap_or(hi);
                let lo: u64 = lo.parse().map_err(|_| err())?;
                let hi: u64 = hi.parse().map_err(|_| err())?;
                if lo > hi {
                    return Err(err());
                }
                out.extend(lo..=hi);
            }
            None => out.push(part.parse().map_err(|_| err())?),
        }
    }
    if out.contains(&0) {
        return Err("moduli must be at least 1".into());
    }
    Ok(out)
}

/// Parses a comma list of complex literals.
pub fn complex_list(text: &str) -> Result<Vec<C64>, String> {
    text.split(',').map(complex).collect()
}
