//! Complex number and matrix literals shared by program and expectation files.

use num_complex::Complex64;

/// Parses `re`, `im i`, `re+im i`, `re-im i`, `i`, `-i` (whitespace ignored).
/// Real parts may be written as fractions (`1/4`).
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    if let Some(body) = s.strip_suffix('i') {
        // Split at the last sign that is not an exponent sign or the leading sign.
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k];
            if (c == b'+' || c == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let (re, im) = match split {
            Some(k) => (parse_real(&body[..k])?, parse_imag(&body[k..])?),
            None => (0.0, parse_imag(body)?),
        };
        Some(Complex64::new(re, im))
    } else {
        Some(Complex64::new(parse_real(&s)?, 0.0))
    }
}

fn parse_imag(s: &str) -> Option<f64> {
    match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => parse_real(s),
    }
}

/// Real literal, optionally a fraction `a/b`.
pub fn parse_real(s: &str) -> Option<f64> {
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.parse().ok()?;
        let b: f64 = b.parse().ok()?;
        if b == 0.0 {
            return None;
        }
        return Some(a / b);
    }
    match s {
        "inf" | "+inf" | "∞" => Some(f64::INFINITY),
        _ => s.parse().ok().filter(|v: &f64| v.is_finite()),
    }
}

/// Parses `[[a, b], [c, d]]` into rows. Returns an error message on failure.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<Complex64>>, String> {
    let t = text.trim();
    let inner = t
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| "matrix literal must be enclosed in [ ]".to_string())?;
    let mut rows = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let open = rest
            .strip_prefix('[')
            .ok_or_else(|| format!("expected `[` at `{rest}`"))?;
        let close = open
            .find(']')
            .ok_or_else(|| "unterminated matrix row".to_string())?;
        let row = open[..close]
            .split(',')
            .map(|e| parse_complex(e).ok_or_else(|| format!("bad complex literal `{}`", e.trim())))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
        rest = open[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
        }
    }
    if rows.is_empty() {
        return Err("empty matrix".into());
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix must be square ({n} rows)"));
    }
    Ok(rows)
}

/// Shortest text that parses back to the same complex value.
pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:?}", z.re)
    } else if z.re == 0.0 {
        format!("{:?}i", z.im)
    } else if z.im < 0.0 {
        format!("{:?}-{:?}i", z.re, -z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

pub fn format_matrix(rows: &[Vec<Complex64>]) -> String {
    let rows: Vec<String> = rows
        .iter()
        .map(|r| {
            let es: Vec<String> = r.iter().map(|z| format_complex(*z)).collect();
            format!("[{}]", es.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}
