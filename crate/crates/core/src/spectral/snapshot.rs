use std::fmt::Write;

use rustfft::num_complex::Complex64;

use super::field::SpectralField;
use super::lattice::Lattice;
use crate::error::{Error, Result};

/// Text dump: header `# d M h g`, then one `xi_1 [xi_2] re im` line per mode
/// in lexicographic order. Amplitudes carry 17 significant digits, so
/// [`read_snapshot`] reproduces the field bit for bit.
pub fn write_snapshot(u: &SpectralField) -> String {
    let lat = u.lattice();
    let mut out = String::new();
    writeln!(out, "# {} {} {:?} {:?}", lat.dim(), lat.max_mode(), lat.depth(), lat.gravity()).unwrap();
    for (xi, c) in lat.modes().iter().zip(u.coeffs()) {
        if lat.dim() == 1 {
            write!(out, "{}", xi.k[0]).unwrap();
        } else {
            write!(out, "{} {}", xi.k[0], xi.k[1]).unwrap();
        }
        writeln!(out, " {:.16e} {:.16e}", c.re, c.im).unwrap();
    }
    out
}

pub(crate) fn parse_header(line: &str, lineno: usize) -> Result<Vec<String>> {
    let body = line.strip_prefix('#').ok_or(Error::Parse {
        line: lineno,
        reason: "missing `#` header".into(),
    })?;
    Ok(body.split_whitespace().map(str::to_string).collect())
}

pub(crate) fn parse_num<T: std::str::FromStr>(tok: &str, lineno: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line: lineno,
        reason: format!("cannot parse `{tok}`"),
    })
}

pub(crate) fn lattice_from_header(tokens: &[String], lineno: usize) -> Result<Lattice> {
    if tokens.len() < 4 {
        return Err(Error::Parse {
            line: lineno,
            reason: "header needs `d M h g`".into(),
        });
    }
    Lattice::new(
        parse_num(&tokens[0], lineno)?,
        parse_num(&tokens[1], lineno)?,
        parse_num(&tokens[2], lineno)?,
        parse_num(&tokens[3], lineno)?,
    )
}

/// Parses the output of [`write_snapshot`].
pub fn read_snapshot(text: &str) -> Result<SpectralField> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (i0, head) = lines.next().ok_or(Error::Parse { line: 1, reason: "empty snapshot".into() })?;
    let lat = lattice_from_header(&parse_header(head, i0 + 1)?, i0 + 1)?;
    let mut coeffs = Vec::with_capacity(lat.n_modes());
    for ((i, line), xi) in lines.by_ref().zip(lat.modes()) {
        let tok: Vec<&str> = line.split_whitespace().collect();
        let d = lat.dim();
        if tok.len() != d + 2 {
            return Err(Error::Parse { line: i + 1, reason: "wrong number of columns".into() });
        }
        for a in 0..d {
            let k: i64 = parse_num(tok[a], i + 1)?;
            if k != xi.k[a] {
                return Err(Error::Parse { line: i + 1, reason: format!("expected mode {xi}") });
            }
        }
        coeffs.push(Complex64::new(parse_num(tok[d], i + 1)?, parse_num(tok[d + 1], i + 1)?));
    }
    if let Some((i, _)) = lines.next() {
        return Err(Error::Parse { line: i + 1, reason: "trailing data".into() });
    }
    SpectralField::from_coeffs(&lat, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let lat = Lattice::new(2, 5, 0.7, 9.81).unwrap();
        let u = SpectralField::from_fn(&lat, |xi| {
            let k = xi.k[0] as f64 * 0.37 + xi.k[1] as f64 * 1.13;
            Complex64::new((k * k).cos() / 3.0, k.sin() / 7.0)
        });
        let text = write_snapshot(&u);
        assert!(text.starts_with("# 2 5 0.7 9.81\n"));
        let v = read_snapshot(&text).unwrap();
        assert_eq!(u.coeffs(), v.coeffs());
        assert_eq!(u.lattice(), v.lattice());
    }

    #[test]
    fn truncated_input_rejected() {
        let lat = Lattice::new(1, 4, 1.0, 1.0).unwrap();
        let text = write_snapshot(&SpectralField::zeros(&lat));
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert!(read_snapshot(&cut).is_err());
        assert!(matches!(read_snapshot("1 0 0\n"), Err(Error::Parse { line: 1, .. })));
    }
}
