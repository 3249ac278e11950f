//! Matrix Market coordinate format for [`SparseOperator`].
//!
//! Reads `real`/`complex` fields with `general`, `symmetric` or `hermitian`
//! symmetry. Writes `complex general`, or `complex hermitian` (lower
//! triangle only) when the operator carries the Hermitian flag.

use super::{LinearOperator, SparseOperator, Symmetry, C64};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

pub fn write_matrix_market<W: Write>(op: &SparseOperator, mut out: W) -> Result<()> {
    let hermitian = op.symmetry() == Symmetry::Hermitian;
    let entries: Vec<_> = op
        .triplets()
        .filter(|&(i, j, _)| !hermitian || i >= j)
        .collect();
    writeln!(
        out,
        "%%MatrixMarket matrix coordinate complex {}",
        if hermitian { "hermitian" } else { "general" }
    )?;
    writeln!(out, "{} {} {}", op.n(), op.n(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im)?;
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Complex,
}

#[derive(Clone, Copy, PartialEq)]
enum Layout {
    General,
    Symmetric,
    Hermitian,
}

pub fn read_matrix_market<R: BufRead>(input: R) -> Result<SparseOperator> {
    let mut lines = input.lines().enumerate();
    let err = |line: usize, msg: &str| Error::MatrixMarket {
        line: line + 1,
        msg: msg.to_string(),
    };

    let (lno, header) = lines.next().ok_or_else(|| err(0, "empty input"))?;
    let header = header?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|s| s.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
    {
        return Err(err(
            lno,
            "expected '%%MatrixMarket matrix coordinate <field> <symmetry>'",
        ));
    }
    let field = match tokens[3].as_str() {
        "real" | "integer" => Field::Real,
        "complex" => Field::Complex,
        other => return Err(err(lno, &format!("unsupported field '{other}'"))),
    };
    let layout = match tokens[4].as_str() {
        "general" => Layout::General,
        "symmetric" => Layout::Symmetric,
        "hermitian" => Layout::Hermitian,
        other => return Err(err(lno, &format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut trip = Vec::new();
    for (lno, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(err(lno, "size line must have three integers"));
                }
                let p = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| err(lno, "bad integer in size line"))
                };
                let (r, c, nnz) = (p(parts[0])?, p(parts[1])?, p(parts[2])?);
                if r != c {
                    return Err(err(lno, "operator must be square"));
                }
                size = Some((r, nnz));
                trip.reserve(nnz * if layout == Layout::General { 1 } else { 2 });
            }
            Some((n, _)) => {
                let want = if field == Field::Complex { 4 } else { 3 };
                if parts.len() != want {
                    return Err(err(lno, &format!("expected {want} fields")));
                }
                let idx = |s: &str| -> Result<usize> {
                    let k = s.parse::<usize>().map_err(|_| err(lno, "bad index"))?;
                    if k == 0 || k > n {
                        return Err(err(lno, "index out of range"));
                    }
                    Ok(k - 1)
                };
                let num = |s: &str| s.parse::<f64>().map_err(|_| err(lno, "bad number"));
                let (i, j) = (idx(parts[0])?, idx(parts[1])?);
                let v = match field {
                    Field::Complex => C64::new(num(parts[2])?, num(parts[3])?),
                    Field::Real => C64::new(num(parts[2])?, 0.0),
                };
                trip.push((i, j, v));
                if i != j {
                    match layout {
                        Layout::General => {}
                        Layout::Symmetric => trip.push((j, i, v)),
                        Layout::Hermitian => trip.push((j, i, v.conj())),
                    }
                }
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| err(0, "missing size line"))?;
    let stored = match layout {
        Layout::General => trip.len(),
        _ => trip.iter().filter(|&&(i, j, _)| i >= j).count(),
    };
    if stored != nnz {
        return Err(Error::MatrixMarket {
            line: 0,
            msg: format!("header announces {nnz} entries, found {stored}"),
        });
    }
    let hermitian =
        layout == Layout::Hermitian || (layout == Layout::Symmetric && field == Field::Real);
    SparseOperator::from_triplets(
        n,
        &trip,
        if hermitian {
            Symmetry::Hermitian
        } else {
            Symmetry::General
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_round_trip_is_idempotent() {
        let trip = [
            (0, 0, C64::new(2.0, 0.0)),
            (1, 0, C64::new(0.1, -0.3)),
            (0, 1, C64::new(0.1, 0.3)),
            (1, 1, C64::new(-1.0 / 3.0, 0.0)),
        ];
        let a = SparseOperator::from_triplets(2, &trip, Symmetry::Hermitian).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate complex hermitian\n2 2 3\n"));
        let b = read_matrix_market(buf.as_slice()).unwrap();
        assert_eq!(a, b);
        let mut buf2 = Vec::new();
        write_matrix_market(&b, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn reads_real_general_with_comments() {
        let text =
            "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 2 3.5\n2 1 -1\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.get(0, 1), C64::new(3.5, 0.0));
        assert_eq!(a.symmetry(), Symmetry::General);
    }

    #[test]
    fn reports_malformed_input() {
        assert!(
            read_matrix_market("%%MatrixMarket matrix array real general\n".as_bytes()).is_err()
        );
        let bad = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(
            read_matrix_market(bad.as_bytes()),
            Err(Error::MatrixMarket { line: 3, .. })
        ));
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_matrix_market(short.as_bytes()).is_err());
    }
}
