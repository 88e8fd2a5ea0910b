//! Matrix Market coordinate format, real general or real symmetric.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

pub fn read_mtx(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let file = File::open(path.as_ref())?;
    parse_mtx(BufReader::new(file))
}

pub fn parse_mtx<R: BufRead>(reader: R) -> Result<CsrMatrix> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market stream".into()))??;
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse(format!("bad Matrix Market banner: {header}")));
    }
    if fields[2] != "coordinate" || fields[3] != "real" {
        return Err(Error::Parse(format!(
            "only coordinate real matrices are supported, got {} {}",
            fields[2], fields[3]
        )));
    }
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(Error::Parse(format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| Error::Parse(format!("missing {what} in `{line}`")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{what} in `{line}`: {e}")))
        };
        match size {
            None => {
                let r = next_usize("rows")?;
                let c = next_usize("cols")?;
                let nnz = next_usize("nnz")?;
                triplets.reserve(nnz * if symmetry == Symmetry::Symmetric { 2 } else { 1 });
                size = Some((r, c, nnz));
            }
            Some((nr, nc, _)) => {
                let r = next_usize("row")?;
                let c = next_usize("col")?;
                let v: f64 = it
                    .next()
                    .ok_or_else(|| Error::Parse(format!("missing value in `{line}`")))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("value in `{line}`: {e}")))?;
                if r == 0 || c == 0 || r > nr || c > nc {
                    return Err(Error::Parse(format!("entry ({r}, {c}) outside {nr}x{nc}")));
                }
                triplets.push((r - 1, c - 1, v));
                if symmetry == Symmetry::Symmetric && r != c {
                    triplets.push((c - 1, r - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    let stored = match symmetry {
        Symmetry::General => triplets.len(),
        Symmetry::Symmetric => triplets.iter().filter(|(r, c, _)| r >= c).count(),
    };
    if stored != nnz {
        return Err(Error::Parse(format!("header declares {nnz} entries, found {stored}")));
    }
    CsrMatrix::from_triplets(nr, nc, &triplets)
}

/// Writes `m`; with [`Symmetry::Symmetric`] only the lower triangle is stored
/// and `m` must be exactly symmetric.
pub fn write_mtx(path: impl AsRef<Path>, m: &CsrMatrix, symmetry: Symmetry) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    format_mtx(&mut out, m, symmetry)?;
    out.flush()?;
    Ok(())
}

pub fn format_mtx<W: Write>(out: &mut W, m: &CsrMatrix, symmetry: Symmetry) -> Result<()> {
    let entries: Vec<(usize, usize, f64)> = (0..m.nrows())
        .flat_map(|r| {
            let (cols, vals) = m.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v)).collect::<Vec<_>>()
        })
        .filter(|&(r, c, _)| symmetry == Symmetry::General || r >= c)
        .collect();
    if symmetry == Symmetry::Symmetric && m.asymmetry() != 0.0 {
        return Err(Error::invalid("symmetric Matrix Market output of a non-symmetric matrix"));
    }
    let tag = match symmetry {
        Symmetry::General => "general",
        Symmetry::Symmetric => "symmetric",
    };
    writeln!(out, "%%MatrixMarket matrix coordinate real {tag}")?;
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), entries.len())?;
    for (r, c, v) in entries {
        // `{:e}` prints the shortest representation that round-trips.
        writeln!(out, "{} {} {:e}", r + 1, c + 1, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix {
        CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (0, 1, -0.1), (1, 0, -0.1), (1, 1, 1.0 / 3.0), (2, 2, 1e-300)],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_general_and_symmetric() {
        for sym in [Symmetry::General, Symmetry::Symmetric] {
            let mut buf = Vec::new();
            format_mtx(&mut buf, &sample(), sym).unwrap();
            let back = parse_mtx(buf.as_slice()).unwrap();
            assert_eq!(back, sample(), "{sym:?}");
        }
    }

    #[test]
    fn symmetric_output_stores_lower_triangle() {
        let mut buf = Vec::new();
        format_mtx(&mut buf, &sample(), Symmetry::Symmetric).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap() == "3 3 4");
    }

    #[test]
    fn rejects_malformed_input() {
        let bad = [
            "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n",
            "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1.0\n",
            "",
        ];
        for text in bad {
            assert!(matches!(parse_mtx(text.as_bytes()), Err(Error::Parse(_))), "{text}");
        }
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "%%MatrixMarket matrix coordinate real general\n% note\n\n2 3 2\n1 3 4.5\n% mid\n2 1 -1\n";
        let m = parse_mtx(text.as_bytes()).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m.get(0, 2), 4.5);
        assert_eq!(m.get(1, 0), -1.0);
    }

    #[test]
    fn asymmetric_matrix_cannot_be_written_symmetric() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]).unwrap();
        assert!(format_mtx(&mut Vec::new(), &m, Symmetry::Symmetric).is_err());
    }
}
