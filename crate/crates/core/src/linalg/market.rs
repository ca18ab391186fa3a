//! MatrixMarket coordinate format (real, general).

use std::io::{BufRead, Write};

use super::csr::SparseMatrix;
use crate::error::{Error, Result};

pub fn write_matrix_market<W: Write>(a: &SparseMatrix, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(r: R) -> Result<SparseMatrix> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
    let header = header?;
    let lower = header.to_ascii_lowercase();
    let tokens: Vec<&str> = lower.split_whitespace().collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(Error::Parse { line: 1, msg: format!("unsupported header '{header}'") });
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(Error::Parse { line: 1, msg: format!("unsupported field '{}'", tokens[3]) });
    }
    let symmetric = match tokens[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse { line: 1, msg: format!("unsupported symmetry '{other}'") }),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        let parse_usize = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse { line: line_no, msg: format!("'{s}': {e}") })
        };
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(Error::Parse { line: line_no, msg: "expected 'rows cols nnz'".into() });
                }
                size = Some((parse_usize(parts[0])?, parse_usize(parts[1])?, parse_usize(parts[2])?));
            }
            Some((nr, nc, _)) => {
                if parts.len() != 3 {
                    return Err(Error::Parse { line: line_no, msg: "expected 'row col value'".into() });
                }
                let i = parse_usize(parts[0])?;
                let j = parse_usize(parts[1])?;
                let v: f64 = parts[2]
                    .parse()
                    .map_err(|e| Error::Parse { line: line_no, msg: format!("'{}': {e}", parts[2]) })?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(Error::Parse { line: line_no, msg: format!("index ({i}, {j}) out of range") });
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or(Error::Parse { line: 1, msg: "missing size line".into() })?;
    let stored = if symmetric {
        triplets.iter().filter(|(i, j, _)| i <= j).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(Error::Parse { line: 2, msg: format!("expected {nnz} entries, found {stored}") });
    }
    SparseMatrix::from_triplets(nr, nc, &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let a = SparseMatrix::from_triplets(3, 2, &[(0, 0, 1.5), (2, 1, -1.0 / 3.0), (1, 1, 1e-300)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let b = read_matrix_market(buf.as_slice()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(read_matrix_market(bad.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_matrix_market(short.as_bytes()).is_err());
        assert!(read_matrix_market("%%MatrixMarket matrix array real general\n".as_bytes()).is_err());
    }

    #[test]
    fn symmetric_storage_expands() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 2.0\n2 1 1.0\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.to_dense(), vec![vec![2.0, 1.0], vec![1.0, 0.0]]);
    }
}
