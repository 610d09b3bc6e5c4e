//! Matrix Market reading and writing for real dense matrices.
//!
//! Values are written with the shortest representation that parses back to
//! the same `f64`, so save-then-load is exact.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum MmError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

fn format_err(line: usize, msg: impl Into<String>) -> MmError {
    MmError::Format { line, msg: msg.into() }
}

/// Storage layout on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    /// Every entry, column-major.
    #[default]
    Array,
    /// Nonzero entries as 1-based `(i, j, value)` triples.
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

pub fn write_matrix<T: Scalar, W: Write>(m: &DMatrix<T>, layout: Layout, mut w: W) -> std::io::Result<()> {
    let (r, c) = m.shape();
    match layout {
        Layout::Array => {
            writeln!(w, "%%MatrixMarket matrix array real general")?;
            writeln!(w, "{r} {c}")?;
            for j in 0..c {
                for i in 0..r {
                    writeln!(w, "{:e}", m[(i, j)].as_f64())?;
                }
            }
        }
        Layout::Coordinate => {
            let nnz = m.iter().filter(|&&x| x != T::zero()).count();
            writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(w, "{r} {c} {nnz}")?;
            for j in 0..c {
                for i in 0..r {
                    let x = m[(i, j)];
                    if x != T::zero() {
                        writeln!(w, "{} {} {:e}", i + 1, j + 1, x.as_f64())?;
                    }
                }
            }
        }
    }
    w.flush()
}

pub fn read_matrix<T: Scalar, R: Read>(src: R) -> Result<DMatrix<T>, MmError> {
    let reader = BufReader::new(src);
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));
    let io = |e| MmError::Io { path: "<stream>".into(), source: e };

    let (no, header) = lines.next().ok_or_else(|| format_err(1, "empty file"))?;
    let header = header.map_err(io)?.to_ascii_lowercase();
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(format_err(no, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let coordinate = match words[2] {
        "array" => false,
        "coordinate" => true,
        f => return Err(format_err(no, format!("unsupported format '{f}'"))),
    };
    let pattern = match words[3] {
        "real" | "double" | "integer" => false,
        "pattern" if coordinate => true,
        f => return Err(format_err(no, format!("unsupported field '{f}'"))),
    };
    let sym = match words[4] {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        s => return Err(format_err(no, format!("unsupported symmetry '{s}'"))),
    };

    // data lines, skipping comments and blanks
    let mut data = Vec::new();
    for (no, line) in lines {
        let line = line.map_err(io)?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        data.push((no, t.to_string()));
    }
    let mut it = data.into_iter();
    let (no, size) = it.next().ok_or_else(|| format_err(no, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|s| s.parse::<usize>().map_err(|_| format_err(no, format!("bad size entry '{s}'"))))
        .collect::<Result<_, _>>()?;
    let parse_val = |no: usize, s: &str| -> Result<T, MmError> {
        let v: f64 = s.parse().map_err(|_| format_err(no, format!("bad value '{s}'")))?;
        if !v.is_finite() {
            return Err(format_err(no, format!("non-finite value '{s}'")));
        }
        Ok(T::lit(v))
    };

    if !coordinate {
        let [r, c] = dims[..] else {
            return Err(format_err(no, "array size line needs 'rows cols'"));
        };
        if sym != Symmetry::General && r != c {
            return Err(format_err(no, "symmetric storage needs a square matrix"));
        }
        let mut m = DMatrix::<T>::zeros(r, c);
        let slots: Vec<(usize, usize)> = match sym {
            Symmetry::General => (0..c).flat_map(|j| (0..r).map(move |i| (i, j))).collect(),
            Symmetry::Symmetric => (0..c).flat_map(|j| (j..r).map(move |i| (i, j))).collect(),
            Symmetry::Skew => (0..c).flat_map(|j| (j + 1..r).map(move |i| (i, j))).collect(),
        };
        let mut last = no;
        for &(i, j) in &slots {
            let (no, line) = it.next().ok_or_else(|| format_err(last, format!("expected {} values", slots.len())))?;
            let mut toks = line.split_whitespace();
            let v = parse_val(no, toks.next().unwrap_or(""))?;
            if toks.next().is_some() {
                return Err(format_err(no, "array entries take one value per line"));
            }
            place(&mut m, i, j, v, sym);
            last = no;
        }
        if let Some((no, _)) = it.next() {
            return Err(format_err(no, "trailing data after the last entry"));
        }
        return Ok(m);
    }

    let [r, c, nnz] = dims[..] else {
        return Err(format_err(no, "coordinate size line needs 'rows cols nnz'"));
    };
    if sym != Symmetry::General && r != c {
        return Err(format_err(no, "symmetric storage needs a square matrix"));
    }
    let mut m = DMatrix::<T>::zeros(r, c);
    let mut count = 0;
    for (no, line) in it {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let want = if pattern { 2 } else { 3 };
        if toks.len() != want {
            return Err(format_err(no, format!("expected {want} fields")));
        }
        let idx = |s: &str, bound: usize| -> Result<usize, MmError> {
            match s.parse::<usize>() {
                Ok(k) if (1..=bound).contains(&k) => Ok(k - 1),
                _ => Err(format_err(no, format!("index '{s}' out of range 1..={bound}"))),
            }
        };
        let i = idx(toks[0], r)?;
        let j = idx(toks[1], c)?;
        let v = if pattern { T::one() } else { parse_val(no, toks[2])? };
        if sym != Symmetry::General && i < j {
            return Err(format_err(no, "symmetric storage lists the lower triangle only"));
        }
        if sym == Symmetry::Skew && i == j {
            return Err(format_err(no, "skew-symmetric storage has no diagonal"));
        }
        let v = m[(i, j)] + v;
        place(&mut m, i, j, v, sym);
        count += 1;
    }
    if count != nnz {
        return Err(format_err(no, format!("size line announces {nnz} entries, found {count}")));
    }
    Ok(m)
}

fn place<T: Scalar>(m: &mut DMatrix<T>, i: usize, j: usize, v: T, sym: Symmetry) {
    m[(i, j)] = v;
    if i != j {
        match sym {
            Symmetry::General => {}
            Symmetry::Symmetric => m[(j, i)] = v,
            Symmetry::Skew => m[(j, i)] = -v,
        }
    }
}

pub fn save_matrix<T: Scalar>(m: &DMatrix<T>, layout: Layout, path: &Path) -> Result<(), MmError> {
    let io = |e| MmError::Io { path: path.display().to_string(), source: e };
    let file = fs::File::create(path).map_err(io)?;
    write_matrix(m, layout, std::io::BufWriter::new(file)).map_err(io)
}

pub fn load_matrix<T: Scalar>(path: &Path) -> Result<DMatrix<T>, MmError> {
    let file = fs::File::open(path).map_err(|e| MmError::Io { path: path.display().to_string(), source: e })?;
    read_matrix(file).map_err(|e| match e {
        MmError::Format { line, msg } => MmError::Format { line, msg: format!("{}: {msg}", path.display()) },
        MmError::Io { source, .. } => MmError::Io { path: path.display().to_string(), source },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(m: &DMatrix<f64>, layout: Layout) -> DMatrix<f64> {
        let mut buf = Vec::new();
        write_matrix(m, layout, &mut buf).unwrap();
        read_matrix(buf.as_slice()).unwrap()
    }

    #[test]
    fn array_and_coordinate_roundtrip_bitwise() {
        let m = DMatrix::from_row_slice(2, 3, &[0.1, -1e-300, 0.0, std::f64::consts::PI, 5e300, -0.0]);
        for layout in [Layout::Array, Layout::Coordinate] {
            let back = roundtrip(&m, layout);
            assert_eq!(back.shape(), (2, 3));
            for (a, b) in m.iter().zip(back.iter()) {
                assert_eq!(a, b);
            }
        }
        let back = roundtrip(&m, Layout::Array);
        assert!(m.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn empty_shapes() {
        let m = DMatrix::<f64>::zeros(0, 3);
        assert_eq!(roundtrip(&m, Layout::Array).shape(), (0, 3));
        assert_eq!(roundtrip(&m, Layout::Coordinate).shape(), (0, 3));
    }

    #[test]
    fn reads_symmetric_coordinate_and_pattern() {
        let src = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 4\n2 1 -1.5\n";
        let m: DMatrix<f64> = read_matrix(src.as_bytes()).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[4.0, -1.5, -1.5, 0.0]));
        let src = "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 2\n";
        let m: DMatrix<f64> = read_matrix(src.as_bytes()).unwrap();
        assert_eq!(m[(0, 1)], 1.0);
        let src = "%%MatrixMarket matrix array real skew-symmetric\n2 2\n3\n";
        let m: DMatrix<f64> = read_matrix(src.as_bytes()).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, -3.0, 3.0, 0.0]));
    }

    #[test]
    fn rejects_malformed_input() {
        let bad = [
            "",
            "%%MatrixMarket matrix array complex general\n1 1\n1\n",
            "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n",
            "%%MatrixMarket matrix array real general\n1 1\nabc\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
            "%%MatrixMarket matrix array real general\n1 1\n1\n2\n",
            "not a header\n1 1\n1\n",
        ];
        for src in bad {
            assert!(matches!(read_matrix::<f64, _>(src.as_bytes()), Err(MmError::Format { .. })), "{src:?}");
        }
    }

    #[test]
    fn f32_roundtrip() {
        let m = DMatrix::from_row_slice(1, 2, &[0.1f32, -3.3e-20]);
        let mut buf = Vec::new();
        write_matrix(&m, Layout::Array, &mut buf).unwrap();
        assert_eq!(read_matrix::<f32, _>(buf.as_slice()).unwrap(), m);
    }
}
