use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::linalg::DenseMatrix;
use crate::{Error, Real, Result};

pub(crate) const MATRIX_MAGIC: &[u8; 4] = b"NCM1";
pub(crate) const MATRIX_VERSION: u32 = 1;
const MATRIX_HEADER: usize = 4 + 4 + 8 + 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    /// Binary when reading a file that starts with the magic bytes; when
    /// writing, text for `.csv`/`.txt` paths and binary otherwise.
    Auto,
    Text,
    Binary,
}

pub fn read_matrix<T: Real>(path: impl AsRef<Path>, format: Format) -> Result<DenseMatrix<T>> {
    let mut bytes = Vec::new();
    File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    parse(&bytes, format)
}

/// Reads a whole matrix from `reader`.
pub fn read_matrix_from<T: Real>(mut reader: impl Read, format: Format) -> Result<DenseMatrix<T>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    parse(&bytes, format)
}

fn parse<T: Real>(bytes: &[u8], format: Format) -> Result<DenseMatrix<T>> {
    let binary = match format {
        Format::Binary => true,
        Format::Text => false,
        Format::Auto => bytes.starts_with(MATRIX_MAGIC),
    };
    if binary {
        let (m, used) = decode_binary(bytes)?;
        if used != bytes.len() {
            return Err(Error::format(format!(
                "{} trailing bytes after matrix data",
                bytes.len() - used
            )));
        }
        Ok(m)
    } else {
        parse_text(bytes)
    }
}

/// Decodes one NCM1 block at the start of `bytes`; returns it and the number
/// of bytes consumed.
pub(crate) fn decode_binary<T: Real>(bytes: &[u8]) -> Result<(DenseMatrix<T>, usize)> {
    if bytes.len() < MATRIX_HEADER {
        return Err(Error::format("truncated matrix header"));
    }
    if &bytes[..4] != MATRIX_MAGIC {
        return Err(Error::format("bad matrix magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != MATRIX_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MATRIX_VERSION,
        });
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let count = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| Error::format("matrix dimensions overflow"))?;
    let body = &bytes[MATRIX_HEADER..];
    if body.len() < count {
        return Err(Error::format(format!(
            "matrix body truncated: expected {count} bytes, found {}",
            body.len()
        )));
    }
    let data: Vec<T> = body[..count]
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    let m = DenseMatrix::new(rows as usize, cols as usize, data)?;
    Ok((m, MATRIX_HEADER + count))
}

pub(crate) fn encode_binary<T: Real>(m: &DenseMatrix<T>, out: &mut Vec<u8>) {
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for &v in m.as_slice() {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
}

fn parse_text<T: Real>(bytes: &[u8]) -> Result<DenseMatrix<T>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut declared_cols = None;
    for (lineno, line) in BufReader::new(bytes).lines().enumerate() {
        let line = line.map_err(|_| Error::format("text matrix is not valid UTF-8"))?;
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            // an optional "# shape R C" header keeps the width of empty matrices
            let mut it = comment.split_whitespace();
            if it.next() == Some("shape") {
                if let (Some(_), Some(c)) = (it.next(), it.next()) {
                    declared_cols = c.parse::<usize>().ok();
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                let v: f64 = tok.parse().map_err(|_| {
                    Error::format(format!("line {}: cannot parse {tok:?} as a number", lineno + 1))
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("line {}", lineno + 1)));
                }
                Ok(T::lit(v))
            })
            .collect::<Result<Vec<T>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::format(format!(
                    "line {}: {} values, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(declared_cols.unwrap_or(0), Vec::len);
    if declared_cols.is_some_and(|c| c != cols) {
        return Err(Error::format("shape header disagrees with the data"));
    }
    let n = rows.len();
    DenseMatrix::new(n, cols, rows.into_iter().flatten().collect())
}

pub fn write_matrix<T: Real>(path: impl AsRef<Path>, m: &DenseMatrix<T>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let format = match format {
        Format::Auto => {
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") {
                Format::Text
            } else {
                Format::Binary
            }
        }
        f => f,
    };
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_to(&mut w, m, format)?;
    w.flush()?;
    Ok(())
}

/// Writes `m` to `writer`; `Format::Auto` means binary here.
pub fn write_matrix_to<T: Real>(mut writer: impl Write, m: &DenseMatrix<T>, format: Format) -> Result<()> {
    match format {
        Format::Text => {
            writeln!(writer, "# shape {} {}", m.rows(), m.cols())?;
            for row in m.row_iter() {
                let mut first = true;
                for &v in row {
                    if !first {
                        writer.write_all(b",")?;
                    }
                    first = false;
                    write!(writer, "{:.16e}", v.as_f64())?;
                }
                writer.write_all(b"\n")?;
            }
        }
        Format::Binary | Format::Auto => {
            let mut buf = Vec::with_capacity(MATRIX_HEADER + 8 * m.as_slice().len());
            encode_binary(m, &mut buf);
            writer.write_all(&buf)?;
        }
    }
    Ok(())
}
