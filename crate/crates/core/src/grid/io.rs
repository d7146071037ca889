//! SDFG grid files.
//!
//! ```text
//! SDFG <text|bin> <nx> <ny> <nz> <ox> <oy> <oz> <spacing>\n
//! ```
//!
//! followed either by `nx*ny*nz` whitespace separated decimals (`text`) or
//! by the same number of little-endian `f64` values (`bin`), x fastest.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::SdfGrid;
use crate::error::{Error, Result};
use crate::scalar::{Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridEncoding {
    Text,
    Binary,
}

pub fn load_grid<T: Real>(path: impl AsRef<Path>) -> Result<SdfGrid<T>> {
    let bytes = fs::read(path)?;
    read_grid(&bytes)
}

pub fn save_grid<T: Real>(grid: &SdfGrid<T>, path: impl AsRef<Path>, encoding: GridEncoding) -> Result<()> {
    let bytes = write_grid(grid, encoding);
    fs::write(path, bytes)?;
    Ok(())
}

/// Serializes a grid; values are written as `f64`.
pub fn write_grid<T: Real>(grid: &SdfGrid<T>, encoding: GridEncoding) -> Vec<u8> {
    let d = grid.dims();
    let o = grid.origin();
    let mut out = Vec::with_capacity(64 + grid.node_count() * 8);
    let tag = match encoding {
        GridEncoding::Text => "text",
        GridEncoding::Binary => "bin",
    };
    writeln!(
        out,
        "SDFG {tag} {} {} {} {:?} {:?} {:?} {:?}",
        d[0],
        d[1],
        d[2],
        o.x.as_f64(),
        o.y.as_f64(),
        o.z.as_f64(),
        grid.spacing().as_f64()
    )
    .expect("writing to a Vec cannot fail");
    match encoding {
        GridEncoding::Binary => {
            for v in grid.values() {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
        GridEncoding::Text => {
            for row in grid.values().chunks(d[0]) {
                let line: Vec<String> = row.iter().map(|v| format!("{:?}", v.as_f64())).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    out
}

/// Whitespace separated tokens with their byte offsets.
fn tokens(bytes: &[u8], start: usize) -> impl Iterator<Item = (usize, &[u8])> {
    let mut pos = start;
    std::iter::from_fn(move || {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            return None;
        }
        let begin = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        Some((begin, &bytes[begin..pos]))
    })
}

fn parse_num<N: std::str::FromStr>(offset: usize, tok: &[u8], what: &str) -> Result<N> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(offset, format!("invalid {what} `{}`", String::from_utf8_lossy(tok))))
}

pub fn read_grid<T: Real>(bytes: &[u8]) -> Result<SdfGrid<T>> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::parse(0, "missing header line"))?;
    let header: Vec<(usize, &[u8])> = tokens(&bytes[..newline], 0).collect();
    if header.len() != 9 {
        return Err(Error::parse(
            0,
            format!("header needs 9 fields (magic, encoding, 3 dims, 3 origin, spacing), found {}", header.len()),
        ));
    }
    if header[0].1 != b"SDFG" {
        return Err(Error::parse(header[0].0, "bad magic, expected `SDFG`"));
    }
    let encoding = match header[1].1 {
        b"text" => GridEncoding::Text,
        b"bin" => GridEncoding::Binary,
        other => {
            return Err(Error::parse(
                header[1].0,
                format!("unknown encoding `{}`", String::from_utf8_lossy(other)),
            ))
        }
    };
    let mut dims = [0usize; 3];
    for a in 0..3 {
        let (off, tok) = header[2 + a];
        dims[a] = parse_num(off, tok, "dimension")?;
        if dims[a] < 2 {
            return Err(Error::parse(off, format!("dimension {} must be at least 2", dims[a])));
        }
    }
    let mut real = [0f64; 4];
    for a in 0..4 {
        let (off, tok) = header[5 + a];
        real[a] = parse_num(off, tok, "number")?;
        if !real[a].is_finite() {
            return Err(Error::parse(off, "non-finite header value"));
        }
    }
    if real[3] <= 0.0 {
        return Err(Error::parse(header[8].0, "spacing must be positive"));
    }
    let count = dims[0]
        .checked_mul(dims[1])
        .and_then(|n| n.checked_mul(dims[2]))
        .ok_or_else(|| Error::parse(header[2].0, "grid dimensions overflow"))?;

    let body = newline + 1;
    let mut values = Vec::with_capacity(count);
    match encoding {
        GridEncoding::Binary => {
            let expected = count * 8;
            let available = bytes.len() - body;
            if available != expected {
                return Err(Error::parse(
                    body,
                    format!("value count mismatch: expected {count} values ({expected} bytes), found {available} bytes"),
                ));
            }
            for (n, chunk) in bytes[body..].chunks_exact(8).enumerate() {
                let v = f64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
                if !v.is_finite() {
                    return Err(Error::parse(body + 8 * n, format!("non-finite value at node {n}")));
                }
                values.push(T::lit(v));
            }
        }
        GridEncoding::Text => {
            for (off, tok) in tokens(bytes, body) {
                if values.len() == count {
                    return Err(Error::parse(off, format!("value count mismatch: more than {count} values")));
                }
                let v: f64 = parse_num(off, tok, "value")?;
                if !v.is_finite() {
                    return Err(Error::parse(off, format!("non-finite value at node {}", values.len())));
                }
                values.push(T::lit(v));
            }
            if values.len() != count {
                return Err(Error::parse(
                    bytes.len(),
                    format!("value count mismatch: expected {count}, found {}", values.len()),
                ));
            }
        }
    }
    let origin = Vec3::new(T::lit(real[0]), T::lit(real[1]), T::lit(real[2]));
    SdfGrid::new(dims, origin, T::lit(real[3]), values)
}
