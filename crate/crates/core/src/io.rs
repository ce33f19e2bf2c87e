//! Byte-level codecs for the two interchange formats.
//!
//! Grid files ("WGF1"): one ASCII header line `WGF1 <n> <J>`, then the
//! `2^(Jn)` cell values as little-endian IEEE 754 doubles in row-major
//! order. Coefficient files ("WCF1"): the header line `WCF1 <n> <J>`, then
//! one CSV line `eps_bits,j,k_1[,k_2],value` per stored entry (`k_2` only
//! in dimension 2).
//!
//! Values are printed as the shortest decimal that parses back to the same
//! double, so a write/read round trip is bit-exact, and entries are emitted
//! in index order, so equal fields always serialize to equal bytes. Every
//! parse error names the byte offset of the offending token.

use crate::dyadic::WaveletIndex;
use crate::error::Error;
use crate::field::CoefficientField;
use crate::grid::GridFunction;

/// Largest resolution either format accepts; matches the in-memory caps.
const MAX_RESOLUTION: u32 = 30;

fn bad(offset: usize, message: impl std::fmt::Display) -> Error {
    Error::Invalid(format!("byte {offset}: {message}"))
}

/// Parsed `<magic> <n> <J>` header line: dimension, resolution, and the
/// offset of the first payload byte.
struct Header {
    n: usize,
    resolution: u32,
    payload: usize,
}

fn parse_header(bytes: &[u8], magic: &str) -> Result<Header, Error> {
    let lead = magic.len() + 1;
    if bytes.len() < lead || &bytes[..magic.len()] != magic.as_bytes() || bytes[magic.len()] != b' '
    {
        return Err(bad(0, format!("expected the `{magic} ` signature")));
    }
    let line_end = bytes[lead..]
        .iter()
        .take(32)
        .position(|&b| b == b'\n')
        .map(|i| lead + i)
        .ok_or_else(|| bad(lead, "unterminated header line"))?;
    let line = std::str::from_utf8(&bytes[lead..line_end])
        .map_err(|e| bad(lead + e.valid_up_to(), "header is not ASCII"))?;
    let (n_text, j_text) = line
        .split_once(' ')
        .ok_or_else(|| bad(lead, "header needs `<n> <J>` after the signature"))?;
    let j_offset = lead + n_text.len() + 1;
    let n: usize = n_text
        .parse()
        .map_err(|_| bad(lead, format!("unreadable dimension {n_text:?}")))?;
    if n != 1 && n != 2 {
        return Err(bad(lead, format!("dimension must be 1 or 2, got {n}")));
    }
    let resolution: u32 = j_text
        .parse()
        .map_err(|_| bad(j_offset, format!("unreadable resolution {j_text:?}")))?;
    if resolution == 0 || resolution > MAX_RESOLUTION {
        return Err(bad(
            j_offset,
            format!("resolution must lie in 1..={MAX_RESOLUTION}, got {resolution}"),
        ));
    }
    Ok(Header {
        n,
        resolution,
        payload: line_end + 1,
    })
}

/// Serializes a grid into WGF1 bytes.
pub fn grid_to_bytes(f: &GridFunction) -> Vec<u8> {
    let mut out = format!("WGF1 {} {}\n", f.n(), f.resolution()).into_bytes();
    out.reserve(f.len() * 8);
    for value in f.values() {
        out.extend_from_slice(&value.to_le_bytes());
    }
    out
}

/// Parses WGF1 bytes back into a grid.
pub fn grid_from_bytes(bytes: &[u8]) -> Result<GridFunction, Error> {
    let header = parse_header(bytes, "WGF1")?;
    let cells = 1usize << (header.resolution as usize * header.n);
    let payload = &bytes[header.payload..];
    if payload.len() < cells * 8 {
        return Err(bad(
            bytes.len(),
            format!(
                "grid payload truncated: need {} bytes after the header, found {}",
                cells * 8,
                payload.len()
            ),
        ));
    }
    if payload.len() > cells * 8 {
        return Err(bad(header.payload + cells * 8, "trailing data after the grid payload"));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridFunction::from_values(header.n, header.resolution, values)
        .map_err(|e| bad(header.payload, e))
}

/// Serializes a coefficient field into WCF1 bytes (entries in index
/// order).
pub fn field_to_bytes(c: &CoefficientField) -> Vec<u8> {
    use std::fmt::Write;
    let mut out = format!("WCF1 {} {}\n", c.n(), c.levels());
    for (idx, value) in c.iter() {
        if c.n() == 1 {
            writeln!(out, "{},{},{},{value}", idx.eps, idx.j, idx.k[0]).unwrap();
        } else {
            writeln!(out, "{},{},{},{},{value}", idx.eps, idx.j, idx.k[0], idx.k[1]).unwrap();
        }
    }
    out.into_bytes()
}

/// Parses WCF1 bytes back into a coefficient field.
pub fn field_from_bytes(bytes: &[u8]) -> Result<CoefficientField, Error> {
    let header = parse_header(bytes, "WCF1")?;
    let mut field =
        CoefficientField::empty(header.n, header.resolution).map_err(|e| bad(5, e))?;
    let mut line_start = header.payload;
    while line_start < bytes.len() {
        let line_end = bytes[line_start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| line_start + i)
            .unwrap_or(bytes.len());
        let line = std::str::from_utf8(&bytes[line_start..line_end])
            .map_err(|e| bad(line_start + e.valid_up_to(), "entry line is not ASCII"))?;
        parse_entry_line(line, line_start, &mut field)?;
        line_start = line_end + 1;
    }
    Ok(field)
}

fn parse_entry_line(
    line: &str,
    line_start: usize,
    field: &mut CoefficientField,
) -> Result<(), Error> {
    let n = field.n();
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != 3 + n {
        return Err(bad(
            line_start,
            format!(
                "entry line needs {} comma-separated fields in dimension {n}, found {}",
                3 + n,
                parts.len()
            ),
        ));
    }
    // Offset of each comma-separated token within the file.
    let offset = |i: usize| line_start + parts[..i].iter().map(|p| p.len() + 1).sum::<usize>();
    let eps: u8 = parts[0]
        .parse()
        .map_err(|_| bad(offset(0), format!("unreadable type bits {:?}", parts[0])))?;
    let j: u32 = parts[1]
        .parse()
        .map_err(|_| bad(offset(1), format!("unreadable level {:?}", parts[1])))?;
    let mut k = [0u64; 2];
    for axis in 0..n {
        k[axis] = parts[2 + axis].parse().map_err(|_| {
            bad(offset(2 + axis), format!("unreadable position {:?}", parts[2 + axis]))
        })?;
    }
    let value: f64 = parts[2 + n]
        .parse()
        .map_err(|_| bad(offset(2 + n), format!("unreadable value {:?}", parts[2 + n])))?;
    let idx = WaveletIndex::new(eps, j, k);
    if field.contains(&idx) {
        return Err(bad(
            line_start,
            format!("duplicate entry for type {eps}, level {j}, position {:?}", &k[..n]),
        ));
    }
    field.set(idx, value).map_err(|e| bad(line_start, e))
}
