use std::io::{Read, Write};

use super::GreenOperator;
use crate::error::{invalid, Error, Result};

pub const GREEN_MAGIC: &[u8; 8] = b"PGFGREEN";
pub const CSV_MAX_ROWS: usize = 200;

/// 16-byte header (magic, little-endian `m`) then `m²` row-major `f64`s.
pub fn write_green_binary(green: &GreenOperator, mut out: impl Write) -> Result<()> {
    out.write_all(GREEN_MAGIC)?;
    out.write_all(&(green.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(green.as_slice().len() * 8);
    for v in green.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Returns `(m, entries)`.
pub fn read_green_binary(mut input: impl Read) -> Result<(usize, Vec<f64>)> {
    let mut head = [0u8; 16];
    input.read_exact(&mut head)?;
    if &head[..8] != GREEN_MAGIC {
        return Err(Error::Parse("bad Green matrix magic".into()));
    }
    let m = u64::from_le_bytes(head[8..].try_into().expect("8 bytes")) as usize;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != m * m * 8 {
        return Err(Error::Parse(format!("expected {} entries, found {} bytes", m * m, bytes.len())));
    }
    let vals = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((m, vals))
}

/// One row per pair: site coordinates of `x`, then `y`, then `g`.
pub fn write_green_csv(green: &GreenOperator, mut out: impl Write) -> Result<()> {
    let m = green.len();
    if m > CSV_MAX_ROWS {
        return Err(invalid(format!("CSV export is limited to m ≤ {CSV_MAX_ROWS}, got {m}")));
    }
    let d = green.operator().geom().dim();
    let names: Vec<String> = ["x", "y"]
        .iter()
        .flat_map(|p| (1..=d).map(move |k| format!("{p}{k}")))
        .collect();
    writeln!(out, "{},g", names.join(","))?;
    let sites = green.sites();
    for i in 0..m {
        for j in 0..m {
            let coords: Vec<String> = sites[i].0[..d]
                .iter()
                .chain(&sites[j].0[..d])
                .map(|c| c.to_string())
                .collect();
            writeln!(out, "{},{:?}", coords.join(","), green.entry(i, j))?;
        }
    }
    Ok(())
}
