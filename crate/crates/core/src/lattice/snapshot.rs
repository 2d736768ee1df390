use std::io::{BufRead, BufReader, Read, Write};

use super::{sample_environment, Environment, EnvironmentLaw, Site};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotMode {
    /// Header plus one line per open edge.
    WithEdges,
    /// Header only; the loader regenerates weights from the seed.
    HeaderOnly,
}

/// Writes `d L law-descriptor seed` followed, in `WithEdges` mode, by
/// `x1 y1 [z1] x2 y2 [z2] weight` for every open edge.
pub fn write_snapshot(env: &Environment, mode: SnapshotMode, mut out: impl Write) -> Result<()> {
    let law = env.law();
    writeln!(out, "{} {} {} {}", env.dim(), env.half_width(), law, law.seed)?;
    if mode == SnapshotMode::WithEdges {
        let d = env.dim();
        for (x, y, w) in env.open_edges() {
            let mut line = String::new();
            for s in [x, y] {
                for c in &s.0[..d] {
                    line.push_str(&c.to_string());
                    line.push(' ');
                }
            }
            // Rust's shortest round-trip formatting keeps weights bit-identical.
            writeln!(out, "{line}{w:?}")?;
        }
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("snapshot line {line}: {msg}"))
}

pub fn read_snapshot(input: impl Read) -> Result<Environment> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(parse_err(1, "expected `d L law-descriptor seed`"));
    }
    let dim: usize = fields[0].parse().map_err(|e| parse_err(1, e))?;
    let half: i32 = fields[1].parse().map_err(|e| parse_err(1, e))?;
    let seed: u64 = fields[3].parse().map_err(|e| parse_err(1, e))?;
    let law: EnvironmentLaw = fields[2].parse::<EnvironmentLaw>()?.with_seed(seed);
    let mut edges = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 2 * dim + 1 {
            return Err(parse_err(i + 2, "wrong field count"));
        }
        let coord = |k: usize| -> Result<i32> { tok[k].parse().map_err(|e| parse_err(i + 2, e)) };
        let mut x = [0; 3];
        let mut y = [0; 3];
        for k in 0..dim {
            x[k] = coord(k)?;
            y[k] = coord(dim + k)?;
        }
        let w: f64 = tok[2 * dim].parse().map_err(|e| parse_err(i + 2, e))?;
        edges.push((Site(x), Site(y), w));
    }
    if edges.is_empty() {
        sample_environment(&law, dim, half)
    } else {
        Environment::from_edges(dim, half, law, edges)
    }
}
