//! CSV time series, binary snapshots, checkpoints and run manifests.
//!
//! Snapshot layout: one text header line
//! `KSLB1 <periodic|interval> dim=<d> points=<n,..> lower=<x,..> extents=<e,..> [bc=<kind>]`
//! followed by the values as little-endian f64, row-major.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolve::{Outcome, Trajectory};
use crate::field::{BoundaryKind, Field, Grid};

pub const SNAPSHOT_MAGIC: &str = "KSLB1";
pub const CHECKPOINT_MAGIC: &str = "KSCK1";

fn fmt_list<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Writes the monitor series as CSV with a `t` column first.
pub fn write_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    let names: Vec<&str> = traj.series.iter().map(|(n, _)| n.as_str()).collect();
    writeln!(w, "t,{}", names.join(",")).map_err(io)?;
    for (i, t) in traj.times.iter().enumerate() {
        let row: Vec<String> = traj.series.iter().map(|(_, v)| v[i].to_string()).collect();
        writeln!(w, "{t},{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes equal-length columns as CSV under the given header.
pub fn write_table(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.len());
    if header.len() != columns.len() || columns.iter().any(|c| c.len() != rows) {
        return Err(Error::param("columns", "header and column lengths disagree"));
    }
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Parses a CSV written by `write_csv` into `(header, rows)`.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let r = open(path)?;
    let mut lines = r.lines();
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .map_err(|e| Error::io(path, e))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let row = line
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|e| bad(format!("row {}: {e}", k + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn grid_header(grid: &Grid) -> String {
    let kind = if grid.is_periodic() { "periodic" } else { "interval" };
    let mut h = format!(
        "{SNAPSHOT_MAGIC} {kind} dim={} points={} lower={} extents={}",
        grid.dim(),
        fmt_list(grid.points()),
        fmt_list(&grid.lower()),
        fmt_list(&grid.extents())
    );
    if let Some(bc) = grid.bc() {
        h.push_str(&format!(" bc={}", bc.name()));
    }
    h
}

fn parse_grid_header(line: &str, path: &Path) -> Result<Arc<Grid>> {
    let bad = |message: &str| Error::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    let mut parts = line.split_whitespace();
    if parts.next() != Some(SNAPSHOT_MAGIC) {
        return Err(bad("missing KSLB1 header"));
    }
    let kind = parts.next().ok_or_else(|| bad("missing grid kind"))?;
    let mut fields = std::collections::BTreeMap::new();
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| bad("malformed header entry"))?;
        fields.insert(k, v);
    }
    let list = |k: &str| -> Result<Vec<f64>> {
        fields
            .get(k)
            .ok_or_else(|| bad(&format!("missing {k}")))?
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|_| bad(&format!("bad number in {k}"))))
            .collect()
    };
    let points: Vec<usize> = list("points")?.into_iter().map(|x| x as usize).collect();
    let lower = list("lower")?;
    let extents = list("extents")?;
    match kind {
        "periodic" => Grid::periodic(lower, extents, points),
        "interval" => {
            let bc = match fields.get("bc").copied() {
                Some("navier") => BoundaryKind::Navier,
                Some("dirichlet") => BoundaryKind::Dirichlet,
                _ => return Err(bad("interval snapshot needs bc")),
            };
            Grid::interval(extents[0] / 2.0, points[0], bc)
        }
        _ => Err(bad("unknown grid kind")),
    }
}

fn write_field<W: Write>(w: &mut W, field: &Field) -> std::io::Result<()> {
    writeln!(w, "{}", grid_header(field.grid()))?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_line<R: BufRead>(r: &mut R, path: &Path) -> Result<String> {
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    Ok(line.trim_end().to_string())
}

fn read_field<R: BufRead>(r: &mut R, path: &Path) -> Result<Field> {
    let header = read_line(r, path)?;
    let grid = parse_grid_header(&header, path)?;
    let mut buf = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Field::new(grid, values)
}

pub fn write_snapshot(path: &Path, field: &Field) -> Result<()> {
    let mut w = create(path)?;
    write_field(&mut w, field).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Field> {
    read_field(&mut open(path)?, path)
}

/// Everything needed to continue a run bit-identically.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    pub dt: f64,
    pub seed: Option<u64>,
    pub initial_energy: f64,
    pub components: Vec<Field>,
}

impl Checkpoint {
    pub fn from_trajectory(traj: &Trajectory) -> Checkpoint {
        Checkpoint {
            step: traj.final_step,
            dt: traj.dt,
            seed: traj.seed,
            initial_energy: traj.initial_energy,
            components: traj.final_state.clone(),
        }
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        let go = |w: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(w, "{CHECKPOINT_MAGIC}")?;
            writeln!(
                w,
                "step={} dt_bits={:016x} energy_bits={:016x} seed={seed} components={}",
                self.step,
                self.dt.to_bits(),
                self.initial_energy.to_bits(),
                self.components.len()
            )?;
            for c in &self.components {
                write_field(w, c)?;
            }
            w.flush()
        };
        go(&mut w).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let mut r = open(path)?;
        let bad = |message: &str| Error::Format {
            path: path.to_path_buf(),
            message: message.to_string(),
        };
        if read_line(&mut r, path)? != CHECKPOINT_MAGIC {
            return Err(bad("missing KSCK1 header"));
        }
        let meta = read_line(&mut r, path)?;
        let kv: std::collections::BTreeMap<&str, &str> =
            meta.split_whitespace().filter_map(|p| p.split_once('=')).collect();
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(&format!("missing {k}")));
        let bits = |k: &str| -> Result<f64> {
            u64::from_str_radix(get(k)?, 16)
                .map(f64::from_bits)
                .map_err(|_| bad(&format!("bad {k}")))
        };
        let step = get("step")?.parse().map_err(|_| bad("bad step"))?;
        let seed = match get("seed")? {
            "none" => None,
            s => Some(s.parse().map_err(|_| bad("bad seed"))?),
        };
        let n: usize = get("components")?.parse().map_err(|_| bad("bad component count"))?;
        let components = (0..n).map(|_| read_field(&mut r, path)).collect::<Result<Vec<_>>>()?;
        Ok(Checkpoint {
            step,
            dt: bits("dt_bits")?,
            seed,
            initial_energy: bits("energy_bits")?,
            components,
        })
    }
}

/// Provenance record written next to the outputs of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the resolved configuration text.
    pub config_digest: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub workers: usize,
    pub fft_threads: usize,
    pub outcome: Option<Outcome>,
    pub outputs: Vec<String>,
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::periodic(vec![-1.0, 0.5], vec![2.0, 3.0], vec![8, 16]).unwrap();
        let f = Field::from_fn(g, |x| (x[0] * 1.3).sin() / 3.0 + x[1]).unwrap();
        let p = dir.path().join("s.kslb");
        write_snapshot(&p, &f).unwrap();
        assert_eq!(read_snapshot(&p).unwrap(), f);
    }

    #[test]
    fn interval_snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::interval(4.0, 33, BoundaryKind::Dirichlet).unwrap();
        let f = Field::from_fn(g, |x| x[0] / 7.0).unwrap();
        let p = dir.path().join("s.kslb");
        write_snapshot(&p, &f).unwrap();
        assert_eq!(read_snapshot(&p).unwrap(), f);
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(digest("").len(), 64);
        assert_ne!(digest("a"), digest("b"));
    }
}
