//! Snapshot dumps.
//!
//! Two formats: a tidy CSV with columns `t,x,y,value`, and a flat binary
//! file of little-endian `f64` values in row-major order (`y` slow, `x`
//! fast) accompanied by a JSON sidecar describing the grid.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::{Field2D, Grid2D};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub grid: Grid2D,
    pub time: f64,
    pub dtype: String,
    pub order: String,
    pub xs_first: f64,
    pub dx: f64,
    pub ys_first: f64,
    pub dy: f64,
}

/// Writes every snapshot to one CSV.
pub fn write_snapshots_csv(path: &Path, fields: &[Field2D]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "y", "value"])?;
    for f in fields {
        let g = &f.grid;
        for iy in 0..g.ny {
            let y = g.y(iy);
            for ix in 0..g.nx {
                w.serialize((f.time, g.x(ix), y, f.at(ix, iy)))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `stem.bin` and `stem.json`.
pub fn write_snapshot_binary(dir: &Path, stem: &str, field: &Field2D) -> Result<()> {
    let g = field.grid;
    let meta = SnapshotMeta {
        grid: g,
        time: field.time,
        dtype: "f64-le".into(),
        order: "row-major, y slow, x fast".into(),
        xs_first: g.x(0),
        dx: g.dx(),
        ys_first: g.y(0),
        dy: g.dy(),
    };
    let mut bytes = Vec::with_capacity(field.values.len() * 8);
    for v in &field.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(dir.join(format!("{stem}.bin")))?;
    f.write_all(&bytes)?;
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}

pub fn read_snapshot_binary(dir: &Path, stem: &str) -> Result<Field2D> {
    let meta: SnapshotMeta = serde_json::from_slice(&fs::read(dir.join(format!("{stem}.json")))?)?;
    let bytes = fs::read(dir.join(format!("{stem}.bin")))?;
    if bytes.len() != meta.grid.len() * 8 {
        return Err(Error::Config(format!(
            "{stem}.bin holds {} bytes, grid needs {}",
            bytes.len(),
            meta.grid.len() * 8
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(Field2D {
        grid: meta.grid,
        values,
        time: meta.time,
    })
}
