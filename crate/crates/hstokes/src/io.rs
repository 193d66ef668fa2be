//! On-disk formats: little-endian f64 arrays with JSON sidecars, and the CSV
//! summary emitted by the CLI.
//!
//! Array layout is row-major `(time, x_n, tangential axes, component)`;
//! boundary fields drop the `x_n` axis and initial fields drop the time axis.
//! Round trips are bit-exact for finite values.

use crate::domain::{BoundaryField, Field, GridSpec, SpaceTimeField};
use crate::error::{HsError, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Sidecar {
    pub field: String,
    pub kind: FieldKind,
    pub shape: Vec<usize>,
    pub components: usize,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    SpaceTime,
    Boundary,
    Initial,
}

fn data_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.f64"))
}

fn sidecar_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.json"))
}

fn shape_of(kind: FieldKind, grid: &GridSpec, components: usize) -> Vec<usize> {
    let mut shape = Vec::new();
    match kind {
        FieldKind::SpaceTime => {
            shape.push(grid.n_time);
            shape.push(grid.n_normal);
        }
        FieldKind::Boundary => shape.push(grid.n_time),
        FieldKind::Initial => shape.push(grid.n_normal),
    }
    for _ in 0..grid.n_tangential_axes() {
        shape.push(grid.n_tangential);
    }
    shape.push(components);
    shape
}

fn write_raw(path: &Path, chunks: impl Iterator<Item = f64>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in chunks {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_raw(path: &Path, expected_len: usize) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() != expected_len * 8 {
        return Err(HsError::ShapeMismatch(format!(
            "{} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            expected_len * 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn write_sidecar(dir: &Path, name: &str, sc: &Sidecar) -> Result<()> {
    let json = serde_json::to_string_pretty(sc)?;
    fs::write(sidecar_path(dir, name), json)?;
    Ok(())
}

fn read_sidecar(dir: &Path, name: &str) -> Result<Sidecar> {
    let json = fs::read_to_string(sidecar_path(dir, name))?;
    Ok(serde_json::from_str(&json)?)
}

pub fn write_space_time(dir: &Path, name: &str, f: &SpaceTimeField) -> Result<()> {
    fs::create_dir_all(dir)?;
    let sc = Sidecar {
        field: name.to_string(),
        kind: FieldKind::SpaceTime,
        shape: shape_of(FieldKind::SpaceTime, &f.grid, f.components),
        components: f.components,
        grid: f.grid,
    };
    write_sidecar(dir, name, &sc)?;
    write_raw(
        &data_path(dir, name),
        f.slices.iter().flat_map(|s| s.values.iter().copied()),
    )
}

pub fn read_space_time(dir: &Path, name: &str) -> Result<SpaceTimeField> {
    let sc = read_sidecar(dir, name)?;
    if sc.kind != FieldKind::SpaceTime {
        return Err(HsError::ShapeMismatch(format!(
            "{name} is not a space-time field"
        )));
    }
    let grid = sc.grid;
    let per_slice = grid.points_per_slice() * sc.components;
    let raw = read_raw(&data_path(dir, name), per_slice * grid.n_time)?;
    let slices = raw
        .chunks_exact(per_slice)
        .map(|c| Field {
            grid,
            components: sc.components,
            values: c.to_vec(),
        })
        .collect();
    SpaceTimeField::from_slices(&grid, slices)
}

pub fn write_boundary(dir: &Path, name: &str, f: &BoundaryField) -> Result<()> {
    fs::create_dir_all(dir)?;
    let sc = Sidecar {
        field: name.to_string(),
        kind: FieldKind::Boundary,
        shape: shape_of(FieldKind::Boundary, &f.grid, f.components),
        components: f.components,
        grid: f.grid,
    };
    write_sidecar(dir, name, &sc)?;
    write_raw(
        &data_path(dir, name),
        f.slices.iter().flat_map(|s| s.iter().copied()),
    )
}

pub fn read_boundary(dir: &Path, name: &str) -> Result<BoundaryField> {
    let sc = read_sidecar(dir, name)?;
    if sc.kind != FieldKind::Boundary {
        return Err(HsError::ShapeMismatch(format!("{name} is not a boundary field")));
    }
    let grid = sc.grid;
    let per_slice = grid.tangential_points() * sc.components;
    let raw = read_raw(&data_path(dir, name), per_slice * grid.n_time)?;
    Ok(BoundaryField {
        grid,
        components: sc.components,
        slices: raw.chunks_exact(per_slice).map(|c| c.to_vec()).collect(),
    })
}

pub fn write_initial(dir: &Path, name: &str, f: &Field) -> Result<()> {
    fs::create_dir_all(dir)?;
    let sc = Sidecar {
        field: name.to_string(),
        kind: FieldKind::Initial,
        shape: shape_of(FieldKind::Initial, &f.grid, f.components),
        components: f.components,
        grid: f.grid,
    };
    write_sidecar(dir, name, &sc)?;
    write_raw(&data_path(dir, name), f.values.iter().copied())
}

pub fn read_initial(dir: &Path, name: &str) -> Result<Field> {
    let sc = read_sidecar(dir, name)?;
    if sc.kind != FieldKind::Initial {
        return Err(HsError::ShapeMismatch(format!("{name} is not an initial field")));
    }
    let grid = sc.grid;
    let values = read_raw(
        &data_path(dir, name),
        grid.points_per_slice() * sc.components,
    )?;
    Ok(Field {
        grid,
        components: sc.components,
        values,
    })
}

/// One row of the human-facing summary: an invariant, its measured value,
/// and the threshold it is judged against.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// "<=" or ">=".
    pub comparator: &'static str,
    pub pass: bool,
}

impl SummaryRow {
    pub fn le(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        SummaryRow {
            name: name.into(),
            value,
            threshold,
            comparator: "<=",
            pass: value <= threshold,
        }
    }

    pub fn ge(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        SummaryRow {
            name: name.into(),
            value,
            threshold,
            comparator: ">=",
            pass: value >= threshold,
        }
    }
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "name,value,threshold,comparator,pass")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.17e},{:.17e},{},{}",
            r.name, r.value, r.threshold, r.comparator, r.pass
        )?;
    }
    w.flush()?;
    Ok(())
}
