//! File formats. Every CSV starts with a fixed header; floats are written in
//! shortest round-trip form, so reading a file back reproduces the values
//! bit for bit.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context};
use curvdisk_core::diagnostics::{RefinementTable, SweepEntry};
use curvdisk_core::{DeficitReport, DiskMesh};
use serde::Serialize;

pub const NODES_HEADER: [&str; 4] = ["node_id", "x", "y", "is_boundary"];
pub const TRIANGLES_HEADER: [&str; 4] = ["t_id", "n0", "n1", "n2"];
pub const SOLUTION_HEADER: [&str; 4] = ["node_id", "x", "y", "u"];
pub const DEFICIT_HEADER: [&str; 6] = ["family", "param", "left", "right", "deficit", "constant_used"];
pub const SWEEP_HEADER: [&str; 5] = ["epsilon", "converged", "rho", "gb_residual", "weak_residual"];
pub const REFINE_HEADER: [&str; 12] = [
    "n_radial",
    "n_angular",
    "converged",
    "rho",
    "error",
    "field_error",
    "order",
    "rho_diff_finest",
    "gauss_bonnet_residual",
    "weak_residual",
    "iterations",
    "failure",
];
pub const VERIFY_HEADER: [&str; 5] = ["case", "quantity", "value", "tolerance", "pass"];
pub const HISTORY_HEADER: [&str; 2] = ["iteration", "energy"];

/// Where tabulated values live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// One value per mesh node, header `node_id,value`.
    Disk,
    /// One value per boundary node in angular order, header
    /// `boundary_index,value`.
    Boundary,
}

impl Domain {
    pub fn header(&self) -> [&'static str; 2] {
        match self {
            Domain::Disk => ["node_id", "value"],
            Domain::Boundary => ["boundary_index", "value"],
        }
    }
}

fn create(path: &Path) -> anyhow::Result<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    // headers are written explicitly, also for struct rows
    csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))
}

fn write_rows<const N: usize, R: Serialize>(
    path: &Path,
    header: [&str; N],
    rows: impl IntoIterator<Item = R>,
) -> anyhow::Result<()> {
    let mut w = create(path)?;
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

/// `nodes.csv` and `triangles.csv` in `dir`.
pub fn write_mesh(dir: &Path, mesh: &DiskMesh) -> anyhow::Result<()> {
    write_rows(
        &dir.join("nodes.csv"),
        NODES_HEADER,
        mesh.nodes().iter().enumerate().map(|(i, p)| (i, p[0], p[1], u8::from(mesh.is_boundary(i)))),
    )?;
    write_rows(
        &dir.join("triangles.csv"),
        TRIANGLES_HEADER,
        mesh.triangles().iter().enumerate().map(|(i, t)| (i, t[0], t[1], t[2])),
    )
}

pub fn write_solution(path: &Path, mesh: &DiskMesh, u: &[f64]) -> anyhow::Result<()> {
    write_rows(
        path,
        SOLUTION_HEADER,
        mesh.nodes().iter().zip(u).enumerate().map(|(i, (p, v))| (i, p[0], p[1], *v)),
    )
}

pub fn write_history(path: &Path, energies: &[f64]) -> anyhow::Result<()> {
    write_rows(path, HISTORY_HEADER, energies.iter().enumerate())
}

pub fn write_deficits(path: &Path, reports: &[DeficitReport]) -> anyhow::Result<()> {
    write_rows(
        path,
        DEFICIT_HEADER,
        reports
            .iter()
            .map(|r| (&r.family, r.param, r.left, r.right, r.deficit, r.constant_used)),
    )
}

pub fn write_sweep(path: &Path, entries: &[SweepEntry]) -> anyhow::Result<()> {
    write_rows(
        path,
        SWEEP_HEADER,
        entries
            .iter()
            .map(|e| (e.epsilon, e.converged, e.rho, e.gb_residual, e.weak_residual)),
    )
}

/// One row per level; `order` is the pairwise order against the previous
/// level.
pub fn write_refinement(path: &Path, table: &RefinementTable) -> anyhow::Result<()> {
    let orders = std::iter::once(None).chain(table.pairwise_orders.iter().copied());
    write_rows(
        path,
        REFINE_HEADER,
        table.rows.iter().zip(orders).map(|(r, order)| {
            (
                r.n_radial,
                r.n_angular,
                r.converged,
                r.rho,
                r.error,
                r.field_error,
                order,
                r.rho_diff_finest,
                r.gauss_bonnet_residual,
                r.weak_residual,
                r.iterations,
                r.failure.as_deref().unwrap_or(""),
            )
        }),
    )
}

/// A single checked quantity of `verify`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub case: String,
    pub quantity: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(case: &str, quantity: &str, value: f64, tolerance: f64) -> Self {
        Check {
            case: case.into(),
            quantity: quantity.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

pub fn write_checks(path: &Path, checks: &[Check]) -> anyhow::Result<()> {
    write_rows(path, VERIFY_HEADER, checks)
}

pub fn write_tabulated(path: &Path, domain: Domain, values: &[f64]) -> anyhow::Result<()> {
    write_rows(path, domain.header(), values.iter().enumerate())
}

/// Reads `len` tabulated values. Rows may come in any order but every index
/// in `0..len` must appear exactly once.
pub fn read_tabulated(path: &Path, domain: Domain, len: usize) -> anyhow::Result<Vec<f64>> {
    let what = || format!("tabulated curvature {}", path.display());
    let mut r = csv::Reader::from_path(path).with_context(what)?;
    let header = r.headers().with_context(what)?.clone();
    let expected = domain.header();
    ensure!(
        header.iter().eq(expected.iter().copied()),
        "{}: header must be `{}`, found `{}`",
        what(),
        expected.join(","),
        header.iter().collect::<Vec<_>>().join(",")
    );
    let mut values = vec![None; len];
    for (line, row) in r.deserialize::<(usize, f64)>().enumerate() {
        let (i, v) = row.with_context(|| format!("{}: row {}", what(), line + 1))?;
        ensure!(v.is_finite(), "{}: value at index {i} is not finite", what());
        match values.get_mut(i) {
            None => bail!("{}: index {i} out of range (mesh has {len})", what()),
            Some(Some(_)) => bail!("{}: index {i} appears twice", what()),
            Some(slot) => *slot = Some(v),
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| anyhow::anyhow!("{}: index {i} is missing", what())))
        .collect()
}
