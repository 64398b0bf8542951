//! Plain CSV tables behind the figures: Bloch trajectories, per-unitary
//! bars, cumulative averages and density-matrix city plots.

use std::path::Path;

use w4_core::linalg::{CMatrix, DensityMatrix};
use w4_core::numfmt::canonical_float;
use w4_core::protocol::initial_target_state;

use crate::config::{ExperimentConfig, RunMode};
use crate::error::{HarnessError, Result};
use crate::results::ResultRow;
use crate::runner::execute;

pub const BLOCH_FILE: &str = "bloch_trajectory.csv";
pub const BAR_FILE: &str = "bar_per_unitary.csv";
pub const CUMULATIVE_FILE: &str = "cumulative_average.csv";
pub const CITY_FILE: &str = "density_matrix_city.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    BlochTrajectory,
    BarPerUnitary,
    CumulativeAverage,
    DensityMatrixCity,
}

/// Bloch vectors of one run: before the free evolution, after one step of
/// it, and after the reset (absent when the reset failed).
#[derive(Clone, Debug, PartialEq)]
pub struct BlochTrajectory {
    pub index: usize,
    pub phi_over_pi: Option<f64>,
    pub prep: [f64; 3],
    pub evolved: [f64; 3],
    pub reset: Option<[f64; 3]>,
}

fn write_table(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn f(x: f64) -> String {
    canonical_float(x)
}

fn opt(x: Option<f64>) -> String {
    x.map(canonical_float).unwrap_or_default()
}

fn bloch(rho: &DensityMatrix) -> [f64; 3] {
    rho.bloch_vector().expect("single-qubit state")
}

/// Re-runs the experiment's runs to collect the target's Bloch vectors.
pub fn bloch_trajectories(cfg: &ExperimentConfig) -> Result<Vec<BlochTrajectory>> {
    cfg.runs()?
        .iter()
        .map(|spec| {
            let prep = initial_target_state(&spec.protocol)?;
            let evolved = prep.conjugate(&spec.protocol.free_evolution.matrix()?)?;
            let (_, run) = execute(cfg.case_id, spec)?;
            Ok(BlochTrajectory {
                index: spec.index,
                phi_over_pi: spec.phi_over_pi,
                prep: bloch(&prep),
                evolved: bloch(&evolved),
                reset: run.map(|r| bloch(&r.rho_reset)),
            })
        })
        .collect()
}

pub fn write_bloch_trajectory(points: &[BlochTrajectory], path: &Path) -> Result<()> {
    let mut rows = Vec::new();
    for p in points {
        let stages = [
            ("prep", Some(p.prep)),
            ("evolved", Some(p.evolved)),
            ("reset", p.reset),
        ];
        for (stage, v) in stages {
            let v = v.map_or([None; 3], |v| v.map(Some));
            rows.push(vec![
                p.index.to_string(),
                opt(p.phi_over_pi),
                stage.to_string(),
                opt(v[0]),
                opt(v[1]),
                opt(v[2]),
            ]);
        }
    }
    write_table(
        path,
        &["index", "phi_over_pi", "stage", "x", "y", "z"],
        rows,
    )
}

pub fn write_bar_per_unitary(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_table(
        path,
        &["index", "p_success", "trace_distance"],
        rows.iter()
            .map(|r| vec![r.index.to_string(), f(r.p_success), opt(r.trace_distance)]),
    )
}

/// Running mean of the success probability over the first `i + 1` runs.
pub fn cumulative_average(rows: &[ResultRow]) -> Vec<f64> {
    let mut sum = 0.0;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            sum += r.p_success;
            sum / (i + 1) as f64
        })
        .collect()
}

pub fn write_cumulative_average(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_table(
        path,
        &["index", "p_success", "cumulative_p_success"],
        rows.iter()
            .zip(cumulative_average(rows))
            .map(|(r, c)| vec![r.index.to_string(), f(r.p_success), f(c)]),
    )
}

/// `(row, col, re, im)` for every element of `m`.
pub fn write_city(m: &CMatrix, path: &Path) -> Result<()> {
    let mut rows = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            rows.push(vec![r.to_string(), c.to_string(), f(z.re), f(z.im)]);
        }
    }
    write_table(path, &["row", "col", "re", "im"], rows)
}

/// Writes the row-based plot files that apply to the config's run mode.
pub fn emit_for_case(
    cfg: &ExperimentConfig,
    rows: &[ResultRow],
    dir: &Path,
) -> Result<Vec<PlotKind>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();
    match cfg.mode()? {
        RunMode::Random(_) => {
            write_bar_per_unitary(rows, &dir.join(BAR_FILE))?;
            write_cumulative_average(rows, &dir.join(CUMULATIVE_FILE))?;
            written.extend([PlotKind::BarPerUnitary, PlotKind::CumulativeAverage]);
        }
        RunMode::Sweep(_) | RunMode::Single => {
            write_bloch_trajectory(&bloch_trajectories(cfg)?, &dir.join(BLOCH_FILE))?;
            written.push(PlotKind::BlochTrajectory);
        }
    }
    Ok(written)
}
