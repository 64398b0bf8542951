use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use w4_core::linalg::DensityMatrix;
use w4_core::numfmt::canonical_float;
use w4_core::protocol::{
    build_protocol_circuit, post_select, run_protocol, simulate_final_state, InitialTarget,
    ProtocolConfig, RunResult, SuccessSubspace,
};
use w4_core::seed::{derive_seed, label_hash};
use w4_core::tomography::{
    bootstrap_qpt, cptp_project, process_fidelity, qpt_chi, BootstrapConfig, BootstrapReport,
    ChiMatrix, Shots, QPT_INPUTS,
};
use w4_core::Error as CoreError;

use crate::config::{CaseId, ExperimentConfig, RunMode, RunSpec};
use crate::error::{HarnessError, Result};
use crate::plots;
use crate::results::{ResultRow, ResultsWriter};

/// Runs per flushed batch; bounds the work lost to an interruption.
const BATCH: usize = 64;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_DIR: &str = "plotdata";

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::config("workers", e.to_string()))?;
    Ok(pool.install(f))
}

/// Rounds through the canonical text form so JSON output is as stable as
/// the CSV.
fn canon(x: f64) -> f64 {
    canonical_float(x).parse().unwrap_or(x)
}

/// One protocol run. A vanished post-selection weight is recorded as a
/// row with empty reset metrics rather than an error.
pub fn execute(case_id: CaseId, spec: &RunSpec) -> Result<(ResultRow, Option<RunResult>)> {
    let mut row = ResultRow {
        case_id: case_id.as_str().to_string(),
        index: spec.index,
        phi_over_pi: spec.phi_over_pi,
        p_success: 0.0,
        trace_distance: None,
        fidelity: None,
        depth_single: 0,
        depth_double: 0,
        seed: spec.seed,
    };
    match run_protocol(&spec.protocol) {
        Ok(r) => {
            row.p_success = r.p_success;
            row.trace_distance = Some(r.trace_distance_to_initial);
            row.fidelity = Some(r.fidelity_to_initial);
            row.depth_single = r.depth_report.depth_single;
            row.depth_double = r.depth_report.depth_double;
            Ok((row, Some(r)))
        }
        Err(CoreError::ResetNeverSucceeds { p_success }) => {
            let depth = build_protocol_circuit(&spec.protocol)?.depth();
            row.p_success = p_success;
            row.depth_single = depth.depth_single;
            row.depth_double = depth.depth_double;
            Ok((row, None))
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub n_sets: usize,
    pub shots_per_setting: Option<u64>,
    pub mean: f64,
    pub std_dev: f64,
    pub error_bar: f64,
}

impl From<&BootstrapReport> for BootstrapSummary {
    fn from(r: &BootstrapReport) -> Self {
        Self {
            n_sets: r.n_sets,
            shots_per_setting: r.shots_per_setting,
            mean: canon(r.mean),
            std_dev: canon(r.std_dev),
            error_bar: canon(r.error_bar),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSummary {
    pub process_fidelity: f64,
    /// χ as `[re, im]` pairs, row-major in the I, X, Y, Z basis.
    pub chi: Vec<Vec<[f64; 2]>>,
    pub bootstrap: Option<BootstrapSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub n_runs: usize,
    pub n_failed: usize,
    pub mean_p_success: f64,
    /// Means over runs whose reset succeeded.
    pub mean_trace_distance: Option<f64>,
    pub mean_fidelity: Option<f64>,
    pub depth_single: usize,
    pub depth_double: usize,
    pub seeds: Vec<u64>,
    pub process: Option<ProcessSummary>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl Summary {
    pub fn from_rows(config: &ExperimentConfig, rows: &[ResultRow]) -> Self {
        let first = rows.first();
        Self {
            config: config.clone(),
            n_runs: rows.len(),
            n_failed: rows.iter().filter(|r| !r.succeeded()).count(),
            mean_p_success: canon(mean(rows.iter().map(|r| r.p_success)).unwrap_or(0.0)),
            mean_trace_distance: mean(rows.iter().filter_map(|r| r.trace_distance)).map(canon),
            mean_fidelity: mean(rows.iter().filter_map(|r| r.fidelity)).map(canon),
            depth_single: first.map_or(0, |r| r.depth_single),
            depth_double: first.map_or(0, |r| r.depth_double),
            seeds: rows.iter().map(|r| r.seed).collect(),
            process: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CaseReport {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
    pub output_dir: PathBuf,
}

impl CaseReport {
    pub fn results_path(&self) -> PathBuf {
        self.output_dir.join(RESULTS_FILE)
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir.join(PLOT_DIR))
        .map_err(|e| HarnessError::config("output_dir", format!("{}: {e}", dir.display())))?;
    let probe = dir.join(".write-check");
    std::fs::write(&probe, b"")
        .and_then(|_| std::fs::remove_file(&probe))
        .map_err(|e| {
            HarnessError::config("output_dir", format!("{} not writable: {e}", dir.display()))
        })
}

/// Computes every run of `cfg` without touching the file system.
pub fn compute_rows(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.runs()?
        .par_iter()
        .map(|s| execute(cfg.case_id, s).map(|(row, _)| row))
        .collect()
}

/// Executes an experiment, resuming from an existing `results.csv` in the
/// output directory, then writes the summary and plot data.
pub fn run_case(cfg: &ExperimentConfig) -> Result<CaseReport> {
    let runs = cfg.runs()?;
    let dir = cfg.output_dir.clone();
    prepare_dir(&dir)?;
    let results_path = dir.join(RESULTS_FILE);
    let (mut writer, mut rows) = ResultsWriter::resume(&results_path)?;
    check_resumable(&results_path, &rows, &runs, cfg.case_id)?;

    for batch in runs[rows.len()..].chunks(BATCH) {
        let done = batch
            .par_iter()
            .map(|s| execute(cfg.case_id, s).map(|(row, _)| row))
            .collect::<Result<Vec<_>>>()?;
        writer.append(&done)?;
        rows.extend(done);
    }

    let mut summary = Summary::from_rows(cfg, &rows);
    let plot_dir = dir.join(PLOT_DIR);
    if cfg.case_id == CaseId::Case2Qpt {
        let (chi, boot) = process_tomography(cfg)?;
        plots::write_city(chi.matrix(), &plot_dir.join(plots::CITY_FILE))?;
        summary.process = Some(ProcessSummary {
            process_fidelity: canon(process_fidelity(&chi)),
            chi: (0..4)
                .map(|m| {
                    (0..4)
                        .map(|n| {
                            let z = chi.element(m, n);
                            [canon(z.re), canon(z.im)]
                        })
                        .collect()
                })
                .collect(),
            bootstrap: boot.as_ref().map(BootstrapSummary::from),
        });
    }
    write_summary(&dir.join(SUMMARY_FILE), &summary)?;
    plots::emit_for_case(cfg, &rows, &plot_dir)?;
    Ok(CaseReport {
        rows,
        summary,
        output_dir: dir,
    })
}

fn check_resumable(path: &Path, rows: &[ResultRow], runs: &[RunSpec], case: CaseId) -> Result<()> {
    let mismatch = |message: String| HarnessError::ResultsFile {
        path: path.to_path_buf(),
        message: format!("{message}; remove the file to start over"),
    };
    if rows.len() > runs.len() {
        return Err(mismatch(format!(
            "holds {} rows but the config has {} runs",
            rows.len(),
            runs.len()
        )));
    }
    for (row, run) in rows.iter().zip(runs) {
        if row.case_id != case.as_str() || row.index != run.index || row.seed != run.seed {
            return Err(mismatch(format!(
                "row {} was produced by a different configuration",
                run.index
            )));
        }
    }
    Ok(())
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Final five-qubit states, ideal inputs and reset states for the four
/// process-tomography preparations.
pub struct QptData {
    pub final_states: Vec<DensityMatrix>,
    pub inputs: Vec<DensityMatrix>,
    pub resets: Vec<DensityMatrix>,
    pub projector: w4_core::linalg::CMatrix,
}

pub fn qpt_data(protocol: &ProtocolConfig) -> Result<QptData> {
    let mut data = QptData {
        final_states: Vec::new(),
        inputs: Vec::new(),
        resets: Vec::new(),
        projector: w4_core::linalg::CMatrix::zeros(0, 0),
    };
    for axis in QPT_INPUTS {
        let p = ProtocolConfig {
            initial_target: InitialTarget::Pure { axis },
            ..protocol.clone()
        };
        let pc = build_protocol_circuit(&p)?;
        let rho = simulate_final_state(&p, &pc)?;
        data.projector = SuccessSubspace::new(p.projector_mode).lift(&pc.final_positions());
        data.resets
            .push(post_select(&rho, &data.projector)?.rho_reset);
        data.final_states.push(rho);
        data.inputs.push(axis.state().density());
    }
    Ok(data)
}

/// χ of the reset channel from exact reset states, plus bootstrap error
/// bars when tomography settings are configured.
pub fn process_tomography(cfg: &ExperimentConfig) -> Result<(ChiMatrix, Option<BootstrapReport>)> {
    let data = qpt_data(&cfg.protocol)?;
    let chi = cptp_project(&qpt_chi(&data.inputs, &data.resets)?)?;
    let boot = match &cfg.tomography {
        Some(t) => Some(bootstrap_qpt(
            &data.final_states,
            &data.inputs,
            &data.projector,
            &BootstrapConfig {
                n_sets: t.n_bootstrap,
                shots: Shots::Finite(t.shots),
                seed: bootstrap_seed(cfg),
                cp_before_projection: true,
            },
        )?),
        None => None,
    };
    Ok((chi, boot))
}

pub fn bootstrap_seed(cfg: &ExperimentConfig) -> u64 {
    derive_seed(
        cfg.master_seed,
        &[label_hash(cfg.case_id.as_str()), label_hash("bootstrap")],
    )
}

/// Whether the config's mode produces per-unitary campaign data.
pub fn is_campaign(cfg: &ExperimentConfig) -> bool {
    matches!(cfg.mode(), Ok(RunMode::Random(_)))
}
