use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::qpt::{cptp_project, process_fidelity, qpt_chi};
use super::qst::{
    born_distributions, cp_project, qst_linear_inversion, sample_from_distributions, Shots,
};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, DensityMatrix};
use crate::protocol::post_select;
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_sets: usize,
    pub shots: Shots,
    pub seed: u64,
    /// CP-project the reconstructed five-qubit state before the success
    /// projection. When false, the raw reconstruction is projected and the
    /// single-qubit reset state is made physical instead.
    #[serde(default = "default_true")]
    pub cp_before_projection: bool,
}

fn default_true() -> bool {
    true
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_sets: 200,
            shots: Shots::Finite(10_000),
            seed: 0,
            cp_before_projection: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub n_sets: usize,
    pub shots_per_setting: Option<u64>,
    pub fidelity_samples: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
    /// 1.96 standard deviations of the samples.
    pub error_bar: f64,
}

impl BootstrapReport {
    fn from_samples(n_sets: usize, shots: Shots, samples: Vec<f64>) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std_dev = var.sqrt();
        Self {
            n_sets,
            shots_per_setting: match shots {
                Shots::Exact => None,
                Shots::Finite(s) => Some(s),
            },
            fidelity_samples: samples,
            mean,
            std_dev,
            error_bar: 1.96 * std_dev,
        }
    }
}

/// Resampled process fidelity of the reset channel.
///
/// `final_states[j]` is the five-qubit output for preparation `inputs[j]`;
/// `projector` is the lifted success projector. Each replica samples full
/// tomography of every final state, reconstructs, post-selects, traces out
/// the probes and fits a CPTP χ.
pub fn bootstrap_qpt(
    final_states: &[DensityMatrix],
    inputs: &[DensityMatrix],
    projector: &CMatrix,
    cfg: &BootstrapConfig,
) -> Result<BootstrapReport> {
    if final_states.len() != inputs.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            got: final_states.len(),
        });
    }
    if cfg.n_sets == 0 {
        return Err(Error::OutOfRange {
            name: "n_sets",
            value: 0.0,
        });
    }
    let dists: Vec<Vec<Vec<f64>>> = final_states.iter().map(born_distributions).collect();
    let samples = (0..cfg.n_sets)
        .into_par_iter()
        .map(|replica| {
            let replica_seed = derive_seed(cfg.seed, &[replica as u64]);
            let resets = final_states
                .iter()
                .zip(&dists)
                .enumerate()
                .map(|(j, (rho, d))| {
                    let records = sample_from_distributions(
                        rho.n_qubits(),
                        d,
                        cfg.shots,
                        derive_seed(replica_seed, &[j as u64]),
                    );
                    let raw = qst_linear_inversion(&records)?;
                    if cfg.cp_before_projection {
                        Ok(post_select(&cp_project(&raw)?, projector)?.rho_reset)
                    } else {
                        let reset = post_select(&raw, projector)?.rho_reset;
                        cp_project(&reset)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let chi = cptp_project(&qpt_chi(inputs, &resets)?)?;
            Ok(process_fidelity(&chi))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(BootstrapReport::from_samples(
        cfg.n_sets, cfg.shots, samples,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::DeterministicInteraction;
    use crate::linalg::trace_distance;
    use crate::protocol::{
        build_protocol_circuit, simulate_final_state, FreeEvolution, InitialTarget, Interaction,
        ProtocolConfig, SuccessSubspace,
    };
    use crate::tomography::QPT_INPUTS;

    fn states() -> (Vec<DensityMatrix>, Vec<DensityMatrix>, CMatrix) {
        let mut finals = Vec::new();
        let mut inputs = Vec::new();
        let mut proj = None;
        for axis in QPT_INPUTS {
            let cfg = ProtocolConfig::new(
                InitialTarget::Pure { axis },
                FreeEvolution::Identity,
                Interaction::Deterministic {
                    spec: DeterministicInteraction::XzIyx,
                },
            );
            let pc = build_protocol_circuit(&cfg).unwrap();
            finals.push(simulate_final_state(&cfg, &pc).unwrap());
            inputs.push(axis.state().density());
            proj = Some(SuccessSubspace::new(cfg.projector_mode).lift(&pc.final_positions()));
        }
        (finals, inputs, proj.unwrap())
    }

    #[test]
    fn exact_mode_has_zero_spread() {
        let (finals, inputs, p) = states();
        for (f, i) in finals.iter().zip(&inputs) {
            assert!(trace_distance(&post_select(f, &p).unwrap().rho_reset, i).unwrap() < 1e-9);
        }
        let cfg = BootstrapConfig {
            n_sets: 3,
            shots: Shots::Exact,
            seed: 1,
            cp_before_projection: true,
        };
        let rep = bootstrap_qpt(&finals, &inputs, &p, &cfg).unwrap();
        assert_eq!(rep.error_bar, 0.0);
        assert!((rep.mean - 1.0).abs() < 1e-8);
    }

    #[test]
    fn finite_shots_spread_and_determinism() {
        let (finals, inputs, p) = states();
        let cfg = BootstrapConfig {
            n_sets: 4,
            shots: Shots::Finite(1000),
            seed: 2,
            cp_before_projection: true,
        };
        let a = bootstrap_qpt(&finals, &inputs, &p, &cfg).unwrap();
        let b = bootstrap_qpt(&finals, &inputs, &p, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.error_bar > 0.0);
        assert!((a.error_bar - 1.96 * a.std_dev).abs() < 1e-15);
        let alt = BootstrapConfig {
            cp_before_projection: false,
            ..cfg
        };
        assert!(bootstrap_qpt(&finals, &inputs, &p, &alt).unwrap().mean > 0.5);
    }
}
