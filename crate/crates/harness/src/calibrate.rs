//! One-parameter noise calibration: find the dephasing time that makes a
//! simulated observable hit a measured value.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use w4_core::circuit::DeterministicInteraction;
use w4_core::linalg::{trace_distance, BlochAxis};
use w4_core::noise::NoiseModel;
use w4_core::protocol::{
    five_qubit_fidelity, initial_target_state, FreeEvolution, InitialTarget, Interaction,
    ProtocolConfig, RotationAxis, N_QUBITS,
};

use crate::error::{HarnessError, Result};

/// Search interval for Tφ in microseconds.
pub const TPHI_BRACKET_US: (f64, f64) = (0.1, 1000.0);
/// Required agreement between the achieved observable and the target.
pub const CALIBRATION_TOL: f64 = 0.01;
const MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalibrationTarget {
    /// Fidelity of the noisy five-qubit state before projection against the
    /// ideal one, for case 1a at φ = 3π/8.
    FiveQubitFidelity { value: f64 },
    /// Trace distance of |−⟩ from itself after a 1 µs idle.
    InitialMixedD { value: f64 },
}

impl CalibrationTarget {
    pub fn value(self) -> f64 {
        match self {
            CalibrationTarget::FiveQubitFidelity { value }
            | CalibrationTarget::InitialMixedD { value } => value,
        }
    }

    /// Simulated observable under `model`.
    pub fn observe(self, model: &NoiseModel) -> Result<f64> {
        match self {
            CalibrationTarget::FiveQubitFidelity { .. } => {
                let cfg = ProtocolConfig::new(
                    InitialTarget::Pure {
                        axis: BlochAxis::Minus,
                    },
                    FreeEvolution::rotation(RotationAxis::Z, 3.0 * PI / 8.0),
                    Interaction::Deterministic {
                        spec: DeterministicInteraction::XzIyx,
                    },
                )
                .with_noise(Some(model.clone()));
                Ok(five_qubit_fidelity(&cfg)?)
            }
            CalibrationTarget::InitialMixedD { .. } => {
                let cfg = ProtocolConfig::new(
                    InitialTarget::Mixed {
                        axis: BlochAxis::Minus,
                        idle_us: 1.0,
                        t1_us: None,
                        tphi_us: None,
                    },
                    FreeEvolution::Identity,
                    Interaction::Deterministic {
                        spec: DeterministicInteraction::XzIyx,
                    },
                )
                .with_noise(Some(model.clone()));
                let pure = BlochAxis::Minus.state().density();
                Ok(trace_distance(&initial_target_state(&cfg)?, &pure)?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub target: CalibrationTarget,
    pub model: NoiseModel,
    pub tphi_us: f64,
    pub achieved: f64,
    pub evaluations: usize,
}

/// Bisection on ln Tφ over [`TPHI_BRACKET_US`], holding T1 and gate
/// durations of `base` fixed. The observable is monotone in Tφ for both
/// targets. A target just outside the reachable range but within
/// [`CALIBRATION_TOL`] of an end point is met at that end point.
pub fn calibrate_noise(target: CalibrationTarget, base: &NoiseModel) -> Result<Calibration> {
    if base.n_qubits() != N_QUBITS {
        return Err(HarnessError::config(
            "noise",
            format!("model covers {} qubits, need {N_QUBITS}", base.n_qubits()),
        ));
    }
    let goal = target.value();
    let mut evaluations = 0;
    let mut eval = |tphi: f64| -> Result<f64> {
        evaluations += 1;
        target.observe(&base.clone().with_tphi(tphi))
    };
    let (mut lo, mut hi) = (TPHI_BRACKET_US.0.ln(), TPHI_BRACKET_US.1.ln());
    let (f_lo, f_hi) = (eval(lo.exp())?, eval(hi.exp())?);
    // Orient so that g increases with ln Tφ.
    let sign = if f_hi >= f_lo { 1.0 } else { -1.0 };
    let g = |f: f64| sign * (f - goal);
    let (g_lo, g_hi) = (g(f_lo), g(f_hi));

    let done = |tphi: f64, achieved: f64, evaluations: usize| Calibration {
        target,
        model: base.clone().with_tphi(tphi),
        tphi_us: tphi,
        achieved,
        evaluations,
    };
    if g_lo > 0.0 || g_hi < 0.0 {
        let (t, f) = if g_lo > 0.0 {
            (lo.exp(), f_lo)
        } else {
            (hi.exp(), f_hi)
        };
        if (f - goal).abs() <= CALIBRATION_TOL {
            return Ok(done(t, f, evaluations));
        }
        return Err(HarnessError::Unreachable {
            target: goal,
            lo: f_lo.min(f_hi),
            hi: f_lo.max(f_hi),
        });
    }

    let mut best = (lo.exp(), f_lo);
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let f = eval(mid.exp())?;
        best = (mid.exp(), f);
        if (f - goal).abs() < 1e-10 || hi - lo < 1e-12 {
            break;
        }
        if g(f) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.1 - goal).abs() > CALIBRATION_TOL {
        return Err(w4_core::Error::NotConverged {
            iterations: evaluations,
            psd_residual: 0.0,
            tp_residual: (best.1 - goal).abs(),
        }
        .into());
    }
    Ok(done(best.0, best.1, evaluations))
}
