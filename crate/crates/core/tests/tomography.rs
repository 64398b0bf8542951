//! Tomography stack checks against independent reference computations.

use rand::Rng;
use w4_core::circuit::DeterministicInteraction;
use w4_core::linalg::{c, fidelity, matrix_sqrt_psd, BlochAxis, CMatrix, Operator};
use w4_core::protocol::{
    build_protocol_circuit, simulate_final_state, FreeEvolution, InitialTarget, Interaction,
    ProtocolConfig, RotationAxis,
};
use w4_core::seed::rng_from_seed;
use w4_core::tomography::{
    cp_project, cptp_project, qst_linear_inversion, sample_measurements, tp_map, ChiMatrix, Shots,
};

fn pauli_mats() -> [CMatrix; 4] {
    Operator::paulis().map(|p| p.into_matrix())
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Clip negative eigenvalues, then restore trace preservation by composing the
/// channel with M^{-1/2}, M = Σ χ_mn P_n P_m.
fn clip_then_rescale(chi: &CMatrix) -> CMatrix {
    let eig = hermitize(chi).symmetric_eigen();
    let clipped = eig.eigenvalues.map(|v| c(v.max(0.0), 0.0));
    let psd = &eig.eigenvectors * CMatrix::from_diagonal(&clipped) * eig.eigenvectors.adjoint();
    let m = tp_map(&psd);
    let inv_sqrt = matrix_sqrt_psd(&Operator::new(hermitize(&m)).unwrap())
        .unwrap()
        .into_matrix()
        .try_inverse()
        .unwrap();
    let p = pauli_mats();
    // P_m M^{-1/2} = Σ_a B[m][a] P_a
    let b = CMatrix::from_fn(4, 4, |m, a| {
        (&p[a] * &p[m] * &inv_sqrt).trace() / c(2.0, 0.0)
    });
    hermitize(&(b.transpose() * psd * b.conjugate()))
}

fn depolarizing(p: f64) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c(1.0 - 0.75 * p, 0.0),
        c(0.25 * p, 0.0),
        c(0.25 * p, 0.0),
        c(0.25 * p, 0.0),
    ]))
}

#[test]
fn baseline_is_trace_preserving() {
    let mut rng = rng_from_seed(3);
    let noise = CMatrix::from_fn(4, 4, |_, _| {
        c(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2))
    });
    let naive = clip_then_rescale(&hermitize(&(depolarizing(0.2) + noise)));
    assert!((tp_map(&naive) - CMatrix::identity(2, 2))
        .iter()
        .all(|v| v.norm() < 1e-10));
}

#[test]
fn dykstra_is_no_farther_than_clip_and_rescale() {
    let mut rng = rng_from_seed(31);
    for _ in 0..20 {
        let noise = CMatrix::from_fn(4, 4, |_, _| {
            c(rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15))
        });
        let raw = hermitize(&(depolarizing(rng.random_range(0.0..0.5)) + noise));
        let projected = cptp_project(&ChiMatrix::new(raw.clone()).unwrap()).unwrap();
        let naive = clip_then_rescale(&raw);
        let d_dykstra = (projected.matrix() - &raw).norm();
        let d_naive = (naive - &raw).norm();
        assert!(d_dykstra <= d_naive + 1e-8, "{d_dykstra} > {d_naive}");
    }
}

#[test]
fn sampled_five_qubit_tomography_is_faithful() {
    let cfg = ProtocolConfig::new(
        InitialTarget::Pure {
            axis: BlochAxis::Minus,
        },
        FreeEvolution::rotation(RotationAxis::Z, 3.0 * std::f64::consts::PI / 8.0),
        Interaction::Deterministic {
            spec: DeterministicInteraction::XzIyx,
        },
    );
    let pc = build_protocol_circuit(&cfg).unwrap();
    let rho = simulate_final_state(&cfg, &pc).unwrap();
    for seed in [1, 2, 3] {
        let recs = sample_measurements(&rho, Shots::Finite(10_000), seed).unwrap();
        let est = cp_project(&qst_linear_inversion(&recs).unwrap()).unwrap();
        let f = fidelity(&est, &rho).unwrap();
        assert!(f >= 0.95, "seed {seed}: fidelity {f}");
    }
}
