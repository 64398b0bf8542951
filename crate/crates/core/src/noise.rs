//! Relaxation and dephasing as single-qubit operation elements, and a
//! per-qubit noise model applied layer by layer.
//!
//! The damping and dephasing strengths are the ratio of a duration to T1 and
//! Tφ respectively (clamped to 1). [`DecayLaw::Exponential`] swaps the ratio
//! for `1 − exp(−t/T)`.

use serde::{Deserialize, Serialize};

use crate::circuit::{DurationClass, ScheduledCircuit};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, DensityMatrix, Mat2, ONE, ZERO};

const COMPLETENESS_TOL: f64 = 1e-12;

/// Operation elements {E_k} of a single-qubit channel.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    ops: Vec<Mat2>,
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (col, v) in row.iter_mut().enumerate() {
            *v = a[r][0] * b[0][col] + a[r][1] * b[1][col];
        }
    }
    out
}

fn real_diag(a: f64, b: f64) -> Mat2 {
    [[c(a, 0.0), ZERO], [ZERO, c(b, 0.0)]]
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange { name, value });
    }
    Ok(())
}

impl KrausChannel {
    pub fn new(ops: Vec<Mat2>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::IncompleteChannel(1.0));
        }
        let ch = Self { ops };
        let dev = ch.completeness_deviation();
        if dev > COMPLETENESS_TOL {
            return Err(Error::IncompleteChannel(dev));
        }
        Ok(ch)
    }

    pub fn identity() -> Self {
        Self {
            ops: vec![real_diag(1.0, 1.0)],
        }
    }

    pub fn ops(&self) -> &[Mat2] {
        &self.ops
    }

    /// max |Σ E_k†E_k − I|
    pub fn completeness_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..2 {
            for col in 0..2 {
                let s: crate::linalg::C64 = self
                    .ops
                    .iter()
                    .map(|e| e[0][r].conj() * e[0][col] + e[1][r].conj() * e[1][col])
                    .sum();
                let want = if r == col { ONE } else { ZERO };
                dev = dev.max((s - want).norm());
            }
        }
        dev
    }

    /// Superoperator acting on the row-major vectorization of a 2×2 block:
    /// `S[(i,j),(k,l)] = Σ_e E[i][k]·conj(E[j][l])`.
    fn superoperator(&self) -> [[crate::linalg::C64; 4]; 4] {
        let mut s = [[ZERO; 4]; 4];
        for e in &self.ops {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            s[2 * i + j][2 * k + l] += e[i][k] * e[j][l].conj();
                        }
                    }
                }
            }
        }
        s
    }

    fn is_identity(&self) -> bool {
        self.ops.len() == 1
            && (self.ops[0][0][0] - ONE).norm() < 1e-15
            && (self.ops[0][1][1] - ONE).norm() < 1e-15
            && self.ops[0][0][1].norm() < 1e-15
            && self.ops[0][1][0].norm() < 1e-15
    }

    /// Apply this channel to a single-qubit density matrix.
    pub fn apply_1q(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        apply_channel(self, rho, 0)
    }
}

/// E₁ = diag(1, √(1−γ)), E₂ = √γ·|0⟩⟨1|.
pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    check_unit("gamma", gamma)?;
    let e1 = real_diag(1.0, (1.0 - gamma).sqrt());
    let e2 = [[ZERO, c(gamma.sqrt(), 0.0)], [ZERO, ZERO]];
    KrausChannel::new(vec![e1, e2])
}

/// E₃ = diag(1, √(1−γφ)), E₄ = diag(0, √γφ).
pub fn dephasing(gamma_phi: f64) -> Result<KrausChannel> {
    check_unit("gamma_phi", gamma_phi)?;
    let e3 = real_diag(1.0, (1.0 - gamma_phi).sqrt());
    let e4 = real_diag(0.0, gamma_phi.sqrt());
    KrausChannel::new(vec![e3, e4])
}

/// Products E₁E₃, E₁E₄, E₂E₃, E₂E₄ of the damping and dephasing elements.
pub fn combined_channel(gamma: f64, gamma_phi: f64) -> Result<KrausChannel> {
    let damp = amplitude_damping(gamma)?;
    let deph = dephasing(gamma_phi)?;
    let mut ops = Vec::with_capacity(4);
    for a in damp.ops() {
        for b in deph.ops() {
            ops.push(mat_mul(a, b));
        }
    }
    KrausChannel::new(ops)
}

/// In-place Σ_k E_k ρ E_k† on qubit `q` of an `n`-qubit matrix.
pub(crate) fn apply_channel_in_place(ch: &KrausChannel, m: &mut CMatrix, n: usize, q: usize) {
    if ch.is_identity() {
        return;
    }
    let s = ch.superoperator();
    let stride = 1usize << (n - 1 - q);
    let d = m.nrows();
    for r0 in (0..d).filter(|r| r & stride == 0) {
        let r1 = r0 + stride;
        for c0 in (0..d).filter(|col| col & stride == 0) {
            let c1 = c0 + stride;
            let v = [m[(r0, c0)], m[(r0, c1)], m[(r1, c0)], m[(r1, c1)]];
            let out: [crate::linalg::C64; 4] = std::array::from_fn(|i| {
                s[i][0] * v[0] + s[i][1] * v[1] + s[i][2] * v[2] + s[i][3] * v[3]
            });
            m[(r0, c0)] = out[0];
            m[(r0, c1)] = out[1];
            m[(r1, c0)] = out[2];
            m[(r1, c1)] = out[3];
        }
    }
}

pub fn apply_channel(
    ch: &KrausChannel,
    rho: &DensityMatrix,
    qubit: usize,
) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if qubit >= n {
        return Err(Error::QubitOutOfRange { qubit, n_qubits: n });
    }
    let dev = ch.completeness_deviation();
    if dev > COMPLETENESS_TOL {
        return Err(Error::IncompleteChannel(dev));
    }
    let mut m = rho.matrix().clone();
    apply_channel_in_place(ch, &mut m, n, qubit);
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

// ---------------------------------------------------------------------------
// Noise model

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayLaw {
    /// γ = t/T, clamped to 1.
    #[default]
    Linear,
    /// γ = 1 − exp(−t/T).
    Exponential,
}

impl DecayLaw {
    pub fn strength(self, duration_us: f64, time_us: f64) -> f64 {
        if time_us.is_infinite() || duration_us == 0.0 {
            return 0.0;
        }
        match self {
            DecayLaw::Linear => (duration_us / time_us).min(1.0),
            DecayLaw::Exponential => -(-duration_us / time_us).exp_m1(),
        }
    }
}

/// Coherence times are in microseconds, gate durations in nanoseconds.
/// An infinite time disables that process and serializes as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(with = "inf_as_null")]
    pub t1_us: Vec<f64>,
    #[serde(with = "inf_as_null")]
    pub tphi_us: Vec<f64>,
    pub duration_single_ns: f64,
    pub duration_double_ns: f64,
    #[serde(default = "default_true")]
    pub idle_decoherence: bool,
    #[serde(default)]
    pub decay_law: DecayLaw,
}

fn default_true() -> bool {
    true
}

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.is_finite().then_some(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|x| x.unwrap_or(f64::INFINITY))
            .collect())
    }
}

pub const DEFAULT_T1_US: f64 = 30.0;
pub const DEFAULT_TPHI_US: f64 = 5.0;
pub const DEFAULT_SINGLE_NS: f64 = 30.0;
pub const DEFAULT_DOUBLE_NS: f64 = 45.0;

impl NoiseModel {
    pub fn uniform(n_qubits: usize, t1_us: f64, tphi_us: f64) -> Self {
        Self {
            t1_us: vec![t1_us; n_qubits],
            tphi_us: vec![tphi_us; n_qubits],
            duration_single_ns: DEFAULT_SINGLE_NS,
            duration_double_ns: DEFAULT_DOUBLE_NS,
            idle_decoherence: true,
            decay_law: DecayLaw::Linear,
        }
    }

    pub fn default_for(n_qubits: usize) -> Self {
        Self::uniform(n_qubits, DEFAULT_T1_US, DEFAULT_TPHI_US)
    }

    pub fn noiseless(n_qubits: usize) -> Self {
        Self::uniform(n_qubits, f64::INFINITY, f64::INFINITY)
    }

    pub fn n_qubits(&self) -> usize {
        self.t1_us.len()
    }

    pub fn is_noiseless(&self) -> bool {
        self.t1_us
            .iter()
            .chain(&self.tphi_us)
            .all(|t| t.is_infinite())
    }

    pub fn with_tphi(mut self, tphi_us: f64) -> Self {
        self.tphi_us.iter_mut().for_each(|t| *t = tphi_us);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidNoiseModel(msg));
        if self.t1_us.len() != self.tphi_us.len() {
            return bad(format!(
                "{} T1 values but {} Tphi values",
                self.t1_us.len(),
                self.tphi_us.len()
            ));
        }
        if let Some(t) = self
            .t1_us
            .iter()
            .chain(&self.tphi_us)
            .find(|t| !(**t > 0.0))
        {
            return bad(format!("coherence time {t} must be positive"));
        }
        for d in [self.duration_single_ns, self.duration_double_ns] {
            if !(d.is_finite() && d >= 0.0) {
                return bad(format!("gate duration {d} must be finite and non-negative"));
            }
        }
        Ok(())
    }

    fn check_qubits(&self, n: usize) -> Result<()> {
        self.validate()?;
        if self.n_qubits() != n {
            return Err(Error::InvalidNoiseModel(format!(
                "model covers {} qubits, circuit has {n}",
                self.n_qubits()
            )));
        }
        Ok(())
    }

    pub fn duration_ns(&self, class: DurationClass) -> f64 {
        match class {
            DurationClass::Single => self.duration_single_ns,
            DurationClass::Double => self.duration_double_ns,
        }
    }

    /// (γ, γφ) for `qubit` over `duration_us`.
    pub fn strengths(&self, qubit: usize, duration_us: f64) -> (f64, f64) {
        (
            self.decay_law.strength(duration_us, self.t1_us[qubit]),
            self.decay_law.strength(duration_us, self.tphi_us[qubit]),
        )
    }

    pub fn channel(&self, qubit: usize, duration_us: f64) -> Result<KrausChannel> {
        let (g, gp) = self.strengths(qubit, duration_us);
        combined_channel(g, gp)
    }
}

/// Combined channel for an idle period of `duration_us` on `qubit`.
pub fn idle_channel(duration_us: f64, model: &NoiseModel, qubit: usize) -> Result<KrausChannel> {
    if !(duration_us >= 0.0) {
        return Err(Error::OutOfRange {
            name: "idle duration",
            value: duration_us,
        });
    }
    if qubit >= model.n_qubits() {
        return Err(Error::QubitOutOfRange {
            qubit,
            n_qubits: model.n_qubits(),
        });
    }
    model.channel(qubit, duration_us)
}

fn apply_layer_in_place(
    sched: &ScheduledCircuit,
    layer: usize,
    m: &mut CMatrix,
    model: &NoiseModel,
) -> Result<()> {
    let n = sched.n_qubits();
    let mut touched = vec![false; n];
    for op in sched.layer_ops(layer) {
        op.conjugate_density(m, n);
        for &q in op.qubits() {
            touched[q] = true;
        }
    }
    let duration_us = model.duration_ns(sched.layers()[layer].class) * 1e-3;
    for (q, &active) in touched.iter().enumerate() {
        if active || model.idle_decoherence {
            apply_channel_in_place(&model.channel(q, duration_us)?, m, n, q);
        }
    }
    Ok(())
}

/// Gate unitaries of one scheduled layer followed by decoherence for the
/// layer's duration on active qubits (and spectators when enabled).
pub fn apply_noisy_layer(
    sched: &ScheduledCircuit,
    layer: usize,
    rho: &DensityMatrix,
    model: &NoiseModel,
) -> Result<DensityMatrix> {
    let n = sched.n_qubits();
    model.check_qubits(n)?;
    if rho.n_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            got: rho.dim(),
        });
    }
    let mut m = rho.matrix().clone();
    apply_layer_in_place(sched, layer, &mut m, model)?;
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// Runs every layer through [`apply_noisy_layer`]. After each layer,
/// `after_layer(index, ρ)` may modify the state in place.
pub fn simulate_density_with<F>(
    sched: &ScheduledCircuit,
    rho: &DensityMatrix,
    model: &NoiseModel,
    mut after_layer: F,
) -> Result<DensityMatrix>
where
    F: FnMut(usize, &mut DensityMatrix) -> Result<()>,
{
    let n = sched.n_qubits();
    model.check_qubits(n)?;
    if rho.n_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            got: rho.dim(),
        });
    }
    let mut state = rho.clone();
    for layer in 0..sched.layers().len() {
        apply_layer_in_place(sched, layer, state.matrix_mut(), model)?;
        after_layer(layer, &mut state)?;
    }
    Ok(state)
}

pub fn simulate_density(
    sched: &ScheduledCircuit,
    rho: &DensityMatrix,
    model: &NoiseModel,
) -> Result<DensityMatrix> {
    simulate_density_with(sched, rho, model, |_, _| Ok(()))
}
