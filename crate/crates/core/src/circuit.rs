//! Gate-level circuit IR with layer scheduling and the composite gates the
//! protocol needs: CZ-based SWAP, singlet preparation and target-probe
//! interactions.
//!
//! Rotation convention: `RZ(θ) = diag(e^{-iθ/2}, e^{iθ/2})`, and likewise
//! `RX(θ) = exp(-iθX/2)`, `RY(θ) = exp(-iθY/2)`.
//!
//! Two-qubit gates list their qubits as `(a, b)` with `a` the high bit of the
//! 4×4 matrix index. Interaction compilers take `(target, probe)` so the left
//! tensor factor of an interaction unitary acts on the target.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    apply_1q, apply_2q, c, conjugate_1q, conjugate_2q, CMatrix, Mat2, Mat4, Operator, StateVector,
    C64, I, ONE, ZERO,
};
use crate::numfmt::canonical_float;
use crate::seed::rng_from_seed;

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    Rx(f64),
    Ry(f64),
    Rz(f64),
    X,
    Y,
    Z,
    H,
    Phase(f64),
    Cz,
    Custom1(Operator),
    Custom2(Operator),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationClass {
    Single,
    Double,
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Cz | GateKind::Custom2(_) => 2,
            _ => 1,
        }
    }

    pub fn duration_class(&self) -> DurationClass {
        if self.arity() == 2 {
            DurationClass::Double
        } else {
            DurationClass::Single
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Rx(_) => "RX",
            GateKind::Ry(_) => "RY",
            GateKind::Rz(_) => "RZ",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::Phase(_) => "PHASE",
            GateKind::Cz => "CZ",
            GateKind::Custom1(_) => "U1",
            GateKind::Custom2(_) => "U2",
        }
    }

    fn angle(&self) -> Option<f64> {
        match *self {
            GateKind::Rx(t) | GateKind::Ry(t) | GateKind::Rz(t) | GateKind::Phase(t) => Some(t),
            _ => None,
        }
    }
}

pub fn rx(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
}

pub fn ry(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

pub fn rz(theta: f64) -> Mat2 {
    [
        [C64::from_polar(1.0, -theta / 2.0), ZERO],
        [ZERO, C64::from_polar(1.0, theta / 2.0)],
    ]
}

fn cz_block() -> Mat4 {
    let mut g = [[ZERO; 4]; 4];
    for (i, row) in g.iter_mut().enumerate() {
        row[i] = if i == 3 { -ONE } else { ONE };
    }
    g
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    kind: GateKind,
    qubits: Vec<usize>,
}

impl GateOp {
    /// Checks arity, distinct adjacent qubits for two-qubit gates and unitarity
    /// of custom matrices.
    pub fn new(kind: GateKind, qubits: &[usize]) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::InvalidQubits(format!(
                "{} expects {} qubit(s), got {}",
                kind.name(),
                kind.arity(),
                qubits.len()
            )));
        }
        if let [a, b] = *qubits {
            if a.abs_diff(b) != 1 {
                return Err(Error::InvalidQubits(format!(
                    "two-qubit gate on non-adjacent qubits {a},{b}"
                )));
            }
        }
        match &kind {
            GateKind::Custom1(op) | GateKind::Custom2(op) => {
                let want = 1 << kind.arity();
                if op.dim() != want {
                    return Err(Error::DimensionMismatch {
                        expected: want,
                        got: op.dim(),
                    });
                }
                let dev = op.unitarity_deviation();
                if dev > 1e-10 {
                    return Err(Error::NotUnitary(dev));
                }
            }
            _ => {}
        }
        Ok(Self {
            kind,
            qubits: qubits.to_vec(),
        })
    }

    fn one(kind: GateKind, q: usize) -> Self {
        Self {
            kind,
            qubits: vec![q],
        }
    }

    pub fn rx(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Rx(theta), q)
    }
    pub fn ry(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Ry(theta), q)
    }
    pub fn rz(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Rz(theta), q)
    }
    pub fn x(q: usize) -> Self {
        Self::one(GateKind::X, q)
    }
    pub fn y(q: usize) -> Self {
        Self::one(GateKind::Y, q)
    }
    pub fn z(q: usize) -> Self {
        Self::one(GateKind::Z, q)
    }
    pub fn h(q: usize) -> Self {
        Self::one(GateKind::H, q)
    }
    pub fn cz(a: usize, b: usize) -> Result<Self> {
        Self::new(GateKind::Cz, &[a, b])
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn duration_class(&self) -> DurationClass {
        self.kind.duration_class()
    }

    fn mat2(&self) -> Mat2 {
        let h = FRAC_1_SQRT_2;
        match &self.kind {
            GateKind::Rx(t) => rx(*t),
            GateKind::Ry(t) => ry(*t),
            GateKind::Rz(t) => rz(*t),
            GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
            GateKind::Y => [[ZERO, -I], [I, ZERO]],
            GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
            GateKind::H => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
            GateKind::Phase(t) => [[ONE, ZERO], [ZERO, C64::from_polar(1.0, *t)]],
            GateKind::Custom1(op) => op.to_mat2().expect("validated 2x2"),
            GateKind::Cz | GateKind::Custom2(_) => unreachable!("two-qubit gate"),
        }
    }

    fn mat4(&self) -> Mat4 {
        match &self.kind {
            GateKind::Cz => cz_block(),
            GateKind::Custom2(op) => op.to_mat4().expect("validated 4x4"),
            _ => unreachable!("single-qubit gate"),
        }
    }

    pub(crate) fn apply_to_amplitudes(&self, amps: &mut [C64], n: usize) {
        match self.qubits[..] {
            [q] => apply_1q(amps, n, q, &self.mat2()),
            [a, b] => apply_2q(amps, n, a, b, &self.mat4()),
            _ => unreachable!(),
        }
    }

    pub(crate) fn conjugate_density(&self, m: &mut CMatrix, n: usize) {
        match self.qubits[..] {
            [q] => conjugate_1q(m, n, q, &self.mat2()),
            [a, b] => conjugate_2q(m, n, a, b, &self.mat4()),
            _ => unreachable!(),
        }
    }

    fn to_line(&self) -> String {
        let qs = self
            .qubits
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let mut line = format!("{} {}", self.kind.name(), qs);
        if let Some(t) = self.kind.angle() {
            let _ = write!(line, " {}", canonical_float(t));
        }
        if let GateKind::Custom1(op) | GateKind::Custom2(op) = &self.kind {
            let m = op.matrix();
            for r in 0..m.nrows() {
                for col in 0..m.ncols() {
                    let z = m[(r, col)];
                    let _ = write!(line, " {} {}", canonical_float(z.re), canonical_float(z.im));
                }
            }
        }
        line
    }
}

/// Matrix of a gate: 2×2 for single-qubit kinds, 4×4 for two-qubit kinds.
pub fn gate_matrix(g: &GateOp) -> Operator {
    let op = match g.kind.arity() {
        1 => Operator::from_mat2(&g.mat2()),
        _ => Operator::from_mat4(&g.mat4()),
    };
    Operator::unitary(op.into_matrix()).expect("gate matrices are unitary")
}

// ---------------------------------------------------------------------------
// Circuit

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<GateOp>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthReport {
    pub depth_single: usize,
    pub depth_double: usize,
    pub count_single: usize,
    pub count_double: usize,
}

impl DepthReport {
    pub fn depth(&self) -> usize {
        self.depth_single + self.depth_double
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulePolicy {
    /// Each two-qubit layer holds a single gate while every other qubit idles.
    pub exclusive_double: bool,
}

impl Default for SchedulePolicy {
    fn default() -> Self {
        Self {
            exclusive_double: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub class: DurationClass,
    /// Indices into the circuit's op list.
    pub ops: Vec<usize>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            ops: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: GateOp) -> Result<()> {
        if let Some(&q) = op.qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            });
        }
        self.ops.push(op);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = GateOp>>(&mut self, ops: I) -> Result<()> {
        ops.into_iter().try_for_each(|op| self.push(op))
    }

    fn check_state(&self, psi: &StateVector) -> Result<()> {
        if psi.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n_qubits,
                got: psi.dim(),
            });
        }
        Ok(())
    }

    /// Applies every op in list order.
    pub fn apply_noiseless(&self, psi: &StateVector) -> Result<StateVector> {
        self.check_state(psi)?;
        let mut out = psi.clone();
        for op in &self.ops {
            op.apply_to_amplitudes(out.amps_mut(), self.n_qubits);
        }
        Ok(out)
    }

    /// Dense unitary of the whole circuit (columns are images of basis states).
    pub fn unitary(&self) -> Operator {
        let d = 1usize << self.n_qubits;
        let mut m = DMatrix::from_element(d, d, ZERO);
        for col in 0..d {
            let out = self
                .apply_noiseless(&StateVector::basis(self.n_qubits, col))
                .expect("dimension matches");
            m.set_column(col, out.as_dvector());
        }
        Operator::unitary(m).expect("product of unitaries")
    }

    pub fn count_by_class(&self) -> (usize, usize) {
        let double = self
            .ops
            .iter()
            .filter(|op| op.duration_class() == DurationClass::Double)
            .count();
        (self.ops.len() - double, double)
    }

    pub fn schedule(&self) -> ScheduledCircuit {
        self.schedule_with(SchedulePolicy::default())
    }

    /// ASAP greedy layering. Layers are homogeneous in duration class, so a
    /// two-qubit gate never shares a layer with a single-qubit gate.
    pub fn schedule_with(&self, policy: SchedulePolicy) -> ScheduledCircuit {
        let mut layers: Vec<Layer> = Vec::new();
        let mut last: Vec<Option<usize>> = vec![None; self.n_qubits];
        for (idx, op) in self.ops.iter().enumerate() {
            let earliest = op
                .qubits
                .iter()
                .filter_map(|&q| last[q].map(|l| l + 1))
                .max()
                .unwrap_or(0);
            let class = op.duration_class();
            let shareable = class == DurationClass::Single || !policy.exclusive_double;
            let slot = (earliest..layers.len()).find(|&l| {
                layers[l].class == class
                    && (shareable || layers[l].ops.is_empty())
                    && layers[l]
                        .ops
                        .iter()
                        .all(|&o| self.ops[o].qubits.iter().all(|q| !op.qubits.contains(q)))
            });
            let l = slot.unwrap_or_else(|| {
                layers.push(Layer {
                    class,
                    ops: Vec::new(),
                });
                layers.len() - 1
            });
            layers[l].ops.push(idx);
            for &q in &op.qubits {
                last[q] = Some(l);
            }
        }
        let (count_single, count_double) = self.count_by_class();
        let depth_double = layers
            .iter()
            .filter(|l| l.class == DurationClass::Double)
            .count();
        let report = DepthReport {
            depth_single: layers.len() - depth_double,
            depth_double,
            count_single,
            count_double,
        };
        ScheduledCircuit {
            circuit: self.clone(),
            layers,
            report,
        }
    }

    /// Fuses runs of RZ gates acting back to back on the same qubit.
    pub fn merge_adjacent_rz(&self) -> Circuit {
        let mut out: Vec<GateOp> = Vec::with_capacity(self.ops.len());
        let mut last: Vec<Option<usize>> = vec![None; self.n_qubits];
        for op in &self.ops {
            if let (GateKind::Rz(t), [q]) = (&op.kind, &op.qubits[..]) {
                if let Some(prev) = last[*q] {
                    if let GateKind::Rz(p) = out[prev].kind {
                        out[prev].kind = GateKind::Rz((p + t) % (2.0 * TAU));
                        continue;
                    }
                }
            }
            for &q in &op.qubits {
                last[q] = Some(out.len());
            }
            out.push(op.clone());
        }
        Circuit {
            n_qubits: self.n_qubits,
            ops: out,
        }
    }

    /// One gate per line: `GATE q[,q] [angle]`, preceded by a `QUBITS n` header.
    /// Custom gates append their matrix as row-major `re im` pairs.
    pub fn to_text(&self) -> String {
        let mut s = format!("QUBITS {}\n", self.n_qubits);
        for op in &self.ops {
            s.push_str(&op.to_line());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut circuit: Option<Circuit> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let mut parts = line.split_whitespace();
            let name = parts.next().unwrap_or_default();
            if name == "QUBITS" {
                let n = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| perr("bad QUBITS header".into()))?;
                circuit = Some(Circuit::new(n));
                continue;
            }
            let circ = circuit
                .as_mut()
                .ok_or_else(|| perr("missing QUBITS header".into()))?;
            let qubits: Vec<usize> = parts
                .next()
                .ok_or_else(|| perr("missing qubit list".into()))?
                .split(',')
                .map(|t| t.parse().map_err(|_| perr(format!("bad qubit {t:?}"))))
                .collect::<Result<_>>()?;
            let nums: Vec<f64> = parts
                .map(|t| t.parse().map_err(|_| perr(format!("bad number {t:?}"))))
                .collect::<Result<_>>()?;
            let angle = || {
                nums.first()
                    .copied()
                    .ok_or_else(|| perr("missing angle".into()))
            };
            let matrix = |dim: usize| -> Result<Operator> {
                if nums.len() != 2 * dim * dim {
                    return Err(perr(format!("expected {} matrix numbers", 2 * dim * dim)));
                }
                Operator::new(CMatrix::from_fn(dim, dim, |r, col| {
                    let k = 2 * (r * dim + col);
                    c(nums[k], nums[k + 1])
                }))
            };
            let kind = match name {
                "RX" => GateKind::Rx(angle()?),
                "RY" => GateKind::Ry(angle()?),
                "RZ" => GateKind::Rz(angle()?),
                "PHASE" => GateKind::Phase(angle()?),
                "X" => GateKind::X,
                "Y" => GateKind::Y,
                "Z" => GateKind::Z,
                "H" => GateKind::H,
                "CZ" => GateKind::Cz,
                "U1" => GateKind::Custom1(matrix(2)?),
                "U2" => GateKind::Custom2(matrix(4)?),
                other => return Err(perr(format!("unknown gate {other:?}"))),
            };
            let op = GateOp::new(kind, &qubits).map_err(|e| perr(e.to_string()))?;
            circ.push(op).map_err(|e| perr(e.to_string()))?;
        }
        circuit.ok_or(Error::Parse {
            line: 0,
            message: "empty circuit text".into(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledCircuit {
    circuit: Circuit,
    layers: Vec<Layer>,
    report: DepthReport,
}

impl ScheduledCircuit {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn report(&self) -> DepthReport {
        self.report
    }

    pub fn n_qubits(&self) -> usize {
        self.circuit.n_qubits
    }

    pub fn layer_ops(&self, layer: usize) -> impl Iterator<Item = &GateOp> {
        self.layers[layer].ops.iter().map(|&i| &self.circuit.ops[i])
    }

    /// Applies the circuit layer by layer.
    pub fn apply_noiseless(&self, psi: &StateVector) -> Result<StateVector> {
        self.circuit.check_state(psi)?;
        let mut out = psi.clone();
        for l in 0..self.layers.len() {
            for op in self.layer_ops(l) {
                op.apply_to_amplitudes(out.amps_mut(), self.circuit.n_qubits);
            }
        }
        Ok(out)
    }

    /// Text dump with a comment line before each layer.
    pub fn to_text(&self) -> String {
        let mut s = format!("QUBITS {}\n", self.circuit.n_qubits);
        for (i, layer) in self.layers.iter().enumerate() {
            let class = match layer.class {
                DurationClass::Single => "single",
                DurationClass::Double => "double",
            };
            let _ = writeln!(s, "# layer {i} {class}");
            for op in self.layer_ops(i) {
                s.push_str(&op.to_line());
                s.push('\n');
            }
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Composite gates

fn check_adjacent(a: usize, b: usize) -> Result<()> {
    if a.abs_diff(b) != 1 {
        return Err(Error::InvalidQubits(format!(
            "qubits {a},{b} are not nearest neighbours"
        )));
    }
    Ok(())
}

/// SWAP = (I⊗−Y/2)·CZ·(−Y/2⊗Y/2)·CZ·(Y/2⊗−Y/2)·CZ·(I⊗Y/2), with Y/2 = RY(π/2).
pub fn compile_swap(a: usize, b: usize) -> Result<Vec<GateOp>> {
    check_adjacent(a, b)?;
    Ok(vec![
        GateOp::ry(b, FRAC_PI_2),
        GateOp::cz(a, b)?,
        GateOp::ry(a, FRAC_PI_2),
        GateOp::ry(b, -FRAC_PI_2),
        GateOp::cz(a, b)?,
        GateOp::ry(a, -FRAC_PI_2),
        GateOp::ry(b, FRAC_PI_2),
        GateOp::cz(a, b)?,
        GateOp::ry(b, -FRAC_PI_2),
    ])
}

/// |00⟩ → (|01⟩ − |10⟩)/√2 with a single CZ.
pub fn compile_singlet_prep(a: usize, b: usize) -> Result<Vec<GateOp>> {
    check_adjacent(a, b)?;
    Ok(vec![
        GateOp::ry(a, -FRAC_PI_2),
        GateOp::ry(b, FRAC_PI_2),
        GateOp::cz(a, b)?,
        GateOp::ry(b, FRAC_PI_2),
    ])
}

/// Interactions for which the protocol succeeds with certainty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterministicInteraction {
    /// (X⊗Z + iY⊗X)/√2, matched with free evolution about z.
    XzIyx,
    /// (−Z⊗Z + iY⊗X)/√2, matched with free evolution about x.
    MzzIyx,
}

fn pauli_kron(a: &Operator, b: &Operator) -> CMatrix {
    a.matrix().kronecker(b.matrix())
}

impl DeterministicInteraction {
    /// Target 4×4 unitary; the left factor acts on the target qubit.
    pub fn matrix(self) -> Operator {
        let (x, y, z) = (
            Operator::pauli_x(),
            Operator::pauli_y(),
            Operator::pauli_z(),
        );
        let iyx = pauli_kron(&y, &x).map(|v| v * I);
        let first = match self {
            DeterministicInteraction::XzIyx => pauli_kron(&x, &z),
            DeterministicInteraction::MzzIyx => pauli_kron(&z, &z).map(|v| -v),
        };
        Operator::unitary((first + iyx).unscale(2f64.sqrt())).expect("unitary by construction")
    }
}

/// One-CZ realization of a deterministic interaction on (`target`, `probe`).
///
/// Both targets have the form A·exp(−iπ/4·P⊗Q) with A a Pauli product, and
/// exp(−iπ/4·Z⊗Z) equals CZ·(RZ(π/2)⊗RZ(π/2)) up to phase; the remaining
/// rotations map Z onto P and Q.
pub fn compile_deterministic_u(
    spec: DeterministicInteraction,
    target: usize,
    probe: usize,
) -> Result<Vec<GateOp>> {
    check_adjacent(target, probe)?;
    let (t, p) = (target, probe);
    Ok(match spec {
        // (X⊗Z)·exp(−iπ/4 Z⊗Y)
        DeterministicInteraction::XzIyx => vec![
            GateOp::rz(t, FRAC_PI_2),
            GateOp::rx(p, FRAC_PI_2),
            GateOp::rz(p, FRAC_PI_2),
            GateOp::cz(t, p)?,
            GateOp::x(t),
            GateOp::rx(p, -FRAC_PI_2),
            GateOp::z(p),
        ],
        // (Z⊗Z)·exp(−iπ/4 X⊗Y)
        DeterministicInteraction::MzzIyx => vec![
            GateOp::ry(t, -FRAC_PI_2),
            GateOp::rz(t, FRAC_PI_2),
            GateOp::rx(p, FRAC_PI_2),
            GateOp::rz(p, FRAC_PI_2),
            GateOp::cz(t, p)?,
            GateOp::ry(t, FRAC_PI_2),
            GateOp::z(t),
            GateOp::rx(p, -FRAC_PI_2),
            GateOp::z(p),
        ],
    })
}

/// Twelve Euler angles of a CZ-based random interaction.
///
/// Layout: `[target-before, probe-before, target-after, probe-after]`, each an
/// `(α, β, γ)` triple applied in time order as RZ(α), RY(β), RZ(γ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomUnitarySpec {
    pub angles: [f64; 12],
    pub seed: u64,
}

impl RandomUnitarySpec {
    pub fn new(angles: [f64; 12], seed: u64) -> Result<Self> {
        if let Some(a) = angles.iter().find(|a| !(0.0..TAU).contains(*a)) {
            return Err(Error::InvalidConfig(format!(
                "random-unitary angle {a} outside [0, 2π)"
            )));
        }
        Ok(Self { angles, seed })
    }

    /// Angles drawn uniformly from [0, 2π) by a generator seeded with `seed`.
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let angles = std::array::from_fn(|_| rng.random_range(0.0..TAU));
        Self { angles, seed }
    }

    pub fn zero() -> Self {
        Self {
            angles: [0.0; 12],
            seed: 0,
        }
    }

    /// The composite 4×4 unitary (target as left factor).
    pub fn matrix(&self) -> Operator {
        let mut c2 = Circuit::new(2);
        c2.extend(compile_random_u(self, 0, 1).expect("adjacent"))
            .expect("in range");
        c2.unitary()
    }
}

fn euler_zyz(q: usize, a: &[f64]) -> [GateOp; 3] {
    [
        GateOp::rz(q, a[0]),
        GateOp::ry(q, a[1]),
        GateOp::rz(q, a[2]),
    ]
}

pub fn compile_random_u(
    spec: &RandomUnitarySpec,
    target: usize,
    probe: usize,
) -> Result<Vec<GateOp>> {
    check_adjacent(target, probe)?;
    let a = &spec.angles;
    let mut ops = Vec::with_capacity(13);
    ops.extend(euler_zyz(target, &a[0..3]));
    ops.extend(euler_zyz(probe, &a[3..6]));
    ops.push(GateOp::cz(target, probe)?);
    ops.extend(euler_zyz(target, &a[6..9]));
    ops.extend(euler_zyz(probe, &a[9..12]));
    Ok(ops)
}

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre matrix.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> Operator {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for v in q.column_mut(j).iter_mut() {
            *v *= phase;
        }
    }
    Operator::unitary(q).expect("QR factor is unitary")
}

/// Haar-distributed SU(2) element as RZ(α)·RY(β)·RZ(γ) with cos β uniform.
pub fn haar_su2_euler(rng: &mut impl Rng) -> Operator {
    let alpha = rng.random_range(0.0..TAU);
    let gamma = rng.random_range(0.0..TAU);
    let beta = rng.random_range(-1.0f64..1.0).acos();
    let m = |g: Mat2| Operator::from_mat2(&g);
    let u = m(rz(alpha))
        .compose(&m(ry(beta)))
        .and_then(|u| u.compose(&m(rz(gamma))))
        .expect("2x2");
    Operator::unitary(u.into_matrix()).expect("unitary")
}

/// Euler decomposition of a single-qubit state preparation from |0⟩:
/// returns `(θ, φ)` with RZ(φ)·RY(θ)|0⟩ ∝ ψ.
pub fn state_prep_angles(psi: &StateVector) -> Result<(f64, f64)> {
    if psi.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: psi.dim(),
        });
    }
    let [a, b] = [psi.amplitudes()[0], psi.amplitudes()[1]];
    let mut theta = 2.0 * b.norm().atan2(a.norm());
    let mut phi = if a.norm() > 1e-12 && b.norm() > 1e-12 {
        b.arg() - a.arg()
    } else {
        0.0
    };
    phi = phi.rem_euclid(TAU);
    // Real negative superpositions prefer a single RY with negative angle.
    if (phi - PI).abs() < 1e-12 {
        theta = -theta;
        phi = 0.0;
    }
    Ok((theta, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fidelity, partial_trace, singlet, DensityMatrix};

    fn rand_state(n: usize, rng: &mut impl Rng) -> StateVector {
        StateVector::new(
            (0..1 << n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    fn on(ops: Vec<GateOp>, n: usize) -> Circuit {
        let mut circ = Circuit::new(n);
        circ.extend(ops).unwrap();
        circ
    }

    #[test]
    fn cz_flips_sign_of_11() {
        let g = gate_matrix(&GateOp::cz(0, 1).unwrap());
        let out = g.apply(&StateVector::basis(2, 3)).unwrap();
        assert_eq!(out.amplitudes()[3], -ONE);
    }

    #[test]
    fn rz_zero_is_identity() {
        let g = gate_matrix(&GateOp::rz(0, 0.0));
        assert_eq!(g.matrix(), Operator::identity(2).matrix());
    }

    #[test]
    fn ry_half_pi_makes_plus() {
        let g = gate_matrix(&GateOp::ry(0, FRAC_PI_2));
        let out = g.apply(&StateVector::basis(1, 0)).unwrap();
        let h = FRAC_1_SQRT_2;
        // direct evaluation: [cos π/4, sin π/4]
        assert!((out.amplitudes()[0] - c(h, 0.0)).norm() < 1e-15);
        assert!((out.amplitudes()[1] - c(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gate_validation() {
        assert!(GateOp::cz(0, 2).is_err());
        assert!(GateOp::cz(1, 1).is_err());
        assert!(GateOp::new(GateKind::X, &[0, 1]).is_err());
        let not_unitary = Operator::new(CMatrix::from_element(2, 2, ONE)).unwrap();
        assert!(GateOp::new(GateKind::Custom1(not_unitary), &[0]).is_err());
        let mut circ = Circuit::new(2);
        assert!(circ.push(GateOp::x(2)).is_err());
    }

    #[test]
    fn empty_circuit_is_identity_and_x_uses_msb() {
        let psi = StateVector::basis(2, 0);
        assert_eq!(Circuit::new(2).apply_noiseless(&psi).unwrap(), psi);
        let out = on(vec![GateOp::x(0)], 2).apply_noiseless(&psi).unwrap();
        assert_eq!(out.amplitudes()[2], ONE);
    }

    #[test]
    fn random_circuit_matches_dense_product() {
        let mut rng = rng_from_seed(41);
        let n = 3;
        let mut circ = Circuit::new(n);
        let mut dense = CMatrix::identity(8, 8);
        let id = Operator::identity(2);
        for _ in 0..20 {
            let op = if rng.random_bool(0.3) {
                let a = rng.random_range(0..n - 1);
                GateOp::cz(a, a + 1).unwrap()
            } else {
                let q = rng.random_range(0..n);
                match rng.random_range(0..4) {
                    0 => GateOp::rx(q, rng.random_range(0.0..TAU)),
                    1 => GateOp::ry(q, rng.random_range(0.0..TAU)),
                    2 => GateOp::rz(q, rng.random_range(0.0..TAU)),
                    _ => GateOp::h(q),
                }
            };
            let g = gate_matrix(&op);
            let lifted = match op.qubits() {
                [q] => {
                    let f: Vec<Operator> = (0..n)
                        .map(|k| if k == *q { g.clone() } else { id.clone() })
                        .collect();
                    crate::linalg::tensor_all(&f).unwrap()
                }
                [0, _] => Operator::new(g.matrix().kronecker(id.matrix())).unwrap(),
                _ => Operator::new(id.matrix().kronecker(g.matrix())).unwrap(),
            };
            dense = lifted.matrix() * dense;
            circ.push(op).unwrap();
        }
        let psi = rand_state(n, &mut rng);
        let fast = circ.apply_noiseless(&psi).unwrap();
        let slow = &dense * psi.as_dvector();
        assert!((fast.as_dvector() - slow).norm() < 1e-12);
        assert!((fast.norm() - 1.0).abs() < 1e-10);
    }

    fn exact_swap() -> Operator {
        let mut m = CMatrix::zeros(4, 4);
        for (r, col) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            m[(r, col)] = ONE;
        }
        Operator::unitary(m).unwrap()
    }

    #[test]
    fn swap_decomposition_matches_swap() {
        let u = on(compile_swap(0, 1).unwrap(), 2).unitary();
        assert!(u.phase_aligned_distance(&exact_swap()) < 1e-10);
        let ops = compile_swap(0, 1).unwrap();
        assert_eq!(
            ops.iter()
                .filter(|o| matches!(o.kind(), GateKind::Cz))
                .count(),
            3
        );
        assert_eq!(ops.len(), 9);
        assert!(compile_swap(0, 2).is_err());
        // |01⟩ → |10⟩ up to phase
        let out = u.apply(&StateVector::basis(2, 1)).unwrap();
        assert!((out.amplitudes()[2].norm() - 1.0).abs() < 1e-12);
        // singlet picks up a sign only
        let s = u.apply(&singlet()).unwrap();
        assert!((s.inner(&singlet()).norm() - 1.0).abs() < 1e-12);
        assert!((s.inner(&singlet()) + ONE).norm() < 1e-10);
    }

    #[test]
    fn swap_twice_is_identity() {
        let mut rng = rng_from_seed(43);
        let mut ops = compile_swap(0, 1).unwrap();
        ops.extend(compile_swap(0, 1).unwrap());
        let circ = on(ops, 2);
        for _ in 0..10 {
            let psi = rand_state(2, &mut rng);
            let out = circ.apply_noiseless(&psi).unwrap();
            assert!((out.inner(&psi).norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn singlet_prep_reaches_singlet() {
        let ops = compile_singlet_prep(0, 1).unwrap();
        assert_eq!(
            ops.iter()
                .filter(|o| o.duration_class() == DurationClass::Double)
                .count(),
            1
        );
        let out = on(ops, 2)
            .apply_noiseless(&StateVector::basis(2, 0))
            .unwrap();
        assert!((out.inner(&singlet()).norm_sqr() - 1.0).abs() < 1e-10);
        let red = partial_trace(&out.density(), &[1]).unwrap();
        let f = fidelity(&red, &DensityMatrix::maximally_mixed(1)).unwrap();
        assert!((f - 1.0).abs() < 1e-10);
    }

    #[test]
    fn deterministic_interactions_match_targets() {
        for spec in [
            DeterministicInteraction::XzIyx,
            DeterministicInteraction::MzzIyx,
        ] {
            let target = spec.matrix();
            assert!(target.unitarity_deviation() < 1e-12);
            let ops = compile_deterministic_u(spec, 0, 1).unwrap();
            assert_eq!(
                ops.iter()
                    .filter(|o| matches!(o.kind(), GateKind::Cz))
                    .count(),
                1
            );
            let u = on(ops, 2).unitary();
            assert!(u.phase_aligned_distance(&target) < 1e-9, "{spec:?}");
        }
        // reversed device order keeps the target as left factor
        let ops = compile_deterministic_u(DeterministicInteraction::XzIyx, 1, 0).unwrap();
        let u = on(ops, 2).unitary();
        let swap = exact_swap();
        let expect = swap
            .compose(&DeterministicInteraction::XzIyx.matrix())
            .unwrap()
            .compose(&swap)
            .unwrap();
        assert!(u.phase_aligned_distance(&expect) < 1e-9);
    }

    #[test]
    fn random_interaction_cases() {
        let zero = RandomUnitarySpec::zero();
        let cz = gate_matrix(&GateOp::cz(0, 1).unwrap());
        assert!(zero.matrix().phase_aligned_distance(&cz) < 1e-12);
        let a = compile_random_u(&RandomUnitarySpec::from_seed(5), 2, 1).unwrap();
        let b = compile_random_u(&RandomUnitarySpec::from_seed(5), 2, 1).unwrap();
        assert_eq!(a, b);
        for s in 0..50 {
            let spec = RandomUnitarySpec::from_seed(s);
            assert!(spec.angles.iter().all(|a| (0.0..TAU).contains(a)));
            assert!(spec.matrix().unitarity_deviation() < 1e-12);
        }
        assert!(RandomUnitarySpec::new([7.0; 12], 0).is_err());
    }

    #[test]
    fn schedule_examples() {
        let s = on(vec![GateOp::x(0), GateOp::x(1)], 2).schedule();
        assert_eq!(s.layers().len(), 1);
        assert_eq!(s.report().depth_single, 1);
        let s = on(vec![GateOp::x(0), GateOp::cz(0, 1).unwrap()], 2).schedule();
        assert_eq!(s.layers().len(), 2);
        assert_eq!((s.report().depth_single, s.report().depth_double), (1, 1));
        // exclusive two-qubit layers
        let ops = vec![GateOp::cz(0, 1).unwrap(), GateOp::cz(2, 3).unwrap()];
        assert_eq!(on(ops.clone(), 4).schedule().report().depth_double, 2);
        let shared = on(ops, 4).schedule_with(SchedulePolicy {
            exclusive_double: false,
        });
        assert_eq!(shared.report().depth_double, 1);
    }

    #[test]
    fn schedule_preserves_semantics() {
        let mut rng = rng_from_seed(47);
        for _ in 0..100 {
            let n = 4;
            let mut circ = Circuit::new(n);
            for _ in 0..rng.random_range(1..30) {
                let op = if rng.random_bool(0.3) {
                    let a = rng.random_range(0..n - 1);
                    GateOp::cz(a, a + 1).unwrap()
                } else {
                    let q = rng.random_range(0..n);
                    GateOp::ry(q, rng.random_range(0.0..TAU))
                };
                circ.push(op).unwrap();
            }
            for policy in [
                SchedulePolicy::default(),
                SchedulePolicy {
                    exclusive_double: false,
                },
            ] {
                let s = circ.schedule_with(policy);
                let r = s.report();
                assert_eq!(r.depth_single + r.depth_double, s.layers().len());
                for layer in s.layers() {
                    let mut seen = Vec::new();
                    for &o in &layer.ops {
                        let op = &circ.ops()[o];
                        assert_eq!(op.duration_class(), layer.class);
                        for q in op.qubits() {
                            assert!(!seen.contains(q));
                            seen.push(*q);
                        }
                    }
                }
                let psi = rand_state(n, &mut rng);
                let a = circ.apply_noiseless(&psi).unwrap();
                let b = s.apply_noiseless(&psi).unwrap();
                assert!((a.as_dvector() - b.as_dvector()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn every_emitted_gate_is_unitary() {
        let mut ops = compile_swap(0, 1).unwrap();
        ops.extend(compile_singlet_prep(0, 1).unwrap());
        ops.extend(compile_deterministic_u(DeterministicInteraction::MzzIyx, 1, 0).unwrap());
        ops.extend(compile_random_u(&RandomUnitarySpec::from_seed(1), 0, 1).unwrap());
        for op in &ops {
            assert!(gate_matrix(op).unitarity_deviation() < 1e-12);
        }
    }

    #[test]
    fn merge_rz_fuses_runs() {
        let circ = on(
            vec![
                GateOp::rz(0, 0.25),
                GateOp::rz(0, 0.5),
                GateOp::rz(1, 1.0),
                GateOp::ry(0, 0.1),
                GateOp::rz(0, 0.2),
            ],
            2,
        );
        let merged = circ.merge_adjacent_rz();
        assert_eq!(merged.len(), 4);
        assert!(merged.unitary().phase_aligned_distance(&circ.unitary()) < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let mut circ = on(compile_swap(1, 2).unwrap(), 3);
        let mut rng = rng_from_seed(3);
        circ.push(GateOp::new(GateKind::Custom2(haar_unitary(4, &mut rng)), &[0, 1]).unwrap())
            .unwrap();
        circ.push(GateOp::new(GateKind::Phase(0.3), &[2]).unwrap())
            .unwrap();
        let text = circ.to_text();
        let back = Circuit::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert!(back.unitary().phase_aligned_distance(&circ.unitary()) < 1e-10);
        assert!(Circuit::from_text("QUBITS 2\nFOO 0\n").is_err());
        assert!(Circuit::from_text("X 0\n").is_err());
    }

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = rng_from_seed(13);
        for d in [2, 4, 8] {
            assert!(haar_unitary(d, &mut rng).unitarity_deviation() < 1e-12);
        }
        assert!(haar_su2_euler(&mut rng).unitarity_deviation() < 1e-12);
    }

    #[test]
    fn prep_angles_reach_state() {
        for axis in crate::linalg::BlochAxis::ALL {
            let psi = axis.state();
            let (theta, phi) = state_prep_angles(&psi).unwrap();
            let out = on(vec![GateOp::ry(0, theta), GateOp::rz(0, phi)], 1)
                .apply_noiseless(&StateVector::basis(1, 0))
                .unwrap();
            assert!((out.inner(&psi).norm_sqr() - 1.0).abs() < 1e-12, "{axis:?}");
        }
    }
}
