//! Dense complex linear algebra for Hilbert spaces of a few qubits.
//!
//! All values are immutable after construction; operations allocate fresh
//! outputs. Qubit 0 owns the most-significant bit of a basis index, so
//! `tensor(a, b)` puts `a` on the low-numbered qubits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Row-major 2×2 block used by single-qubit gates and Kraus elements.
pub type Mat2 = [[C64; 2]; 2];
/// Row-major 4×4 block; row/column index is `2·bit(a) + bit(b)`.
pub type Mat4 = [[C64; 4]; 4];

pub const MAX_DIM: usize = 1 << 16;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = -1e-9;
/// Eigenvalues below this are rejected by square roots and fidelities.
pub const PSD_REJECT: f64 = -1e-6;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn log2_exact(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

// ---------------------------------------------------------------------------
// StateVector

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    /// Normalizes the amplitudes; the length must be a power of two ≥ 2.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        log2_exact(amps.len())?;
        let v = DVector::from_vec(amps);
        let norm = v.norm();
        if norm < 1e-300 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            amps: v.unscale(norm),
        })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index {index} out of range");
        let mut v = DVector::from_element(dim, ZERO);
        v[index] = ONE;
        Self { amps: v }
    }

    /// Basis state from a bitstring such as `"0110"` (leftmost char is qubit 0).
    pub fn from_bits(bits: &str) -> Result<Self> {
        let n = bits.len();
        let mut index = 0usize;
        for ch in bits.chars() {
            index = (index << 1)
                | match ch {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::InvalidQubits(format!("bad bitstring {bits:?}"))),
                };
        }
        log2_exact(1 << n)?;
        Ok(Self::basis(n, index))
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            m: &self.amps * self.amps.adjoint(),
        }
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [C64] {
        self.amps.as_mut_slice()
    }

    pub(crate) fn from_dvector(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    pub fn as_dvector(&self) -> &DVector<C64> {
        &self.amps
    }
}

/// The six cardinal points of the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlochAxis {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl BlochAxis {
    pub const ALL: [BlochAxis; 6] = [
        BlochAxis::Zero,
        BlochAxis::One,
        BlochAxis::Plus,
        BlochAxis::PlusI,
        BlochAxis::Minus,
        BlochAxis::MinusI,
    ];

    pub fn state(self) -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = match self {
            BlochAxis::Zero => [ONE, ZERO],
            BlochAxis::One => [ZERO, ONE],
            BlochAxis::Plus => [c(h, 0.0), c(h, 0.0)],
            BlochAxis::Minus => [c(h, 0.0), c(-h, 0.0)],
            BlochAxis::PlusI => [c(h, 0.0), c(0.0, h)],
            BlochAxis::MinusI => [c(h, 0.0), c(0.0, -h)],
        };
        StateVector::from_dvector(DVector::from_row_slice(&amps))
    }

    pub fn label(self) -> &'static str {
        match self {
            BlochAxis::Zero => "0",
            BlochAxis::One => "1",
            BlochAxis::Plus => "+",
            BlochAxis::Minus => "-",
            BlochAxis::PlusI => "+i",
            BlochAxis::MinusI => "-i",
        }
    }
}

/// (|01⟩ − |10⟩)/√2
pub fn singlet() -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::from_dvector(DVector::from_row_slice(&[
        ZERO,
        c(h, 0.0),
        c(-h, 0.0),
        ZERO,
    ]))
}

// ---------------------------------------------------------------------------
// Operator

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: CMatrix,
    unitary: bool,
}

impl Operator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(Self { m, unitary: false })
    }

    /// Validates O†O = I within 1e-10 and sets the unitary flag.
    pub fn unitary(m: CMatrix) -> Result<Self> {
        let mut op = Self::new(m)?;
        let dev = op.unitarity_deviation();
        if dev > 1e-10 {
            return Err(Error::NotUnitary(dev));
        }
        op.unitary = true;
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
            unitary: true,
        }
    }

    pub fn from_mat2(g: &Mat2) -> Self {
        Self {
            m: CMatrix::from_fn(2, 2, |r, c| g[r][c]),
            unitary: false,
        }
    }

    pub fn from_mat4(g: &Mat4) -> Self {
        Self {
            m: CMatrix::from_fn(4, 4, |r, c| g[r][c]),
            unitary: false,
        }
    }

    pub fn pauli_i() -> Self {
        Self::identity(2)
    }
    pub fn pauli_x() -> Self {
        Self::from_mat2(&[[ZERO, ONE], [ONE, ZERO]]).flagged()
    }
    pub fn pauli_y() -> Self {
        Self::from_mat2(&[[ZERO, -I], [I, ZERO]]).flagged()
    }
    pub fn pauli_z() -> Self {
        Self::from_mat2(&[[ONE, ZERO], [ZERO, -ONE]]).flagged()
    }

    /// Pauli operators in (I, X, Y, Z) order.
    pub fn paulis() -> [Operator; 4] {
        [
            Self::pauli_i(),
            Self::pauli_x(),
            Self::pauli_y(),
            Self::pauli_z(),
        ]
    }

    fn flagged(mut self) -> Self {
        self.unitary = true;
        self
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn is_flagged_unitary(&self) -> bool {
        self.unitary
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.m.adjoint() * &self.m - CMatrix::identity(n, n)))
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.m)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
            unitary: self.unitary,
        }
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            m: &self.m * &other.m,
            unitary: self.unitary && other.unitary,
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            m: self.m.map(|z| z * s),
            unitary: false,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            m: &self.m + &other.m,
            unitary: false,
        })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if self.dim() != psi.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        Ok(StateVector::from_dvector(&self.m * &psi.amps))
    }

    pub fn to_mat2(&self) -> Option<Mat2> {
        (self.dim() == 2).then(|| {
            [
                [self.m[(0, 0)], self.m[(0, 1)]],
                [self.m[(1, 0)], self.m[(1, 1)]],
            ]
        })
    }

    pub fn to_mat4(&self) -> Option<Mat4> {
        (self.dim() == 4).then(|| std::array::from_fn(|r| std::array::from_fn(|c| self.m[(r, c)])))
    }

    /// Largest elementwise deviation after removing the best global phase.
    pub fn phase_aligned_distance(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let overlap: C64 = other
            .m
            .iter()
            .zip(self.m.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if overlap.norm() > 1e-300 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        max_abs(&(&self.m - other.m.map(|z| z * phase)))
    }
}

// Serialized as a list of rows of [re, im] pairs.
impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|r| {
                (0..self.dim())
                    .map(|c| [self.m[(r, c)].re, self.m[(r, c)].im])
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("operator must be square"));
        }
        let m = CMatrix::from_fn(n, n, |r, c| C64::new(rows[r][c][0], rows[r][c][1]));
        let unitary = max_abs(&(m.adjoint() * &m - CMatrix::identity(n, n))) <= 1e-10;
        Operator::new(m)
            .map(|op| Operator { unitary, ..op })
            .map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// DensityMatrix

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates squareness, power-of-two size, hermiticity (1e-10) and unit trace (1e-10).
    /// Positivity is not required here; see [`DensityMatrix::is_physical`].
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        log2_exact(m.nrows())?;
        let dev = hermitian_deviation(&m);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::BadTrace(tr.re));
        }
        Ok(Self { m: hermitize(&m) })
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        psi.density()
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        StateVector::basis(n_qubits, index).density()
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self {
            m: CMatrix::identity(d, d).unscale(d as f64),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    pub fn element(&self, r: usize, c: usize) -> C64 {
        self.m[(r, c)]
    }

    pub fn as_operator(&self) -> Operator {
        Operator {
            m: self.m.clone(),
            unitary: false,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_hermitian_unchecked(&self.m).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Hermitian, unit trace and eigenvalues ≥ −1e-9.
    pub fn is_physical(&self) -> bool {
        hermitian_deviation(&self.m) <= HERMITIAN_TOL
            && (self.trace().re - 1.0).abs() <= TRACE_TOL
            && self.min_eigenvalue() >= PSD_TOL
    }

    /// Conjugation by an operator of matching dimension: U ρ U†.
    pub fn conjugate(&self, u: &Operator) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.dim(),
            });
        }
        Ok(Self {
            m: &u.m * &self.m * u.m.adjoint(),
        })
    }

    /// ⟨σ⟩ for a Hermitian observable.
    pub fn expectation(&self, obs: &Operator) -> f64 {
        (&self.m * &obs.m).trace().re
    }

    /// (⟨X⟩, ⟨Y⟩, ⟨Z⟩) for a single qubit.
    pub fn bloch_vector(&self) -> Option<[f64; 3]> {
        (self.dim() == 2).then(|| {
            [
                self.expectation(&Operator::pauli_x()),
                self.expectation(&Operator::pauli_y()),
                self.expectation(&Operator::pauli_z()),
            ]
        })
    }

    /// Mixture `(1-p)·self + p·other`.
    pub fn mix(&self, other: &Self, p: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            m: self.m.scale(1.0 - p) + other.m.scale(p),
        })
    }
}

// ---------------------------------------------------------------------------
// Tensor products

pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

fn check_overflow(a: usize, b: usize) -> Result<usize> {
    let d = a
        .checked_mul(b)
        .ok_or(Error::DimensionOverflow(usize::MAX))?;
    if d > MAX_DIM {
        return Err(Error::DimensionOverflow(d));
    }
    Ok(d)
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        check_overflow(self.dim(), other.dim())?;
        Ok(Self {
            amps: self.amps.kronecker(&other.amps),
        })
    }
}

impl Tensor for Operator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        check_overflow(self.dim(), other.dim())?;
        Ok(Self {
            m: self.m.kronecker(&other.m),
            unitary: self.unitary && other.unitary,
        })
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        check_overflow(self.dim(), other.dim())?;
        Ok(Self {
            m: self.m.kronecker(&other.m),
        })
    }
}

/// Kronecker product; the left operand owns the most-significant qubits.
pub fn tensor<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// Folds [`tensor`] over a non-empty list.
pub fn tensor_all<T: Tensor + Clone>(items: &[T]) -> Result<T> {
    let (first, rest) = items
        .split_first()
        .ok_or_else(|| Error::InvalidQubits("empty tensor list".into()))?;
    rest.iter().try_fold(first.clone(), |acc, x| acc.tensor(x))
}

// ---------------------------------------------------------------------------
// Partial trace

/// Reduced density matrix on `keep`, with output qubits in the listed order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if keep.is_empty() {
        return Err(Error::InvalidQubits("keep list is empty".into()));
    }
    for (i, &q) in keep.iter().enumerate() {
        if q >= n {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                n_qubits: n,
            });
        }
        if keep[..i].contains(&q) {
            return Err(Error::InvalidQubits(format!("qubit {q} listed twice")));
        }
    }
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let k = keep.len();
    let dk = 1usize << k;
    let dt = 1usize << traced.len();

    // full index from (kept bits, traced bits)
    let compose = |kept: usize, tr: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            idx |= ((kept >> (k - 1 - pos)) & 1) << (n - 1 - q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            idx |= ((tr >> (traced.len() - 1 - pos)) & 1) << (n - 1 - q);
        }
        idx
    };

    let m = rho.matrix();
    let out = CMatrix::from_fn(dk, dk, |r, c| {
        (0..dt).map(|t| m[(compose(r, t), compose(c, t))]).sum()
    });
    Ok(DensityMatrix { m: out })
}

// ---------------------------------------------------------------------------
// Spectral routines

fn eig_hermitian_unchecked(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = hermitize(m);
    let eig = h.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
pub fn eig_hermitian(m: &Operator) -> Result<(Vec<f64>, CMatrix)> {
    let dev = m.hermitian_deviation();
    if dev > 1e-8 {
        return Err(Error::NotHermitian(dev));
    }
    Ok(eig_hermitian_unchecked(&m.m))
}

pub(crate) fn from_spectrum(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    let out = scaled * vectors.adjoint();
    debug_assert_eq!(out.nrows(), n);
    hermitize(&out)
}

pub fn matrix_sqrt_psd(m: &Operator) -> Result<Operator> {
    let (values, vectors) = eig_hermitian(m)?;
    if let Some(&min) = values.first() {
        if min < PSD_REJECT {
            return Err(Error::NotPositive(min));
        }
    }
    let roots: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    Ok(Operator {
        m: from_spectrum(&roots, &vectors),
        unitary: false,
    })
}

fn check_same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// ½ Σ |λ(a − b)|
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    let (values, _) = eig_hermitian_unchecked(&(&a.m - &b.m));
    Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Uhlmann fidelity (Tr √(√ρ σ √ρ))².
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    for d in [rho, sigma] {
        let min = d.min_eigenvalue();
        if min < PSD_REJECT {
            return Err(Error::NotPositive(min));
        }
    }
    let root = matrix_sqrt_psd(&rho.as_operator())?;
    let inner = &root.m * &sigma.m * &root.m;
    let (values, _) = eig_hermitian_unchecked(&inner);
    // Eigensolver noise on the null space would otherwise contribute √ε each.
    let floor = 1e-13
        * values
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs()))
            .max(1e-300);
    let s: f64 = values
        .iter()
        .filter(|&&v| v > floor)
        .map(|v| v.sqrt())
        .sum();
    Ok((s * s).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Local gate application (in place)

/// Applies a 2×2 block to qubit `q` of an `n`-qubit amplitude vector.
pub(crate) fn apply_1q(amps: &mut [C64], n: usize, q: usize, g: &Mat2) {
    let stride = 1usize << (n - 1 - q);
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for i0 in base..base + stride {
            let i1 = i0 + stride;
            let (a0, a1) = (amps[i0], amps[i1]);
            amps[i0] = g[0][0] * a0 + g[0][1] * a1;
            amps[i1] = g[1][0] * a0 + g[1][1] * a1;
        }
        base += 2 * stride;
    }
}

fn pair_indices(dim: usize, n: usize, a: usize, b: usize) -> impl Iterator<Item = [usize; 4]> {
    let sa = 1usize << (n - 1 - a);
    let sb = 1usize << (n - 1 - b);
    (0..dim)
        .filter(move |i| i & sa == 0 && i & sb == 0)
        .map(move |i| [i, i | sb, i | sa, i | sa | sb])
}

/// Applies a 4×4 block to qubits (`a`, `b`), `a` being the high bit of the block index.
pub(crate) fn apply_2q(amps: &mut [C64], n: usize, a: usize, b: usize, g: &Mat4) {
    let dim = amps.len();
    for idx in pair_indices(dim, n, a, b) {
        let v = idx.map(|i| amps[i]);
        for (r, &i) in idx.iter().enumerate() {
            amps[i] = g[r][0] * v[0] + g[r][1] * v[1] + g[r][2] * v[2] + g[r][3] * v[3];
        }
    }
}

/// ρ ← G ρ G† for a single-qubit block.
pub(crate) fn conjugate_1q(m: &mut CMatrix, n: usize, q: usize, g: &Mat2) {
    let d = m.nrows();
    for j in 0..d {
        apply_1q(m.column_mut(j).as_mut_slice(), n, q, g);
    }
    let gc: Mat2 = [
        [g[0][0].conj(), g[0][1].conj()],
        [g[1][0].conj(), g[1][1].conj()],
    ];
    let stride = 1usize << (n - 1 - q);
    for j0 in (0..d).filter(|j| j & stride == 0) {
        let j1 = j0 + stride;
        for i in 0..d {
            let (a0, a1) = (m[(i, j0)], m[(i, j1)]);
            m[(i, j0)] = a0 * gc[0][0] + a1 * gc[0][1];
            m[(i, j1)] = a0 * gc[1][0] + a1 * gc[1][1];
        }
    }
}

/// ρ ← G ρ G† for a two-qubit block on (`a`, `b`).
pub(crate) fn conjugate_2q(m: &mut CMatrix, n: usize, a: usize, b: usize, g: &Mat4) {
    let d = m.nrows();
    for j in 0..d {
        apply_2q(m.column_mut(j).as_mut_slice(), n, a, b, g);
    }
    for idx in pair_indices(d, n, a, b).collect::<Vec<_>>() {
        for i in 0..d {
            let v = idx.map(|j| m[(i, j)]);
            for (col, &j) in idx.iter().enumerate() {
                m[(i, j)] = (0..4).map(|k| v[k] * g[col][k].conj()).sum();
            }
        }
    }
}

/// Bit of qubit `q` in a basis index of an `n`-qubit register.
#[inline]
pub fn qubit_bit(index: usize, n: usize, q: usize) -> usize {
    (index >> (n - 1 - q)) & 1
}
