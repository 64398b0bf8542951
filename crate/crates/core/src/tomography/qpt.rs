use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, from_spectrum, BlochAxis, CMatrix, DensityMatrix, Operator, C64, ONE, ZERO,
};

/// Preparations used for single-qubit process tomography.
pub const QPT_INPUTS: [BlochAxis; 4] = [
    BlochAxis::Zero,
    BlochAxis::One,
    BlochAxis::Plus,
    BlochAxis::PlusI,
];

/// Process matrix of a single-qubit channel in the (I, X, Y, Z) basis:
/// `ε(ρ) = Σ_mn χ_mn P_m ρ P_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiMatrix {
    elements: CMatrix,
    cptp_projected: bool,
    pub error_bar: Option<f64>,
}

fn paulis() -> [CMatrix; 4] {
    Operator::paulis().map(|p| p.into_matrix())
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

impl ChiMatrix {
    pub fn new(elements: CMatrix) -> Result<Self> {
        if elements.shape() != (4, 4) {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: elements.nrows(),
            });
        }
        let dev = (&elements - elements.adjoint()).camax();
        if dev > 1e-10 {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self {
            elements: hermitize(&elements),
            cptp_projected: false,
            error_bar: None,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.elements
    }

    pub fn element(&self, m: usize, n: usize) -> C64 {
        self.elements[(m, n)]
    }

    pub fn cptp_projected(&self) -> bool {
        self.cptp_projected
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eig_hermitian(&Operator::new(self.elements.clone()).expect("square"))
            .map(|(v, _)| v[0])
            .unwrap_or(f64::NAN)
    }

    /// Max-entry deviation of Σ χ_mn P_n P_m from the identity.
    pub fn tp_residual(&self) -> f64 {
        (tp_map(&self.elements) - CMatrix::identity(2, 2)).camax()
    }

    /// Applies the process to a single-qubit state.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let p = paulis();
        let mut out = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                let x = self.elements[(m, n)];
                if x != ZERO {
                    out += (&p[m] * rho * &p[n]) * x;
                }
            }
        }
        out
    }
}

/// Σ_mn χ_mn P_n P_m
pub fn tp_map(chi: &CMatrix) -> CMatrix {
    let p = paulis();
    let mut out = CMatrix::zeros(2, 2);
    for m in 0..4 {
        for n in 0..4 {
            out += (&p[n] * &p[m]) * chi[(m, n)];
        }
    }
    out
}

/// Least-squares χ from input/output pairs. Each input contributes four
/// equations `Σ_mn χ_mn (P_m ρ P_n)[r,c] = ε(ρ)[r,c]`.
pub fn qpt_chi(inputs: &[DensityMatrix], outputs: &[DensityMatrix]) -> Result<ChiMatrix> {
    if inputs.len() != outputs.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            got: outputs.len(),
        });
    }
    if let Some(bad) = inputs.iter().chain(outputs).find(|r| r.dim() != 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: bad.dim(),
        });
    }
    let p = paulis();
    let rows = 4 * inputs.len();
    let mut a = CMatrix::zeros(rows, 16);
    let mut b = CMatrix::zeros(rows, 1);
    for (j, (rin, rout)) in inputs.iter().zip(outputs).enumerate() {
        for m in 0..4 {
            for n in 0..4 {
                let block = &p[m] * rin.matrix() * &p[n];
                for r in 0..2 {
                    for col in 0..2 {
                        a[(4 * j + 2 * r + col, 4 * m + n)] = block[(r, col)];
                    }
                }
            }
        }
        for r in 0..2 {
            for col in 0..2 {
                b[(4 * j + 2 * r + col, 0)] = rout.element(r, col);
            }
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if svd.singular_values.len() < 16 || smin <= 1e-10 * smax {
        return Err(Error::Singular(format!(
            "process tomography inputs are degenerate (σ_min/σ_max = {:.2e})",
            smin / smax
        )));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::Singular(e.to_string()))?;
    let chi = CMatrix::from_fn(4, 4, |m, n| x[(4 * m + n, 0)]);
    Ok(ChiMatrix {
        elements: hermitize(&chi),
        cptp_projected: false,
        error_bar: None,
    })
}

/// Tr(χ_id χ) with χ_id the identity process.
pub fn process_fidelity(chi: &ChiMatrix) -> f64 {
    chi.elements[(0, 0)].re
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CptpOptions {
    /// Stop once an iteration moves χ by less than this (Frobenius).
    pub tol: f64,
    pub max_iter: usize,
    /// Constraint tolerance checked on the returned estimate.
    pub constraint_tol: f64,
}

impl Default for CptpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            constraint_tol: 1e-6,
        }
    }
}

fn project_psd(m: &CMatrix) -> CMatrix {
    let (values, vectors) =
        eig_hermitian(&Operator::new(hermitize(m)).expect("square")).expect("hermitized input");
    let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    hermitize(&from_spectrum(&clipped, &vectors))
}

/// Euclidean projection onto the affine set {χ : Σ χ_mn P_n P_m = I}.
struct TpProjector {
    t: CMatrix,
    t_adj: CMatrix,
    gram_inv: CMatrix,
    target: CMatrix,
}

impl TpProjector {
    fn new() -> Self {
        let p = paulis();
        let mut t = CMatrix::zeros(4, 16);
        for m in 0..4 {
            for n in 0..4 {
                let prod = &p[n] * &p[m];
                for r in 0..2 {
                    for col in 0..2 {
                        t[(2 * r + col, 4 * m + n)] = prod[(r, col)];
                    }
                }
            }
        }
        let t_adj = t.adjoint();
        let gram_inv = (&t * &t_adj)
            .try_inverse()
            .expect("trace-preservation constraints are independent");
        let target = CMatrix::from_column_slice(4, 1, &[ONE, ZERO, ZERO, ONE]);
        Self {
            t,
            t_adj,
            gram_inv,
            target,
        }
    }

    fn project(&self, chi: &CMatrix) -> CMatrix {
        let x = CMatrix::from_fn(16, 1, |k, _| chi[(k / 4, k % 4)]);
        let resid = &self.t * &x - &self.target;
        let x = x - &self.t_adj * (&self.gram_inv * resid);
        hermitize(&CMatrix::from_fn(4, 4, |m, n| x[(4 * m + n, 0)]))
    }
}

pub fn cptp_project(chi: &ChiMatrix) -> Result<ChiMatrix> {
    cptp_project_with(chi, CptpOptions::default())
}

/// Dykstra alternating projections between the PSD cone and the
/// trace-preservation affine set. The PSD iterate is returned.
pub fn cptp_project_with(chi: &ChiMatrix, opts: CptpOptions) -> Result<ChiMatrix> {
    let tp = TpProjector::new();
    let mut x = chi.elements.clone();
    let mut p = CMatrix::zeros(4, 4);
    let mut q = CMatrix::zeros(4, 4);
    let mut y = x.clone();
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        y = project_psd(&(&x + &p));
        p = &x + &p - &y;
        let x_next = tp.project(&(&y + &q));
        q = &y + &q - &x_next;
        let change = (&x_next - &x).norm();
        x = x_next;
        if change < opts.tol {
            break;
        }
    }
    let out = ChiMatrix {
        elements: y,
        cptp_projected: true,
        error_bar: chi.error_bar,
    };
    let psd_residual = (-out.min_eigenvalue()).max(0.0);
    let tp_residual = out.tp_residual();
    if psd_residual > 1e-9 || tp_residual > opts.constraint_tol {
        return Err(Error::NotConverged {
            iterations,
            psd_residual,
            tp_residual,
        });
    }
    Ok(out)
}
