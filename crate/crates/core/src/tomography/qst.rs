use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, conjugate_1q, eig_hermitian, from_spectrum, qubit_bit, CMatrix, DensityMatrix, Mat2,
    Operator, C64, I, ONE, ZERO,
};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    /// Rotation taking this axis' eigenbasis to the computational basis,
    /// with the +1 eigenstate mapped to |0⟩.
    fn basis_change(self) -> Mat2 {
        let h = c(FRAC_1_SQRT_2, 0.0);
        match self {
            PauliAxis::X => [[h, h], [h, -h]],
            // H·S†
            PauliAxis::Y => [[h, -I * h], [h, I * h]],
            PauliAxis::Z => [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    fn letter(self) -> char {
        match self {
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }

    /// Index in the (I, X, Y, Z) ordering.
    fn pauli_index(self) -> usize {
        self as usize + 1
    }
}

/// One measurement setting: a Pauli axis per qubit (qubit 0 first).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliSetting(pub Vec<PauliAxis>);

impl PauliSetting {
    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for PauliSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|a| write!(f, "{}", a.letter()))
    }
}

impl FromStr for PauliSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                'X' => Ok(PauliAxis::X),
                'Y' => Ok(PauliAxis::Y),
                'Z' => Ok(PauliAxis::Z),
                _ => Err(Error::Parse {
                    line: 0,
                    message: format!("bad setting {s:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .and_then(|v| {
                if v.is_empty() {
                    Err(Error::Parse {
                        line: 0,
                        message: "empty setting".into(),
                    })
                } else {
                    Ok(PauliSetting(v))
                }
            })
    }
}

/// All 3^n settings, qubit 0 varying slowest.
pub fn all_settings(n_qubits: usize) -> Vec<PauliSetting> {
    let total = 3usize.pow(n_qubits as u32);
    (0..total)
        .map(|mut k| {
            let mut axes = vec![PauliAxis::X; n_qubits];
            for q in (0..n_qubits).rev() {
                axes[q] = PauliAxis::ALL[k % 3];
                k /= 3;
            }
            PauliSetting(axes)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shots {
    /// Exact Born probabilities instead of sampled counts.
    Exact,
    Finite(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcomes {
    Counts { shots: u64, counts: Vec<u64> },
    Exact(Vec<f64>),
}

/// Histogram over 2^n outcome bitstrings for one setting. Outcome bit 0
/// is the +1 eigenvalue of the measured axis.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub setting: PauliSetting,
    pub outcomes: Outcomes,
}

impl MeasurementRecord {
    pub fn frequencies(&self) -> Vec<f64> {
        match &self.outcomes {
            Outcomes::Exact(p) => p.clone(),
            Outcomes::Counts { shots, counts } => {
                let s = *shots as f64;
                counts.iter().map(|&k| k as f64 / s).collect()
            }
        }
    }
}

/// Born distribution of every setting in `all_settings(n)` order.
pub fn born_distributions(rho: &DensityMatrix) -> Vec<Vec<f64>> {
    let n = rho.n_qubits();
    all_settings(n)
        .par_iter()
        .map(|setting| {
            let mut m = rho.matrix().clone();
            for (q, axis) in setting.0.iter().enumerate() {
                if *axis != PauliAxis::Z {
                    conjugate_1q(&mut m, n, q, &axis.basis_change());
                }
            }
            let p: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].re.max(0.0)).collect();
            let total: f64 = p.iter().sum();
            p.into_iter().map(|x| x / total).collect()
        })
        .collect()
}

/// Multinomial draw as a chain of conditional binomials.
fn multinomial(probs: &[f64], shots: u64, rng: &mut impl Rng) -> Vec<u64> {
    let mut left = shots;
    let mut mass = 1.0;
    let mut out = vec![0u64; probs.len()];
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() {
            out[k] = left;
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(left, q).expect("valid binomial").sample(rng);
        out[k] = draw;
        left -= draw;
        mass -= p;
    }
    out
}

/// Records from precomputed distributions. Each setting draws from its own
/// generator seeded by `(seed, setting index)`.
pub fn sample_from_distributions(
    n_qubits: usize,
    dists: &[Vec<f64>],
    shots: Shots,
    seed: u64,
) -> Vec<MeasurementRecord> {
    let settings = all_settings(n_qubits);
    settings
        .into_par_iter()
        .zip(dists.par_iter())
        .enumerate()
        .map(|(k, (setting, probs))| {
            let outcomes = match shots {
                Shots::Exact => Outcomes::Exact(probs.clone()),
                Shots::Finite(s) => {
                    let mut rng = rng_from_seed(derive_seed(seed, &[k as u64]));
                    Outcomes::Counts {
                        shots: s,
                        counts: multinomial(probs, s, &mut rng),
                    }
                }
            };
            MeasurementRecord { setting, outcomes }
        })
        .collect()
}

pub fn sample_measurements(
    rho: &DensityMatrix,
    shots: Shots,
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    if let Shots::Finite(0) = shots {
        return Err(Error::OutOfRange {
            name: "shots",
            value: 0.0,
        });
    }
    if rho.min_eigenvalue() < crate::linalg::PSD_REJECT {
        return Err(Error::NotPositive(rho.min_eigenvalue()));
    }
    Ok(sample_from_distributions(
        rho.n_qubits(),
        &born_distributions(rho),
        shots,
        seed,
    ))
}

/// In-place Walsh–Hadamard transform: `f[S] ← Σ_b f[b]·(−1)^{|b∧S|}`.
fn walsh_hadamard(f: &mut [f64]) {
    let mut h = 1;
    while h < f.len() {
        for i in (0..f.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (f[j], f[j + h]);
                f[j] = a + b;
                f[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn pauli_entry(letter: usize, r: usize, col: usize) -> C64 {
    match (letter, r, col) {
        (0, 0, 0) | (0, 1, 1) | (1, 0, 1) | (1, 1, 0) | (3, 0, 0) => ONE,
        (3, 1, 1) => -ONE,
        (2, 0, 1) => -I,
        (2, 1, 0) => I,
        _ => ZERO,
    }
}

/// ρ = 2^{-n} Σ_P ⟨P⟩ P over all 4^n Pauli strings. Each expectation is the
/// average over every measured setting compatible with the string.
pub fn qst_linear_inversion(records: &[MeasurementRecord]) -> Result<DensityMatrix> {
    let first = records
        .first()
        .ok_or_else(|| Error::IncompleteTomography("no records".into()))?;
    let n = first.setting.n_qubits();
    let dim = 1usize << n;
    let n_paulis = 1usize << (2 * n);
    let mut sums = vec![0.0; n_paulis];
    let mut hits = vec![0u32; n_paulis];
    for rec in records {
        if rec.setting.n_qubits() != n {
            return Err(Error::IncompleteTomography("mixed qubit counts".into()));
        }
        let mut f = rec.frequencies();
        if f.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: f.len(),
            });
        }
        walsh_hadamard(&mut f);
        for (mask, &e) in f.iter().enumerate() {
            // mask bit for qubit q sits at position n-1-q
            let idx = (0..n).fold(0usize, |acc, q| {
                let letter = if qubit_bit(mask, n, q) == 1 {
                    rec.setting.0[q].pauli_index()
                } else {
                    0
                };
                acc * 4 + letter
            });
            sums[idx] += e;
            hits[idx] += 1;
        }
    }
    if let Some(missing) = hits.iter().position(|&h| h == 0) {
        return Err(Error::IncompleteTomography(format!(
            "no setting covers Pauli string index {missing}"
        )));
    }
    let mut m = CMatrix::zeros(dim, dim);
    let letters_of = |mut p: usize| {
        let mut l = vec![0usize; n];
        for q in (0..n).rev() {
            l[q] = p % 4;
            p /= 4;
        }
        l
    };
    for p in 0..n_paulis {
        let expect = sums[p] / hits[p] as f64;
        if expect == 0.0 {
            continue;
        }
        let letters = letters_of(p);
        let flip = (0..n).fold(0usize, |acc, q| {
            (acc << 1) | usize::from(letters[q] == 1 || letters[q] == 2)
        });
        for col in 0..dim {
            let row = col ^ flip;
            let mut v = c(expect, 0.0);
            for (q, &l) in letters.iter().enumerate() {
                v *= pauli_entry(l, qubit_bit(row, n, q), qubit_bit(col, n, q));
            }
            m[(row, col)] += v;
        }
    }
    let m = m.unscale(dim as f64);
    let m = (&m + m.adjoint()).scale(0.5);
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Frobenius-nearest unit-trace PSD matrix: eigenvalues are projected onto
/// the simplex, eigenvectors kept.
pub fn cp_project(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let op = Operator::new(rho.matrix().clone())?;
    let (values, vectors) = eig_hermitian(&op)?;
    let clipped = project_simplex(&values);
    let m = from_spectrum(&clipped, &vectors);
    Ok(DensityMatrix::from_matrix_unchecked(
        (&m + m.adjoint()).scale(0.5),
    ))
}

/// Writes `setting,bitstring,count` lines under a header.
pub fn write_records_csv<W: Write>(records: &[MeasurementRecord], mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidConfig(e.to_string());
    writeln!(out, "setting,bitstring,count").map_err(io)?;
    for rec in records {
        let Outcomes::Counts { counts, .. } = &rec.outcomes else {
            return Err(Error::InvalidConfig(
                "exact-probability records have no counts to export".into(),
            ));
        };
        let n = rec.setting.n_qubits();
        for (b, k) in counts.iter().enumerate() {
            writeln!(out, "{},{:0width$b},{}", rec.setting, b, k, width = n).map_err(io)?;
        }
    }
    Ok(())
}

/// Reads records written by [`write_records_csv`]; missing bitstrings count 0.
pub fn read_records_csv<R: BufRead>(input: R) -> Result<Vec<MeasurementRecord>> {
    let mut records: Vec<MeasurementRecord> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let perr = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = line.map_err(|e| perr(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("setting")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [setting, bits, count] = fields[..] else {
            return Err(perr(format!("expected 3 fields, got {}", fields.len())));
        };
        let setting: PauliSetting = setting.parse().map_err(|e: Error| perr(e.to_string()))?;
        let n = setting.n_qubits();
        if bits.len() != n {
            return Err(perr(format!("bitstring {bits:?} does not match setting")));
        }
        let outcome =
            usize::from_str_radix(bits, 2).map_err(|_| perr(format!("bad bitstring {bits:?}")))?;
        let count: u64 = count
            .parse()
            .map_err(|_| perr(format!("bad count {count:?}")))?;
        if records.last().is_none_or(|r| r.setting != setting) {
            records.push(MeasurementRecord {
                setting,
                outcomes: Outcomes::Counts {
                    shots: 0,
                    counts: vec![0; 1 << n],
                },
            });
        }
        if let Some(MeasurementRecord {
            outcomes: Outcomes::Counts { shots, counts },
            ..
        }) = records.last_mut()
        {
            counts[outcome] += count;
            *shots += count;
        }
    }
    if let Some(r) = records
        .iter()
        .find(|r| matches!(r.outcomes, Outcomes::Counts { shots: 0, .. }))
    {
        return Err(Error::Parse {
            line: 0,
            message: format!("setting {} has no shots", r.setting),
        });
    }
    Ok(records)
}
