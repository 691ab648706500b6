//! The probabilistic representation: POVM matrix, state ↔ distribution maps,
//! gate operators on the simplex, and the metric-side figures of merit.
//!
//! The 4-outcome POVM `A` maps the Pauli coefficients of one qubit to outcome
//! probabilities, `p^z = Σ_μ A^z_μ ρ^μ` (with the ½-trace pairing); for `n`
//! qubits the map is the `n`-fold tensor product.  A transfer matrix `L`
//! becomes the stochastic operator `G = A⊗ⁿ L (A⁻¹)⊗ⁿ` on distributions.
//!
//! The induced scalar product `g(p,q) = 2ⁿ (A⁻¹⊗ⁿp)·(A⁻¹⊗ⁿq)` equals
//! `tr[ρ̂₁ρ̂₂]` whenever both arguments are images of quantum states, and is
//! extended to the whole space.  From it: Bloch radius `r`, coherence
//! `R = r/r_pure`, fidelity `F`, and unitary error `α`.
//!
//! Note on the radius: the source prints `r² = 2⁻ⁿ g − 2^{2n}`; the constant
//! must be `2⁻²ⁿ` for `r_pure² = 2⁻ⁿ(1−2⁻ⁿ)` to hold, and that corrected form
//! is implemented here.

use nalgebra::{DMatrix, DVector};

use crate::qubit::{BlochState, TransferMatrix};
use crate::{Error, Result};

/// The 4×4 POVM matrix `A^z_μ` (rows = outcomes, columns = Pauli index) and
/// its cached inverse.
#[derive(Debug, Clone)]
pub struct Povm {
    pub matrix: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
}

/// Joint probability vector over the `4ⁿ` pbit events.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub n: usize,
    /// Length `4ⁿ`, indexed by the flattened multi-outcome `(z₁…zₙ)`; within
    /// each `zᵢ` the first pbit of the pair is the more significant bit.
    pub probs: DVector<f64>,
}

/// Real `4ⁿ×4ⁿ` operator acting on distributions (columns sum to 1).
#[derive(Debug, Clone, PartialEq)]
pub struct GateOperator {
    pub n: usize,
    pub entries: DMatrix<f64>,
}

/// Classification of a distribution by its coherence `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    /// `|R − 1| ≤ tol`: image of a pure state.
    Pure,
    /// `R < 1 − tol`: mixed / decohered.
    Mixed,
    /// `R > 1 + tol`: outside the Bloch ball; not a valid quantum state.
    Overcohered,
}

impl Distribution {
    /// Validates non-negativity (to −10⁻⁹) and unit sum (to 10⁻⁹).
    pub fn new(n: usize, probs: DVector<f64>) -> Result<Self> {
        let len = 1usize << (2 * n);
        if probs.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: probs.len(),
            });
        }
        if probs.iter().any(|&p| p < -1e-9) {
            return Err(Error::InvalidDistribution(format!(
                "negative entry {:.3e}",
                probs.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("sum = {sum:.12}")));
        }
        Ok(Self { n, probs })
    }
}

/// The exact Eq. (6) POVM with entries `½` and `±1/(2√3)`.
pub fn default_povm() -> Povm {
    let k = 0.5 / 3f64.sqrt();
    #[rustfmt::skip]
    let matrix = DMatrix::from_row_slice(4, 4, &[
        0.5, -k, -k, -k,
        0.5,  k,  k, -k,
        0.5, -k,  k,  k,
        0.5,  k, -k,  k,
    ]);
    // Column orthogonality of A makes A⁻¹ = diag(1,3,3,3)·Aᵀ; a generic inverse
    // is avoided to keep the cached value exact.
    let inverse = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 3.0, 3.0, 3.0]))
        * matrix.transpose();
    Povm { matrix, inverse }
}

fn kron_power(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut out = m.clone();
    for _ in 1..n {
        out = out.kronecker(m);
    }
    out
}

/// `probs = (A⊗…⊗A)·coeffs` per Eq. (2).
pub fn embed(s: &BlochState, povm: &Povm) -> Distribution {
    let a = kron_power(&povm.matrix, s.n);
    Distribution {
        n: s.n,
        probs: a * &s.coeffs,
    }
}

/// `coeffs = (A⁻¹⊗…⊗A⁻¹)·probs`; defined on all of the distribution space,
/// including overcohered points.
pub fn invert(d: &Distribution, povm: &Povm) -> BlochState {
    let ai = kron_power(&povm.inverse, d.n);
    BlochState {
        n: d.n,
        coeffs: ai * &d.probs,
    }
}

/// `G = (A⊗ⁿ)·L·(A⁻¹)⊗ⁿ` per Eq. (4).
pub fn gate_operator(l: &TransferMatrix, povm: &Povm) -> GateOperator {
    let a = kron_power(&povm.matrix, l.n);
    let ai = kron_power(&povm.inverse, l.n);
    GateOperator {
        n: l.n,
        entries: a * &l.entries * ai,
    }
}

/// The printed closed form of `G_φ` for the phase gate.
pub fn phase_gate_closed(phi: f64) -> GateOperator {
    let (s, c) = phi.sin_cos();
    #[rustfmt::skip]
    let entries = DMatrix::from_row_slice(4, 4, &[
        1.0 + c, 1.0 - c,      -s,       s,
        1.0 - c, 1.0 + c,       s,      -s,
              s,      -s, 1.0 + c, 1.0 - c,
             -s,       s, 1.0 - c, 1.0 + c,
    ]) * 0.5;
    GateOperator { n: 1, entries }
}

/// The printed 16×16 `G_CNOT`, assembled from the typeset blocks
/// `H₁, H₂, J₁, J₂`.
pub fn cnot_closed() -> GateOperator {
    let t = 1.0 / 3f64.sqrt();
    #[rustfmt::skip]
    let h1 = DMatrix::from_row_slice(4, 4, &[
         1.0,  t,  1.0,  t,
        -t,  1.0, -t,  1.0,
         1.0,  t,  1.0,  t,
        -t,  1.0, -t,  1.0,
    ]) * 0.25;
    #[rustfmt::skip]
    let h2 = DMatrix::from_row_slice(4, 4, &[
         t, -1.0, -t,  1.0,
         1.0,  t, -1.0, -t,
        -t,  1.0,  t, -1.0,
        -1.0, -t,  1.0,  t,
    ]) * 0.25;
    #[rustfmt::skip]
    let j1 = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, -1.0,
        0.0, 0.0, 1.0, 0.0,
        0.0, -1.0, 0.0, 0.0,
    ]) * t;
    #[rustfmt::skip]
    let j2 = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, 1.0, 0.0,
        0.0, -1.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, -1.0,
    ]) * t;
    let h1t = h1.transpose();
    let h2t = h2.transpose();
    let blocks: [[DMatrix<f64>; 4]; 4] = [
        [&h1 - &j1, &h1t + &j2, h2.clone(), h2t.clone()],
        [&h1t + &j2, &h1 - &j1, h2t.clone(), h2.clone()],
        [-&h2, -&h2t, &h1 - &j2, &h1t + &j1],
        [-&h2t, -&h2, &h1t + &j1, &h1 - &j2],
    ];
    let mut entries = DMatrix::zeros(16, 16);
    for (bi, row) in blocks.iter().enumerate() {
        for (bj, blk) in row.iter().enumerate() {
            entries.view_mut((4 * bi, 4 * bj), (4, 4)).copy_from(blk);
        }
    }
    GateOperator { n: 2, entries }
}

/// The POVM-induced scalar product, normalized so `g(p,q) = tr[ρ̂₁ρ̂₂]` on
/// quantum images: `g = 2ⁿ (A⁻¹⊗ⁿp)·(A⁻¹⊗ⁿq)`.  The domain is extended to
/// arbitrary real vectors of matching length.
pub fn metric_g(p: &DVector<f64>, q: &DVector<f64>, povm: &Povm) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let n = match p.len() {
        4 => 1,
        16 => 2,
        64 => 3,
        other => {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: other,
            })
        }
    };
    let ai = kron_power(&povm.inverse, n);
    let cp = &ai * p;
    let cq = &ai * q;
    Ok((1usize << n) as f64 * cp.dot(&cq))
}

/// Bloch radius of a distribution: `r² = 2⁻ⁿ g(p,p) − 2⁻²ⁿ` (clamped at zero
/// within −10⁻¹²).
pub fn radius(p: &Distribution, povm: &Povm) -> Result<f64> {
    let n = p.n;
    let g = metric_g(&p.probs, &p.probs, povm)?;
    let two_n = (1usize << n) as f64;
    let r2 = g / two_n - 1.0 / (two_n * two_n);
    if r2 < -1e-9 {
        return Err(Error::NegativeRadius(r2));
    }
    Ok(r2.max(0.0).sqrt())
}

/// Pure-state radius `r_pure = √(2⁻ⁿ(1−2⁻ⁿ))`.
pub fn r_pure(n: usize) -> f64 {
    let inv = 1.0 / (1usize << n) as f64;
    (inv * (1.0 - inv)).sqrt()
}

/// Coherence `R = r/r_pure`.
pub fn coherence(p: &Distribution, povm: &Povm) -> Result<f64> {
    Ok(radius(p, povm)? / r_pure(p.n))
}

/// Fidelity `F = g(p,q)/√(g(p,p)g(q,q))`.
pub fn fidelity(p: &Distribution, q: &Distribution, povm: &Povm) -> Result<f64> {
    let gpq = metric_g(&p.probs, &q.probs, povm)?;
    let gpp = metric_g(&p.probs, &p.probs, povm)?;
    let gqq = metric_g(&q.probs, &q.probs, povm)?;
    if gpp <= 0.0 || gqq <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(gpq / (gpp * gqq).sqrt())
}

/// Unitary error `α = arccos[(g(p,q) − 2⁻ⁿ·g₀)/( … )]`: the Bloch-sphere angle
/// between a pure target `p` and the obtained `q`, in radians.
///
/// In Bloch-vector terms `cos α = (2⁻ⁿ g(p,q) − 2⁻²ⁿ)/(r(p)·r(q))` with
/// `r(p) = r_pure`; the argument is clamped to `[−1,1]`.
pub fn unitary_error(p: &Distribution, q: &Distribution, povm: &Povm) -> Result<f64> {
    let n = p.n;
    let two_n = (1usize << n) as f64;
    let rq = radius(q, povm)?;
    if rq <= 0.0 {
        return Err(Error::UndefinedAngle);
    }
    let gpq = metric_g(&p.probs, &q.probs, povm)?;
    let cos = (gpq / two_n - 1.0 / (two_n * two_n)) / (r_pure(n) * rq);
    Ok(cos.clamp(-1.0, 1.0).acos())
}

/// Region classification by `R` with the given tolerance.
pub fn classify_region(p: &Distribution, tol: f64, povm: &Povm) -> Result<RegionLabel> {
    let r = coherence(p, povm)?;
    Ok(if (r - 1.0).abs() <= tol {
        RegionLabel::Pure
    } else if r < 1.0 - tol {
        RegionLabel::Mixed
    } else {
        RegionLabel::Overcohered
    })
}

/// Serializes a matrix to the plain-text row-major format used by the CLI
/// dumps (`#`-prefixed comment lines allowed).
pub fn matrix_to_text(m: &DMatrix<f64>, comment: &str) -> String {
    let mut out = String::new();
    if !comment.is_empty() {
        out.push_str(&format!("# {comment}\n"));
    }
    out.push_str(&format!("# {} x {}\n", m.nrows(), m.ncols()));
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.15}", m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
