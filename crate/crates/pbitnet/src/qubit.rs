//! Quantum-side linear algebra: density matrices in the Pauli coefficient
//! representation, unitaries, and the transfer matrices they induce.
//!
//! A state on `n` qubits is held as the real vector `ρ^{μ₁…μₙ} = 2⁻ⁿ tr[σ_{μ⃗} ρ̂]`
//! with `μᵢ ∈ {0,1,2,3}` flattened most-significant-qubit first.  A unitary `U`
//! acts on that vector through the transfer matrix
//! `L^{μ⃗}_{ν⃗} = 2⁻ⁿ tr[σ_{μ⃗} U σ_{ν⃗} U†]`.
//!
//! The source text writes the action as `U†ρ̂U`; the convention here is forward
//! conjugation `Uρ̂U†`, which is the direction that reproduces the printed `G_φ`
//! matrix verbatim (checked in tests).  Complex arithmetic is confined to this
//! module; everything downstream is purely real.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

type CMatrix = DMatrix<Complex64>;

/// Real Pauli-coefficient vector of an `n`-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochState {
    pub n: usize,
    /// Length `4ⁿ`, indexed by the flattened multi-index `(μ₁…μₙ)`.
    pub coeffs: DVector<f64>,
}

/// A concrete `2ⁿ×2ⁿ` unitary.
#[derive(Debug, Clone)]
pub struct UnitarySpec {
    pub n: usize,
    pub matrix: CMatrix,
}

/// Real `4ⁿ×4ⁿ` operator acting on Pauli coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub n: usize,
    pub entries: DMatrix<f64>,
}

/// Gate names accepted by [`builtin_gate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateName {
    Identity,
    Not,
    Hadamard,
    /// `exp(iθσ₂/2)`, rotation about the y axis.
    RotTheta(f64),
    /// `exp(iφσ₃/2)`, the phase gate used throughout the 1-qubit experiments.
    PhasePhi(f64),
    /// Bloch-vector negation; not unitary, returned directly as `diag(1,-1,-1,-1)`.
    Antipode,
    Cnot,
}

impl GateName {
    pub fn parse(name: &str, angle: Option<f64>) -> Result<Self> {
        match name {
            "identity" => Ok(Self::Identity),
            "not" => Ok(Self::Not),
            "hadamard" => Ok(Self::Hadamard),
            "rot" | "rot_theta" => angle
                .map(Self::RotTheta)
                .ok_or_else(|| Error::MissingAngle(name.into())),
            "phase" | "phase_phi" => angle
                .map(Self::PhasePhi)
                .ok_or_else(|| Error::MissingAngle(name.into())),
            "antipode" => Ok(Self::Antipode),
            "cnot" => Ok(Self::Cnot),
            other => Err(Error::UnknownGate(other.into())),
        }
    }
}

/// The four 1-qubit Pauli matrices `σ₀..σ₃`.
pub fn pauli(mu: usize) -> CMatrix {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match mu {
        0 => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("pauli index out of range: {mu}"),
    }
}

/// Tensor-product Pauli `σ_{μ₁} ⊗ … ⊗ σ_{μₙ}` for a flattened multi-index.
pub fn pauli_multi(n: usize, idx: usize) -> CMatrix {
    let mut digits = Vec::with_capacity(n);
    let mut rest = idx;
    for _ in 0..n {
        digits.push(rest % 4);
        rest /= 4;
    }
    digits.reverse();
    let mut m = pauli(digits[0]);
    for &d in &digits[1..] {
        m = m.kronecker(&pauli(d));
    }
    m
}

impl UnitarySpec {
    /// Validates `U†U = I` to `10⁻¹²`.
    pub fn new(n: usize, matrix: CMatrix) -> Result<Self> {
        let dim = 1usize << n;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let prod = matrix.adjoint() * &matrix;
        let eye = CMatrix::identity(dim, dim);
        let dev = (&prod - &eye).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if dev > 1e-12 {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { n, matrix })
    }
}

/// `ρ^{μ⃗} = 2⁻ⁿ tr[σ_{μ⃗} |ψ⟩⟨ψ|]` for a normalized ket.
pub fn ket_to_bloch(amplitudes: &[Complex64]) -> Result<BlochState> {
    let dim = amplitudes.len();
    let n = match dim {
        2 => 1,
        4 => 2,
        8 => 3,
        _ => {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: dim,
            })
        }
    };
    let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm2.sqrt() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized((norm2.sqrt() - 1.0).abs()));
    }
    let psi = DVector::from_column_slice(amplitudes);
    let rho = &psi * psi.adjoint();
    let len = 1usize << (2 * n);
    let scale = 1.0 / (1usize << n) as f64;
    let coeffs = DVector::from_iterator(
        len,
        (0..len).map(|idx| (pauli_multi(n, idx) * &rho).trace().re * scale),
    );
    Ok(BlochState { n, coeffs })
}

/// `L^{μ⃗}_{ν⃗} = 2⁻ⁿ tr[σ_{μ⃗} U σ_{ν⃗} U†]` (forward conjugation; see module docs).
pub fn unitary_to_transfer(u: &UnitarySpec) -> TransferMatrix {
    let n = u.n;
    let len = 1usize << (2 * n);
    let scale = 1.0 / (1usize << n) as f64;
    let conj: Vec<CMatrix> = (0..len)
        .map(|nu| &u.matrix * pauli_multi(n, nu) * u.matrix.adjoint())
        .collect();
    let mut entries = DMatrix::zeros(len, len);
    for mu in 0..len {
        let sigma_mu = pauli_multi(n, mu);
        for nu in 0..len {
            entries[(mu, nu)] = (&sigma_mu * &conj[nu]).trace().re * scale;
        }
    }
    TransferMatrix { n, entries }
}

/// Builds the transfer matrix of a named gate.
pub fn builtin_gate(gate: GateName) -> TransferMatrix {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    match gate {
        GateName::Identity => TransferMatrix {
            n: 1,
            entries: DMatrix::identity(4, 4),
        },
        GateName::Not => from_unitary(1, pauli(1)),
        GateName::Hadamard => {
            let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            from_unitary(1, CMatrix::from_row_slice(2, 2, &[s, s, s, -s]))
        }
        GateName::RotTheta(theta) => {
            // exp(iθσ₂/2) = cos(θ/2) I + i sin(θ/2) σ₂
            let (s, c) = (theta / 2.0).sin_cos();
            let m = CMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(c, 0.0),
                    Complex64::new(s, 0.0),
                    Complex64::new(-s, 0.0),
                    Complex64::new(c, 0.0),
                ],
            );
            from_unitary(1, m)
        }
        GateName::PhasePhi(phi) => {
            // exp(iφσ₃/2) = diag(e^{iφ/2}, e^{-iφ/2})
            let e = Complex64::from_polar(1.0, phi / 2.0);
            from_unitary(1, CMatrix::from_row_slice(2, 2, &[e, z, z, e.conj()]))
        }
        GateName::Antipode => TransferMatrix {
            n: 1,
            entries: DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0, -1.0, -1.0])),
        },
        GateName::Cnot => {
            // Control = qubit 1, target = qubit 2.
            let m = CMatrix::from_row_slice(
                4,
                4,
                &[
                    o, z, z, z, //
                    z, o, z, z, //
                    z, z, z, o, //
                    z, z, o, z,
                ],
            );
            from_unitary(2, m)
        }
    }
}

fn from_unitary(n: usize, m: CMatrix) -> TransferMatrix {
    let u = UnitarySpec::new(n, m).expect("builtin gate matrices are unitary");
    unitary_to_transfer(&u)
}

/// `coeffs' = L·coeffs`; the `(0…0)` entry is untouched by unitary-derived `L`.
pub fn apply_transfer(l: &TransferMatrix, s: &BlochState) -> Result<BlochState> {
    if l.entries.ncols() != s.coeffs.len() {
        return Err(Error::DimensionMismatch {
            expected: l.entries.ncols(),
            got: s.coeffs.len(),
        });
    }
    Ok(BlochState {
        n: s.n,
        coeffs: &l.entries * &s.coeffs,
    })
}
