//! Two-qubit mixed-state entanglement diagnostics: Wootters concurrence,
//! one-vs-rest tangle, the CKW monogamy inequality, the PPT separability
//! test and Werner-state fitting.

use crate::mat::{CMat, DensityMatrix, HermitianMatrix, C64};
use crate::qcore::{partial_trace, single_qubit_reduction, PureState, QubitPair};
use crate::spectra::eigh;
use crate::{Error, Result};

const CKW_TOL: f64 = 1e-10;

/// The CKW monogamy check Σ_Y C²(ρ_AY) ≤ C²_{A(rest)} for one distinguished
/// qubit.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CkwReport {
    /// Σ_Y C²(ρ_AY), pairwise concurrence squared summed over partners.
    pub lhs: f64,
    /// C²_{A(rest)} = 4·det ρ_A, the one-vs-rest tangle squared.
    pub rhs: f64,
    pub holds: bool,
}

/// σ_y ⊗ σ_y, the two-qubit spin-flip matrix (real).
fn spin_flip() -> CMat {
    let mut s = CMat::zeros(4);
    s[(0, 3)] = C64::new(-1.0, 0.0);
    s[(1, 2)] = C64::new(1.0, 0.0);
    s[(2, 1)] = C64::new(1.0, 0.0);
    s[(3, 0)] = C64::new(-1.0, 0.0);
    s
}

fn conj_entrywise(m: &CMat) -> CMat {
    let mut out = CMat::zeros(m.dim());
    for r in 0..m.dim() {
        for c in 0..m.dim() {
            out[(r, c)] = m[(r, c)].conj();
        }
    }
    out
}

/// Wootters concurrence of a two-qubit density matrix:
/// C = max(0, μ₁ − μ₂ − μ₃ − μ₄) with μᵢ the descending square roots of the
/// eigenvalues of ρ·(σy⊗σy)·ρ̄·(σy⊗σy).
///
/// Computed through the Hermitian similarity √ρ·S·ρ̄·S·√ρ, which has the same
/// eigenvalues and avoids a non-Hermitian eigenproblem.
pub fn concurrence_2q(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "concurrence needs a 4×4 density, got {}",
            rho.dim()
        )));
    }
    let spec = eigh(rho.as_hermitian())?;
    let sqrt_rho = spec.apply_function(|l| l.max(0.0).sqrt());
    let s = spin_flip();
    let tilde = s.matmul(&conj_entrywise(rho.as_mat())).matmul(&s);
    let m = sqrt_rho.as_mat().matmul(&tilde).matmul(sqrt_rho.as_mat());
    let sym = m.add(&m.adjoint()).scale(C64::new(0.5, 0.0));
    let mspec = eigh(&HermitianMatrix::new_unchecked(sym))?;
    let mut mu: Vec<f64> = mspec
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    mu.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok((mu[0] - mu[1] - mu[2] - mu[3]).max(0.0))
}

/// One-vs-rest concurrence C_{q(rest)} = 2√det ρ_q of a pure state.
pub fn tangle_one_rest(state: &PureState, qubit: usize) -> Result<f64> {
    let rho = single_qubit_reduction(state, qubit)?;
    let det = rho.as_mat().det_cofactor().re;
    Ok(2.0 * det.max(0.0).sqrt())
}

/// Assemble the CKW inequality for `qubit` against all partners.
pub fn ckw_check(state: &PureState, qubit: usize) -> Result<CkwReport> {
    let n = state.n_qubits();
    let mut lhs = 0.0;
    for other in 0..n {
        if other == qubit {
            continue;
        }
        let rho = partial_trace(state, QubitPair::new(qubit, other, n)?)?;
        let c = concurrence_2q(&rho)?;
        lhs += c * c;
    }
    let c_rest = tangle_one_rest(state, qubit)?;
    let rhs = c_rest * c_rest;
    Ok(CkwReport {
        lhs,
        rhs,
        holds: lhs <= rhs + CKW_TOL,
    })
}

/// Minimum eigenvalue of the partial transpose over the second qubit;
/// for 2⊗2 states nonnegative iff separable.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "partial transpose needs a 4×4 density, got {}",
            rho.dim()
        )));
    }
    // index (2i+a, 2j+b) ↦ (2i+b, 2j+a)
    let mut pt = CMat::zeros(4);
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    pt[(2 * i + a, 2 * j + b)] = rho.as_mat()[(2 * i + b, 2 * j + a)];
                }
            }
        }
    }
    let spec = eigh(&HermitianMatrix::new_unchecked(pt))?;
    Ok(spec.min_eigenvalue())
}

/// |Φ₋⟩ = (|10⟩ − |01⟩)/√2 as a 4-vector.
pub fn singlet() -> [C64; 4] {
    let s = 0.5f64.sqrt();
    [
        C64::new(0.0, 0.0),
        C64::new(-s, 0.0),
        C64::new(s, 0.0),
        C64::new(0.0, 0.0),
    ]
}

/// Least-squares fit of ρ to the Werner family (1−x)/4·I + x·|Φ₋⟩⟨Φ₋|.
/// Returns the optimal x and the Frobenius residual.
pub fn werner_fit(rho: &DensityMatrix) -> Result<(f64, f64)> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "Werner fit needs a 4×4 density, got {}",
            rho.dim()
        )));
    }
    let phim = singlet();
    let proj = CMat::outer(&phim, &phim);
    let quarter = CMat::identity(4).scale(C64::new(0.25, 0.0));
    // ρ(x) = I/4 + x·(P − I/4); least squares over the line gives
    // x* = Re⟨ρ − I/4, P − I/4⟩_F / ‖P − I/4‖²_F with ‖P − I/4‖²_F = 3/4.
    let dir = proj.sub(&quarter);
    let dev = rho.as_mat().sub(&quarter);
    let mut ip = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            ip += (dev[(r, c)].conj() * dir[(r, c)]).re;
        }
    }
    let x = ip / 0.75;
    let fit = quarter.add(&dir.scale(C64::new(x, 0.0)));
    let residual = rho.as_mat().sub(&fit).frobenius_norm();
    Ok((x, residual))
}
