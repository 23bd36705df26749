//! Hermitian eigendecomposition and entropy of reduced states.
//!
//! The eigensolver is a cyclic complex Jacobi iteration with a fixed sweep
//! order, so identical inputs give bit-identical output on every platform.
//! All matrices here are tiny (≤ 64×64 in the Hessian path, 4×4 on the hot
//! path), where Jacobi is both simple and accurate to machine precision.

use crate::mat::{CMat, DensityMatrix, HermitianMatrix, C64};
use crate::qcore::{PureState, QubitPair};
use crate::{Error, Result};

/// Eigenvalues below this contribute 0·log 0 = 0 to entropies.
pub const ENTROPY_EIGENVALUE_FLOOR: f64 = 1e-12;
/// Eigenvalues at or below this are treated as off the support of a reduced
/// density; the variational formulas require every eigenvalue above it.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

const JACOBI_OFFDIAG_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigenvalues (ascending) and matching orthonormal eigenvector columns of a
/// Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector of `eigenvalues[i]`.
    pub eigenvectors: CMat,
}

impl Spectrum {
    /// V† M V for a matrix in the original basis.
    pub fn to_eigenbasis(&self, m: &CMat) -> CMat {
        self.eigenvectors.adjoint().matmul(&m.matmul(&self.eigenvectors))
    }

    /// V M V† back to the original basis.
    pub fn from_eigenbasis(&self, m: &CMat) -> CMat {
        self.eigenvectors.matmul(&m.matmul(&self.eigenvectors.adjoint()))
    }

    /// V diag(f(λ)) V†; exactly Hermitian for real f(λ).
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = CMat::zeros(n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += v[(r, k)] * f(self.eigenvalues[k]) * v[(c, k)].conj();
                }
                out[(r, c)] = acc;
            }
        }
        HermitianMatrix::new_unchecked(out)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
///
/// Sweeps run over (p, q) in a fixed row-major order until the off-diagonal
/// Frobenius mass drops below 1e-14·‖H‖_F. Deterministic for identical input.
pub fn eigh(h: &HermitianMatrix) -> Result<Spectrum> {
    let n = h.dim();
    let mut a = h.as_mat().clone();
    let mut v = CMat::identity(n);
    let norm = a.frobenius_norm();
    if n == 1 || norm == 0.0 {
        return Ok(sorted_spectrum(&a, v));
    }

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for r in 0..n {
            for c in (r + 1)..n {
                off += 2.0 * a[(r, c)].norm_sqr();
            }
        }
        if off.sqrt() <= JACOBI_OFFDIAG_TOL * norm {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let m = apq.norm();
                if m == 0.0 {
                    continue;
                }
                // Unit phase of the pivot; real inputs keep everything real.
                let phase = apq / m;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * m);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // Columns p, q of A and V: J has J_pp = c, J_pq = s·phase,
                // J_qp = −s·conj(phase), J_qq = c, and A ← J†AJ, V ← VJ.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * phase.conj() * akq;
                    a[(k, q)] = s * phase * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * phase * aqk;
                    a[(q, k)] = s * phase.conj() * apk + c * aqk;
                }
                // Exact zero on the annihilated pair keeps the iteration clean.
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * phase.conj() * vkq;
                    v[(k, q)] = s * phase * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        // One final check: the last sweep may have converged.
        let mut off = 0.0;
        for r in 0..n {
            for c in (r + 1)..n {
                off += 2.0 * a[(r, c)].norm_sqr();
            }
        }
        if off.sqrt() > JACOBI_OFFDIAG_TOL * norm {
            return Err(Error::EighNoConvergence(JACOBI_MAX_SWEEPS));
        }
    }
    Ok(sorted_spectrum(&a, v))
}

fn sorted_spectrum(a: &CMat, v: CMat) -> Spectrum {
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap().then(i.cmp(&j)));
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = CMat::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        eigenvalues.push(a[(src, src)].re);
        for r in 0..n {
            eigenvectors[(r, col)] = v[(r, src)];
        }
    }
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Eigendecomposition of a real symmetric matrix (row-major, `dim × dim`).
/// Real inputs stay exactly real through the complex Jacobi rotations, so the
/// returned eigenvector columns are real.
pub fn eigh_real_symmetric(data: &[f64], dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(data.len(), dim * dim);
    let mut m = CMat::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            m[(r, c)] = C64::new(data[r * dim + c], 0.0);
        }
    }
    let spec = eigh(&HermitianMatrix::new_unchecked(m))?;
    let mut vecs = vec![0.0; dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            debug_assert!(spec.eigenvectors[(r, c)].im == 0.0);
            vecs[r * dim + c] = spec.eigenvectors[(r, c)].re;
        }
    }
    Ok((spec.eigenvalues, vecs))
}

/// −Σ λ log₂ λ with the continuous extension 0·log 0 = 0.
pub fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    -eigenvalues
        .iter()
        .filter(|&&l| l > ENTROPY_EIGENVALUE_FLOOR)
        .map(|&l| l * l.log2())
        .sum::<f64>()
}

/// von Neumann entropy in bits.
pub fn entropy_bits(rho: &DensityMatrix) -> Result<f64> {
    let spec = eigh(rho.as_hermitian())?;
    Ok(entropy_from_eigenvalues(&spec.eigenvalues))
}

/// E_XY: entropy (bits) of the reduced state on one qubit pair.
pub fn pair_entropy(state: &PureState, pair: QubitPair) -> Result<f64> {
    entropy_bits(&crate::qcore::partial_trace(state, pair)?)
}

/// E₂: mean pair entropy over all qubit pairs.
pub fn avg_pair_entropy(state: &PureState) -> f64 {
    let pairs = state.all_pairs();
    let total: f64 = pairs
        .iter()
        .map(|&p| pair_entropy(state, p).expect("pairs are valid by construction"))
        .sum();
    total / pairs.len() as f64
}

/// Natural log of a density matrix restricted to its support: eigenvalues at
/// or below [`SUPPORT_THRESHOLD`] are dropped rather than sent to −∞.
pub fn log_on_support(rho: &DensityMatrix) -> Result<HermitianMatrix> {
    let spec = eigh(rho.as_hermitian())?;
    Ok(spec.apply_function(|l| if l > SUPPORT_THRESHOLD { l.ln() } else { 0.0 }))
}

/// Natural log of a full-support density matrix; errors with
/// [`Error::RankDeficient`] when any eigenvalue sits at or below the support
/// threshold, which the variational formulas cannot tolerate.
pub fn log_full_support(rho: &DensityMatrix) -> Result<HermitianMatrix> {
    let spec = eigh(rho.as_hermitian())?;
    let min = spec.min_eigenvalue();
    if min <= SUPPORT_THRESHOLD {
        return Err(Error::RankDeficient(min));
    }
    Ok(spec.apply_function(f64::ln))
}
