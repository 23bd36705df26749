//! Small dense complex matrices and the Hermitian/density refinements.
//!
//! Everything in this crate works on matrices of dimension ≤ 2^n with n small
//! (reduced densities are 4×4, Hessians ≤ a few dozen), so a plain row-major
//! `Vec<Complex64>` is the whole story.

use crate::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMat::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "ragged rows");
        CMat {
            dim,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// |u⟩⟨v|
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        let dim = u.len();
        let mut m = CMat::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = u[r] * v[c].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        let mut m = CMat::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                m[(r, c)] = self[(c, r)].conj();
            }
        }
        m
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for r in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..self.dim {
                acc += self[(r, c)] * v[c];
            }
            out[r] = acc;
        }
        out
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= *b;
        }
        out
    }

    pub fn scale(&self, s: C64) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Re tr(AB); exact real part of the trace of a product.
    pub fn trace_product_re(&self, other: &CMat) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut acc = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                acc += (self[(r, c)] * other[(c, r)]).re;
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max_ij |a_ij − conj(a_ji)|
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Determinant by cofactor expansion; used only as an independent oracle
    /// at dimension ≤ 4.
    pub fn det_cofactor(&self) -> C64 {
        match self.dim {
            0 => C64::new(1.0, 0.0),
            1 => self[(0, 0)],
            _ => {
                let mut acc = C64::new(0.0, 0.0);
                let mut sign = 1.0;
                for c in 0..self.dim {
                    acc += sign * self[(0, c)] * self.minor(0, c).det_cofactor();
                    sign = -sign;
                }
                acc
            }
        }
    }

    fn minor(&self, row: usize, col: usize) -> CMat {
        let mut m = CMat::zeros(self.dim - 1);
        let mut rr = 0;
        for r in 0..self.dim {
            if r == row {
                continue;
            }
            let mut cc = 0;
            for c in 0..self.dim {
                if c == col {
                    continue;
                }
                m[(rr, cc)] = self[(r, c)];
                cc += 1;
            }
            rr += 1;
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

const HERMITICITY_TOL: f64 = 1e-12;

/// Square complex matrix validated to satisfy A = A†.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        let res = m.hermiticity_residual();
        if res > HERMITICITY_TOL * m.max_abs().max(1.0) {
            return Err(Error::NonHermitian(res));
        }
        Ok(HermitianMatrix(m))
    }

    /// For matrices Hermitian by construction (sums of X + X†, V·diag·V†
    /// with real diagonals). Debug builds still verify.
    pub(crate) fn new_unchecked(m: CMat) -> Self {
        debug_assert!(m.hermiticity_residual() <= HERMITICITY_TOL * m.max_abs().max(1.0));
        HermitianMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_mat(self) -> CMat {
        self.0
    }

    pub fn trace_re(&self) -> f64 {
        self.0.trace().re
    }
}

/// Hermitian matrix refined to unit trace and positive semidefiniteness,
/// within the documented tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

pub(crate) const DENSITY_TRACE_TOL: f64 = 1e-12;
pub(crate) const DENSITY_PSD_TOL: f64 = -1e-12;

impl DensityMatrix {
    pub fn new(m: HermitianMatrix) -> Result<Self> {
        let tr = m.trace_re();
        if (tr - 1.0).abs() > DENSITY_TRACE_TOL {
            return Err(Error::NotDensity(format!("trace {tr} is not 1")));
        }
        let spec = crate::spectra::eigh(&m)?;
        let min = spec.eigenvalues[0];
        if min < DENSITY_PSD_TOL {
            return Err(Error::NotDensity(format!(
                "negative eigenvalue {min:.3e} below tolerance"
            )));
        }
        Ok(DensityMatrix(m))
    }

    /// Reductions of unit-norm pure states are PSD with unit trace by
    /// construction; skip the eigendecomposition on that path.
    pub(crate) fn from_pure_reduction(m: CMat) -> Self {
        debug_assert!((m.trace().re - 1.0).abs() < 1e-9);
        DensityMatrix(HermitianMatrix::new_unchecked(m))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn as_mat(&self) -> &CMat {
        self.0.as_mat()
    }
}
