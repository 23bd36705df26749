//! First and second variations of reduced densities and of the average pair
//! entropy E₂ on the unit sphere of states.
//!
//! A variation of a state is a curve ψ(t) = ψ + t·δψ + t²·δ²ψ whose
//! normalization forces, order by order,
//!
//! ```text
//!   2 Re⟨δψ|ψ⟩ = 0                      (first order)
//!   2 Re⟨δ²ψ|ψ⟩ + ⟨δψ|δψ⟩ = 0          (second order)
//! ```
//!
//! The induced variations of a reduced density ρ = tr_rest |ψ⟩⟨ψ| are
//! δρ = tr_rest(|δψ⟩⟨ψ| + |ψ⟩⟨δψ|) and δ²ρ = κ + σ with
//! κ = tr_rest(|δ²ψ⟩⟨ψ| + |ψ⟩⟨δ²ψ|), σ = tr_rest(|δψ⟩⟨δψ|). Entropy
//! variations (in bits) follow from the trace formulas
//!
//! ```text
//!   δE  = −tr[δρ·ln ρ] / ln 2
//!   δ²E = −(tr[δ²ρ·ln ρ] + ½ tr[δρ·δln ρ]) / ln 2
//! ```
//!
//! where δln ρ is the Fréchet derivative of the matrix log, evaluated in the
//! eigenbasis with the divided-difference kernel ln(λⱼ/λᵢ)/(λⱼ−λᵢ).

use crate::mat::{CMat, HermitianMatrix, C64};
use crate::qcore::{self, apply_pair_operator, dot, norm, pair_reduction, PureState, QubitPair};
use crate::spectra::{self, eigh, Spectrum, SUPPORT_THRESHOLD};
use crate::{Error, Result};

const LN2: f64 = std::f64::consts::LN_2;
const TANGENCY_TOL: f64 = 1e-12;
/// Relative eigenvalue gap below which the divided-difference kernel switches
/// to the midpoint form 2/(λᵢ+λⱼ) to avoid cancellation.
const DEGENERATE_GAP_REL: f64 = 1e-8;
/// Gram–Schmidt residual below which a gauge generator is dependent.
const GAUGE_RESIDUAL_TOL: f64 = 1e-10;

/// First-order variation |δψ⟩ anchored at a base state, satisfying the
/// first-order normalization condition.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: PureState,
    delta: Vec<C64>,
}

impl TangentVector {
    pub fn new(base: PureState, delta: Vec<C64>) -> Result<Self> {
        if delta.len() != base.dim() {
            return Err(Error::DimensionMismatch(format!(
                "tangent of length {} on a dim-{} state",
                delta.len(),
                base.dim()
            )));
        }
        let res = dot(&delta, base.amplitudes()).re;
        if res.abs() > TANGENCY_TOL * norm(&delta).max(1.0) {
            return Err(Error::NormalizationCondition(res));
        }
        Ok(TangentVector { base, delta })
    }

    /// Project an arbitrary vector onto the sphere tangent at `base`.
    pub fn projected(base: PureState, raw: &[C64]) -> Result<Self> {
        if raw.len() != base.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} on a dim-{} state",
                raw.len(),
                base.dim()
            )));
        }
        let c = dot(base.amplitudes(), raw).re;
        let delta = raw
            .iter()
            .zip(base.amplitudes())
            .map(|(&v, &p)| v - c * p)
            .collect();
        Ok(TangentVector { base, delta })
    }

    pub fn base(&self) -> &PureState {
        &self.base
    }

    pub fn delta(&self) -> &[C64] {
        &self.delta
    }

    pub fn norm(&self) -> f64 {
        norm(&self.delta)
    }
}

/// Second-order variation (|δψ⟩, |δ²ψ⟩) satisfying both normalization
/// conditions.
#[derive(Debug, Clone)]
pub struct SecondOrderCurve {
    base: PureState,
    delta: Vec<C64>,
    delta2: Vec<C64>,
}

impl SecondOrderCurve {
    pub fn new(base: PureState, delta: Vec<C64>, delta2: Vec<C64>) -> Result<Self> {
        let tangent = TangentVector::new(base, delta)?;
        let TangentVector { base, delta } = tangent;
        if delta2.len() != base.dim() {
            return Err(Error::DimensionMismatch(format!(
                "second-order term of length {} on a dim-{} state",
                delta2.len(),
                base.dim()
            )));
        }
        let nd2 = delta.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let res = 2.0 * dot(&delta2, base.amplitudes()).re + nd2;
        if res.abs() > TANGENCY_TOL * nd2.max(1.0) {
            return Err(Error::NormalizationCondition(res));
        }
        Ok(SecondOrderCurve {
            base,
            delta,
            delta2,
        })
    }

    /// The geodesic curve through the tangent: δ²ψ = −½‖δψ‖²·ψ, which
    /// satisfies both normalization conditions identically.
    pub fn geodesic(tangent: &TangentVector) -> Self {
        let c = -0.5 * tangent.delta.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let delta2 = tangent.base.amplitudes().iter().map(|&p| c * p).collect();
        SecondOrderCurve {
            base: tangent.base.clone(),
            delta: tangent.delta.clone(),
            delta2,
        }
    }

    /// Build a curve from raw vectors by projecting the first-order part and
    /// shifting the second-order part along the base state so that both
    /// normalization conditions hold.
    pub fn enforced(base: PureState, raw_delta: &[C64], raw_delta2: &[C64]) -> Result<Self> {
        let tangent = TangentVector::projected(base, raw_delta)?;
        if raw_delta2.len() != tangent.base.dim() {
            return Err(Error::DimensionMismatch(
                "second-order term length".to_string(),
            ));
        }
        let nd2 = tangent.delta.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let c = -dot(tangent.base.amplitudes(), raw_delta2).re - 0.5 * nd2;
        let delta2 = raw_delta2
            .iter()
            .zip(tangent.base.amplitudes())
            .map(|(&v, &p)| v + c * p)
            .collect();
        Ok(SecondOrderCurve {
            base: tangent.base.clone(),
            delta: tangent.delta,
            delta2,
        })
    }

    pub fn base(&self) -> &PureState {
        &self.base
    }

    pub fn delta(&self) -> &[C64] {
        &self.delta
    }

    pub fn delta2(&self) -> &[C64] {
        &self.delta2
    }

    pub fn tangent(&self) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            delta: self.delta.clone(),
        }
    }
}

fn add_adjoint(m: CMat) -> CMat {
    let adj = m.adjoint();
    m.add(&adj)
}

/// δρ_pair = tr_rest(|δψ⟩⟨ψ| + |ψ⟩⟨δψ|); traceless by the first-order
/// normalization condition.
pub fn delta_rho(tangent: &TangentVector, keep: QubitPair) -> Result<HermitianMatrix> {
    QubitPair::new(keep.first(), keep.second(), tangent.base.n_qubits())?;
    let m = pair_reduction(
        &tangent.delta,
        tangent.base.amplitudes(),
        keep,
        tangent.base.n_qubits(),
    );
    Ok(HermitianMatrix::new_unchecked(add_adjoint(m)))
}

/// δ²ρ_pair = κ + σ; traceless by the second-order normalization condition.
pub fn delta2_rho(curve: &SecondOrderCurve, keep: QubitPair) -> Result<HermitianMatrix> {
    let (kappa, sigma) = kappa_sigma_split(curve, keep)?;
    Ok(HermitianMatrix::new_unchecked(
        kappa.as_mat().add(sigma.as_mat()),
    ))
}

/// The split δ²ρ = κ + σ with κ = tr_rest(|δ²ψ⟩⟨ψ| + h.c.) and
/// σ = tr_rest(|δψ⟩⟨δψ|) ⪰ 0.
pub fn kappa_sigma_split(
    curve: &SecondOrderCurve,
    keep: QubitPair,
) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let n = curve.base.n_qubits();
    QubitPair::new(keep.first(), keep.second(), n)?;
    let kappa = add_adjoint(pair_reduction(
        &curve.delta2,
        curve.base.amplitudes(),
        keep,
        n,
    ));
    let sigma = pair_reduction(&curve.delta, &curve.delta, keep, n);
    Ok((
        HermitianMatrix::new_unchecked(kappa),
        HermitianMatrix::new_unchecked(sigma),
    ))
}

/// Divided-difference kernel for the Fréchet derivative of the matrix log:
/// ln(λⱼ/λᵢ)/(λⱼ−λᵢ) for distinct eigenvalues, 1/λ on the diagonal, with a
/// midpoint fallback 2/(λᵢ+λⱼ) for near-degenerate pairs.
pub(crate) fn log_kernel(li: f64, lj: f64) -> f64 {
    if (li - lj).abs() < DEGENERATE_GAP_REL * li.max(lj) {
        2.0 / (li + lj)
    } else {
        (lj / li).ln() / (lj - li)
    }
}

fn check_spectrum_in_unit_interval(spectrum: &Spectrum) -> Result<()> {
    let min = spectrum.eigenvalues[0];
    let max = *spectrum.eigenvalues.last().unwrap();
    if min <= SUPPORT_THRESHOLD {
        return Err(Error::SpectrumOutOfRange(min, 0.0, 1.0));
    }
    if max > 1.0 + SUPPORT_THRESHOLD {
        return Err(Error::SpectrumOutOfRange(max, 0.0, 1.0));
    }
    Ok(())
}

/// δ(ln ρ) for a given variation δρ, using the eigendecomposition of ρ.
///
/// Exactly linear in `delta_rho`; requires the spectrum inside (0, 1).
pub fn delta_log(spectrum: &Spectrum, delta_rho: &HermitianMatrix) -> Result<HermitianMatrix> {
    check_spectrum_in_unit_interval(spectrum)?;
    let n = spectrum.eigenvalues.len();
    if delta_rho.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "delta_rho dim {} vs spectrum dim {n}",
            delta_rho.dim()
        )));
    }
    let d = spectrum.to_eigenbasis(delta_rho.as_mat());
    let mut kd = CMat::zeros(n);
    for r in 0..n {
        for c in 0..n {
            kd[(r, c)] = log_kernel(spectrum.eigenvalues[r], spectrum.eigenvalues[c]) * d[(r, c)];
        }
    }
    Ok(HermitianMatrix::new_unchecked(
        spectrum.from_eigenbasis(&kd),
    ))
}

/// First variation of E_pair in bits: −tr[δρ·ln ρ]/ln 2.
pub fn delta_e(tangent: &TangentVector, pair: QubitPair) -> Result<f64> {
    let rho = qcore::partial_trace(tangent.base(), pair)?;
    let log = spectra::log_full_support(&rho)?;
    let dr = delta_rho(tangent, pair)?;
    Ok(-dr.as_mat().trace_product_re(log.as_mat()) / LN2)
}

/// Second variation of E_pair in bits:
/// −(tr[δ²ρ·ln ρ] + ½·tr[δρ·δln ρ])/ln 2.
pub fn delta2_e(curve: &SecondOrderCurve, pair: QubitPair) -> Result<f64> {
    let rho = qcore::partial_trace(curve.base(), pair)?;
    let spectrum = eigh(rho.as_hermitian())?;
    if spectrum.min_eigenvalue() <= SUPPORT_THRESHOLD {
        return Err(Error::RankDeficient(spectrum.min_eigenvalue()));
    }
    let log = spectrum.apply_function(f64::ln);
    let dr = delta_rho(&curve.tangent(), pair)?;
    let d2r = delta2_rho(curve, pair)?;
    let dlog = delta_log(&spectrum, &dr)?;
    let t1 = d2r.as_mat().trace_product_re(log.as_mat());
    let t2 = 0.5 * dr.as_mat().trace_product_re(dlog.as_mat());
    Ok(-(t1 + t2) / LN2)
}

/// First and second variation of tr f(A) for f(x) = x·ln x along
/// A ↦ A + t·dA + t²·d2A, via f′(A) = I + ln A and δf′(A) = δln A.
pub fn variation_tr_f(
    a: &HermitianMatrix,
    da: &HermitianMatrix,
    d2a: &HermitianMatrix,
) -> Result<(f64, f64)> {
    let spectrum = eigh(a)?;
    check_spectrum_in_unit_interval(&spectrum)?;
    let n = a.dim();
    if da.dim() != n || d2a.dim() != n {
        return Err(Error::DimensionMismatch(
            "variation_tr_f inputs".to_string(),
        ));
    }
    let fprime = spectrum.apply_function(|l| 1.0 + l.ln());
    let first = da.as_mat().trace_product_re(fprime.as_mat());
    let dfprime = delta_log(&spectrum, da)?;
    let second = d2a.as_mat().trace_product_re(fprime.as_mat())
        + 0.5 * da.as_mat().trace_product_re(dfprime.as_mat());
    Ok((first, second))
}

// ---------------------------------------------------------------------------
// Gradient of E₂
// ---------------------------------------------------------------------------

/// Per-pair data reused across many variation evaluations at a fixed state.
pub(crate) struct PairData {
    pub pair: QubitPair,
    pub spectrum: Spectrum,
    /// ln λ for support eigenvalues, 0 off support.
    pub ln_eigs: [f64; 4],
    /// Divided-difference kernel on the support, 0 where either index is off.
    pub kernel: [[f64; 4]; 4],
    /// Σ λ ln λ over the support.
    pub tr_rho_ln: f64,
    pub full_support: bool,
}

pub(crate) fn pair_data(state: &PureState, pair: QubitPair) -> Result<PairData> {
    let rho = qcore::partial_trace(state, pair)?;
    let spectrum = eigh(rho.as_hermitian())?;
    let on = |l: f64| l > SUPPORT_THRESHOLD;
    let mut ln_eigs = [0.0; 4];
    let mut kernel = [[0.0; 4]; 4];
    let mut tr_rho_ln = 0.0;
    let mut full_support = true;
    for i in 0..4 {
        let li = spectrum.eigenvalues[i];
        if on(li) {
            ln_eigs[i] = li.ln();
            tr_rho_ln += li * li.ln();
        } else {
            full_support = false;
        }
        for j in 0..4 {
            let lj = spectrum.eigenvalues[j];
            if on(li) && on(lj) {
                kernel[i][j] = log_kernel(li, lj);
            }
        }
    }
    Ok(PairData {
        pair,
        spectrum,
        ln_eigs,
        kernel,
        tr_rho_ln,
        full_support,
    })
}

pub(crate) fn state_pair_data(state: &PureState) -> Result<Vec<PairData>> {
    state
        .all_pairs()
        .into_iter()
        .map(|p| pair_data(state, p))
        .collect()
}

/// Euclidean E₂ gradient with support-restricted logs; the flag reports
/// whether every pair reduction had full support.
pub(crate) fn euclidean_gradient_support(state: &PureState) -> Result<(Vec<C64>, bool)> {
    let n = state.n_qubits();
    let pairs = state.all_pairs();
    let scale = -1.0 / (pairs.len() as f64 * LN2);
    let mut g = vec![C64::new(0.0, 0.0); state.dim()];
    let mut full = true;
    for pair in pairs {
        let data = pair_data(state, pair)?;
        full &= data.full_support;
        let log = data
            .spectrum
            .apply_function(|l| if l > SUPPORT_THRESHOLD { l.ln() } else { 0.0 });
        let applied = apply_pair_operator(state.amplitudes(), log.as_mat(), pair, n);
        for (gk, ak) in g.iter_mut().zip(&applied) {
            *gk += scale * ak;
        }
    }
    Ok((g, full))
}

/// Euclidean gradient g of E₂: dE₂ along a tangent v equals 2·Re⟨v|g⟩.
///
/// Assembled as −(1/(N·ln 2))·Σ_pairs (ln ρ_pair ⊗ I)|ψ⟩ over all N qubit
/// pairs; errors when any reduction is rank deficient.
pub fn euclidean_gradient(state: &PureState) -> Result<Vec<C64>> {
    let (g, full) = euclidean_gradient_support(state)?;
    if !full {
        return Err(Error::RankDeficient(0.0));
    }
    Ok(g)
}

pub(crate) fn projected_gradient_support(
    state: &PureState,
    mod_gauge: bool,
) -> Result<(Vec<C64>, bool)> {
    let (g, full) = euclidean_gradient_support(state)?;
    let c = dot(state.amplitudes(), &g).re;
    let mut pg: Vec<C64> = g
        .iter()
        .zip(state.amplitudes())
        .map(|(&gk, &pk)| gk - c * pk)
        .collect();
    if mod_gauge {
        let gauge = gauge_basis(state);
        for v in gauge.vectors() {
            let c = dot(v, &pg).re;
            for (pk, vk) in pg.iter_mut().zip(v) {
                *pk -= c * vk;
            }
        }
    }
    Ok((pg, full))
}

/// Sphere-tangent (optionally gauge-orthogonalized) gradient of E₂.
pub fn projected_gradient(state: &PureState, mod_gauge: bool) -> Result<TangentVector> {
    let (pg, full) = projected_gradient_support(state, mod_gauge)?;
    if !full {
        return Err(Error::RankDeficient(0.0));
    }
    TangentVector::new(state.clone(), pg)
}

// ---------------------------------------------------------------------------
// Gauge (local-unitary + phase) directions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PauliAxis {
    X,
    Y,
    Z,
}

pub(crate) fn apply_pauli(amps: &[C64], axis: PauliAxis, qubit: usize, n: usize) -> Vec<C64> {
    let shift = n - 1 - qubit;
    let mask = 1usize << shift;
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    for k in 0..amps.len() {
        if k & mask != 0 {
            continue;
        }
        let k1 = k | mask;
        match axis {
            PauliAxis::X => {
                out[k] = amps[k1];
                out[k1] = amps[k];
            }
            PauliAxis::Y => {
                out[k] = C64::new(0.0, -1.0) * amps[k1];
                out[k1] = C64::new(0.0, 1.0) * amps[k];
            }
            PauliAxis::Z => {
                out[k] = amps[k];
                out[k1] = -amps[k1];
            }
        }
    }
    out
}

/// Orthonormal (under Re⟨·|·⟩) basis of the tangent directions generated by
/// infinitesimal local unitaries and the global phase.
#[derive(Debug, Clone)]
pub struct GaugeBasis {
    base: PureState,
    vectors: Vec<Vec<C64>>,
}

impl GaugeBasis {
    pub fn base(&self) -> &PureState {
        &self.base
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }
}

fn mgs_append(basis: &mut Vec<Vec<C64>>, candidate: &[C64], residual_tol: f64) -> bool {
    let mut v = candidate.to_vec();
    // two passes of modified Gram–Schmidt keep orthonormality near 1e-15
    for _ in 0..2 {
        for b in basis.iter() {
            let c = dot(b, &v).re;
            for (vk, bk) in v.iter_mut().zip(b) {
                *vk -= c * bk;
            }
        }
    }
    let nv = norm(&v);
    if nv <= residual_tol {
        return false;
    }
    for vk in v.iter_mut() {
        *vk /= nv;
    }
    basis.push(v);
    true
}

/// Span of {i·σ_x^{(q)}ψ, i·σ_y^{(q)}ψ, i·σ_z^{(q)}ψ}_q ∪ {i·ψ}, the orbit
/// directions of local unitaries and global phase. Rank 3n+1 at a generic
/// state; smaller on symmetric states.
pub fn gauge_basis(state: &PureState) -> GaugeBasis {
    let n = state.n_qubits();
    let i = C64::new(0.0, 1.0);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(3 * n + 1);
    for q in 0..n {
        for axis in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z] {
            let mut gen = apply_pauli(state.amplitudes(), axis, q, n);
            for g in gen.iter_mut() {
                *g *= i;
            }
            mgs_append(&mut basis, &gen, GAUGE_RESIDUAL_TOL);
        }
    }
    let phase: Vec<C64> = state.amplitudes().iter().map(|&a| i * a).collect();
    mgs_append(&mut basis, &phase, GAUGE_RESIDUAL_TOL);
    GaugeBasis {
        base: state.clone(),
        vectors: basis,
    }
}

// ---------------------------------------------------------------------------
// Hessian of E₂ on the sphere tangent
// ---------------------------------------------------------------------------

/// Hessian of E₂ at a state, expressed on a deterministic orthonormal
/// Re-basis of the sphere tangent (dimension 2·2ⁿ − 1). Entry (i,j) is
/// d²/dt² E₂ along the geodesic polarization of basis vectors i and j.
#[derive(Debug, Clone)]
pub struct Hessian {
    basis: Vec<Vec<C64>>,
    matrix: Vec<f64>,
}

impl Hessian {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Row-major symmetric matrix of second derivatives.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// The orthonormal tangent basis the matrix refers to.
    pub fn basis(&self) -> &[Vec<C64>] {
        &self.basis
    }

    /// Map coordinates on the tangent basis back to a state-space vector.
    pub fn tangent_from_coords(&self, coords: &[f64]) -> Vec<C64> {
        assert_eq!(coords.len(), self.dim());
        let dim_state = self.basis[0].len();
        let mut out = vec![C64::new(0.0, 0.0); dim_state];
        for (c, b) in coords.iter().zip(&self.basis) {
            for (ok, bk) in out.iter_mut().zip(b) {
                *ok += *c * bk;
            }
        }
        out
    }

    /// Ascending eigenvalues and (row-major, column-per-eigenvalue) real
    /// eigenvectors.
    pub fn eigendecomposition(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        spectra::eigh_real_symmetric(&self.matrix, self.dim())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigendecomposition()?.0)
    }
}

/// Deterministic orthonormal Re-basis of the sphere tangent at ψ: coordinate
/// directions {e_k, i·e_k} minus their ψ-projection, Gram–Schmidt in fixed
/// order. Exactly one candidate (the ψ direction) drops out.
pub(crate) fn tangent_basis(state: &PureState) -> Vec<Vec<C64>> {
    let d = state.dim();
    let psi = state.amplitudes();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(2 * d - 1);
    for k in 0..d {
        for comp in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
            let mut cand = vec![C64::new(0.0, 0.0); d];
            cand[k] = comp;
            let c = dot(psi, &cand).re;
            for (vk, pk) in cand.iter_mut().zip(psi) {
                *vk -= c * pk;
            }
            mgs_append(&mut basis, &cand, 1e-6);
        }
    }
    debug_assert_eq!(basis.len(), 2 * d - 1);
    basis
}

/// δ²E₂ along the geodesic curve with tangent `w` (not necessarily unit),
/// using precomputed per-pair data. Support-restricted when a pair is rank
/// deficient.
pub(crate) fn d2e2_geodesic(state: &PureState, pairs: &[PairData], w: &[C64]) -> f64 {
    let n = state.n_qubits();
    let psi = state.amplitudes();
    let w_norm2: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let mut total = 0.0;
    for data in pairs {
        let dr = add_adjoint(pair_reduction(w, psi, data.pair, n));
        let sigma = pair_reduction(w, w, data.pair, n);
        // tr(δ²ρ·lnρ) with κ = −‖w‖²·ρ: tr(σ·lnρ) − ‖w‖²·tr(ρ·lnρ)
        let sig_eig = data.spectrum.to_eigenbasis(&sigma);
        let mut t1 = -w_norm2 * data.tr_rho_ln;
        for i in 0..4 {
            t1 += sig_eig[(i, i)].re * data.ln_eigs[i];
        }
        // ½·tr(δρ·δlnρ) = ½·Σ K_ij |Δ_ij|² in the eigenbasis
        let d = data.spectrum.to_eigenbasis(&dr);
        let mut t2 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                t2 += data.kernel[i][j] * d[(i, j)].norm_sqr();
            }
        }
        total += -(t1 + 0.5 * t2) / LN2;
    }
    total / pairs.len() as f64
}

pub(crate) fn hessian_support(state: &PureState) -> Result<(Hessian, bool)> {
    let pairs = state_pair_data(state)?;
    let full = pairs.iter().all(|p| p.full_support);
    let basis = tangent_basis(state);
    let m = basis.len();
    // Q(w) = d²/dt² E₂ along the geodesic with tangent w = 2·δ²E₂(w);
    // a real quadratic form in w, so entries follow by polarization.
    let q = |w: &[C64]| 2.0 * d2e2_geodesic(state, &pairs, w);
    let mut matrix = vec![0.0; m * m];
    for i in 0..m {
        matrix[i * m + i] = q(&basis[i]);
        for j in (i + 1)..m {
            let mut plus = basis[i].clone();
            let mut minus = basis[i].clone();
            for k in 0..plus.len() {
                plus[k] += basis[j][k];
                minus[k] -= basis[j][k];
            }
            let h = 0.25 * (q(&plus) - q(&minus));
            matrix[i * m + j] = h;
            matrix[j * m + i] = h;
        }
    }
    Ok((Hessian { basis, matrix }, full))
}

/// Hessian of E₂ on the sphere tangent at `state`; errors when any pair
/// reduction is rank deficient.
pub fn hessian(state: &PureState) -> Result<Hessian> {
    let pairs = state_pair_data(state)?;
    if let Some(bad) = pairs.iter().find(|p| !p.full_support) {
        return Err(Error::RankDeficient(bad.spectrum.min_eigenvalue()));
    }
    let (h, _) = hessian_support(state)?;
    Ok(h)
}

/// Retraction onto the unit sphere: normalize ψ + v.
pub fn retract(state: &PureState, step: &[C64]) -> Result<PureState> {
    if step.len() != state.dim() {
        return Err(Error::DimensionMismatch("retraction step".to_string()));
    }
    let moved: Vec<C64> = state
        .amplitudes()
        .iter()
        .zip(step)
        .map(|(&p, &v)| p + v)
        .collect();
    qcore::make_state(state.n_qubits(), moved, true)
}

#[cfg(test)]
pub(crate) fn random_tangent(rng: &mut impl rand::Rng, base: &PureState) -> TangentVector {
    let raw: Vec<C64> = (0..base.dim())
        .map(|_| {
            C64::new(
                rng.sample::<f64, _>(rand_distr::StandardNormal),
                rng.sample::<f64, _>(rand_distr::StandardNormal),
            )
        })
        .collect();
    TangentVector::projected(base.clone(), &raw).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::DensityMatrix;
    use crate::qcore::{make_state, named_state, NamedState};
    use crate::spectra::avg_pair_entropy;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut impl Rng, n: usize) -> PureState {
        let amps: Vec<C64> = (0..1usize << n)
            .map(|_| {
                C64::new(
                    rng.sample::<f64, _>(rand_distr::StandardNormal),
                    rng.sample::<f64, _>(rand_distr::StandardNormal),
                )
            })
            .collect();
        make_state(n, amps, true).unwrap()
    }

    fn random_hermitian(rng: &mut impl Rng, dim: usize) -> HermitianMatrix {
        let mut m = CMat::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = C64::new(
                    rng.sample::<f64, _>(rand_distr::StandardNormal),
                    rng.sample::<f64, _>(rand_distr::StandardNormal),
                );
            }
        }
        HermitianMatrix::new_unchecked(m.add(&m.adjoint()).scale(C64::new(0.5, 0.0)))
    }

    /// Random density with spectrum bounded away from 0 and 1.
    fn conditioned_density(rng: &mut impl Rng) -> DensityMatrix {
        let h = random_hermitian(rng, 4);
        let sq = h.as_mat().matmul(&h.as_mat().adjoint());
        let tr = sq.trace().re;
        let mixed = sq
            .scale(C64::new(0.5 / tr, 0.0))
            .add(&CMat::identity(4).scale(C64::new(0.125, 0.0)));
        DensityMatrix::new(HermitianMatrix::new_unchecked(mixed)).unwrap()
    }

    fn traceless_hermitian(rng: &mut impl Rng, dim: usize) -> HermitianMatrix {
        let h = random_hermitian(rng, dim);
        let tr = h.as_mat().trace().re / dim as f64;
        let m = h
            .as_mat()
            .sub(&CMat::identity(dim).scale(C64::new(tr, 0.0)));
        HermitianMatrix::new_unchecked(m)
    }

    #[test]
    fn tangent_validation() {
        let m4 = named_state(NamedState::M4);
        let iv: Vec<C64> = m4
            .amplitudes()
            .iter()
            .map(|a| a * C64::new(0.0, 1.0))
            .collect();
        assert!(TangentVector::new(m4.clone(), iv).is_ok());
        assert!(matches!(
            TangentVector::new(m4.clone(), m4.amplitudes().to_vec()),
            Err(Error::NormalizationCondition(_))
        ));
        let t = TangentVector::projected(m4.clone(), m4.amplitudes()).unwrap();
        assert!(t.norm() < 1e-12);
    }

    #[test]
    fn curve_validation_and_geodesic() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let m4 = named_state(NamedState::M4);
        let t = random_tangent(&mut rng, &m4);
        let geo = SecondOrderCurve::geodesic(&t);
        let c1 = dot(geo.delta(), m4.amplitudes()).re;
        let nd2: f64 = geo.delta().iter().map(|z| z.norm_sqr()).sum();
        let c2 = 2.0 * dot(geo.delta2(), m4.amplitudes()).re + nd2;
        assert!(c1.abs() < 1e-12 && c2.abs() < 1e-10 * nd2.max(1.0));
        // a second-order part violating the condition is rejected
        assert!(SecondOrderCurve::new(
            m4.clone(),
            geo.delta().to_vec(),
            vec![C64::new(0.0, 0.0); 16]
        )
        .is_err());
    }

    #[test]
    fn delta_rho_phase_direction_vanishes() {
        let m4 = named_state(NamedState::M4);
        let iv: Vec<C64> = m4
            .amplitudes()
            .iter()
            .map(|a| a * C64::new(0.0, 1.0))
            .collect();
        let t = TangentVector::new(m4.clone(), iv).unwrap();
        for pair in m4.all_pairs() {
            let dr = delta_rho(&t, pair).unwrap();
            assert!(dr.as_mat().max_abs() < 1e-14);
        }
    }

    #[test]
    fn delta_rho_m4_matrix_element() {
        // δψ = ε|0000⟩ at M4: ⟨00|δρ_AB|11⟩ = ε/√6
        let m4 = named_state(NamedState::M4);
        let eps = 0.37;
        let mut raw = vec![C64::new(0.0, 0.0); 16];
        raw[0] = C64::new(eps, 0.0);
        let t = TangentVector::new(m4.clone(), raw).unwrap();
        let dr = delta_rho(&t, QubitPair::new(0, 1, 4).unwrap()).unwrap();
        let expect = eps / 6f64.sqrt();
        assert!((dr.as_mat()[(0, 3)] - C64::new(expect, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn delta_rho_traceless_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let psi = random_state(&mut rng, 4);
            let t = random_tangent(&mut rng, &psi);
            let dr = delta_rho(&t, QubitPair::new(0, 1, 4).unwrap()).unwrap();
            assert!(dr.as_mat().trace().re.abs() < 1e-12 * t.norm().max(1.0));
            assert!(dr.as_mat().hermiticity_residual() < 1e-12);
        }
    }

    #[test]
    fn kappa_sigma_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let psi = random_state(&mut rng, 4);
        let pair = QubitPair::new(0, 2, 4).unwrap();
        let zero = SecondOrderCurve::new(
            psi.clone(),
            vec![C64::new(0.0, 0.0); 16],
            vec![C64::new(0.0, 0.0); 16],
        )
        .unwrap();
        let (k, s) = kappa_sigma_split(&zero, pair).unwrap();
        assert!(k.as_mat().max_abs() == 0.0 && s.as_mat().max_abs() == 0.0);
        for _ in 0..50 {
            let t = random_tangent(&mut rng, &psi);
            let geo = SecondOrderCurve::geodesic(&t);
            let (k, s) = kappa_sigma_split(&geo, pair).unwrap();
            let nd2: f64 = t.delta().iter().map(|z| z.norm_sqr()).sum();
            // σ trace = ⟨δψ|δψ⟩
            assert!((s.as_mat().trace().re - nd2).abs() < 1e-12 * nd2.max(1.0));
            // κ + σ = δ²ρ and δ²ρ is traceless
            let d2 = delta2_rho(&geo, pair).unwrap();
            let dev = k.as_mat().add(s.as_mat()).sub(d2.as_mat()).max_abs();
            assert!(dev < 1e-14);
            assert!(d2.as_mat().trace().re.abs() < 1e-12 * nd2.max(1.0));
            // σ is PSD
            let spec = eigh(&s).unwrap();
            assert!(spec.min_eigenvalue() > -1e-12);
        }
    }

    #[test]
    fn delta_log_identity_kernel_on_maximally_mixed() {
        // ρ = I/4: δlnρ = 4·δρ
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let quarter = HermitianMatrix::new(CMat::identity(4).scale(C64::new(0.25, 0.0))).unwrap();
        let spec = eigh(&quarter).unwrap();
        let dr = traceless_hermitian(&mut rng, 4);
        let dl = delta_log(&spec, &dr).unwrap();
        let dev = dl
            .as_mat()
            .sub(&dr.as_mat().scale(C64::new(4.0, 0.0)))
            .max_abs();
        assert!(dev < 1e-12);
    }

    #[test]
    fn delta_log_kernel_values() {
        // between λ = 1/6 and λ = 1/2 the divided difference is 3·ln3
        assert!((log_kernel(1.0 / 6.0, 0.5) - 3.0 * 3f64.ln()).abs() < 1e-14);
        assert!((log_kernel(0.5, 1.0 / 6.0) - 3.0 * 3f64.ln()).abs() < 1e-14);
        // equal eigenvalues: 1/λ
        assert!((log_kernel(1.0 / 6.0, 1.0 / 6.0) - 6.0).abs() < 1e-14);
        assert!((log_kernel(0.5, 0.5) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn delta_log_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let rho = conditioned_density(&mut rng);
        let spec = eigh(rho.as_hermitian()).unwrap();
        let x = traceless_hermitian(&mut rng, 4);
        let y = traceless_hermitian(&mut rng, 4);
        let (a, b) = (0.37, -1.21);
        let comb = HermitianMatrix::new_unchecked(
            x.as_mat()
                .scale(C64::new(a, 0.0))
                .add(&y.as_mat().scale(C64::new(b, 0.0))),
        );
        let lhs = delta_log(&spec, &comb).unwrap();
        let rhs = delta_log(&spec, &x)
            .unwrap()
            .as_mat()
            .scale(C64::new(a, 0.0))
            .add(&delta_log(&spec, &y).unwrap().as_mat().scale(C64::new(b, 0.0)));
        assert!(lhs.as_mat().sub(&rhs).max_abs() < 1e-13);
    }

    #[test]
    fn delta_log_matches_finite_differences() {
        // ‖log(ρ + t·δρ) − log ρ − t·δlnρ‖ = O(t²), checked by step halving.
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..100 {
            let rho = conditioned_density(&mut rng);
            let spec = eigh(rho.as_hermitian()).unwrap();
            let raw = traceless_hermitian(&mut rng, 4);
            let nrm = raw.as_mat().frobenius_norm();
            let dr = HermitianMatrix::new_unchecked(raw.as_mat().scale(C64::new(1.0 / nrm, 0.0)));
            let an = delta_log(&spec, &dr).unwrap();
            let an_norm = an.as_mat().frobenius_norm();

            let log_at = |t: f64| -> CMat {
                let m = rho.as_mat().add(&dr.as_mat().scale(C64::new(t, 0.0)));
                let s = eigh(&HermitianMatrix::new_unchecked(m)).unwrap();
                s.apply_function(f64::ln).into_mat()
            };
            let fd_err = |t: f64| -> f64 {
                log_at(t)
                    .sub(&log_at(-t))
                    .scale(C64::new(0.5 / t, 0.0))
                    .sub(an.as_mat())
                    .frobenius_norm()
            };
            let e1 = fd_err(1e-4);
            let e2 = fd_err(5e-5);
            assert!(e2 / an_norm <= 1e-6, "relative error {}", e2 / an_norm);
            if e1 > 1e-12 {
                let ratio = e1 / e2;
                assert!((2.5..6.0).contains(&ratio), "halving ratio {ratio}");
            }
        }
    }

    #[test]
    fn delta_log_rejects_bad_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let dr = traceless_hermitian(&mut rng, 4);
        let mut d = CMat::zeros(4);
        d[(0, 0)] = C64::new(0.5, 0.0);
        d[(1, 1)] = C64::new(0.5, 0.0);
        let spec = eigh(&HermitianMatrix::new_unchecked(d)).unwrap();
        assert!(matches!(
            delta_log(&spec, &dr),
            Err(Error::SpectrumOutOfRange(..))
        ));
        let mut d = CMat::identity(4);
        d[(0, 0)] = C64::new(1.5, 0.0);
        let spec = eigh(&HermitianMatrix::new_unchecked(d)).unwrap();
        assert!(matches!(
            delta_log(&spec, &dr),
            Err(Error::SpectrumOutOfRange(..))
        ));
    }

    #[test]
    fn variation_tr_f_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = conditioned_density(&mut rng);
        let zero = HermitianMatrix::new(CMat::zeros(4)).unwrap();
        let (f1, f2) = variation_tr_f(a.as_hermitian(), &zero, &zero).unwrap();
        assert_eq!((f1, f2), (0.0, 0.0));

        // A = diag(1/2,1/2), dA = diag(1,−1): first = 0 by symmetry
        let mut d = CMat::zeros(2);
        d[(0, 0)] = C64::new(0.5, 0.0);
        d[(1, 1)] = C64::new(0.5, 0.0);
        let a = HermitianMatrix::new(d).unwrap();
        let mut da = CMat::zeros(2);
        da[(0, 0)] = C64::new(1.0, 0.0);
        da[(1, 1)] = C64::new(-1.0, 0.0);
        let da = HermitianMatrix::new(da).unwrap();
        let zero2 = HermitianMatrix::new(CMat::zeros(2)).unwrap();
        let (f1, _) = variation_tr_f(&a, &da, &zero2).unwrap();
        assert!(f1.abs() < 1e-14);
    }

    #[test]
    fn variation_tr_f_matches_taylor_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let tr_f = |m: &CMat| -> f64 {
            let s = eigh(&HermitianMatrix::new_unchecked(m.clone())).unwrap();
            s.eigenvalues.iter().map(|&l| l * l.ln()).sum()
        };
        for _ in 0..100 {
            let a = conditioned_density(&mut rng);
            let raw_da = traceless_hermitian(&mut rng, 4);
            let da = HermitianMatrix::new_unchecked(
                raw_da
                    .as_mat()
                    .scale(C64::new(1.0 / raw_da.as_mat().frobenius_norm(), 0.0)),
            );
            let raw_d2a = traceless_hermitian(&mut rng, 4);
            let d2a = HermitianMatrix::new_unchecked(
                raw_d2a
                    .as_mat()
                    .scale(C64::new(1.0 / raw_d2a.as_mat().frobenius_norm(), 0.0)),
            );
            let (first, second) = variation_tr_f(a.as_hermitian(), &da, &d2a).unwrap();
            let g = |t: f64| -> f64 {
                tr_f(
                    &a.as_mat()
                        .add(&da.as_mat().scale(C64::new(t, 0.0)))
                        .add(&d2a.as_mat().scale(C64::new(t * t, 0.0))),
                )
            };
            let h = 1e-4;
            let (gp, gm, g0) = (g(h), g(-h), g(0.0));
            let first_fd = (gp - gm) / (2.0 * h);
            let second_fd = (gp - 2.0 * g0 + gm) / (2.0 * h * h);
            assert!((first - first_fd).abs() <= 1e-6 * first.abs().max(1.0));
            assert!((second - second_fd).abs() <= 1e-6 * second.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_delta_e_sum_and_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let h = 1e-5;
        for trial in 0..200 {
            let psi = random_state(&mut rng, 4);
            let g = match euclidean_gradient(&psi) {
                Ok(g) => g,
                Err(Error::RankDeficient(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            let pairs = psi.all_pairs();
            let n_tangents = if trial < 20 { 10 } else { 1 };
            for _ in 0..n_tangents {
                let t = random_tangent(&mut rng, &psi);
                let nrm = t.norm();
                let unit: Vec<C64> = t.delta().iter().map(|&u| u / nrm).collect();
                let tu = TangentVector::new(psi.clone(), unit.clone()).unwrap();
                let analytic = 2.0 * dot(&unit, &g).re;
                // matches the per-pair delta_e average
                let mut sum = 0.0;
                for &pair in &pairs {
                    sum += delta_e(&tu, pair).unwrap();
                }
                sum /= pairs.len() as f64;
                assert!((analytic - sum).abs() < 1e-10);
                // matches central differences of E₂ over the retraction
                let step: Vec<C64> = unit.iter().map(|&u| u * h).collect();
                let back: Vec<C64> = unit.iter().map(|&u| u * -h).collect();
                let ep = avg_pair_entropy(&retract(&psi, &step).unwrap());
                let em = avg_pair_entropy(&retract(&psi, &back).unwrap());
                let fd = (ep - em) / (2.0 * h);
                assert!(
                    (analytic - fd).abs() <= 1e-6,
                    "gradient FD deviation {}",
                    (analytic - fd).abs()
                );
            }
        }
    }

    #[test]
    fn gradient_stationary_at_m4_nonzero_at_random() {
        let m4 = named_state(NamedState::M4);
        let pg = projected_gradient(&m4, false).unwrap();
        assert!(pg.norm() < 1e-10, "|pg(M4)| = {}", pg.norm());
        let pg_mod = projected_gradient(&m4, true).unwrap();
        assert!(pg_mod.norm() < 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let psi = random_state(&mut rng, 4);
        let pg = projected_gradient(&psi, false).unwrap();
        assert!(pg.norm() > 1e-3);

        // directional derivative along i·ψ is zero
        let g = euclidean_gradient(&psi).unwrap();
        let iv: Vec<C64> = psi
            .amplitudes()
            .iter()
            .map(|a| a * C64::new(0.0, 1.0))
            .collect();
        assert!(dot(&iv, &g).re.abs() < 1e-12);
    }

    #[test]
    fn gauge_ranks() {
        // product state |0000⟩: 2 real directions per qubit + global phase = 9
        let mut amps = vec![C64::new(0.0, 0.0); 16];
        amps[0] = C64::new(1.0, 0.0);
        let zero = make_state(4, amps, false).unwrap();
        assert_eq!(gauge_basis(&zero).rank(), 9);
        assert_eq!(generator_matrix_rank(&zero), 9);

        let m4 = named_state(NamedState::M4);
        assert_eq!(gauge_basis(&m4).rank(), 10);
        assert_eq!(generator_matrix_rank(&m4), 10);

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let psi = random_state(&mut rng, 4);
        let gb = gauge_basis(&psi);
        assert_eq!(gb.rank(), 13);
        assert_eq!(generator_matrix_rank(&psi), 13);

        // every gauge vector is tangent and the set is Re-orthonormal
        for (i, v) in gb.vectors().iter().enumerate() {
            assert!(dot(v, psi.amplitudes()).re.abs() < 1e-10);
            for (j, w) in gb.vectors().iter().enumerate() {
                let ip = dot(v, w).re;
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10);
            }
        }
    }

    /// Row-echelon rank of the real (3n+1)×2^{n+1} generator matrix; an
    /// oracle independent of the Gram–Schmidt path.
    fn generator_matrix_rank(state: &PureState) -> usize {
        let n = state.n_qubits();
        let i = C64::new(0.0, 1.0);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut push = |v: Vec<C64>| {
            let mut row = Vec::with_capacity(2 * v.len());
            for z in &v {
                row.push(z.re);
            }
            for z in &v {
                row.push(z.im);
            }
            rows.push(row);
        };
        for q in 0..n {
            for axis in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z] {
                let mut gen = apply_pauli(state.amplitudes(), axis, q, n);
                for g in gen.iter_mut() {
                    *g *= i;
                }
                push(gen);
            }
        }
        push(state.amplitudes().iter().map(|&a| i * a).collect());
        let cols = rows[0].len();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..cols {
            let mut best = row;
            for r in row..rows.len() {
                if rows[r][col].abs() > rows[best][col].abs() {
                    best = r;
                }
            }
            if rows[best][col].abs() < 1e-9 {
                continue;
            }
            rows.swap(row, best);
            let pivot = rows[row][col];
            for r in 0..rows.len() {
                if r != row {
                    let f = rows[r][col] / pivot;
                    if f != 0.0 {
                        for c in col..cols {
                            let sub = f * rows[row][c];
                            rows[r][c] -= sub;
                        }
                    }
                }
            }
            rank += 1;
            row += 1;
            if row == rows.len() {
                break;
            }
        }
        rank
    }

    #[test]
    fn second_variation_matches_central_differences_at_m4() {
        let m4 = named_state(NamedState::M4);
        let pairs = state_pair_data(&m4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let e0 = avg_pair_entropy(&m4);
        for _ in 0..100 {
            let t = random_tangent(&mut rng, &m4);
            let nrm = t.norm();
            let unit: Vec<C64> = t.delta().iter().map(|&u| u / nrm).collect();
            let analytic = 2.0 * d2e2_geodesic(&m4, &pairs, &unit);
            // exact geodesic cos(h)·ψ + sin(h)·v stays unit norm
            let h = 1e-4;
            let geo_at = |t: f64| -> PureState {
                let amps: Vec<C64> = m4
                    .amplitudes()
                    .iter()
                    .zip(&unit)
                    .map(|(&p, &u)| t.cos() * p + t.sin() * u)
                    .collect();
                make_state(4, amps, true).unwrap()
            };
            let fd = (avg_pair_entropy(&geo_at(h)) - 2.0 * e0 + avg_pair_entropy(&geo_at(-h)))
                / (h * h);
            assert!(
                (analytic - fd).abs() <= 1e-5 * analytic.abs().max(1.0),
                "{analytic} vs {fd}"
            );
            // consistency with the public per-pair route
            let tu = TangentVector::new(m4.clone(), unit.clone()).unwrap();
            let geo = SecondOrderCurve::geodesic(&tu);
            let mut sum = 0.0;
            for pair in m4.all_pairs() {
                sum += delta2_e(&geo, pair).unwrap();
            }
            sum /= 6.0;
            assert!((sum - analytic / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn second_variation_zero_along_gauge_and_negative_on_random() {
        let m4 = named_state(NamedState::M4);
        let pairs = state_pair_data(&m4).unwrap();
        let gb = gauge_basis(&m4);
        for v in gb.vectors() {
            let d2 = d2e2_geodesic(&m4, &pairs, v);
            assert!(d2.abs() < 1e-9, "gauge direction curvature {d2}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let t = random_tangent(&mut rng, &m4);
            let geo = SecondOrderCurve::geodesic(&t);
            let mut sum = 0.0;
            for second in 1..4 {
                sum += delta2_e(&geo, QubitPair::new(0, second, 4).unwrap()).unwrap();
            }
            assert!(sum < 0.0, "δ²E sum at M4 should be negative, got {sum}");
        }
    }

    #[test]
    fn hessian_at_m4_inertia_and_gauge_null_space() {
        let m4 = named_state(NamedState::M4);
        let h = hessian(&m4).unwrap();
        assert_eq!(h.dim(), 31);
        for i in 0..31 {
            for j in 0..31 {
                assert!((h.matrix()[i * 31 + j] - h.matrix()[j * 31 + i]).abs() < 1e-9);
            }
        }
        let (eigs, vecs) = h.eigendecomposition().unwrap();
        let zero: usize = eigs.iter().filter(|l| l.abs() < 1e-6).count();
        let neg: usize = eigs.iter().filter(|&&l| l < -1e-3).count();
        let pos: usize = eigs.iter().filter(|&&l| l > 1e-6).count();
        assert_eq!((zero, neg, pos), (10, 21, 0));
        // negative eigenvalues fall in three exact clusters
        let c1 = -(4.0 / 3.0 + 2.0 * 3f64.ln()) / LN2;
        let c2 = -2.0 / LN2;
        let c3 = -(2.0 - 3f64.ln()) / LN2;
        for &l in eigs.iter().filter(|&&l| l < -1e-3) {
            let best = [c1, c2, c3]
                .iter()
                .map(|c| (l - c).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "eigenvalue {l} matches no cluster");
        }
        // null space spans the gauge orbit: principal angles < 1e-4
        let gb = gauge_basis(&m4);
        assert_eq!(gb.rank(), 10);
        let max_angle = max_principal_angle(&h, &eigs, &vecs, &gb, 1e-6);
        assert!(max_angle < 1e-4, "principal angle {max_angle}");
    }

    pub(crate) fn max_principal_angle(
        h: &Hessian,
        eigs: &[f64],
        vecs: &[f64],
        gauge: &GaugeBasis,
        zero_band: f64,
    ) -> f64 {
        let dim = h.dim();
        let null_idx: Vec<usize> = (0..dim).filter(|&i| eigs[i].abs() < zero_band).collect();
        let null_vectors: Vec<Vec<C64>> = null_idx
            .iter()
            .map(|&i| {
                let coords: Vec<f64> = (0..dim).map(|r| vecs[r * dim + i]).collect();
                h.tangent_from_coords(&coords)
            })
            .collect();
        let g = gauge.vectors();
        assert_eq!(g.len(), null_vectors.len());
        let k = g.len();
        // overlap matrix M_ab = Re⟨g_a|n_b⟩; principal cosines are its
        // singular values = sqrt of the eigenvalues of MᵀM
        let mut m = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                m[a * k + b] = dot(&g[a], &null_vectors[b]).re;
            }
        }
        let mut mtm = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                let mut acc = 0.0;
                for c in 0..k {
                    acc += m[c * k + a] * m[c * k + b];
                }
                mtm[a * k + b] = acc;
            }
        }
        let (svals, _) = spectra::eigh_real_symmetric(&mtm, k).unwrap();
        let min_cos = svals[0].max(0.0).sqrt().min(1.0);
        min_cos.acos()
    }

    #[test]
    fn hessian_rejects_rank_deficient_states() {
        let phi1 = named_state(NamedState::Phi1);
        assert!(matches!(hessian(&phi1), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn hessian_gauge_rows_vanish_at_stationary_state() {
        let m4 = named_state(NamedState::M4);
        let h = hessian(&m4).unwrap();
        let gb = gauge_basis(&m4);
        let dim = h.dim();
        for gvec in gb.vectors() {
            let coords: Vec<f64> = h.basis().iter().map(|b| dot(b, gvec).re).collect();
            for r in 0..dim {
                let mut acc = 0.0;
                for c in 0..dim {
                    acc += h.matrix()[r * dim + c] * coords[c];
                }
                assert!(acc.abs() < 1e-8, "gauge row residual {acc}");
            }
        }
    }
}
