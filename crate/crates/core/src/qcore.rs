//! Pure states, qubit pairs, partial traces and the named-state registry.
//!
//! Basis convention: qubit 0 (label `A`) is the most significant bit of the
//! amplitude index. `|0011⟩` on four qubits is index 3, `|1100⟩` is 12.

use crate::mat::{CMat, DensityMatrix, C64};
use crate::{Error, Result};

const NORM_CONSTRUCT_TOL: f64 = 1e-9;

/// An ordered pair of distinct qubit indices; `first` supplies the more
/// significant bit of the 2-qubit reduced index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QubitPair {
    first: usize,
    second: usize,
}

impl QubitPair {
    pub fn new(first: usize, second: usize, n_qubits: usize) -> Result<Self> {
        if first == second || first >= n_qubits || second >= n_qubits {
            return Err(Error::InvalidPair {
                first,
                second,
                n_qubits,
            });
        }
        Ok(QubitPair { first, second })
    }

    /// Parse labels like `"AB"` or `"AD"`, where `A` is qubit 0.
    pub fn parse(labels: &str, n_qubits: usize) -> Result<Self> {
        let chars: Vec<char> = labels.trim().to_ascii_uppercase().chars().collect();
        if chars.len() != 2 {
            return Err(Error::Format(format!(
                "pair `{labels}` must be two letters like AB"
            )));
        }
        let idx = |c: char| -> Result<usize> {
            let i = (c as usize).wrapping_sub('A' as usize);
            if i >= n_qubits {
                return Err(Error::Format(format!("qubit label `{c}` out of range")));
            }
            Ok(i)
        };
        QubitPair::new(idx(chars[0])?, idx(chars[1])?, n_qubits)
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn second(&self) -> usize {
        self.second
    }

    pub fn label(&self) -> String {
        let ch = |i: usize| (b'A' + i as u8) as char;
        format!("{}{}", ch(self.first), ch(self.second))
    }
}

/// Unit-norm pure state on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl PureState {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn all_pairs(&self) -> Vec<QubitPair> {
        let n = self.n_qubits;
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(QubitPair { first: i, second: j });
            }
        }
        out
    }

    /// Internal constructor for vectors already normalized to 1e-12.
    pub(crate) fn from_normalized(n_qubits: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1usize << n_qubits);
        debug_assert!((norm(&amps) - 1.0).abs() <= 1e-11);
        PureState { n_qubits, amps }
    }
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// ⟨a|b⟩, conjugate-linear in the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> Result<C64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "inner product of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(dot(a, b))
}

/// Re⟨a|b⟩, the real inner product on the underlying real vector space.
pub fn real_inner(a: &[C64], b: &[C64]) -> Result<f64> {
    Ok(inner(a, b)?.re)
}

/// Build a state from raw amplitudes.
///
/// With `normalize` the vector is scaled to unit norm; without it the norm
/// must already sit within 1e-9 of 1 (and is then snapped exactly), so that
/// malformed inputs fail loudly instead of being silently rescaled.
pub fn make_state(n_qubits: usize, amplitudes: Vec<C64>, normalize: bool) -> Result<PureState> {
    let expected = 1usize << n_qubits;
    if amplitudes.len() != expected {
        return Err(Error::LengthMismatch {
            n_qubits,
            expected,
            got: amplitudes.len(),
        });
    }
    let nrm = norm(&amplitudes);
    if nrm < 1e-150 {
        return Err(Error::ZeroVector);
    }
    if !normalize && (nrm - 1.0).abs() > NORM_CONSTRUCT_TOL {
        return Err(Error::NormViolation {
            norm: nrm,
            tol: NORM_CONSTRUCT_TOL,
        });
    }
    // Snap the norm only when it actually deviates; keeps already-normalized
    // inputs bit-exact (file round-trips).
    let amps = if (nrm - 1.0).abs() <= 1e-12 {
        amplitudes
    } else {
        amplitudes.into_iter().map(|z| z / nrm).collect()
    };
    Ok(PureState { n_qubits, amps })
}

/// Named four-qubit states used throughout the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedState {
    /// Six equal-modulus terms with third-root-of-unity phases; every
    /// two-qubit reduction is a Werner state on the separability boundary.
    M4,
    /// ½(|0000⟩ + |+011⟩ + |1101⟩ + |−110⟩) with |±⟩ on the first qubit.
    Psi4,
    /// GHZ, (|0000⟩ + |1111⟩)/√2.
    Phi1,
    /// ½(|0000⟩ + |0111⟩ + |1001⟩ + |1110⟩).
    Phi2,
}

impl NamedState {
    pub const ALL: [NamedState; 4] = [
        NamedState::M4,
        NamedState::Psi4,
        NamedState::Phi1,
        NamedState::Phi2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NamedState::M4 => "M4",
            NamedState::Psi4 => "PSI4",
            NamedState::Phi1 => "PHI1",
            NamedState::Phi2 => "PHI2",
        }
    }
}

impl std::str::FromStr for NamedState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M4" => Ok(NamedState::M4),
            "PSI4" => Ok(NamedState::Psi4),
            "PHI1" => Ok(NamedState::Phi1),
            "PHI2" => Ok(NamedState::Phi2),
            other => Err(Error::UnknownState(other.to_string())),
        }
    }
}

/// Exact amplitudes of a registry state.
pub fn named_state(name: NamedState) -> PureState {
    let mut amps = vec![C64::new(0.0, 0.0); 16];
    match name {
        NamedState::M4 => {
            let s6 = 1.0 / 6f64.sqrt();
            let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
            amps[0b0011] = C64::new(s6, 0.0);
            amps[0b1100] = C64::new(s6, 0.0);
            amps[0b0101] = omega * s6;
            amps[0b1010] = omega * s6;
            amps[0b0110] = omega.conj() * s6;
            amps[0b1001] = omega.conj() * s6;
        }
        NamedState::Psi4 => {
            let h = 0.5;
            let q = 1.0 / (2.0 * 2f64.sqrt());
            amps[0b0000] = C64::new(h, 0.0);
            amps[0b0011] = C64::new(q, 0.0);
            amps[0b1011] = C64::new(q, 0.0);
            amps[0b1101] = C64::new(h, 0.0);
            amps[0b0110] = C64::new(q, 0.0);
            amps[0b1110] = C64::new(-q, 0.0);
        }
        NamedState::Phi1 => {
            let s = 0.5f64.sqrt();
            amps[0b0000] = C64::new(s, 0.0);
            amps[0b1111] = C64::new(s, 0.0);
        }
        NamedState::Phi2 => {
            amps[0b0000] = C64::new(0.5, 0.0);
            amps[0b0111] = C64::new(0.5, 0.0);
            amps[0b1001] = C64::new(0.5, 0.0);
            amps[0b1110] = C64::new(0.5, 0.0);
        }
    }
    PureState { n_qubits: 4, amps }
}

/// Index routing for one kept pair: scatters the 2-bit pair index and a rest
/// pattern into a full basis index.
pub(crate) struct PairIndexer {
    shift_first: usize,
    shift_second: usize,
    rest_shifts: Vec<usize>,
}

impl PairIndexer {
    pub(crate) fn new(pair: QubitPair, n_qubits: usize) -> Self {
        let rest_shifts = (0..n_qubits)
            .filter(|&q| q != pair.first && q != pair.second)
            .map(|q| n_qubits - 1 - q)
            .collect();
        PairIndexer {
            shift_first: n_qubits - 1 - pair.first,
            shift_second: n_qubits - 1 - pair.second,
            rest_shifts,
        }
    }

    pub(crate) fn rest_count(&self) -> usize {
        1usize << self.rest_shifts.len()
    }

    /// Full index for pair bits `r` (r = 2·b_first + b_second) and rest
    /// pattern `m` (bit t of m → rest qubit t).
    pub(crate) fn compose(&self, r: usize, m: usize) -> usize {
        let mut k = ((r >> 1) & 1) << self.shift_first;
        k |= (r & 1) << self.shift_second;
        for (t, &sh) in self.rest_shifts.iter().enumerate() {
            k |= ((m >> (self.rest_shifts.len() - 1 - t)) & 1) << sh;
        }
        k
    }
}

/// tr_rest |u⟩⟨v| over the kept pair; the building block for reduced
/// densities and their variations.
pub(crate) fn pair_reduction(u: &[C64], v: &[C64], pair: QubitPair, n_qubits: usize) -> CMat {
    let ix = PairIndexer::new(pair, n_qubits);
    let mut rho = CMat::zeros(4);
    for m in 0..ix.rest_count() {
        let ks: [usize; 4] = std::array::from_fn(|r| ix.compose(r, m));
        for r in 0..4 {
            for c in 0..4 {
                rho[(r, c)] += u[ks[r]] * v[ks[c]].conj();
            }
        }
    }
    rho
}

/// (L ⊗ I_rest)|ψ⟩ with the 4×4 operator `op` acting on the kept pair.
pub(crate) fn apply_pair_operator(
    psi: &[C64],
    op: &CMat,
    pair: QubitPair,
    n_qubits: usize,
) -> Vec<C64> {
    debug_assert_eq!(op.dim(), 4);
    let ix = PairIndexer::new(pair, n_qubits);
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    for m in 0..ix.rest_count() {
        let ks: [usize; 4] = std::array::from_fn(|r| ix.compose(r, m));
        for r in 0..4 {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..4 {
                acc += op[(r, c)] * psi[ks[c]];
            }
            out[ks[r]] += acc;
        }
    }
    out
}

/// |φ⟩_pair ⊗ |m⟩_rest routed into the full register ordering.
pub(crate) fn embed_pair_state(
    phi: &[C64; 4],
    rest_pattern: usize,
    pair: QubitPair,
    n_qubits: usize,
) -> Vec<C64> {
    let ix = PairIndexer::new(pair, n_qubits);
    let mut out = vec![C64::new(0.0, 0.0); 1usize << n_qubits];
    for r in 0..4 {
        out[ix.compose(r, rest_pattern)] = phi[r];
    }
    out
}

/// ρ_pair = tr_rest |ψ⟩⟨ψ|, a 4×4 density matrix over (first, second).
pub fn partial_trace(state: &PureState, keep: QubitPair) -> Result<DensityMatrix> {
    QubitPair::new(keep.first, keep.second, state.n_qubits)?;
    let rho = pair_reduction(&state.amps, &state.amps, keep, state.n_qubits);
    Ok(DensityMatrix::from_pure_reduction(rho))
}

/// Single-qubit reduced density matrix (2×2).
pub fn single_qubit_reduction(state: &PureState, qubit: usize) -> Result<DensityMatrix> {
    let n = state.n_qubits;
    if qubit >= n {
        return Err(Error::InvalidPair {
            first: qubit,
            second: qubit,
            n_qubits: n,
        });
    }
    let shift = n - 1 - qubit;
    let mut rho = CMat::zeros(2);
    for k in 0..state.amps.len() {
        let b = (k >> shift) & 1;
        for b2 in 0..2 {
            let k2 = (k & !(1 << shift)) | (b2 << shift);
            rho[(b, b2)] += state.amps[k] * state.amps[k2].conj();
        }
    }
    Ok(DensityMatrix::from_pure_reduction(rho))
}

/// Relabel qubits: qubit `q` of the input becomes qubit `perm[q]` of the
/// output.
pub fn permute_qubits(state: &PureState, perm: &[usize]) -> Result<PureState> {
    let n = state.n_qubits;
    if perm.len() != n {
        return Err(Error::NonBijectivePermutation(n));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::NonBijectivePermutation(n));
        }
        seen[p] = true;
    }
    let mut amps = vec![C64::new(0.0, 0.0); state.amps.len()];
    for (k, &a) in state.amps.iter().enumerate() {
        let mut k2 = 0usize;
        for (q, &p) in perm.iter().enumerate() {
            let bit = (k >> (n - 1 - q)) & 1;
            k2 |= bit << (n - 1 - p);
        }
        amps[k2] = a;
    }
    Ok(PureState { n_qubits: n, amps })
}

/// Apply a single-qubit unitary (rows `u[0]`, `u[1]`) to one qubit.
/// The result is renormalized, so near-unitary inputs stay on the sphere.
pub fn apply_single_qubit(state: &PureState, u: &[[C64; 2]; 2], qubit: usize) -> Result<PureState> {
    let n = state.n_qubits;
    if qubit >= n {
        return Err(Error::InvalidPair {
            first: qubit,
            second: qubit,
            n_qubits: n,
        });
    }
    let shift = n - 1 - qubit;
    let mask = 1usize << shift;
    let mut amps = vec![C64::new(0.0, 0.0); state.amps.len()];
    for k in 0..state.amps.len() {
        if k & mask != 0 {
            continue;
        }
        let k1 = k | mask;
        amps[k] = u[0][0] * state.amps[k] + u[0][1] * state.amps[k1];
        amps[k1] = u[1][0] * state.amps[k] + u[1][1] * state.amps[k1];
    }
    make_state(n, amps, true)
}

/// Entrywise complex conjugate in the computational basis.
pub fn conjugate_state(state: &PureState) -> PureState {
    PureState {
        n_qubits: state.n_qubits,
        amps: state.amps.iter().map(|z| z.conj()).collect(),
    }
}

// ---------------------------------------------------------------------------
// State file format: {"version": 1, "n_qubits": n, "amplitudes": [[re, im]…]}
// ---------------------------------------------------------------------------

#[derive(serde::Deserialize)]
struct StateFile {
    version: u32,
    n_qubits: usize,
    amplitudes: Vec<[f64; 2]>,
}

/// Parse a state from the JSON wire format. The stored vector must already be
/// normalized (1e-9); this catches truncated or mangled files.
pub fn state_from_json(text: &str) -> Result<PureState> {
    let parsed: StateFile =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if parsed.version != 1 {
        return Err(Error::Format(format!(
            "unsupported state file version {}",
            parsed.version
        )));
    }
    let amps = parsed
        .amplitudes
        .iter()
        .map(|&[re, im]| C64::new(re, im))
        .collect();
    make_state(parsed.n_qubits, amps, false)
}

/// Serialize a state to the JSON wire format with 18 significant digits per
/// component, enough for exact f64 round-trips.
pub fn state_to_json(state: &PureState) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{{\"version\": 1, \"n_qubits\": {}, \"amplitudes\": [",
        state.n_qubits
    ));
    for (k, a) in state.amps.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("[{:.17e}, {:.17e}]", a.re, a.im));
    }
    out.push_str("]}");
    out
}
