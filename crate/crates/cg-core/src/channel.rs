//! The fuzzy measurement, the coarse-graining maps (N -> 1 and N -> m), the
//! composite spin operator, and the unitary covariance check.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qstate::{validate_permutation, BlochVector, DensityMatrix, PureState};
use crate::tol;

/// Detection probabilities `p = (p_1, ..., p_N)`, nonnegative and summing
/// to one.
///
/// For two particles the ordering convention `p_1 <= p_2` is enforced on
/// construction (a supplied `(0.7, 0.3)` becomes `(0.3, 0.7)`); every
/// two-particle law depends only on the asymmetry `h = p_2 - p_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    p: Vec<f64>,
}

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidProbabilities(format!(
                "need at least 2 entries, got {}",
                p.len()
            )));
        }
        if p.iter().any(|&x| !(0.0..=1.0).contains(&x) || !x.is_finite()) {
            return Err(Error::InvalidProbabilities(format!(
                "entries must lie in [0, 1]: {p:?}"
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tol::PROB_SUM {
            return Err(Error::InvalidProbabilities(format!(
                "sum is {sum}, expected 1"
            )));
        }
        let mut p = p;
        if p.len() == 2 && p[0] > p[1] {
            p.swap(0, 1);
        }
        Ok(ProbVector { p })
    }

    /// Two-particle weights from the asymmetry `h = 1 - 2 p_1`, `h in (0, 1]`.
    pub fn from_asymmetry(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h,
                constraint: "range (0, 1]",
            });
        }
        ProbVector::new(vec![(1.0 - h) / 2.0, (1.0 + h) / 2.0])
    }

    pub fn uniform(n: usize) -> Self {
        ProbVector {
            p: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.p
    }

    /// `h = p_2 - p_1` for two particles, `None` otherwise.
    pub fn asymmetry(&self) -> Option<f64> {
        if self.p.len() == 2 {
            Some(self.p[1] - self.p[0])
        } else {
            None
        }
    }
}

/// A convex mixture of qubit permutations: the fuzzy measurement
/// `F[rho] = sum_P w_P P rho P^dag`.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationMixture {
    terms: Vec<(Vec<usize>, f64)>,
    n: usize,
}

impl PermutationMixture {
    pub fn new(terms: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        let n = terms
            .first()
            .map(|(p, _)| p.len())
            .ok_or_else(|| Error::InvalidProbabilities("empty mixture".into()))?;
        let mut sum = 0.0;
        for (perm, w) in &terms {
            validate_permutation(perm, n)?;
            if *w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidProbabilities(format!(
                    "negative or non-finite weight {w}"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > tol::PROB_SUM {
            return Err(Error::InvalidProbabilities(format!(
                "mixture weights sum to {sum}, expected 1"
            )));
        }
        Ok(PermutationMixture { terms, n })
    }

    pub fn identity(n: usize) -> Self {
        PermutationMixture {
            terms: vec![((0..n).collect(), 1.0)],
            n,
        }
    }

    /// The mixture of swaps `S_{0,i}` with weight `p_i` (the term `i = 0` is
    /// the identity).
    pub fn detector_swaps(p: &ProbVector) -> Self {
        let n = p.len();
        let terms = p
            .weights()
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.swap(0, i);
                (perm, w)
            })
            .collect();
        PermutationMixture { terms, n }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Vec<usize>, f64)] {
        &self.terms
    }
}

/// For each particle `i`, the total weight of permutations that bring it to
/// the detector slot 0. Tracing out everything but slot 0 of the fuzzy
/// measurement is the same as mixing the marginals with these weights.
pub fn detection_weights(mix: &PermutationMixture) -> Vec<f64> {
    let mut q = vec![0.0; mix.n];
    for (perm, w) in &mix.terms {
        let i = perm.iter().position(|&t| t == 0).expect("bijection");
        q[i] += w;
    }
    q
}

/// `F[rho] = sum_P w_P P rho P^dag`, permuting tensor factors.
pub fn fuzzy_measure(rho: &DensityMatrix, mix: &PermutationMixture) -> Result<DensityMatrix> {
    let n = rho.num_qubits();
    if mix.n != n {
        return Err(Error::DimensionMismatch(mix.n, n));
    }
    let dim = rho.dim();
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    for (perm, w) in &mix.terms {
        if *w == 0.0 {
            continue;
        }
        // sigma(l): index with the bit of qubit i moved to slot perm[i]
        let mut sigma = vec![0usize; dim];
        for (l, s) in sigma.iter_mut().enumerate() {
            let mut m = 0usize;
            for (i, &t) in perm.iter().enumerate() {
                let bit = (l >> (n - 1 - i)) & 1;
                m |= bit << (n - 1 - t);
            }
            *s = m;
        }
        for i in 0..dim {
            for j in 0..dim {
                out[sigma[i] * dim + sigma[j]] += rho.entry(i, j) * *w;
            }
        }
    }
    Ok(DensityMatrix::from_parts_unchecked(out, dim, n))
}

/// The coarse-graining channel on a pure state:
/// `C[|psi><psi|] = sum_i p_i rho_i`, the convex mixture of single-qubit
/// marginals.
pub fn apply_cg(psi: &PureState, p: &ProbVector) -> Result<DensityMatrix> {
    let n = psi.num_qubits();
    if p.len() != n {
        return Err(Error::DimensionMismatch(p.len(), n));
    }
    let amps = psi.amplitudes();
    let dim = psi.dim();
    let mut m00 = 0.0f64;
    let mut m01 = C64::new(0.0, 0.0);
    for (i, &w) in p.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let mask = 1usize << (n - 1 - i);
        let mut a00 = 0.0f64;
        let mut a01 = C64::new(0.0, 0.0);
        for l in 0..dim {
            if l & mask == 0 {
                a00 += amps[l].norm_sqr();
                a01 += amps[l] * amps[l | mask].conj();
            }
        }
        m00 += w * a00;
        m01 += a01 * w;
    }
    let data = vec![
        C64::new(m00, 0.0),
        m01,
        m01.conj(),
        C64::new(1.0 - m00, 0.0),
    ];
    Ok(DensityMatrix::from_parts_unchecked(data, 2, 1))
}

/// Lexicographic `k`-subsets of `0..n`.
pub(crate) fn lex_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// The general reduction `C_m[rho] = sum_i w_i tr_{c(i)} rho` keeping `m`
/// qubits. Weights are indexed by the lexicographic enumeration of the KEPT
/// `m`-subsets; `c(i)` is the complement. For `m = 1` this reduces to
/// [`apply_cg`] with `w_i` the detection probability of qubit `i`.
pub fn apply_cg_general(
    rho: &DensityMatrix,
    weights: &[f64],
    m: usize,
) -> Result<DensityMatrix> {
    let n = rho.num_qubits();
    if m == 0 || m >= n {
        return Err(Error::InvalidParameter {
            name: "m",
            value: m as f64,
            constraint: "range 1..N",
        });
    }
    let kept_sets = lex_subsets(n, m);
    if weights.len() != kept_sets.len() {
        return Err(Error::InvalidProbabilities(format!(
            "expected {} subset weights, got {}",
            kept_sets.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidProbabilities(
            "subset weights must be nonnegative".into(),
        ));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > tol::PROB_SUM {
        return Err(Error::InvalidProbabilities(format!(
            "subset weights sum to {sum}, expected 1"
        )));
    }
    let out_dim = 1usize << m;
    let mut acc = vec![C64::new(0.0, 0.0); out_dim * out_dim];
    for (keep, &w) in kept_sets.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let red = rho.partial_trace(keep)?;
        for (a, r) in acc.iter_mut().zip(red.data()) {
            *a += r * w;
        }
    }
    Ok(DensityMatrix::from_parts_unchecked(acc, out_dim, m))
}

/// Normalized spin expectation value `tr(rho S)/m`, one component per Pauli
/// axis; always inside the closed unit ball.
pub fn spin_expectation(rho: &DensityMatrix) -> BlochVector {
    let m = rho.num_qubits();
    let mut total = BlochVector::ZERO;
    for q in 0..m {
        let marginal = rho.partial_trace(&[q]).expect("qubit in range");
        total = total.add(&marginal.bloch_vector().expect("single qubit"));
    }
    total.scale(1.0 / m as f64)
}

fn unitarity_deviation(u: &[[C64; 2]; 2]) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let acc: C64 = u.iter().map(|row| row[i].conj() * row[j]).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((acc - expect).norm());
        }
    }
    dev
}

/// Frobenius norm of `C[U^xN psi] - U C[psi] U^dag`; zero by covariance of
/// the channel under local unitaries.
pub fn check_covariance(
    psi: &PureState,
    p: &ProbVector,
    u: &[[C64; 2]; 2],
) -> Result<f64> {
    let dev = unitarity_deviation(u);
    if dev > tol::UNITARITY {
        return Err(Error::NotUnitary(dev));
    }
    let lhs = apply_cg(&psi.apply_to_all_qubits(u), p)?;
    let flat = [u[0][0], u[0][1], u[1][0], u[1][1]];
    let rhs = apply_cg(psi, p)?.conjugate(&flat);
    Ok(lhs.frobenius_distance(&rhs))
}
