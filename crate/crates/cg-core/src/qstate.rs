//! Pure states, density matrices, Bloch vectors, and the two-qubit Schmidt
//! parametrization.
//!
//! Qubit indices are zero-based; qubit 0 is the most significant bit of the
//! computational-basis label, so `|q0 q1 ... q(N-1)>` reads as a binary
//! number. This convention is fixed here and used by every module.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Largest supported qubit count (dense vectors up to 2^12).
pub const MAX_QUBITS: usize = 12;

// ---------------------------------------------------------------------------
// Bloch vectors
// ---------------------------------------------------------------------------

/// A point of the closed unit ball representing a single-qubit mixed state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    /// Vector with radius `r` at polar angle `theta`, azimuth `phi`.
    pub fn from_spherical(r: f64, theta: f64, phi: f64) -> Self {
        BlochVector {
            x: r * theta.sin() * phi.cos(),
            y: r * theta.sin() * phi.sin(),
            z: r * theta.cos(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Polar angle of the direction; 0 for the zero vector.
    pub fn theta(&self) -> f64 {
        let r = self.norm();
        if r == 0.0 {
            0.0
        } else {
            (self.z / r).clamp(-1.0, 1.0).acos()
        }
    }

    /// Azimuthal angle in [0, 2pi).
    pub fn phi(&self) -> f64 {
        let p = self.y.atan2(self.x);
        if p < 0.0 {
            p + 2.0 * std::f64::consts::PI
        } else {
            p
        }
    }

    pub fn scale(&self, s: f64) -> BlochVector {
        BlochVector::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn add(&self, other: &BlochVector) -> BlochVector {
        BlochVector::new(self.x + other.x, self.y + other.y, self.z + other.z)
    }

    pub fn sub(&self, other: &BlochVector) -> BlochVector {
        BlochVector::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    /// Errors unless the norm is at most 1 + 1e-12.
    pub fn validate_in_ball(&self) -> Result<()> {
        let n = self.norm();
        if n > 1.0 + 1e-12 {
            return Err(Error::TargetOutsideBall(n));
        }
        Ok(())
    }
}

/// Rotation by `theta` about the axis `(-sin phi, cos phi, 0)`, which carries
/// the z axis onto the `(theta, phi)` direction along a geodesic. Returned as
/// a 3x3 matrix acting on Bloch vectors.
pub fn so3_geodesic_rotation(theta: f64, phi: f64) -> [[f64; 3]; 3] {
    let (ax, ay, az) = (-phi.sin(), phi.cos(), 0.0);
    let c = theta.cos();
    let s = theta.sin();
    let t = 1.0 - c;
    [
        [t * ax * ax + c, t * ax * ay - s * az, t * ax * az + s * ay],
        [t * ax * ay + s * az, t * ay * ay + c, t * ay * az - s * ax],
        [t * ax * az - s * ay, t * ay * az + s * ax, t * az * az + c],
    ]
}

/// SU(2) element implementing [`so3_geodesic_rotation`] on Bloch vectors:
/// `U = cos(theta/2) I - i sin(theta/2) (a . sigma)` with the same axis `a`.
pub fn su2_geodesic_rotation(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (ax, ay) = (-phi.sin(), phi.cos());
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    // -i s (ax sx + ay sy) with az = 0
    [
        [C64::new(c, 0.0), C64::new(-s * ay, -s * ax)],
        [C64::new(s * ay, -s * ax), C64::new(c, 0.0)],
    ]
}

pub fn apply_so3(m: &[[f64; 3]; 3], v: &BlochVector) -> BlochVector {
    BlochVector::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

// ---------------------------------------------------------------------------
// Kets on the Bloch sphere
// ---------------------------------------------------------------------------

/// `|n> = cos(t/2) e^{-i phi/2} |0> + sin(t/2) e^{i phi/2} |1>`.
pub fn bloch_ket(theta: f64, phi: f64) -> [C64; 2] {
    let half = C64::new(0.0, -phi / 2.0).exp();
    [
        half * (theta / 2.0).cos(),
        half.conj() * (theta / 2.0).sin(),
    ]
}

/// The antipodal ket with the phase convention fixed by the product-state
/// expansion used throughout: `|-n> = sin(t/2) e^{-i phi/2} |0> - cos(t/2) e^{i phi/2} |1>`.
pub fn bloch_ket_antipodal(theta: f64, phi: f64) -> [C64; 2] {
    let half = C64::new(0.0, -phi / 2.0).exp();
    [
        half * (theta / 2.0).sin(),
        -half.conj() * (theta / 2.0).cos(),
    ]
}

// ---------------------------------------------------------------------------
// Pure states
// ---------------------------------------------------------------------------

/// A unit-norm amplitude vector on `N` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
    num_qubits: usize,
}

impl PureState {
    /// Wraps amplitudes, requiring length `2^N` and unit norm within 1e-12.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let num_qubits = qubits_for_dim(amps.len())?;
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm2.sqrt() - 1.0).abs() > tol::NORM {
            return Err(Error::NotNormalized((norm2.sqrt() - 1.0).abs(), tol::NORM));
        }
        Ok(PureState { amps, num_qubits })
    }

    /// Normalizes the amplitudes, then wraps them.
    pub fn from_unnormalized(amps: Vec<C64>) -> Result<Self> {
        let num_qubits = qubits_for_dim(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NotNormalized(1.0, tol::NORM));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(PureState { amps, num_qubits })
    }

    /// The computational-basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        assert!((1..=MAX_QUBITS).contains(&num_qubits));
        assert!(index < 1 << num_qubits);
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[index] = ONE;
        PureState { amps, num_qubits }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|`; equals 1 iff the states agree up to a global phase.
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.inner(other).norm()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        PureState {
            amps,
            num_qubits: self.num_qubits + other.num_qubits,
        }
    }

    pub fn density(&self) -> DensityMatrix {
        let d = self.dim();
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = self.amps[i] * self.amps[j].conj();
            }
        }
        DensityMatrix {
            data,
            dim: d,
            num_qubits: self.num_qubits,
        }
    }

    /// Applies a 2x2 operator to one qubit.
    pub fn apply_one_qubit(&self, u: &[[C64; 2]; 2], qubit: usize) -> Result<PureState> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitIndexOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        let mask = 1usize << (self.num_qubits - 1 - qubit);
        let mut amps = self.amps.clone();
        for l in 0..self.dim() {
            if l & mask == 0 {
                let a0 = self.amps[l];
                let a1 = self.amps[l | mask];
                amps[l] = u[0][0] * a0 + u[0][1] * a1;
                amps[l | mask] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
        Ok(PureState {
            amps,
            num_qubits: self.num_qubits,
        })
    }

    /// Applies the same 2x2 operator to every qubit (`U` tensored N times).
    pub fn apply_to_all_qubits(&self, u: &[[C64; 2]; 2]) -> PureState {
        let mut st = self.clone();
        for q in 0..self.num_qubits {
            st = st.apply_one_qubit(u, q).expect("qubit index in range");
        }
        st
    }

    /// Relabels qubits: the qubit at position `i` moves to position `perm[i]`.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<PureState> {
        validate_permutation(perm, self.num_qubits)?;
        let n = self.num_qubits;
        let mut amps = vec![ZERO; self.dim()];
        for l in 0..self.dim() {
            let mut m = 0usize;
            for (i, &target) in perm.iter().enumerate() {
                let bit = (l >> (n - 1 - i)) & 1;
                m |= bit << (n - 1 - target);
            }
            amps[m] = self.amps[l];
        }
        Ok(PureState {
            amps,
            num_qubits: n,
        })
    }
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange(n, MAX_QUBITS));
    }
    Ok(n)
}

pub(crate) fn validate_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(perm.to_vec(), n));
    }
    let mut seen = vec![false; n];
    for &t in perm {
        if t >= n || seen[t] {
            return Err(Error::InvalidPermutation(perm.to_vec(), n));
        }
        seen[t] = true;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// Hermitian, PSD, trace-one complex matrix on `m` qubits, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: Vec<C64>,
    dim: usize,
    num_qubits: usize,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-12), unit trace (1e-12), and PSD up to
    /// -1e-10 on the eigenvalues. Inputs within the Hermiticity tolerance
    /// are symmetrized, `rho <- (rho + rho^dag)/2`.
    pub fn new(data: Vec<C64>) -> Result<Self> {
        let dim2 = data.len();
        let dim = (dim2 as f64).sqrt().round() as usize;
        if dim * dim != dim2 {
            return Err(Error::NotSquare(dim2));
        }
        let num_qubits = qubits_for_dim(dim)?;
        let mut m = DensityMatrix {
            data,
            dim,
            num_qubits,
        };
        let mut max_asym = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let d = (m.data[i * dim + j] - m.data[j * dim + i].conj()).norm();
                max_asym = max_asym.max(d);
            }
        }
        if max_asym > tol::HERMITICITY {
            return Err(Error::NotHermitian(max_asym, tol::HERMITICITY));
        }
        m.symmetrize();
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol::TRACE {
            return Err(Error::InvalidTrace(tr.re, tol::TRACE));
        }
        let min_ev = m
            .eigenvalues()
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_ev < -tol::PSD_FLOOR {
            return Err(Error::NotPsd(min_ev));
        }
        Ok(m)
    }

    pub(crate) fn from_parts_unchecked(data: Vec<C64>, dim: usize, num_qubits: usize) -> Self {
        DensityMatrix {
            data,
            dim,
            num_qubits,
        }
    }

    fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = (self.data[i * d + j] + self.data[j * d + i].conj()) * 0.5;
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg.conj();
            }
            let re = self.data[i * d + i].re;
            self.data[i * d + i] = C64::new(re, 0.0);
        }
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix {
            data,
            dim,
            num_qubits,
        }
    }

    /// Single-qubit state `(I + r . sigma)/2`.
    pub fn from_bloch(r: &BlochVector) -> Result<Self> {
        r.validate_in_ball()?;
        let data = vec![
            C64::new((1.0 + r.z) / 2.0, 0.0),
            C64::new(r.x / 2.0, -r.y / 2.0),
            C64::new(r.x / 2.0, r.y / 2.0),
            C64::new((1.0 - r.z) / 2.0, 0.0),
        ];
        Ok(DensityMatrix {
            data,
            dim: 2,
            num_qubits: 1,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        let mut p = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                p += (self.data[i * self.dim + j] * self.data[j * self.dim + i]).re;
            }
        }
        p
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Traces out every qubit not in `keep`; `keep` must be nonempty,
    /// strictly increasing is not required (it is sorted internally), and the
    /// kept qubits appear in ascending original order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        let n = self.num_qubits;
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        for &q in &keep {
            if q >= n {
                return Err(Error::QubitIndexOutOfRange {
                    index: q,
                    num_qubits: n,
                });
            }
        }
        let k = keep.len();
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let out_dim = 1usize << k;
        let env_dim = 1usize << traced.len();
        // bit position (from the left) q occupies shift n-1-q in the index
        let kept_shifts: Vec<usize> = keep.iter().map(|&q| n - 1 - q).collect();
        let traced_shifts: Vec<usize> = traced.iter().map(|&q| n - 1 - q).collect();
        let compose = |sub: usize, shifts: &[usize]| -> usize {
            let mut idx = 0usize;
            for (b, &sh) in shifts.iter().enumerate() {
                idx |= ((sub >> (shifts.len() - 1 - b)) & 1) << sh;
            }
            idx
        };
        let mut data = vec![ZERO; out_dim * out_dim];
        for a in 0..out_dim {
            let abase = compose(a, &kept_shifts);
            for b in 0..out_dim {
                let bbase = compose(b, &kept_shifts);
                let mut acc = ZERO;
                for e in 0..env_dim {
                    let ebits = compose(e, &traced_shifts);
                    acc += self.data[(abase | ebits) * self.dim + (bbase | ebits)];
                }
                data[a * out_dim + b] = acc;
            }
        }
        Ok(DensityMatrix {
            data,
            dim: out_dim,
            num_qubits: k,
        })
    }

    /// Bloch vector of a single-qubit state.
    pub fn bloch_vector(&self) -> Result<BlochVector> {
        if self.dim != 2 {
            return Err(Error::DimensionMismatch(self.dim, 2));
        }
        Ok(BlochVector::new(
            2.0 * self.data[1].re,
            -2.0 * self.data[1].im,
            (self.data[0] - self.data[3]).re,
        ))
    }

    /// Coefficients of the expansion `rho = 2^-m sum_nu c_nu sigma_nu`.
    pub fn pauli_coefficients(&self) -> PauliCoefficients {
        let m = self.num_qubits;
        let count = 4usize.pow(m as u32);
        let mut coeffs = vec![0.0; count];
        for (flat, c) in coeffs.iter_mut().enumerate() {
            *c = self.pauli_component_flat(flat).re;
        }
        PauliCoefficients {
            coeffs,
            num_qubits: m,
        }
    }

    /// `tr(rho sigma_nu)` for a single multi-index, exploiting that sigma_nu
    /// has exactly one nonzero entry per row.
    fn pauli_component_flat(&self, flat: usize) -> C64 {
        let m = self.num_qubits;
        let mut nu = vec![0usize; m];
        let mut f = flat;
        for k in (0..m).rev() {
            nu[k] = f % 4;
            f /= 4;
        }
        // sigma[k, i] is nonzero only at k = i ^ flip; phase depends on i's bit
        let mut flip = 0usize;
        for (k, &v) in nu.iter().enumerate() {
            if v == 1 || v == 2 {
                flip |= 1 << (m - 1 - k);
            }
        }
        let mut acc = ZERO;
        for i in 0..self.dim {
            let k = i ^ flip;
            // phase = prod over qubits of sigma_{nu_q}[k_q, i_q]
            let mut phase = ONE;
            for (q, &v) in nu.iter().enumerate() {
                let bit = (i >> (m - 1 - q)) & 1;
                phase *= match v {
                    0 | 1 => ONE,
                    2 => {
                        if bit == 0 {
                            C64::new(0.0, 1.0) // sigma_y[1,0] = i
                        } else {
                            C64::new(0.0, -1.0) // sigma_y[0,1] = -i
                        }
                    }
                    3 => {
                        if bit == 0 {
                            ONE
                        } else {
                            -ONE
                        }
                    }
                    _ => unreachable!(),
                };
            }
            // tr(rho sigma) = sum_i rho[i, k] sigma[k, i]
            acc += self.data[i * self.dim + k] * phase;
        }
        acc
    }

    /// Hermitian eigenvalues in ascending order (cyclic Jacobi).
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.data, self.dim)
    }

    /// Eigenvalues of the partial transpose on one qubit (PPT criterion).
    pub fn partial_transpose_eigenvalues(&self, qubit: usize) -> Result<Vec<f64>> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitIndexOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        let mask = 1usize << (self.num_qubits - 1 - qubit);
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                let ii = (i & !mask) | (j & mask);
                let jj = (j & !mask) | (i & mask);
                data[ii * d + jj] = self.data[i * d + j];
            }
        }
        Ok(hermitian_eigenvalues(&data, d))
    }

    /// `U rho U^dag` for a matching-dimension operator.
    pub fn conjugate(&self, u: &[C64]) -> DensityMatrix {
        let d = self.dim;
        assert_eq!(u.len(), d * d);
        let mut tmp = vec![ZERO; d * d];
        for i in 0..d {
            for k in 0..d {
                let uik = u[i * d + k];
                if uik == ZERO {
                    continue;
                }
                for j in 0..d {
                    tmp[i * d + j] += uik * self.data[k * d + j];
                }
            }
        }
        let mut out = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += tmp[i * d + k] * u[j * d + k].conj();
                }
                out[i * d + j] = acc;
            }
        }
        DensityMatrix {
            data: out,
            dim: d,
            num_qubits: self.num_qubits,
        }
    }

    /// `U rho U^dag` with the same single-qubit operator on every qubit.
    pub fn conjugate_local_all(&self, u: &[[C64; 2]; 2]) -> DensityMatrix {
        let mut full = vec![ONE];
        let mut dim = 1usize;
        for _ in 0..self.num_qubits {
            let mut next = vec![ZERO; (dim * 2) * (dim * 2)];
            for i in 0..dim {
                for j in 0..dim {
                    for a in 0..2 {
                        for b in 0..2 {
                            next[(i * 2 + a) * (dim * 2) + (j * 2 + b)] =
                                full[i * dim + j] * u[a][b];
                        }
                    }
                }
            }
            full = next;
            dim *= 2;
        }
        self.conjugate(&full)
    }
}

/// Eigenvalues of a Hermitian matrix via cyclic complex Jacobi rotations.
pub(crate) fn hermitian_eigenvalues(data: &[C64], dim: usize) -> Vec<f64> {
    let mut a = data.to_vec();
    let idx = |i: usize, j: usize| i * dim + j;
    let off = |a: &[C64]| -> f64 {
        let mut s = 0.0;
        for i in 0..dim {
            for j in (i + 1)..dim {
                s += a[idx(i, j)].norm_sqr();
            }
        }
        s
    };
    let scale: f64 = (0..dim).map(|i| a[idx(i, i)].norm_sqr()).sum::<f64>() + off(&a) + 1e-300;
    for _sweep in 0..60 {
        if off(&a) <= 1e-30 * scale {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let g = a[idx(p, q)];
                let gn = g.norm();
                if gn <= 1e-300 {
                    continue;
                }
                let w = g / gn; // unit phase of the off-diagonal entry
                let alpha = a[idx(p, p)].re;
                let beta = a[idx(q, q)].re;
                let theta = 0.5 * (2.0 * gn).atan2(beta - alpha);
                let c = theta.cos();
                let s = theta.sin();
                // rows/columns r outside {p,q}
                for r in 0..dim {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[idx(r, p)];
                    let arq = a[idx(r, q)];
                    let new_rp = arp * c - arq * (w.conj() * s);
                    let new_rq = arp * (w * s) + arq * c;
                    a[idx(r, p)] = new_rp;
                    a[idx(p, r)] = new_rp.conj();
                    a[idx(r, q)] = new_rq;
                    a[idx(q, r)] = new_rq.conj();
                }
                let new_pp = c * c * alpha + s * s * beta - 2.0 * c * s * gn;
                let new_qq = s * s * alpha + c * c * beta + 2.0 * c * s * gn;
                a[idx(p, p)] = C64::new(new_pp, 0.0);
                a[idx(q, q)] = C64::new(new_qq, 0.0);
                a[idx(p, q)] = ZERO;
                a[idx(q, p)] = ZERO;
            }
        }
    }
    let mut evs: Vec<f64> = (0..dim).map(|i| a[idx(i, i)].re).collect();
    evs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    evs
}

// ---------------------------------------------------------------------------
// Pauli expansion
// ---------------------------------------------------------------------------

/// Real coefficients `c_nu = tr(rho sigma_nu)` over multi-indices
/// `nu in {0,1,2,3}^m`, flattened base-4 with `nu_0` most significant.
#[derive(Debug, Clone)]
pub struct PauliCoefficients {
    coeffs: Vec<f64>,
    num_qubits: usize,
}

impl PauliCoefficients {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, nu: &[usize]) -> f64 {
        assert_eq!(nu.len(), self.num_qubits);
        let mut flat = 0usize;
        for &v in nu {
            assert!(v < 4);
            flat = flat * 4 + v;
        }
        self.coeffs[flat]
    }

    /// `rho = 2^-m sum_nu c_nu sigma_nu`.
    pub fn reconstruct(&self) -> DensityMatrix {
        let m = self.num_qubits;
        let dim = 1usize << m;
        let mut data = vec![ZERO; dim * dim];
        for (flat, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mut nu = vec![0usize; m];
            let mut f = flat;
            for k in (0..m).rev() {
                nu[k] = f % 4;
                f /= 4;
            }
            let mut flip = 0usize;
            for (k, &v) in nu.iter().enumerate() {
                if v == 1 || v == 2 {
                    flip |= 1 << (m - 1 - k);
                }
            }
            for i in 0..dim {
                let k = i ^ flip;
                // sigma[i, k] (note: row i, column k here)
                let mut phase = ONE;
                for (q, &v) in nu.iter().enumerate() {
                    let bit = (i >> (m - 1 - q)) & 1;
                    phase *= match v {
                        0 | 1 => ONE,
                        2 => {
                            // sigma_y[i_q, k_q] with k_q = 1 - i_q
                            if bit == 0 {
                                C64::new(0.0, -1.0)
                            } else {
                                C64::new(0.0, 1.0)
                            }
                        }
                        3 => {
                            if bit == 0 {
                                ONE
                            } else {
                                -ONE
                            }
                        }
                        _ => unreachable!(),
                    };
                }
                data[i * dim + k] += phase * (c / dim as f64);
            }
        }
        DensityMatrix::from_parts_unchecked(data, dim, m)
    }
}

// ---------------------------------------------------------------------------
// Schmidt parametrization of two-qubit pure states
// ---------------------------------------------------------------------------

/// Angles `(eta, gamma, theta_1, phi_1, theta_2, phi_2)` parametrizing a
/// two-qubit pure state as
/// `cos(eta/2) |n1, n2> + sin(eta/2) e^{i gamma} |-n1, -n2>`,
/// where `n_i` has polar angles `(theta_i, phi_i)`. Both reduced states have
/// Bloch radius `|cos eta|`; the concurrence is `sin eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchmidtParams {
    pub eta: f64,
    pub gamma: f64,
    pub theta1: f64,
    pub phi1: f64,
    pub theta2: f64,
    pub phi2: f64,
}

impl SchmidtParams {
    pub fn new(
        eta: f64,
        gamma: f64,
        theta1: f64,
        phi1: f64,
        theta2: f64,
        phi2: f64,
    ) -> Result<Self> {
        let pi = std::f64::consts::PI;
        let tau = 2.0 * pi;
        let polar = |name: &'static str, v: f64| -> Result<()> {
            if !(0.0..=pi).contains(&v) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    constraint: "range [0, pi]",
                });
            }
            Ok(())
        };
        let azim = |name: &'static str, v: f64| -> Result<()> {
            if !(0.0..=tau).contains(&v) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    constraint: "range [0, 2pi)",
                });
            }
            Ok(())
        };
        polar("eta", eta)?;
        azim("gamma", gamma)?;
        polar("theta1", theta1)?;
        azim("phi1", phi1)?;
        polar("theta2", theta2)?;
        azim("phi2", phi2)?;
        Ok(SchmidtParams {
            eta,
            gamma,
            theta1,
            phi1,
            theta2,
            phi2,
        })
    }

    /// Builds the parametrized state.
    pub fn state(&self) -> PureState {
        let n1 = bloch_ket(self.theta1, self.phi1);
        let n2 = bloch_ket(self.theta2, self.phi2);
        let m1 = bloch_ket_antipodal(self.theta1, self.phi1);
        let m2 = bloch_ket_antipodal(self.theta2, self.phi2);
        let ch = C64::new((self.eta / 2.0).cos(), 0.0);
        let sh = C64::new(0.0, self.gamma).exp() * (self.eta / 2.0).sin();
        let mut amps = vec![ZERO; 4];
        for (i, &a) in n1.iter().enumerate() {
            for (j, &b) in n2.iter().enumerate() {
                amps[i * 2 + j] = ch * a * b;
            }
        }
        for (i, &a) in m1.iter().enumerate() {
            for (j, &b) in m2.iter().enumerate() {
                amps[i * 2 + j] += sh * a * b;
            }
        }
        PureState {
            amps,
            num_qubits: 2,
        }
    }

    /// Closed form of the reduced state of qubit `which` (0 or 1):
    /// diagonal `(1 +- cos eta cos theta)/2`, off-diagonal
    /// `e^{-i phi} cos eta sin theta / 2`.
    pub fn reduced_closed_form(&self, which: usize) -> DensityMatrix {
        let (theta, phi) = match which {
            0 => (self.theta1, self.phi1),
            1 => (self.theta2, self.phi2),
            _ => panic!("two-qubit state has qubits 0 and 1"),
        };
        let ce = self.eta.cos();
        let data = vec![
            C64::new((1.0 + ce * theta.cos()) / 2.0, 0.0),
            C64::new(0.0, -phi).exp() * (ce * theta.sin() / 2.0),
            C64::new(0.0, phi).exp() * (ce * theta.sin() / 2.0),
            C64::new((1.0 - ce * theta.cos()) / 2.0, 0.0),
        ];
        DensityMatrix::from_parts_unchecked(data, 2, 1)
    }

    /// Reduced Bloch radius `|cos eta|`.
    pub fn bloch_radius(&self) -> f64 {
        self.eta.cos().abs()
    }

    /// Recovers Schmidt parameters from a two-qubit state. When the Schmidt
    /// coefficients are degenerate (maximally entangled input, `eta = pi/2`)
    /// the bases are not unique and a canonical representative with
    /// `n1 = z` is returned.
    pub fn from_state(psi: &PureState) -> Result<SchmidtParams> {
        if psi.num_qubits != 2 {
            return Err(Error::DimensionMismatch(psi.dim(), 4));
        }
        let rho1 = psi.density().partial_trace(&[0])?;
        let rho2 = psi.density().partial_trace(&[1])?;
        let r1 = rho1.bloch_vector()?;
        let r2 = rho2.bloch_vector()?;
        let radius = 0.5 * (r1.norm() + r2.norm());

        let (theta1, phi1, theta2, phi2) = if radius > tol::DEGENERACY {
            (r1.theta(), r1.phi(), r2.theta(), r2.phi())
        } else {
            // maximally entangled: fix n1 = z and read n2 off the |0> block
            let v0 = [psi.amps[0], psi.amps[1]];
            let t2 = 2.0 * v0[1].norm().atan2(v0[0].norm());
            let p2 = wrap_azimuth((v0[1] * v0[0].conj()).arg());
            (0.0, 0.0, t2, p2)
        };

        let n1 = bloch_ket(theta1, phi1);
        let n2 = bloch_ket(theta2, phi2);
        let m1 = bloch_ket_antipodal(theta1, phi1);
        let m2 = bloch_ket_antipodal(theta2, phi2);
        let mut a = ZERO; // <n1 n2|psi>
        let mut b = ZERO; // <-n1 -n2|psi>
        for i in 0..2 {
            for j in 0..2 {
                a += (n1[i] * n2[j]).conj() * psi.amps[i * 2 + j];
                b += (m1[i] * m2[j]).conj() * psi.amps[i * 2 + j];
            }
        }
        let eta = 2.0 * b.norm().atan2(a.norm());
        let gamma = if b.norm() < 1e-14 || a.norm() < 1e-14 {
            0.0
        } else {
            wrap_azimuth((b * a.conj()).arg())
        };
        Ok(SchmidtParams {
            eta,
            gamma,
            theta1,
            phi1,
            theta2,
            phi2,
        })
    }
}

fn wrap_azimuth(mut x: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    while x < 0.0 {
        x += tau;
    }
    while x >= tau {
        x -= tau;
    }
    x
}

/// Concurrence of a two-qubit pure state, `2 |c00 c11 - c01 c10|`
/// (modulus of the spin-flip overlap `<psi| sigma_y x sigma_y |psi*>`).
pub fn concurrence(psi: &PureState) -> Result<f64> {
    if psi.num_qubits() != 2 {
        return Err(Error::DimensionMismatch(psi.dim(), 4));
    }
    let a = psi.amplitudes();
    Ok(2.0 * (a[0] * a[3] - a[1] * a[2]).norm())
}
