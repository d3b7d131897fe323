//! Closed-form laws: radial densities of the coarse-grained Bloch vector,
//! preimage volumes, the diagonal-element density and the derivative
//! principle that links it to the radial law, and a brute-force simplex
//! slice area used as a geometric oracle.

use crate::channel::ProbVector;
use crate::error::{Error, Result};
use crate::tol;
use crate::Ensemble;

/// Largest particle count for the general-N radial law. The closed form is
/// an alternating sum whose terms grow roughly like `2^(2^N)` while the
/// value stays O(1); in double precision the cancellation is harmless
/// through N = 5 (verified against 60-digit arithmetic to ~1e-9 or better)
/// and catastrophic by N = 7, so evaluation is capped at the trustworthy
/// range.
pub const MAX_PN_QUBITS: usize = 5;

fn validate_h_open(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            constraint: "range (0, 1]",
        });
    }
    Ok(())
}

fn validate_unit_interval(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter {
            name,
            value: x,
            constraint: "range [0, 1]",
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Two-particle radial laws
// ---------------------------------------------------------------------------

/// Radial density of the coarse-grained Bloch vector for two particles with
/// asymmetry `h`: `6 r^2 / (h (1+h))` below the cusp at `r = h`, then
/// `6 r (1-r) / ((1-h)(1+h))`. The `h -> 0` limit is excluded: the linear
/// volume expansion behind the formula breaks down there.
pub fn pdf_p2(h: f64, r: f64) -> Result<f64> {
    validate_h_open(h)?;
    validate_unit_interval("r", r)?;
    Ok(pdf_p2_unchecked(h, r))
}

pub(crate) fn pdf_p2_unchecked(h: f64, r: f64) -> f64 {
    if r >= 1.0 {
        0.0 // vanishes at the surface for every h (0/0 guard at h = 1)
    } else if r < h {
        6.0 * r * r / (h * (1.0 + h))
    } else {
        6.0 * r * (1.0 - r) / ((1.0 - h) * (1.0 + h))
    }
}

/// Cumulative form of [`pdf_p2`] (piecewise cubic, exact).
pub fn cdf_p2(h: f64, r: f64) -> Result<f64> {
    validate_h_open(h)?;
    if r <= 0.0 {
        return Ok(0.0);
    }
    if r >= 1.0 {
        return Ok(1.0);
    }
    let v = if r < h {
        2.0 * r.powi(3) / (h * (1.0 + h))
    } else {
        2.0 * h * h / (1.0 + h)
            + (3.0 * r * r - 2.0 * r.powi(3) - 3.0 * h * h + 2.0 * h.powi(3))
                / (1.0 - h * h)
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Radial density for product-state preimages: zero below `r = h`, then
/// `2 r / (1 - h^2)`.
pub fn pdf_p2_separable(h: f64, r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&h) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            constraint: "range [0, 1)",
        });
    }
    validate_unit_interval("r", r)?;
    Ok(if r < h { 0.0 } else { 2.0 * r / (1.0 - h * h) })
}

/// Cumulative form of [`pdf_p2_separable`].
pub fn cdf_p2_separable(h: f64, r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&h) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            constraint: "range [0, 1)",
        });
    }
    if r <= h {
        return Ok(0.0);
    }
    if r >= 1.0 {
        return Ok(1.0);
    }
    Ok(((r * r - h * h) / (1.0 - h * h)).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Preimage volumes
// ---------------------------------------------------------------------------

/// Preimage volume of an infinitesimal neighborhood of Euclidean volume
/// `v_eps` at target radius `r_ts`: constant for `r_ts < h`, decreasing to
/// zero at the surface, and linear in `v_eps`. The separable variant
/// vanishes below `r_ts = h`.
pub fn preimage_volume(h: f64, r_ts: f64, v_eps: f64, ensemble: Ensemble) -> Result<f64> {
    validate_unit_interval("r_ts", r_ts)?;
    if !(v_eps > 0.0 && v_eps.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "v_eps",
            value: v_eps,
            constraint: "positive and finite",
        });
    }
    let tau = 2.0 * std::f64::consts::PI;
    match ensemble {
        Ensemble::Full => {
            validate_h_open(h)?;
            let pref = 3.0 * v_eps / (tau * (1.0 + h));
            Ok(if r_ts < h {
                pref / h
            } else if r_ts >= 1.0 {
                0.0
            } else {
                pref * (1.0 - r_ts) / ((1.0 - h) * r_ts)
            })
        }
        Ensemble::Separable => {
            if !(0.0..1.0).contains(&h) {
                return Err(Error::InvalidParameter {
                    name: "h",
                    value: h,
                    constraint: "range [0, 1) for the separable ensemble",
                });
            }
            Ok(if r_ts < h {
                0.0
            } else {
                v_eps / (tau * (1.0 - h * h) * r_ts)
            })
        }
    }
}

/// Exact preimage volume of a ball of radius `eps` centered on the origin,
/// valid for `h < eps`: `(eps^2 (3 - 2 eps) - h^2) / (1 - h^2)`.
pub fn origin_volume(h: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            constraint: "range (0, 1]",
        });
    }
    if !(0.0..1.0).contains(&h) || h >= eps {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            constraint: "range [0, eps)",
        });
    }
    Ok((eps * eps * (3.0 - 2.0 * eps) - h * h) / (1.0 - h * h))
}

/// The `h -> 0` limit of [`origin_volume`]: `eps^2 (3 - 2 eps)`.
pub fn origin_volume_limit(eps: f64) -> f64 {
    eps * eps * (3.0 - 2.0 * eps)
}

// ---------------------------------------------------------------------------
// Diagonal-element density and the derivative principle
// ---------------------------------------------------------------------------

fn validate_p1(p1: f64) -> Result<()> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::InvalidParameter {
            name: "p1",
            value: p1,
            constraint: "range (0, 1)",
        });
    }
    Ok(())
}

/// Density of the first diagonal element of the coarse-grained state over
/// Haar-random two-qubit inputs. Evaluated in a piecewise-exact form with
/// the `(p2 - p1)^-1` prefactor cancelled algebraically, so `p1 = 1/2` needs
/// no special casing:
/// `3 a^2 / (p1 p2)` below both weights, `3 (1-a)^2 / (p1 p2)` above both,
/// and `3 ((1-a)^2 - (pu-a)^2/(pu-pl)) / (p1 p2)` in between.
pub fn psi_diagonal(rho00: f64, p1: f64) -> Result<f64> {
    validate_unit_interval("rho00", rho00)?;
    validate_p1(p1)?;
    let p2 = 1.0 - p1;
    let (pl, pu) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
    let a = rho00;
    let core = if a <= pl {
        a * a
    } else if a >= pu {
        (1.0 - a) * (1.0 - a)
    } else {
        (1.0 - a) * (1.0 - a) - (pu - a) * (pu - a) / (pu - pl)
    };
    Ok(3.0 * core / (p1 * p2))
}

/// Analytic derivative of [`psi_diagonal`] in its first argument; one-sided
/// from the adjacent region at the kinks `a = p1, p2`.
pub fn psi_diagonal_derivative(rho00: f64, p1: f64) -> Result<f64> {
    validate_unit_interval("rho00", rho00)?;
    validate_p1(p1)?;
    let p2 = 1.0 - p1;
    let (pl, pu) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
    let a = rho00;
    let core = if a <= pl {
        2.0 * a
    } else if a >= pu {
        -2.0 * (1.0 - a)
    } else {
        -2.0 * (1.0 - a) + 2.0 * (pu - a) / (pu - pl)
    };
    Ok(3.0 * core / (p1 * p2))
}

/// The radial density recovered from a diagonal-element density:
/// `-r d/dr [psi((1+r)/2)]`, the change of variable from the larger
/// eigenvalue to the Bloch radius. The derivative is a central difference
/// with step 1e-6 (one-sided at the support ends); within a step of a kink
/// of `psi` this returns the symmetric average of the one-sided limits.
pub fn derivative_principle_pdf<F: Fn(f64) -> f64>(psi: F, r: f64) -> f64 {
    let g = |r: f64| psi((1.0 + r) / 2.0);
    let step = 1e-6;
    let d = if r + step > 1.0 {
        (g(r) - g(r - step)) / step
    } else if r - step < 0.0 {
        (g(r + step) - g(r)) / step
    } else {
        (g(r + step) - g(r - step)) / (2.0 * step)
    };
    -r * d
}

// ---------------------------------------------------------------------------
// General-N radial law
// ---------------------------------------------------------------------------

/// Precomputed general-N radial law
/// `P_N(r) = c_N r sum_l (A_l - r)^(2^N - 3) theta(A_l - r) / D_l`,
/// where the sum runs over sign patterns `l` of the probability vector,
/// `A_l` is the signed sum, and `D_l` the product of signed subset sums.
/// Terms with `A_l <= 0` vanish on the support and are dropped.
#[derive(Debug, Clone)]
pub struct PnLaw {
    /// `(A_l, 1/D_l)` for active terms, sorted by descending `A_l`.
    terms: Vec<(f64, f64)>,
    exponent: i32,
    norm_const: f64,
    num_particles: usize,
}

impl PnLaw {
    pub fn new(p: &ProbVector) -> Result<Self> {
        let n = p.len();
        if n > MAX_PN_QUBITS {
            return Err(Error::QubitCountOutOfRange(n, MAX_PN_QUBITS));
        }
        let w = p.weights();
        for i in 0..n {
            for j in (i + 1)..n {
                if (w[i] - w[j]).abs() < tol::DEGENERACY {
                    return Err(Error::DegenerateProbabilities(format!(
                        "p[{i}] and p[{j}] coincide within {:.0e}; no closed form at equal \
                         probabilities (use the Monte-Carlo pushforward instead)",
                        tol::DEGENERACY
                    )));
                }
            }
        }
        let size = 1usize << n;
        let mut s = vec![0.0f64; size];
        for mask in 1..size {
            let low = mask.trailing_zeros() as usize;
            s[mask] = s[mask & (mask - 1)] + w[low];
        }
        let mut terms = Vec::new();
        for l in 1..size {
            let a = 2.0 * s[l] - 1.0;
            if a <= 0.0 {
                continue; // theta factor vanishes for every r > 0
            }
            let mut denom = 1.0f64;
            for lp in 1..size {
                let factor = 2.0 * s[l & lp] - s[lp];
                if factor.abs() < tol::DEGENERACY {
                    return Err(Error::DegenerateProbabilities(format!(
                        "signed subset sums collide for sign pattern {l:#b}; \
                         the law has a pole at this probability vector"
                    )));
                }
                denom *= factor;
            }
            terms.push((a, 1.0 / denom));
        }
        terms.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
        let dim = (1u64 << n) as f64;
        let norm_const = (dim - 1.0) * (dim - 2.0) * (2.0f64).powi(-((1i64 << n) as i32 - 2));
        Ok(PnLaw {
            terms,
            exponent: (1i64 << n) as i32 - 3,
            norm_const,
            num_particles: n,
        })
    }

    pub fn num_particles(&self) -> usize {
        self.num_particles
    }

    /// Density at radius `r`; zero outside the support `[0, 1]` on the right.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        // terms are sorted by descending A, so stop at the first inactive one;
        // Neumaier compensation guards the alternating-sign sum
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &(a, inv_d) in &self.terms {
            if a < r {
                break;
            }
            let t = (a - r).powi(self.exponent) * inv_d;
            let fresh = sum + t;
            if sum.abs() >= t.abs() {
                comp += (sum - fresh) + t;
            } else {
                comp += (t - fresh) + sum;
            }
            sum = fresh;
        }
        self.norm_const * r * (sum + comp)
    }

    /// Kink locations of the density inside `(0, 1)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .terms
            .iter()
            .map(|&(a, _)| a)
            .filter(|&a| a > 0.0 && a < 1.0)
            .collect();
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        b
    }
}

/// One-shot evaluation of the general-N law; prefer [`PnLaw`] for grids.
pub fn pdf_pn(p: &ProbVector, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            constraint: "nonnegative",
        });
    }
    Ok(PnLaw::new(p)?.eval(r))
}

// ---------------------------------------------------------------------------
// Radial-law wrapper: evaluation, integration, CDF, inverse-CDF sampling
// ---------------------------------------------------------------------------

/// A normalized radial density on `[0, 1]`.
#[derive(Debug, Clone)]
pub enum RadialLaw {
    P2 { h: f64 },
    P2Separable { h: f64 },
    Pn(PnLaw),
}

impl RadialLaw {
    pub fn p2(h: f64) -> Result<Self> {
        validate_h_open(h)?;
        Ok(RadialLaw::P2 { h })
    }

    pub fn p2_separable(h: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&h) {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h,
                constraint: "range [0, 1)",
            });
        }
        Ok(RadialLaw::P2Separable { h })
    }

    pub fn pn(p: &ProbVector) -> Result<Self> {
        Ok(RadialLaw::Pn(PnLaw::new(p)?))
    }

    /// Density at `r` (zero outside `[0, 1]`).
    pub fn eval(&self, r: f64) -> f64 {
        if !(0.0..=1.0).contains(&r) {
            return 0.0;
        }
        match self {
            RadialLaw::P2 { h } => pdf_p2_unchecked(*h, r),
            RadialLaw::P2Separable { h } => {
                if r < *h {
                    0.0
                } else {
                    2.0 * r / (1.0 - h * h)
                }
            }
            RadialLaw::Pn(law) => law.eval(r),
        }
    }

    /// Kink locations inside `(0, 1)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialLaw::P2 { h } | RadialLaw::P2Separable { h } => {
                if *h > 0.0 && *h < 1.0 {
                    vec![*h]
                } else {
                    vec![]
                }
            }
            RadialLaw::Pn(law) => law.breakpoints(),
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        match self {
            RadialLaw::P2 { h } => cdf_p2(*h, r).expect("validated on construction"),
            RadialLaw::P2Separable { h } => {
                cdf_p2_separable(*h, r).expect("validated on construction")
            }
            RadialLaw::Pn(_) => {
                if r <= 0.0 {
                    0.0
                } else if r >= 1.0 {
                    1.0
                } else {
                    let mut pts: Vec<f64> =
                        self.breakpoints().into_iter().filter(|&b| b < r).collect();
                    pts.insert(0, 0.0);
                    pts.push(r);
                    integrate_segments(|x| self.eval(x), &pts).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// `int_0^1 f(r) dr`; equals 1 up to quadrature error for a valid law.
    pub fn normalization(&self) -> f64 {
        self.integral_against(|_| 1.0)
    }

    /// `int_0^1 r f(r) dr`.
    pub fn mean(&self) -> f64 {
        self.integral_against(|r| r)
    }

    fn integral_against<G: Fn(f64) -> f64>(&self, weight: G) -> f64 {
        let mut pts = self.breakpoints();
        pts.insert(0, 0.0);
        pts.push(1.0);
        integrate_segments(|r| weight(r) * self.eval(r), &pts)
    }

    /// Inverse-CDF draw by bisection; used as a law-exact sampling oracle.
    pub fn sample(&self, rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        use rand::Rng;
        let u: f64 = rng.random();
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

// ---------------------------------------------------------------------------
// Quadrature (piecewise-smooth integrands with known kinks)
// ---------------------------------------------------------------------------

// 16-point Gauss-Legendre nodes/weights on [0, 1] half-interval form.
const GL_NODES: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL_WEIGHTS: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_8,
    0.062_253_523_938_647_9,
    0.027_152_459_411_754_1,
];

fn gauss16<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..8 {
        let dx = hw * GL_NODES[i];
        acc += GL_WEIGHTS[i] * (f(c - dx) + f(c + dx));
    }
    acc * hw
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, depth: usize) -> f64 {
    let m = 0.5 * (a + b);
    let left = gauss16(f, a, m);
    let right = gauss16(f, m, b);
    let sum = left + right;
    if depth == 0 || (sum - whole).abs() <= 1e-12 * (1.0 + sum.abs()) {
        return sum;
    }
    adaptive(f, a, m, left, depth - 1) + adaptive(f, m, b, right, depth - 1)
}

/// Integrates over consecutive segments of `points` (which must be sorted);
/// 16-point Gauss-Legendre per segment with adaptive refinement. Exact for
/// piecewise polynomials up to degree 31 when the kinks are segment ends.
pub fn integrate_segments<F: Fn(f64) -> f64>(f: F, points: &[f64]) -> f64 {
    let mut acc = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 {
            continue;
        }
        let whole = gauss16(&f, a, b);
        acc += adaptive(&f, a, b, whole, 12);
    }
    acc
}

// ---------------------------------------------------------------------------
// Simplex slice area (geometric oracle)
// ---------------------------------------------------------------------------

/// Area of the polygon cut from the regular tetrahedron with vertices
/// `(1,1,1)/2, (-1,-1,1)/2, (1,-1,-1)/2, (-1,1,-1)/2` by the plane
/// `(p2, 0, p1) . y = a - 1/2`. The distribution of the first diagonal
/// element of the coarse-grained state is proportional to this area, which
/// makes the polygon clip an independent check on [`psi_diagonal`].
pub fn simplex_slice_area(p1: f64, a: f64) -> Result<f64> {
    validate_p1(p1)?;
    if !(0.0..=1.0).contains(&a) {
        return Ok(0.0);
    }
    let verts = [
        [0.5, 0.5, 0.5],
        [-0.5, -0.5, 0.5],
        [0.5, -0.5, -0.5],
        [-0.5, 0.5, -0.5],
    ];
    let normal = [1.0 - p1, 0.0, p1];
    let offset = a - 0.5;
    let val = |v: &[f64; 3]| normal[0] * v[0] + normal[1] * v[1] + normal[2] * v[2] - offset;
    let f: Vec<f64> = verts.iter().map(val).collect();

    let mut pts: Vec<[f64; 3]> = Vec::new();
    let push = |p: [f64; 3], pts: &mut Vec<[f64; 3]>| {
        if !pts.iter().any(|q| {
            (q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12 && (q[2] - p[2]).abs() < 1e-12
        }) {
            pts.push(p);
        }
    };
    for i in 0..4 {
        if f[i].abs() < 1e-14 {
            push(verts[i], &mut pts);
        }
        for j in (i + 1)..4 {
            if f[i] * f[j] < 0.0 {
                let t = f[i] / (f[i] - f[j]);
                let p = [
                    verts[i][0] + t * (verts[j][0] - verts[i][0]),
                    verts[i][1] + t * (verts[j][1] - verts[i][1]),
                    verts[i][2] + t * (verts[j][2] - verts[i][2]),
                ];
                push(p, &mut pts);
            }
        }
    }
    if pts.len() < 3 {
        return Ok(0.0);
    }

    // orthonormal basis in the cutting plane
    let nn = (normal[0] * normal[0] + normal[2] * normal[2]).sqrt();
    let nh = [normal[0] / nn, 0.0, normal[2] / nn];
    let e1 = [-nh[2], 0.0, nh[0]];
    let e2 = [
        nh[1] * e1[2] - nh[2] * e1[1],
        nh[2] * e1[0] - nh[0] * e1[2],
        nh[0] * e1[1] - nh[1] * e1[0],
    ];
    let centroid = pts.iter().fold([0.0; 3], |acc, p| {
        [acc[0] + p[0], acc[1] + p[1], acc[2] + p[2]]
    });
    let k = pts.len() as f64;
    let centroid = [centroid[0] / k, centroid[1] / k, centroid[2] / k];
    let mut plane: Vec<(f64, f64)> = pts
        .iter()
        .map(|p| {
            let d = [p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]];
            (
                d[0] * e1[0] + d[1] * e1[1] + d[2] * e1[2],
                d[0] * e2[0] + d[1] * e2[1] + d[2] * e2[2],
            )
        })
        .collect();
    plane.sort_by(|u, v| {
        u.1.atan2(u.0)
            .partial_cmp(&v.1.atan2(v.0))
            .unwrap()
    });
    let mut area2 = 0.0;
    for i in 0..plane.len() {
        let (x1, y1) = plane[i];
        let (x2, y2) = plane[(i + 1) % plane.len()];
        area2 += x1 * y2 - x2 * y1;
    }
    Ok(area2.abs() / 2.0)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // frozen oracle values keep their full digits
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Test-side adaptive Simpson, independent of the library quadrature.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, depth: usize) -> f64 {
        let m = 0.5 * (a + b);
        let coarse = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let fine = (b - a) / 12.0
            * (f(a) + 4.0 * f(lm) + 2.0 * f(m) + 4.0 * f(rm) + f(b));
        if depth == 0 || (fine - coarse).abs() < 1e-12 {
            fine
        } else {
            simpson(f, a, m, depth - 1) + simpson(f, m, b, depth - 1)
        }
    }

    fn fig7_vector(n: usize) -> ProbVector {
        let w = match n {
            2 => vec![0.4, 0.6],
            3 => vec![0.4, 0.35, 0.25],
            4 => vec![0.4, 0.35, 0.15, 0.1],
            5 => vec![0.4, 0.35, 0.15, 0.08, 0.02],
            _ => panic!("no reference vector for n = {n}"),
        };
        ProbVector::new(w).unwrap()
    }

    #[test]
    fn p2_boundary_zeros_and_cusp() {
        for &h in &[0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
            assert_abs_diff_eq!(pdf_p2(h, 0.0).unwrap(), 0.0);
            assert_abs_diff_eq!(pdf_p2(h, 1.0).unwrap(), 0.0, epsilon = 1e-14);
            if h < 1.0 {
                let below = pdf_p2(h, h - 1e-12).unwrap();
                let above = pdf_p2(h, h + 1e-12).unwrap();
                assert_abs_diff_eq!(below, above, epsilon = 1e-9);
            }
        }
        assert!(pdf_p2(0.0, 0.5).is_err());
        assert!(pdf_p2(0.5, 1.5).is_err());
    }

    #[test]
    fn p2_normalizes_for_all_h() {
        for k in 1..=9 {
            let h = k as f64 / 10.0;
            let norm = simpson(&|r| pdf_p2(h, r).unwrap(), 0.0, h, 30)
                + simpson(&|r| pdf_p2(h, r).unwrap(), h, 1.0, 30);
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-10);
            // closed-form CDF agrees with quadrature
            let q = simpson(&|r| pdf_p2(h, r).unwrap(), 0.0, h, 30)
                + simpson(&|r| pdf_p2(h, r).unwrap(), h, 0.77, 30);
            assert_abs_diff_eq!(cdf_p2(h, 0.77).unwrap(), q, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(cdf_p2(0.2, 0.5).unwrap(), 0.47916666666666667, epsilon = 1e-14);
    }

    #[test]
    fn p2_separable_zero_branch_and_norm() {
        assert_abs_diff_eq!(pdf_p2_separable(0.6, 0.3).unwrap(), 0.0);
        for &h in &[0.0, 0.2, 0.5, 0.9] {
            let norm = simpson(&|r| pdf_p2_separable(h, r).unwrap(), h, 1.0, 30);
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
        assert!(pdf_p2_separable(1.0, 0.5).is_err());
    }

    #[test]
    fn preimage_volume_shape() {
        let v = 1e-4;
        // constant below the cusp
        let a = preimage_volume(0.4, 0.2, v, Ensemble::Full).unwrap();
        let b = preimage_volume(0.4, 0.3, v, Ensemble::Full).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-18);
        // zero at the surface
        assert_abs_diff_eq!(
            preimage_volume(0.4, 1.0, v, Ensemble::Full).unwrap(),
            0.0
        );
        // strictly decreasing outside
        let mut prev = preimage_volume(0.4, 0.4, v, Ensemble::Full).unwrap();
        for k in 1..=20 {
            let r = 0.4 + 0.6 * k as f64 / 21.0;
            let cur = preimage_volume(0.4, r, v, Ensemble::Full).unwrap();
            assert!(cur < prev);
            prev = cur;
        }
        // continuous at the cusp
        let inside = preimage_volume(0.4, 0.4 - 1e-13, v, Ensemble::Full).unwrap();
        let outside = preimage_volume(0.4, 0.4, v, Ensemble::Full).unwrap();
        assert_abs_diff_eq!(inside, outside, epsilon = 1e-12 * inside.abs());
        // linear in v_eps
        assert_abs_diff_eq!(
            preimage_volume(0.4, 0.7, 2.0 * v, Ensemble::Full).unwrap(),
            2.0 * preimage_volume(0.4, 0.7, v, Ensemble::Full).unwrap(),
            epsilon = 1e-18
        );
        // separable branch
        assert_abs_diff_eq!(
            preimage_volume(0.4, 0.2, v, Ensemble::Separable).unwrap(),
            0.0
        );
        assert!(preimage_volume(0.4, 0.7, v, Ensemble::Separable).unwrap() > 0.0);
    }

    #[test]
    fn origin_volume_values() {
        // limit formula at eps = 0.1
        assert_abs_diff_eq!(origin_volume_limit(0.1), 0.028, epsilon = 1e-15);
        assert_abs_diff_eq!(origin_volume(0.0, 0.1).unwrap(), 0.028, epsilon = 1e-15);
        // boundary value h = eps is excluded but h just below matches algebra
        let eps = 0.1f64;
        let h = 0.099_999;
        let want = (eps * eps * (3.0 - 2.0 * eps) - h * h) / (1.0 - h * h);
        assert_abs_diff_eq!(origin_volume(h, eps).unwrap(), want, epsilon = 1e-15);
        assert!(origin_volume(0.1, 0.1).is_err());
        // monotone decreasing in h
        let mut prev = origin_volume(0.0, 0.2).unwrap();
        for k in 1..10 {
            let cur = origin_volume(0.02 * k as f64, 0.2).unwrap();
            assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn psi_diagonal_matches_frozen_value_and_normalizes() {
        assert_abs_diff_eq!(
            psi_diagonal(0.45, 0.3).unwrap(),
            2.0892857142857143,
            epsilon = 1e-14
        );
        for &p1 in &[0.1f64, 0.3, 0.499999, 0.5, 0.7] {
            let pts = [0.0, p1.min(1.0 - p1), p1.max(1.0 - p1), 1.0];
            let mut norm = 0.0;
            for w in pts.windows(2) {
                norm += simpson(&|a| psi_diagonal(a, p1).unwrap(), w[0], w[1], 30);
            }
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn psi_diagonal_exchange_symmetry_and_cusp() {
        for k in 0..50 {
            let a = 0.01 + 0.98 * k as f64 / 49.0;
            assert_abs_diff_eq!(
                psi_diagonal(a, 0.3).unwrap(),
                psi_diagonal(1.0 - a, 0.7).unwrap(),
                epsilon = 1e-13
            );
        }
        // equal weights: quadratic arcs meeting in a cusp at 1/2
        assert_abs_diff_eq!(psi_diagonal(0.25, 0.5).unwrap(), 12.0 * 0.0625, epsilon = 1e-13);
        assert_abs_diff_eq!(psi_diagonal(0.75, 0.5).unwrap(), 12.0 * 0.0625, epsilon = 1e-13);
        let d_left = psi_diagonal_derivative(0.5 - 1e-9, 0.5).unwrap();
        let d_right = psi_diagonal_derivative(0.5 + 1e-9, 0.5).unwrap();
        assert!(d_left > 11.9 && d_right < -11.9, "cusp slopes {d_left} {d_right}");
        // near-equal weights evaluate smoothly (no catastrophic cancellation)
        assert_abs_diff_eq!(
            psi_diagonal(0.25, 0.5 - 1e-9).unwrap(),
            12.0 * 0.0625,
            epsilon = 1e-7
        );
    }

    #[test]
    fn derivative_principle_recovers_radial_law() {
        for &h in &[0.2, 0.48, 0.8] {
            let p1 = (1.0 - h) / 2.0;
            for k in 0..200 {
                let r = 0.002 + 0.996 * k as f64 / 199.0;
                if (r - h).abs() < 1e-5 {
                    continue; // kink of psi
                }
                let got = derivative_principle_pdf(|a| psi_diagonal(a, p1).unwrap(), r);
                assert_abs_diff_eq!(got, pdf_p2(h, r).unwrap(), epsilon = 1e-9);
            }
        }
        // constant density maps to zero
        for k in 1..10 {
            let r = k as f64 / 10.0;
            assert_abs_diff_eq!(derivative_principle_pdf(|_| 3.7, r), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn finite_difference_matches_analytic_derivative() {
        let p1 = 0.3;
        for k in 0..100 {
            let a = 0.005 + 0.99 * k as f64 / 99.0;
            if (a - 0.3).abs() < 1e-5 || (a - 0.7).abs() < 1e-5 {
                continue;
            }
            let fd = (psi_diagonal(a + 1e-6, p1).unwrap() - psi_diagonal(a - 1e-6, p1).unwrap())
                / 2e-6;
            assert_abs_diff_eq!(
                fd,
                psi_diagonal_derivative(a, p1).unwrap(),
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn pn_reduces_to_p2() {
        for k in 1..=9 {
            let h = k as f64 / 10.0;
            let p = ProbVector::new(vec![(1.0 - h) / 2.0, (1.0 + h) / 2.0]).unwrap();
            let law = PnLaw::new(&p).unwrap();
            for j in 0..=1000 {
                let r = j as f64 / 1000.0;
                assert_abs_diff_eq!(law.eval(r), pdf_p2(h, r).unwrap(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn pn_matches_frozen_high_precision_values() {
        let law3 = PnLaw::new(&fig7_vector(3)).unwrap();
        assert_abs_diff_eq!(law3.eval(0.2), 2.6194871794871795, epsilon = 1e-12);
        assert_abs_diff_eq!(law3.eval(0.5), 1.0016025641025641, epsilon = 1e-12);
        assert_abs_diff_eq!(law3.eval(0.9), 0.00057692307692307692, epsilon = 1e-13);
        let law4 = PnLaw::new(&fig7_vector(4)).unwrap();
        assert_abs_diff_eq!(law4.eval(0.3), 2.4711879964942195, epsilon = 1e-10);
        let law5 = PnLaw::new(&fig7_vector(5)).unwrap();
        assert_abs_diff_eq!(law5.eval(0.1), 5.1462907966056982, epsilon = 5e-8);
    }

    #[test]
    fn pn_support_and_degeneracies() {
        let p = fig7_vector(3);
        assert_abs_diff_eq!(pdf_pn(&p, 1.2).unwrap(), 0.0);
        assert_abs_diff_eq!(pdf_pn(&p, 0.0).unwrap(), 0.0);
        assert!(pdf_pn(&p, -0.1).is_err());
        // pairwise-equal entries are rejected
        let eq = ProbVector::new(vec![0.25, 0.25, 0.5]).unwrap();
        assert!(matches!(
            PnLaw::new(&eq),
            Err(Error::DegenerateProbabilities(..))
        ));
        // p1 = p2 + p3 only ties subset sums in terms that vanish on the
        // support, so the law stays evaluable and normalized
        let benign = ProbVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let law = RadialLaw::pn(&benign).unwrap();
        assert_abs_diff_eq!(law.normalization(), 1.0, epsilon = 1e-10);
        // a tie hitting a term that is active on the support is a true pole
        let tie = ProbVector::new(vec![0.44, 0.28, 0.18, 0.10]).unwrap();
        assert!(matches!(
            PnLaw::new(&tie),
            Err(Error::DegenerateProbabilities(..))
        ));
    }

    #[test]
    fn pn_normalization_and_mean_decrease() {
        let mut prev_mean = f64::INFINITY;
        for n in 2..=5 {
            let law = RadialLaw::pn(&fig7_vector(n)).unwrap();
            assert_abs_diff_eq!(law.normalization(), 1.0, epsilon = 1e-8);
            let mean = law.mean();
            assert!(
                mean < prev_mean,
                "mean radius must shrink with particle count"
            );
            prev_mean = mean;
        }
        // frozen quadrature means
        assert_abs_diff_eq!(
            RadialLaw::pn(&fig7_vector(2)).unwrap().mean(),
            0.5166666667,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            RadialLaw::pn(&fig7_vector(5)).unwrap().mean(),
            0.1549483355,
            epsilon = 1e-8
        );
    }

    #[test]
    fn pn_rejects_counts_beyond_trustworthy_range() {
        let w = vec![0.1704, 0.1185, 0.233, 0.1388, 0.1042, 0.2351];
        assert!(matches!(
            PnLaw::new(&ProbVector::new(w).unwrap()),
            Err(Error::QubitCountOutOfRange(6, MAX_PN_QUBITS))
        ));
    }

    #[test]
    fn radial_law_cdf_and_sampling() {
        use rand::SeedableRng;
        let law = RadialLaw::p2(0.48).unwrap();
        assert_abs_diff_eq!(law.cdf(0.0), 0.0);
        assert_abs_diff_eq!(law.cdf(1.0), 1.0);
        let pn = RadialLaw::pn(&fig7_vector(3)).unwrap();
        assert_abs_diff_eq!(pn.cdf(1.0), 1.0, epsilon = 1e-8);
        // inverse-CDF draws follow the law (moment check)
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| law.sample(&mut rng)).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(mean, law.mean(), epsilon = 0.005);
    }

    #[test]
    fn slice_area_basics() {
        // outside the unit interval the slice is empty
        assert_abs_diff_eq!(simplex_slice_area(0.3, -0.2).unwrap(), 0.0);
        assert_abs_diff_eq!(simplex_slice_area(0.3, 1.1).unwrap(), 0.0);
        // equal weights: the slice is a triangle whose linear size grows
        // linearly in a up to the cusp at 1/2 (area grows quadratically,
        // matching the parabolic tails of the diagonal-element density),
        // then mirrors
        let a1 = simplex_slice_area(0.5, 0.1).unwrap();
        let a2 = simplex_slice_area(0.5, 0.2).unwrap();
        let a4 = simplex_slice_area(0.5, 0.4).unwrap();
        assert_abs_diff_eq!(a2 / a1, 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a4 / a1, 16.0, epsilon = 1e-9);
        for &a in &[0.1, 0.25, 0.4] {
            assert_abs_diff_eq!(
                simplex_slice_area(0.5, a).unwrap(),
                simplex_slice_area(0.5, 1.0 - a).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn slice_area_proportional_to_psi() {
        // single global scale, then pointwise agreement
        let p1 = 0.3;
        let grid: Vec<f64> = (0..50).map(|k| 0.01 + 0.02 * k as f64).collect();
        let areas: Vec<f64> = grid
            .iter()
            .map(|&a| simplex_slice_area(p1, a).unwrap())
            .collect();
        let psis: Vec<f64> = grid.iter().map(|&a| psi_diagonal(a, p1).unwrap()).collect();
        let scale = areas
            .iter()
            .zip(&psis)
            .map(|(x, y)| x * y)
            .sum::<f64>()
            / areas.iter().map(|x| x * x).sum::<f64>();
        // the scale is the known constant sqrt(p1^2 + p2^2)/ (|grad| * vol) product
        let expect = 3.0 / (p1 * p1 + (1.0 - p1) * (1.0 - p1)).sqrt();
        assert_abs_diff_eq!(scale, expect, epsilon = 1e-9);
        for ((&a, &area), &psi) in grid.iter().zip(&areas).zip(&psis) {
            assert_abs_diff_eq!(area * scale, psi, epsilon = 1e-8);
            let _ = a;
        }
    }

    #[test]
    fn quadrature_is_exact_on_segment_polynomials() {
        // degree-29 polynomial integrated exactly per segment
        let f = |x: f64| (0.73 - x).powi(29);
        let got = integrate_segments(f, &[0.0, 0.73]);
        let want = 0.73f64.powi(30) / 30.0;
        assert_abs_diff_eq!(got, want, epsilon = 1e-15);
    }
}
