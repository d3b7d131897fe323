//! Seeded random generation: Haar-uniform pure states, uniform product
//! states, flat simplex draws, and exact preimage samplers for the
//! two-particle coarse-graining channel.
//!
//! Preimage sampling uses the channel-adapted coordinates `(kappa, v, gamma)`
//! on the set of states mapping onto a fixed target: the invariant measure is
//! flat in them, so uniform draws are exact. `kappa = r/R` is the ratio of
//! the reduced Bloch radius to the target radius and ranges over
//! `[1, kappa_f]` with `kappa_f = 1/h` inside the sphere of radius `h` and
//! `1/R` outside.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{apply_cg, ProbVector};
use crate::error::{Error, Result};
use crate::qstate::{
    apply_so3, so3_geodesic_rotation, BlochVector, PureState, SchmidtParams, C64, MAX_QUBITS,
};

/// Seed plus substream id; identical pairs reproduce identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        RngSeed { seed, stream }
    }

    /// Substream `k` relative to this one.
    pub fn substream(&self, k: u64) -> Self {
        RngSeed {
            seed: self.seed,
            stream: self.stream.wrapping_add(k),
        }
    }

    /// A fresh generator positioned at the start of this (seed, stream).
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Haar-uniform pure state on `n_qubits` qubits: i.i.d. standard complex
/// Gaussian amplitudes, normalized.
pub fn sample_haar_state(n_qubits: usize, rng: &mut ChaCha8Rng) -> Result<PureState> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange(n_qubits, MAX_QUBITS));
    }
    let dim = 1usize << n_qubits;
    let amps: Vec<C64> = (0..dim)
        .map(|_| {
            C64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            )
        })
        .collect();
    PureState::from_unnormalized(amps)
}

/// Uniform point on the unit sphere.
pub fn sample_bloch_direction(rng: &mut ChaCha8Rng) -> BlochVector {
    let z: f64 = rng.random::<f64>() * 2.0 - 1.0;
    let phi: f64 = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
    let s = (1.0 - z * z).max(0.0).sqrt();
    BlochVector::new(s * phi.cos(), s * phi.sin(), z)
}

/// Product state `|n1> x |n2>` with independent uniform directions.
pub fn sample_product_state(rng: &mut ChaCha8Rng) -> PureState {
    let n1 = sample_bloch_direction(rng);
    let n2 = sample_bloch_direction(rng);
    let k1 = crate::qstate::bloch_ket(n1.theta(), n1.phi());
    let k2 = crate::qstate::bloch_ket(n2.theta(), n2.phi());
    PureState::new(k1.to_vec())
        .unwrap()
        .tensor(&PureState::new(k2.to_vec()).unwrap())
}

/// Flat Dirichlet draw on the `(dim-1)`-simplex via normalized exponentials.
pub fn sample_flat_simplex(dim: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if dim < 2 {
        return Err(Error::InvalidParameter {
            name: "dim",
            value: dim as f64,
            constraint: "at least 2",
        });
    }
    let mut draws: Vec<f64> = (0..dim)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let sum: f64 = draws.iter().sum();
    draws.iter_mut().for_each(|x| *x /= sum);
    Ok(draws)
}

/// The two spheres inside the Bloch ball on which the reduced Bloch vectors
/// of a preimage of `target` must lie.
#[derive(Debug, Clone, Copy)]
pub struct PreimageSpheres {
    pub center1: BlochVector,
    pub center2: BlochVector,
    pub radius1: f64,
    pub radius2: f64,
}

/// Centers `c1 = -r_ts (1-h)/2h`, `c2 = r_ts (1+h)/2h` and radii
/// `R1 = r_ts (1+h)/2h`, `R2 = r_ts (1-h)/2h`; the spheres touch at the
/// target point.
pub fn preimage_spheres(target: &BlochVector, h: f64) -> Result<PreimageSpheres> {
    validate_h(h)?;
    target.validate_in_ball()?;
    let r = target.norm();
    Ok(PreimageSpheres {
        center1: target.scale(-(1.0 - h) / (2.0 * h)),
        center2: target.scale((1.0 + h) / (2.0 * h)),
        radius1: r * (1.0 + h) / (2.0 * h),
        radius2: r * (1.0 - h) / (2.0 * h),
    })
}

fn validate_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            constraint: "range (0, 1]",
        });
    }
    Ok(())
}

/// Coordinates of one preimage point of `target`: radius ratio `kappa`,
/// sphere azimuth `v`, and relative phase `gamma`.
#[derive(Debug, Clone, Copy)]
pub struct PreimageCoords {
    pub kappa: f64,
    pub v: f64,
    pub gamma: f64,
    pub target: BlochVector,
}

impl PreimageCoords {
    /// Upper end of the `kappa` range for a target of radius `r_ts`.
    pub fn kappa_max(r_ts: f64, h: f64) -> f64 {
        if r_ts <= h {
            1.0 / h
        } else {
            1.0 / r_ts
        }
    }

    /// Uniform draw of `(kappa, v, gamma)`; the flat box is exactly the
    /// invariant measure on the preimage. `h = 1` carries no information in
    /// `kappa` and is handled by [`sample_preimage`] directly.
    pub fn sample(target: &BlochVector, h: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        validate_h(h)?;
        target.validate_in_ball()?;
        if h == 1.0 {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h,
                constraint: "range (0, 1) for coordinate sampling",
            });
        }
        let tau = 2.0 * std::f64::consts::PI;
        let kf = Self::kappa_max(target.norm(), h);
        Ok(PreimageCoords {
            kappa: 1.0 + rng.random::<f64>() * (kf - 1.0),
            v: rng.random::<f64>() * tau,
            gamma: rng.random::<f64>() * tau,
            target: *target,
        })
    }

    /// Polar angle `u` on the off-center sphere, from
    /// `2 h^2 kappa^2 = 1 + h^2 - (1 - h^2) cos u`.
    pub fn polar_u(&self, h: f64) -> f64 {
        cos_u_from_kappa(self.kappa, h).acos()
    }

    /// The pure state at these coordinates.
    pub fn state(&self, h: f64) -> Result<PureState> {
        validate_h(h)?;
        if h == 1.0 {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h,
                constraint: "range (0, 1) for coordinate sampling",
            });
        }
        let cos_u = cos_u_from_kappa(self.kappa, h);
        let r = self.kappa * self.target.norm();
        Ok(state_from_sphere_point(
            &self.target,
            h,
            r,
            cos_u,
            self.v,
            self.gamma,
        ))
    }
}

fn cos_u_from_kappa(kappa: f64, h: f64) -> f64 {
    ((1.0 + h * h - 2.0 * h * h * kappa * kappa) / (1.0 - h * h)).clamp(-1.0, 1.0)
}

/// Builds the two-qubit state whose reduced Bloch vectors are
/// `r_i = r * unit(R_geo a_i)` with `a_1 = ((1+h) m_uv - (1-h) k)/2h`,
/// `a_2 = a_1(h -> -h)`, rotated so the z axis lands on the target direction.
fn state_from_sphere_point(
    target: &BlochVector,
    h: f64,
    r: f64,
    cos_u: f64,
    v: f64,
    gamma: f64,
) -> PureState {
    let sin_u = (1.0 - cos_u * cos_u).max(0.0).sqrt();
    let m = BlochVector::new(sin_u * v.cos(), sin_u * v.sin(), cos_u);
    let k = BlochVector::new(0.0, 0.0, 1.0);
    // a2 is a1 with h negated
    let a1 = m.scale((1.0 + h) / (2.0 * h)).sub(&k.scale((1.0 - h) / (2.0 * h)));
    let a2 = k.scale((1.0 + h) / (2.0 * h)).sub(&m.scale((1.0 - h) / (2.0 * h)));
    let rot = so3_geodesic_rotation(target.theta(), target.phi());
    let d1 = apply_so3(&rot, &a1);
    let d2 = apply_so3(&rot, &a2);
    let n1 = d1.scale(1.0 / d1.norm());
    let n2 = d2.scale(1.0 / d2.norm());
    let eta = r.clamp(0.0, 1.0).acos();
    SchmidtParams {
        eta,
        gamma,
        theta1: n1.theta(),
        phi1: n1.phi(),
        theta2: n2.theta(),
        phi2: n2.phi(),
    }
    .state()
}

/// Draws a pure two-qubit state uniformly (invariant measure) from the
/// preimage of `target` under the channel with asymmetry `h`; the draw maps
/// back onto `target` exactly.
pub fn sample_preimage(
    target: &BlochVector,
    h: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PureState> {
    validate_h(h)?;
    target.validate_in_ball()?;
    let tau = 2.0 * std::f64::consts::PI;
    if h == 1.0 {
        // kappa degenerates to 1; the first qubit's direction is free and
        // uniform, matching the h -> 1 limit of the kappa parametrization
        let cos_u = rng.random::<f64>() * 2.0 - 1.0;
        let v = rng.random::<f64>() * tau;
        let gamma = rng.random::<f64>() * tau;
        return Ok(state_from_sphere_point(
            target,
            h,
            target.norm(),
            cos_u,
            v,
            gamma,
        ));
    }
    let coords = PreimageCoords::sample(target, h, rng)?;
    coords.state(h)
}

/// Draws a product state from the separable preimage of `target`; requires
/// `h <= ||target||` (below that the separable preimage is empty). The polar
/// coordinate is pinned by the unit reduced radius; only `v` is free.
pub fn sample_preimage_separable(
    target: &BlochVector,
    h: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PureState> {
    validate_h(h)?;
    target.validate_in_ball()?;
    let r_ts = target.norm();
    if r_ts < h {
        return Err(Error::EmptyPreimage { r_ts, h });
    }
    let v = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
    // r = 1, kappa = 1/R: cos u = (1 + h^2 - 2 h^2 / R^2)/(1 - h^2)
    let cos_u = if r_ts >= 1.0 - 1e-15 || (1.0 - h * h) == 0.0 {
        1.0
    } else {
        ((1.0 + h * h - 2.0 * h * h / (r_ts * r_ts)) / (1.0 - h * h)).clamp(-1.0, 1.0)
    };
    Ok(state_from_sphere_point(target, h, 1.0, cos_u, v, 0.0))
}

/// Coarse-grained Bloch radii of `n` Haar-random `n_qubits`-qubit states,
/// chunked over RNG substreams (parallel when enabled, reproducible always).
pub fn cg_radii(p: &ProbVector, n_qubits: usize, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
    if p.len() != n_qubits {
        return Err(Error::DimensionMismatch(p.len(), n_qubits));
    }
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange(n_qubits, MAX_QUBITS));
    }
    let chunks = crate::exec::map_chunks(n, crate::exec::DEFAULT_CHUNK, |k, count| {
        cg_radii_chunk(p, n_qubits, count, seed.substream(k as u64))
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Sequential twin of [`cg_radii`]; same chunk layout, same output.
pub fn cg_radii_seq(
    p: &ProbVector,
    n_qubits: usize,
    n: usize,
    seed: RngSeed,
) -> Result<Vec<f64>> {
    if p.len() != n_qubits {
        return Err(Error::DimensionMismatch(p.len(), n_qubits));
    }
    let chunks = crate::exec::map_chunks_seq(n, crate::exec::DEFAULT_CHUNK, |k, count| {
        cg_radii_chunk(p, n_qubits, count, seed.substream(k as u64))
    });
    Ok(chunks.into_iter().flatten().collect())
}

fn cg_radii_chunk(p: &ProbVector, n_qubits: usize, count: usize, seed: RngSeed) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..count)
        .map(|_| {
            let psi = sample_haar_state(n_qubits, &mut rng).expect("qubit count validated");
            apply_cg(&psi, p)
                .expect("lengths validated")
                .bloch_vector()
                .expect("single qubit")
                .norm()
        })
        .collect()
}

/// Radii of coarse-grained product states (separable ensemble pushforward).
pub fn cg_radii_product(p: &ProbVector, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
    if p.len() != 2 {
        return Err(Error::DimensionMismatch(p.len(), 2));
    }
    let chunks = crate::exec::map_chunks(n, crate::exec::DEFAULT_CHUNK, |k, count| {
        let mut rng = seed.substream(k as u64).rng();
        (0..count)
            .map(|_| {
                let psi = sample_product_state(&mut rng);
                apply_cg(&psi, p)
                    .expect("two qubits")
                    .bloch_vector()
                    .expect("single qubit")
                    .norm()
            })
            .collect::<Vec<f64>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}
