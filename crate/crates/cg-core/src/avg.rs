//! Average preimage states for the two-particle channel: closed forms for
//! the full and product-state ensembles, a Monte-Carlo estimator of the
//! defining integral, and reorientation to arbitrary target axes.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exec;
use crate::qstate::{su2_geodesic_rotation, BlochVector, DensityMatrix};
use crate::sampling::{sample_preimage, sample_preimage_separable, RngSeed};
use crate::Ensemble;

/// Which side of the cusp `r_ts = h` the target lies on; the boundary itself
/// belongs to the outside branch (the two agree there by continuity).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Inside,
    Outside,
}

/// Weights of the average state in the basis
/// `rho = I4/4 + c1 (z.sigma) x I + c2 I x (z.sigma) + c3 (z.sigma) x (z.sigma)
///  + c4 sum_i sigma_i x sigma_i` for a z-polarized target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvgStateCoeffs {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub branch: Branch,
    pub ensemble: Ensemble,
}

impl AvgStateCoeffs {
    /// The six nonzero Pauli components `(00, 30, 03, 33, 11, 22)`.
    pub fn pauli_components(&self) -> [f64; 6] {
        [
            1.0,
            4.0 * self.c1,
            4.0 * self.c2,
            4.0 * (self.c3 + self.c4),
            4.0 * self.c4,
            4.0 * self.c4,
        ]
    }

    /// Assembles the z-aligned density matrix. Diagonal
    /// `1/4 +- c1 +- c2 +- (c3 + c4)`, and the only coherences are the
    /// `|01><10|` pair with weight `2 c4`.
    pub fn to_density_z_aligned(&self) -> Result<DensityMatrix> {
        let zero = C64::new(0.0, 0.0);
        let q = 0.25;
        let (c1, c2, c34) = (self.c1, self.c2, self.c3 + self.c4);
        let mut data = vec![zero; 16];
        data[0] = C64::new(q + c1 + c2 + c34, 0.0);
        data[5] = C64::new(q + c1 - c2 - c34, 0.0);
        data[10] = C64::new(q - c1 + c2 - c34, 0.0);
        data[15] = C64::new(q - c1 - c2 + c34, 0.0);
        data[6] = C64::new(2.0 * self.c4, 0.0); // |01><10|
        data[9] = C64::new(2.0 * self.c4, 0.0); // |10><01|
        DensityMatrix::new(data)
    }
}

fn validate_inputs(h: f64, r_ts: f64) -> Result<()> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            constraint: "range (0, 1]",
        });
    }
    if !(0.0..=1.0).contains(&r_ts) {
        return Err(Error::InvalidParameter {
            name: "r_ts",
            value: r_ts,
            constraint: "range [0, 1]",
        });
    }
    Ok(())
}

/// Closed-form coefficients of the average preimage state for a z-polarized
/// target of radius `r_ts`.
pub fn avg_state_coeffs(h: f64, r_ts: f64, ensemble: Ensemble) -> Result<AvgStateCoeffs> {
    validate_inputs(h, r_ts)?;
    let r = r_ts;
    match ensemble {
        Ensemble::Full => {
            if r < h {
                let f = 1.0 / (12.0 * h * (1.0 + h));
                Ok(AvgStateCoeffs {
                    c1: -f * (1.0 - h * h) * r,
                    c2: f * (1.0 + 4.0 * h + h * h) * r,
                    c3: 0.0,
                    c4: -f * h * (1.0 - h),
                    branch: Branch::Inside,
                    ensemble,
                })
            } else if h == 1.0 {
                // r = 1 here; the pure coherent-state limit
                Ok(AvgStateCoeffs {
                    c1: 0.25,
                    c2: 0.25,
                    c3: 0.25,
                    c4: 0.0,
                    branch: Branch::Outside,
                    ensemble,
                })
            } else {
                let f = 1.0 / (24.0 * (1.0 - h * h) * r * r);
                let s = r * r + r + 1.0;
                Ok(AvgStateCoeffs {
                    c1: f * 2.0 * r * (1.0 + h) * (3.0 * r * r - h * s),
                    c2: f * 2.0 * r * (1.0 - h) * (3.0 * r * r + h * s),
                    c3: f * 3.0 * (1.0 + r) * (r * r - h * h),
                    c4: -f * (1.0 - r) * (3.0 * r * r - h * h * (2.0 * r + 1.0)),
                    branch: Branch::Outside,
                    ensemble,
                })
            }
        }
        Ensemble::Separable => {
            if r < h {
                return Err(Error::EmptyPreimage { r_ts: r, h });
            }
            if h == 1.0 {
                return Ok(AvgStateCoeffs {
                    c1: 0.25,
                    c2: 0.25,
                    c3: 0.25,
                    c4: 0.0,
                    branch: Branch::Outside,
                    ensemble,
                });
            }
            Ok(AvgStateCoeffs {
                c1: (r * r - h) / (4.0 * (1.0 - h) * r),
                c2: (r * r + h) / (4.0 * (1.0 + h) * r),
                c3: (r.powi(4) + r * r + h * h * (r * r - 3.0))
                    / (8.0 * (1.0 - h * h) * r * r),
                c4: -(1.0 - r * r) * (r * r - h * h) / (8.0 * (1.0 - h * h) * r * r),
                branch: Branch::Outside,
                ensemble,
            })
        }
    }
}

/// Average preimage state over all pure states, z-polarized target.
pub fn avg_state_full(h: f64, r_ts: f64) -> Result<(DensityMatrix, AvgStateCoeffs)> {
    let c = avg_state_coeffs(h, r_ts, Ensemble::Full)?;
    Ok((c.to_density_z_aligned()?, c))
}

/// Average preimage state over product states, z-polarized target; requires
/// `r_ts >= h`.
pub fn avg_state_separable(h: f64, r_ts: f64) -> Result<(DensityMatrix, AvgStateCoeffs)> {
    let c = avg_state_coeffs(h, r_ts, Ensemble::Separable)?;
    Ok((c.to_density_z_aligned()?, c))
}

/// Purity, coherences, and symmetry residuals of an average state.
#[derive(Debug, Clone, Copy)]
pub struct AvgStateDiagnostics {
    /// `tr rho^2`.
    pub purity: f64,
    /// The `|01><10|` computational-basis coherence (real for these states).
    pub coherence_23: f64,
    /// `|rho_22 - rho_11|` in the Pauli basis and `|rho_(01,10) - rho_(10,01)|`
    /// in the computational basis.
    pub symmetry_residuals: [f64; 2],
    /// `(1 - r_ts)/4`, the coherence envelope of the full ensemble.
    pub coherence_bound_full: f64,
    /// `(1 - r_ts)/2`, the coherence envelope of the separable ensemble.
    pub coherence_bound_separable: f64,
}

pub fn avg_state_diagnostics(rho: &DensityMatrix, r_ts: f64) -> AvgStateDiagnostics {
    let pauli = rho.pauli_coefficients();
    let coh = rho.entry(1, 2);
    AvgStateDiagnostics {
        purity: rho.purity(),
        coherence_23: coh.re,
        symmetry_residuals: [
            (pauli.get(&[2, 2]) - pauli.get(&[1, 1])).abs(),
            (rho.entry(1, 2) - rho.entry(2, 1).conj()).norm(),
        ],
        coherence_bound_full: (1.0 - r_ts) / 4.0,
        coherence_bound_separable: (1.0 - r_ts) / 2.0,
    }
}

fn mc_chunk(
    target: &BlochVector,
    h: f64,
    ensemble: Ensemble,
    count: usize,
    seed: RngSeed,
) -> Result<[C64; 16]> {
    let mut rng = seed.rng();
    let mut acc = [C64::new(0.0, 0.0); 16];
    for _ in 0..count {
        let st = match ensemble {
            Ensemble::Full => sample_preimage(target, h, &mut rng)?,
            Ensemble::Separable => sample_preimage_separable(target, h, &mut rng)?,
        };
        let a = st.amplitudes();
        for i in 0..4 {
            for j in 0..4 {
                acc[i * 4 + j] += a[i] * a[j].conj();
            }
        }
    }
    Ok(acc)
}

fn mc_combine(chunks: Vec<Result<[C64; 16]>>, n: usize) -> Result<DensityMatrix> {
    let mut total = [C64::new(0.0, 0.0); 16];
    for chunk in chunks {
        let c = chunk?;
        for (t, v) in total.iter_mut().zip(c.iter()) {
            *t += v;
        }
    }
    let scale = 1.0 / n as f64;
    let data: Vec<C64> = total.iter().map(|v| v * scale).collect();
    DensityMatrix::new(data)
}

/// Monte-Carlo mean of `n` sampled preimage states of `target`; converges to
/// the closed forms at the usual `n^(-1/2)` rate.
pub fn avg_state_mc(
    target: &BlochVector,
    h: f64,
    ensemble: Ensemble,
    n: usize,
    seed: RngSeed,
) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    // fail fast on bad parameters instead of inside worker chunks
    let mut probe_rng = seed.rng();
    match ensemble {
        Ensemble::Full => sample_preimage(target, h, &mut probe_rng)?,
        Ensemble::Separable => sample_preimage_separable(target, h, &mut probe_rng)?,
    };
    let chunks = exec::map_chunks(n, exec::DEFAULT_CHUNK, |k, count| {
        mc_chunk(target, h, ensemble, count, seed.substream(k as u64))
    });
    mc_combine(chunks, n)
}

/// Sequential twin of [`avg_state_mc`] with the same chunk layout.
pub fn avg_state_mc_seq(
    target: &BlochVector,
    h: f64,
    ensemble: Ensemble,
    n: usize,
    seed: RngSeed,
) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    let chunks = exec::map_chunks_seq(n, exec::DEFAULT_CHUNK, |k, count| {
        mc_chunk(target, h, ensemble, count, seed.substream(k as u64))
    });
    mc_combine(chunks, n)
}

/// Average state for an arbitrary target axis, obtained by conjugating the
/// z-aligned closed form with the local rotation that carries z onto the
/// target direction (the channel is covariant under local unitaries).
pub fn avg_state_general_axis(
    target: &BlochVector,
    h: f64,
    ensemble: Ensemble,
) -> Result<DensityMatrix> {
    target.validate_in_ball()?;
    let c = avg_state_coeffs(h, target.norm(), ensemble)?;
    let aligned = c.to_density_z_aligned()?;
    if target.norm() < 1e-15 {
        return Ok(aligned);
    }
    let u = su2_geodesic_rotation(target.theta(), target.phi());
    Ok(aligned.conjugate_local_all(&u))
}
