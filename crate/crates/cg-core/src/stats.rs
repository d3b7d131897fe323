//! Shell-count volume estimation, binned radial densities, least-squares
//! recovery of the detection probability, and the shell-width sweep that
//! selects a usable width.

use crate::channel::ProbVector;
use crate::error::{Error, Result};
use crate::laws::pdf_p2_unchecked;
use crate::sampling::{cg_radii, RngSeed};

/// How the neighborhood volume entering the density normalization is
/// computed: the exact truncated shell volume, or its leading order
/// `4 pi r^2 eps` (the two differ at `O(eps^2)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShellVolume {
    #[default]
    Exact,
    LeadingOrder,
}

/// Euclidean volume of the shell `|r - center| <= width/2`, truncated to the
/// unit ball.
pub fn shell_volume(center: f64, width: f64, convention: ShellVolume) -> f64 {
    let lo = (center - width / 2.0).max(0.0);
    let hi = (center + width / 2.0).min(1.0);
    match convention {
        ShellVolume::Exact => {
            4.0 * std::f64::consts::PI / 3.0 * (hi.powi(3) - lo.powi(3))
        }
        ShellVolume::LeadingOrder => 4.0 * std::f64::consts::PI * center * center * (hi - lo),
    }
}

fn validate_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::EmptySamples);
    }
    if let Some(&bad) = radii
        .iter()
        .find(|r| !r.is_finite() || **r < -1e-12 || **r > 1.0 + 1e-12)
    {
        return Err(Error::InvalidParameter {
            name: "radius",
            value: bad,
            constraint: "range [0, 1]",
        });
    }
    Ok(())
}

/// Fraction of radii landing in the shell `|r - r_ts| <= eps/2`; the
/// Monte-Carlo estimate of the preimage volume of that shell.
pub fn estimate_shell_volume(radii: &[f64], r_ts: f64, eps: f64) -> Result<f64> {
    validate_radii(radii)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            constraint: "positive",
        });
    }
    let count = radii
        .iter()
        .filter(|&&r| (r - r_ts).abs() <= eps / 2.0)
        .count();
    Ok(count as f64 / radii.len() as f64)
}

/// Binned radial density: shell fractions divided by shell volume and scaled
/// by the sphere area `4 pi r_c^2`, directly comparable with the closed-form
/// radial laws.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPdf {
    /// Increasing edges; first 0, last 1. The final bin may be narrower when
    /// the width does not divide 1.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_total: usize,
    pub density: Vec<f64>,
}

impl EmpiricalPdf {
    pub fn num_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `sum_k density_k * width_k`; close to 1 for a sane histogram.
    pub fn bin_integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.widths())
            .map(|(d, w)| d * w)
            .sum()
    }
}

/// Histogram of radii in shells of thickness `eps` starting at zero, with the
/// density normalization described on [`EmpiricalPdf`].
pub fn empirical_radial_pdf(
    radii: &[f64],
    eps: f64,
    convention: ShellVolume,
) -> Result<EmpiricalPdf> {
    validate_radii(radii)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            constraint: "range (0, 1)",
        });
    }
    let mut edges: Vec<f64> = Vec::new();
    let mut k = 0usize;
    loop {
        let e = k as f64 * eps;
        if e >= 1.0 - 1e-9 {
            break;
        }
        edges.push(e);
        k += 1;
    }
    edges.push(1.0);
    let nbins = edges.len() - 1;
    let mut counts = vec![0u64; nbins];
    for &r in radii {
        let idx = ((r / eps) as usize).min(nbins - 1);
        counts[idx] += 1;
    }
    let n = radii.len();
    let mut density = Vec::with_capacity(nbins);
    for (i, &c) in counts.iter().enumerate() {
        let (lo, hi) = (edges[i], edges[i + 1]);
        let center = 0.5 * (lo + hi);
        let vol = shell_volume(center, hi - lo, convention);
        let frac = c as f64 / n as f64;
        density.push(frac / vol * 4.0 * std::f64::consts::PI * center * center);
    }
    Ok(EmpiricalPdf {
        bin_edges: edges,
        counts,
        n_total: n,
        density,
    })
}

/// Model family for the least-squares fit. The two-particle radial law is
/// the only single-parameter family; the general-N law has no scalar
/// parametrization to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitModel {
    #[default]
    P2,
}

/// Outcome of one least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Best detection probability in `(0, 1/2]`.
    pub p_fit: f64,
    /// Sum of squared density residuals at `p_fit`.
    pub residual_sum: f64,
    pub eps_used: f64,
    pub n_used: usize,
    /// Seed of the sample set (provenance; not used by the fit itself).
    pub seed: RngSeed,
}

fn fit_objective(density: &[f64], centers: &[f64], p: f64) -> f64 {
    let h = (1.0 - 2.0 * p).max(1e-12);
    density
        .iter()
        .zip(centers)
        .map(|(&d, &c)| {
            let m = pdf_p2_unchecked(h, c.min(1.0));
            (d - m) * (d - m)
        })
        .sum()
}

const P_LO: f64 = 1e-3;
const P_HI: f64 = 0.5;

/// Least-squares recovery of `p` from radii: bins the samples into shells of
/// thickness `eps` (exact truncated volumes), includes empty bins, and
/// minimizes the squared density residual against the two-particle law.
/// Deterministic: a coarse scan brackets the optimum, golden-section search
/// narrows it, and parabolic steps finish.
pub fn fit_p(radii: &[f64], eps: f64, model: FitModel, seed: RngSeed) -> Result<FitResult> {
    let FitModel::P2 = model;
    let pdf = empirical_radial_pdf(radii, eps, ShellVolume::Exact)?;
    let centers = pdf.centers();
    let obj = |p: f64| fit_objective(&pdf.density, &centers, p);

    // bracketing scan (also the guaranteed fallback)
    const SCAN: usize = 512;
    let mut best_i = 0usize;
    let mut best_v = f64::INFINITY;
    for i in 0..=SCAN {
        let p = P_LO + (P_HI - P_LO) * i as f64 / SCAN as f64;
        let v = obj(p);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let step = (P_HI - P_LO) / SCAN as f64;
    let mut a = (P_LO + step * (best_i.saturating_sub(1)) as f64).max(P_LO);
    let mut b = (P_LO + step * (best_i + 1) as f64).min(P_HI);

    // golden-section narrowing
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = obj(c);
    let mut fd = obj(d);
    for _ in 0..48 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = obj(d);
        }
    }
    let mut p_best = if fc <= fd { c } else { d };
    let mut f_best = fc.min(fd);

    // parabolic refinement through (p-dp, p, p+dp)
    let mut dp = (b - a).max(1e-12);
    for _ in 0..6 {
        let (x0, x1, x2) = (
            (p_best - dp).max(P_LO),
            p_best,
            (p_best + dp).min(P_HI),
        );
        let (f0, f1, f2) = (obj(x0), obj(x1), obj(x2));
        let denom = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0);
        if denom.abs() > 1e-300 {
            let num = (x1 - x0).powi(2) * (f1 - f2) - (x1 - x2).powi(2) * (f1 - f0);
            let cand = (x1 - 0.5 * num / denom).clamp(P_LO, P_HI);
            let fcand = obj(cand);
            if fcand < f_best {
                p_best = cand;
                f_best = fcand;
            }
        }
        dp *= 0.25;
    }

    Ok(FitResult {
        p_fit: p_best,
        residual_sum: f_best,
        eps_used: eps,
        n_used: radii.len(),
        seed,
    })
}

/// One row of a width sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub p_fit: f64,
    pub abs_error: f64,
}

/// Width sweep over a shared sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Index of the row minimizing `|p_fit - p_test|` (first on ties).
    pub best_index: usize,
    pub p_test: f64,
    pub n: usize,
    pub seed: RngSeed,
}

/// Generates one sample set of `n` coarse-grained radii at `p_test` and fits
/// `p` once per width in `eps_grid`; sharing the samples isolates the effect
/// of the width.
pub fn sweep_eps(
    p_test: f64,
    n: usize,
    eps_grid: &[f64],
    seed: RngSeed,
) -> Result<SweepResult> {
    if !(p_test > 0.0 && p_test < 0.5) {
        return Err(Error::InvalidParameter {
            name: "p_test",
            value: p_test,
            constraint: "range (0, 0.5)",
        });
    }
    if eps_grid.is_empty() {
        return Err(Error::EmptySamples);
    }
    for &e in eps_grid {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::InvalidParameter {
                name: "eps",
                value: e,
                constraint: "range (0, 1)",
            });
        }
    }
    let p = ProbVector::new(vec![p_test, 1.0 - p_test])?;
    let radii = cg_radii(&p, 2, n, seed)?;
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let fit = fit_p(&radii, eps, FitModel::P2, seed)?;
        rows.push(SweepRow {
            eps,
            p_fit: fit.p_fit,
            abs_error: (fit.p_fit - p_test).abs(),
        });
    }
    let best_index = rows
        .iter()
        .enumerate()
        .min_by(|(_, x), (_, y)| x.abs_error.partial_cmp(&y.abs_error).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    Ok(SweepResult {
        rows,
        best_index,
        p_test,
        n,
        seed,
    })
}

/// Two-sided Kolmogorov-Smirnov distance between samples and a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in xs.iter().enumerate() {
        let c = cdf(*x);
        d = d.max((c - i as f64 / n).abs());
        d = d.max((c - (i + 1) as f64 / n).abs());
    }
    d
}

/// Asymptotic 1% critical value of the KS distance for `n` samples.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.62762 / (n as f64).sqrt()
}

/// Jackknife standard error of the mean of equal-size block means.
pub fn jackknife_se(block_means: &[f64]) -> f64 {
    let k = block_means.len();
    assert!(k >= 2, "jackknife needs at least two blocks");
    let total: f64 = block_means.iter().sum();
    let loo: Vec<f64> = block_means
        .iter()
        .map(|&x| (total - x) / (k - 1) as f64)
        .collect();
    let mean = loo.iter().sum::<f64>() / k as f64;
    let var: f64 = loo.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>();
    ((k - 1) as f64 / k as f64 * var).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{pdf_p2, RadialLaw};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn shell_volume_conventions() {
        // interior shell: exact vs leading agree to O(eps^2)
        let e = shell_volume(0.5, 0.01, ShellVolume::Exact);
        let l = shell_volume(0.5, 0.01, ShellVolume::LeadingOrder);
        assert!((e - l).abs() / l < 1e-4);
        // truncation at the surface
        let t = shell_volume(1.0, 0.2, ShellVolume::Exact);
        let full = 4.0 * std::f64::consts::PI / 3.0 * (1.0 - 0.9f64.powi(3));
        assert_abs_diff_eq!(t, full, epsilon = 1e-15);
    }

    #[test]
    fn shell_estimate_trivial_cases() {
        let inside = vec![0.5, 0.501, 0.499];
        assert_abs_diff_eq!(estimate_shell_volume(&inside, 0.5, 0.01).unwrap(), 1.0);
        assert_abs_diff_eq!(estimate_shell_volume(&inside, 0.9, 0.01).unwrap(), 0.0);
        assert!(estimate_shell_volume(&[], 0.5, 0.01).is_err());
        assert!(estimate_shell_volume(&inside, 0.5, 0.0).is_err());
    }

    #[test]
    fn shell_estimate_monotone_in_eps() {
        let mut rng = RngSeed::new(200).rng();
        let radii: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let mut prev = 0.0;
        for k in 1..=20 {
            let v = estimate_shell_volume(&radii, 0.5, 0.05 * k as f64).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn shell_estimate_matches_law_integral() {
        // test-side Simpson over the closed-form law as the oracle
        let simpson = |a: f64, b: f64| {
            let n = 2000;
            let h = (b - a) / n as f64;
            let f = |r: f64| pdf_p2(0.2, r).unwrap();
            let mut s = f(a) + f(b);
            for i in 1..n {
                s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let p = ProbVector::from_asymmetry(0.2).unwrap();
        let radii = cg_radii(&p, 2, 10_000, RngSeed::new(201)).unwrap();
        let got = estimate_shell_volume(&radii, 0.5, 0.04).unwrap();
        let want = simpson(0.48, 0.52);
        let sigma = (want * (1.0 - want) / 10_000f64).sqrt();
        assert!(
            (got - want).abs() <= 3.0 * sigma,
            "shell estimate {got} vs integral {want} (3 sigma = {})",
            3.0 * sigma
        );
    }

    #[test]
    fn preimage_volume_matches_shell_mc() {
        // closed-form neighborhood volume vs the raw shell count at
        // (h, r_ts, eps) = (0.4, 0.6, 0.04), 3 sigma binomial
        let (h, r_ts, eps) = (0.4, 0.6, 0.04);
        let p = ProbVector::from_asymmetry(h).unwrap();
        let radii = cg_radii(&p, 2, 20_000, RngSeed::new(207)).unwrap();
        let got = estimate_shell_volume(&radii, r_ts, eps).unwrap();
        let v_eps = shell_volume(r_ts, eps, ShellVolume::Exact);
        let want = crate::laws::preimage_volume(h, r_ts, v_eps, crate::Ensemble::Full).unwrap();
        let sigma = (want * (1.0 - want) / radii.len() as f64).sqrt();
        assert!(
            (got - want).abs() <= 3.0 * sigma,
            "shell count {got} vs closed-form volume {want} (3 sigma = {})",
            3.0 * sigma
        );
    }

    #[test]
    fn empirical_pdf_uniform_ball_is_quadratic() {
        // radii of uniform points in the ball: density 3 r^2 after the
        // sphere-area correction
        let mut rng = RngSeed::new(202).rng();
        let radii: Vec<f64> = (0..400_000)
            .map(|_| rng.random::<f64>().powf(1.0 / 3.0))
            .collect();
        let pdf = empirical_radial_pdf(&radii, 0.05, ShellVolume::Exact).unwrap();
        for (c, d) in pdf.centers().iter().zip(&pdf.density) {
            // exact-volume normalization makes the uniform-ball density
            // exactly quadratic bin by bin (up to sampling noise)
            let want = 3.0 * c * c;
            assert!(
                (d - want).abs() < 0.05,
                "center {c}: density {d} vs {want}"
            );
        }
        assert_abs_diff_eq!(pdf.bin_integral(), 1.0, epsilon = 2.0 / (400_000f64).sqrt() + 0.01);
        assert_eq!(pdf.counts.iter().sum::<u64>(), 400_000);
    }

    #[test]
    fn empirical_pdf_handles_partial_last_bin() {
        let radii = vec![0.95, 0.97, 0.99, 1.0, 0.1];
        let pdf = empirical_radial_pdf(&radii, 0.3, ShellVolume::Exact).unwrap();
        let want_edges = [0.0, 0.3, 0.6, 0.9, 1.0];
        assert_eq!(pdf.bin_edges.len(), want_edges.len());
        for (e, w) in pdf.bin_edges.iter().zip(&want_edges) {
            assert_abs_diff_eq!(e, w, epsilon = 1e-12);
        }
        assert_eq!(pdf.counts, vec![1, 0, 0, 4]);
        assert!(empirical_radial_pdf(&radii, 0.0, ShellVolume::Exact).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let p = ProbVector::from_asymmetry(0.48).unwrap();
        let radii = cg_radii(&p, 2, 10_000, RngSeed::new(203)).unwrap();
        let a = fit_p(&radii, 0.04, FitModel::P2, RngSeed::new(203)).unwrap();
        let b = fit_p(&radii, 0.04, FitModel::P2, RngSeed::new(203)).unwrap();
        assert_eq!(a, b);
        assert!(a.p_fit > 0.0 && a.p_fit <= 0.5);
        assert!(a.residual_sum >= 0.0);
        assert_eq!(a.n_used, 10_000);
    }

    #[test]
    fn fit_recovers_p_from_law_exact_samples() {
        // inverse-CDF samples of the closed-form law itself: separates fit
        // quality from the quantum pipeline
        let p_true = 0.26;
        let law = RadialLaw::p2(1.0 - 2.0 * p_true).unwrap();
        let mut fits = Vec::new();
        for s in 0..8u64 {
            let mut rng = RngSeed::with_stream(204, s).rng();
            let radii: Vec<f64> = (0..20_000).map(|_| law.sample(&mut rng)).collect();
            fits.push(
                fit_p(&radii, 0.02, FitModel::P2, RngSeed::new(204))
                    .unwrap()
                    .p_fit,
            );
        }
        let mean = fits.iter().sum::<f64>() / fits.len() as f64;
        let se = jackknife_se(&fits);
        assert!(
            (mean - p_true).abs() <= 3.0 * se,
            "mean {mean} vs {p_true} (3 se = {})",
            3.0 * se
        );
    }

    #[test]
    fn sweep_single_point_and_ordering() {
        let sweep = sweep_eps(0.26, 4000, &[0.04], RngSeed::new(205)).unwrap();
        assert_eq!(sweep.rows.len(), 1);
        assert_eq!(sweep.best_index, 0);
        let sweep = sweep_eps(0.26, 4000, &[0.001, 0.04, 0.3], RngSeed::new(205)).unwrap();
        assert_eq!(sweep.rows.len(), 3);
        let best = sweep.rows[sweep.best_index];
        for row in &sweep.rows {
            assert!(best.abs_error <= row.abs_error + 1e-15);
        }
        // shared sample set: same seed, same rows
        let again = sweep_eps(0.26, 4000, &[0.001, 0.04, 0.3], RngSeed::new(205)).unwrap();
        assert_eq!(sweep, again);
        assert!(sweep_eps(0.5, 100, &[0.1], RngSeed::new(1)).is_err());
        assert!(sweep_eps(0.26, 100, &[], RngSeed::new(1)).is_err());
    }

    #[test]
    fn ks_statistic_behaves() {
        let mut rng = RngSeed::new(206).rng();
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let d_right = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d_right < ks_critical_1pct(5000));
        let d_wrong = ks_statistic(&xs, |x| (x * x).clamp(0.0, 1.0));
        assert!(d_wrong > 10.0 * ks_critical_1pct(5000));
    }

    #[test]
    fn jackknife_matches_direct_formula() {
        let blocks = [1.0, 2.0, 3.0, 4.0];
        // for the sample mean the jackknife SE equals s/sqrt(k)
        let mean = 2.5;
        let var: f64 = blocks.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / 3.0;
        let want = (var / 4.0).sqrt();
        assert_abs_diff_eq!(jackknife_se(&blocks), want, epsilon = 1e-12);
    }
}
