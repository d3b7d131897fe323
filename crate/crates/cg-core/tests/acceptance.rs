//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`
//! to see them).
//!
//! Criterion 9 is split in two: the recovery and sweep clauses pass; the
//! over-smoothed-regime clause (`p_fit > 0.45` at shell width 0.3) is
//! asserted faithfully and is expected to fail with the centered-shell
//! estimator specified for the fit. See the README's "Known red test" note.

use std::time::Instant;

use cg_core::avg::{avg_state_full, avg_state_mc, avg_state_separable};
use cg_core::channel::{apply_cg, check_covariance, ProbVector};
use cg_core::laws::{
    derivative_principle_pdf, pdf_p2, pdf_p2_separable, psi_diagonal, simplex_slice_area,
    RadialLaw,
};
use cg_core::qstate::{su2_geodesic_rotation, BlochVector, DensityMatrix, PureState};
use cg_core::sampling::{
    cg_radii, sample_bloch_direction, sample_haar_state, sample_preimage, RngSeed,
};
use cg_core::stats::{
    empirical_radial_pdf, fit_p, jackknife_se, ks_critical_1pct, ks_statistic, sweep_eps,
    FitModel, ShellVolume,
};
use cg_core::Ensemble;

use rand::Rng;

fn fig7_weights(n: usize) -> Vec<f64> {
    match n {
        2 => vec![0.4, 0.6],
        3 => vec![0.4, 0.35, 0.25],
        4 => vec![0.4, 0.35, 0.15, 0.1],
        5 => vec![0.4, 0.35, 0.15, 0.08, 0.02],
        _ => panic!("no reference probabilities for n = {n}"),
    }
}

/// Test-side adaptive Simpson quadrature, independent of the library's
/// Gauss-Legendre integrator.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, depth: usize) -> f64 {
    let m = 0.5 * (a + b);
    let coarse = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let fine = (b - a) / 12.0 * (f(a) + 4.0 * f(lm) + 2.0 * f(m) + 4.0 * f(rm) + f(b));
    if depth == 0 || (fine - coarse).abs() < 1e-13 {
        fine
    } else {
        simpson(f, a, m, depth - 1) + simpson(f, m, b, depth - 1)
    }
}

fn simpson_segments<F: Fn(f64) -> f64>(f: &F, pts: &[f64]) -> f64 {
    pts.windows(2).map(|w| simpson(f, w[0], w[1], 40)).sum()
}

#[test]
fn criterion_01_normalization_suite() {
    let start = Instant::now();
    for k in 1..=9 {
        let h = k as f64 / 10.0;
        let n2 = simpson_segments(&|r| pdf_p2(h, r).unwrap(), &[0.0, h, 1.0]);
        assert!((n2 - 1.0).abs() < 1e-8, "pdf_p2 norm at h={h}: {n2}");
        let ns = simpson_segments(&|r| pdf_p2_separable(h, r).unwrap(), &[0.0, h, 1.0]);
        assert!((ns - 1.0).abs() < 1e-8, "pdf_p2_separable norm at h={h}: {ns}");
    }
    for n in 2..=5 {
        let p = ProbVector::new(fig7_weights(n)).unwrap();
        let law = RadialLaw::pn(&p).unwrap();
        let mut pts = law.breakpoints();
        pts.insert(0, 0.0);
        pts.push(1.0);
        let norm = simpson_segments(&|r| law.eval(r), &pts);
        assert!((norm - 1.0).abs() < 1e-8, "pdf_pn norm at N={n}: {norm}");
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 10.0, "normalization suite took {dt:?}");
    println!("acceptance criterion 01 PASS: all radial laws normalize to 1 within 1e-8 ({dt:?})");
}

#[test]
fn criterion_02_general_law_reduces_to_two_particle_law() {
    let p = ProbVector::new(vec![0.4, 0.6]).unwrap();
    let law = RadialLaw::pn(&p).unwrap();
    let mut max_dev = 0.0f64;
    for k in 0..=1000 {
        let r = k as f64 / 1000.0;
        let dev = (law.eval(r) - pdf_p2(0.2, r).unwrap()).abs();
        max_dev = max_dev.max(dev);
    }
    assert!(max_dev < 1e-9, "max deviation {max_dev}");
    println!(
        "acceptance criterion 02 PASS: general-N law at N=2 matches the two-particle law \
         (max dev {max_dev:.2e})"
    );
}

#[test]
fn criterion_03_derivative_principle() {
    let mut max_dev = 0.0f64;
    for &h in &[0.2, 0.48, 0.8] {
        let p1 = (1.0 - h) / 2.0;
        for k in 0..=2000 {
            let r = k as f64 / 2000.0;
            if (r - h).abs() < 1e-4 || !(1e-3..=1.0 - 1e-3).contains(&r) {
                continue; // kink of the diagonal density / support ends
            }
            let got = derivative_principle_pdf(|a| psi_diagonal(a, p1).unwrap(), r);
            max_dev = max_dev.max((got - pdf_p2(h, r).unwrap()).abs());
        }
    }
    assert!(max_dev < 1e-9, "max deviation {max_dev}");
    println!(
        "acceptance criterion 03 PASS: radial law recovered from the diagonal density \
         (max dev {max_dev:.2e})"
    );
}

#[test]
fn criterion_04_simplex_slice_oracle() {
    let p1 = 0.3;
    let grid: Vec<f64> = (0..50).map(|k| 0.01 + 0.02 * k as f64).collect();
    let areas: Vec<f64> = grid
        .iter()
        .map(|&a| simplex_slice_area(p1, a).unwrap())
        .collect();
    let psis: Vec<f64> = grid.iter().map(|&a| psi_diagonal(a, p1).unwrap()).collect();
    let scale =
        areas.iter().zip(&psis).map(|(x, y)| x * y).sum::<f64>()
            / areas.iter().map(|x| x * x).sum::<f64>();
    let mut max_dev = 0.0f64;
    for (area, psi) in areas.iter().zip(&psis) {
        max_dev = max_dev.max((area * scale - psi).abs());
    }
    assert!(max_dev < 1e-8, "max deviation {max_dev}");
    println!(
        "acceptance criterion 04 PASS: slice area proportional to the diagonal density \
         (scale {scale:.6}, max dev {max_dev:.2e})"
    );
}

#[test]
fn criterion_05_two_particle_pushforward() {
    let start = Instant::now();
    let n = 10_000usize;
    for (i, &h) in [0.2, 0.4, 0.6].iter().enumerate() {
        let p = ProbVector::from_asymmetry(h).unwrap();
        let radii = cg_radii(&p, 2, n, RngSeed::new(900 + i as u64)).unwrap();
        let law = RadialLaw::p2(h).unwrap();
        let d = ks_statistic(&radii, |r| law.cdf(r));
        assert!(
            d < ks_critical_1pct(n),
            "KS distance {d} at h={h} exceeds the 1% critical value"
        );
        // the binned density (shell width 0.04) sits on the curve
        let pdf = empirical_radial_pdf(&radii, 0.04, ShellVolume::Exact).unwrap();
        let max_bin_dev = pdf
            .centers()
            .iter()
            .zip(&pdf.density)
            .map(|(&c, &d)| (d - law.eval(c)).abs())
            .fold(0.0f64, f64::max)
            ;
        assert!(
            max_bin_dev < 0.25,
            "binned density deviates by {max_bin_dev} at h={h}"
        );
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 30.0, "pushforward suite took {dt:?}");
    println!(
        "acceptance criterion 05 PASS: 1e4 two-particle pushforward radii match the radial \
         law at the 1% KS level for h in {{0.2, 0.4, 0.6}} ({dt:?})"
    );
}

#[test]
fn criterion_06_general_pushforward() {
    let start = Instant::now();
    let n = 10_000usize;
    for (i, nq) in (3..=5usize).enumerate() {
        let p = ProbVector::new(fig7_weights(nq)).unwrap();
        let radii = cg_radii(&p, nq, n, RngSeed::new(910 + i as u64)).unwrap();
        let law = RadialLaw::pn(&p).unwrap();
        let d = ks_statistic(&radii, |r| law.cdf(r));
        assert!(
            d < ks_critical_1pct(n),
            "KS distance {d} at N={nq} exceeds the 1% critical value"
        );
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 120.0, "general pushforward took {dt:?}");
    println!(
        "acceptance criterion 06 PASS: N=3,4,5 pushforward radii match the general-N law \
         at the 1% KS level ({dt:?})"
    );
}

#[test]
fn criterion_07_preimage_exactness() {
    let mut rng = RngSeed::new(920).rng();
    let mut max_dev = 0.0f64;
    for _ in 0..10_000 {
        let h = 0.02 + 0.98 * rng.random::<f64>();
        let target = sample_bloch_direction(&mut rng).scale(rng.random::<f64>());
        let st = sample_preimage(&target, h, &mut rng).unwrap();
        let p = ProbVector::from_asymmetry(h).unwrap();
        let out = apply_cg(&st, &p).unwrap().bloch_vector().unwrap();
        max_dev = max_dev.max(out.sub(&target).norm());
    }
    assert!(max_dev <= 1e-10, "max preimage deviation {max_dev}");
    println!(
        "acceptance criterion 07 PASS: 1e4 preimage samples map back onto their targets \
         (max dev {max_dev:.2e})"
    );
}

#[test]
fn criterion_08_average_state() {
    // closed-form special points, exact to 1e-10
    for &h in &[0.25, 0.6, 0.9] {
        let (rho, _) = avg_state_separable(h, h).unwrap();
        let want = PureState::basis(2, 0b10).density();
        assert!(rho.frobenius_distance(&want) < 1e-10);
        let (rho, _) = avg_state_full(h, 1.0).unwrap();
        let coherent = PureState::basis(2, 0).density();
        assert!(rho.frobenius_distance(&coherent) < 1e-10);
        let (rho, _) = avg_state_separable(h, 1.0).unwrap();
        assert!(rho.frobenius_distance(&coherent) < 1e-10);
    }

    // Monte-Carlo estimator vs closed forms, 3 jackknife SE, 1e6 samples
    let blocks = 25usize;
    let per_block = 40_000usize;
    let grid: [(f64, f64, Ensemble); 6] = [
        (0.3, 0.15, Ensemble::Full),
        (0.3, 0.7, Ensemble::Full),
        (0.7, 0.4, Ensemble::Full),
        (0.3, 0.5, Ensemble::Separable),
        (0.5, 0.8, Ensemble::Separable),
        (0.8, 0.9, Ensemble::Separable),
    ];
    let comps: [[usize; 2]; 5] = [[3, 0], [0, 3], [3, 3], [1, 1], [2, 2]];
    for (gi, &(h, r, ensemble)) in grid.iter().enumerate() {
        let target = BlochVector::new(0.0, 0.0, r);
        let closed = match ensemble {
            Ensemble::Full => avg_state_full(h, r).unwrap().0,
            Ensemble::Separable => avg_state_separable(h, r).unwrap().0,
        };
        let closed_pauli = closed.pauli_coefficients();
        let mut block_vals = vec![Vec::with_capacity(blocks); comps.len()];
        for b in 0..blocks {
            let seed = RngSeed::with_stream(4242 + gi as u64, 1000 * b as u64);
            let mc = avg_state_mc(&target, h, ensemble, per_block, seed).unwrap();
            let pauli = mc.pauli_coefficients();
            for (ci, nu) in comps.iter().enumerate() {
                block_vals[ci].push(pauli.get(nu));
            }
        }
        for (ci, nu) in comps.iter().enumerate() {
            let mean = block_vals[ci].iter().sum::<f64>() / blocks as f64;
            let se = jackknife_se(&block_vals[ci]);
            let want = closed_pauli.get(nu);
            assert!(
                (mean - want).abs() <= 3.0 * se.max(1e-12),
                "component {nu:?} at (h={h}, r={r}, {ensemble}): mc {mean} vs closed {want} \
                 (3 se = {})",
                3.0 * se
            );
        }
    }

    // Werner weight of the central preimage: alpha = (1-h)/(3(1+h))
    for (i, &h) in [0.2, 0.5, 0.8].iter().enumerate() {
        let alpha = (1.0 - h) / (3.0 * (1.0 + h));
        let mut alphas = Vec::new();
        for b in 0..blocks {
            let seed = RngSeed::with_stream(4300 + i as u64, 1000 * b as u64);
            let mc = avg_state_mc(
                &BlochVector::ZERO,
                h,
                Ensemble::Full,
                per_block,
                seed,
            )
            .unwrap();
            // the isotropic correlation component is -alpha
            alphas.push(-mc.pauli_coefficients().get(&[1, 1]));
        }
        let mean = alphas.iter().sum::<f64>() / blocks as f64;
        let se = jackknife_se(&alphas);
        assert!(
            (mean - alpha).abs() <= 3.0 * se,
            "alpha at h={h}: mc {mean} vs {alpha} (3 se = {})",
            3.0 * se
        );
    }
    println!(
        "acceptance criterion 08 PASS: Monte-Carlo average states match the closed forms \
         within 3 jackknife SE; special points exact"
    );
}

#[test]
fn criterion_09_fit_and_sweep() {
    let start = Instant::now();
    // recovery at the working shell width, 10 seeds
    let mut worst = 0.0f64;
    for s in 0..10u64 {
        let p = ProbVector::new(vec![0.26, 0.74]).unwrap();
        let radii = cg_radii(&p, 2, 10_000, RngSeed::new(930 + s)).unwrap();
        let fit = fit_p(&radii, 0.04, FitModel::P2, RngSeed::new(930 + s)).unwrap();
        worst = worst.max((fit.p_fit - 0.26).abs());
    }
    assert!(
        worst <= 0.01,
        "p recovery at eps=0.04 drifted by {worst} over 10 seeds"
    );

    // width sweep on a shared sample set selects the working width
    let sweep = sweep_eps(0.26, 10_000, &[0.001, 0.04, 0.3], RngSeed::new(935)).unwrap();
    assert_eq!(
        sweep.rows[sweep.best_index].eps, 0.04,
        "sweep rows: {:?}",
        sweep.rows
    );
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 60.0, "fit suite took {dt:?}");
    println!(
        "acceptance criterion 09 PASS: |p_fit - 0.26| <= 0.01 across 10 seeds at eps=0.04 \
         (worst {worst:.4}); sweep selects eps=0.04 ({dt:?})"
    );
}

/// The remaining clause of criterion 9: the reference run this suite
/// reproduces reports that an over-smoothed fit (shell width 0.3) collapses
/// to p ~ 0.4998. With the centered-shell density estimator used by
/// `fit_p`, over-smoothing biases the fit mildly downward (p ~ 0.25)
/// instead, because matched centered bins never destroy the cusp
/// information that pins the asymmetry; the collapse to 1/2 reproduces only
/// under a half-shifted (one-sided shell) estimator, which in turn breaks
/// the eps=0.04 tolerance and the sweep selection above. The assertion is
/// kept as stated and is EXPECTED TO FAIL; see the README's "Known red
/// test" note.
#[test]
fn criterion_09_oversmoothed_regime_paper_value() {
    let p = ProbVector::new(vec![0.26, 0.74]).unwrap();
    let radii = cg_radii(&p, 2, 10_000, RngSeed::new(935)).unwrap();
    let fit = fit_p(&radii, 0.3, FitModel::P2, RngSeed::new(935)).unwrap();
    let pass = fit.p_fit > 0.45;
    println!(
        "acceptance criterion 09 (over-smoothed clause) {}: p_fit(eps=0.3) = {:.4} \
         (required > 0.45, reference value 0.4998)",
        if pass { "PASS" } else { "FAIL" },
        fit.p_fit
    );
    assert!(
        pass,
        "p_fit(eps=0.3) = {:.4} <= 0.45: the centered-shell estimator does not reproduce \
         the over-smoothed collapse to 1/2; see the README's \"Known red test\" note",
        fit.p_fit
    );
}

#[test]
fn criterion_10_property_suites() {
    // unitary covariance on 100 random (state, rotation) pairs for N = 2..4
    let mut rng = RngSeed::new(940).rng();
    let mut max_dev = 0.0f64;
    for trial in 0..100 {
        let nq = 2 + trial % 3;
        let psi = sample_haar_state(nq, &mut rng).unwrap();
        let mut w: Vec<f64> = (0..nq).map(|_| rng.random::<f64>() + 0.01).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let p = ProbVector::new(w).unwrap();
        let u = su2_geodesic_rotation(
            rng.random::<f64>() * std::f64::consts::PI,
            rng.random::<f64>() * 2.0 * std::f64::consts::PI,
        );
        max_dev = max_dev.max(check_covariance(&psi, &p, &u).unwrap());
    }
    assert!(max_dev <= 1e-10, "covariance deviation {max_dev}");

    // equal marginal purity on 1e3 random two-qubit states
    for _ in 0..1000 {
        let psi = sample_haar_state(2, &mut rng).unwrap();
        let rho = psi.density();
        let r1 = rho.partial_trace(&[0]).unwrap().bloch_vector().unwrap().norm();
        let r2 = rho.partial_trace(&[1]).unwrap().bloch_vector().unwrap().norm();
        assert!((r1 - r2).abs() <= 1e-10);
    }

    // coherence envelopes on dense grids (magnitudes)
    for i in 1..50 {
        let h = i as f64 / 50.0;
        for j in 0..=50 {
            let r = j as f64 / 50.0;
            let (rho, _) = avg_state_full(h, r).unwrap();
            let coh = rho.entry(1, 2).re;
            assert!(coh.abs() <= (1.0 - r) / 4.0 + 1e-12);
            if r >= h {
                let (rho, _) = avg_state_separable(h, r).unwrap();
                let coh = rho.entry(1, 2).re;
                assert!(coh.abs() <= (1.0 - r) / 2.0 + 1e-12);
            }
        }
    }

    // channel outputs satisfy the validated constructor
    for _ in 0..50 {
        let psi = sample_haar_state(3, &mut rng).unwrap();
        let p = ProbVector::uniform(3);
        let out = apply_cg(&psi, &p).unwrap();
        assert!(DensityMatrix::new(out.data().to_vec()).is_ok());
    }
    println!(
        "acceptance criterion 10 PASS: covariance <= 1e-10, equal marginal purity, \
         coherence envelopes hold"
    );
}
