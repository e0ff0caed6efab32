//! Cross-module randomized invariants that are not release criteria:
//! recurrence fidelity at scale, null-route agreement, p-value
//! super-uniformity, covariance matrix health, and baseline test levels.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use hks::baselines;
use hks::dist::DistributionSpec;
use hks::nulls::{self, GpReference};
use hks::poly::build_coefficients;
use hks::statistic::DEFAULT_EPS;
use hks::{hks_exact, hks_grid, ks_classic, HksConfig, TwoSamples};

/// `(1/k!) sum_{j>=i} c_j (z_j - t)^k` by direct summation.
fn direct_phi(knots: &[f64], weights: &[f64], i: usize, k: usize, t: f64) -> f64 {
    let k_fact: f64 = (1..=k).map(|v| v as f64).product();
    knots[i..]
        .iter()
        .zip(&weights[i..])
        .map(|(&z, &c)| c * (z - t).powi(k as i32))
        .sum::<f64>()
        / k_fact
}

#[test]
fn recurrence_fidelity_at_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..1000 {
        let n = rng.gen_range(1..=50);
        let k = rng.gen_range(0..=7);
        let mut knots: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-4..=10.0)).collect();
        knots.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        knots.dedup();
        let weights: Vec<f64> = knots.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let pp = build_coefficients(&knots, &weights, k).unwrap();

        let k_fact: f64 = (1..=k).map(|v| v as f64).product();
        let magnitude =
            weights.iter().map(|c| c.abs()).sum::<f64>() * 10.0f64.powi(k as i32) / k_fact + 1e-30;
        for i in 0..pp.num_pieces() {
            let (lo, hi) = (pp.boundaries()[i], pp.boundaries()[i + 1]);
            for _ in 0..100 {
                let t = rng.gen_range(lo..=hi);
                let direct = direct_phi(&knots, &weights, i, k, t);
                let via_poly = pp.piece_poly(i).eval(t);
                assert!(
                    (via_poly - direct).abs() <= 1e-8 * magnitude,
                    "case {case}, piece {i}, t={t}: {via_poly} vs {direct}"
                );
            }
        }
    }
}

#[test]
fn permutation_p_values_are_super_uniform() {
    let spec = DistributionSpec::normal(0.0, 1.0);
    let trials = 400usize;
    let p_values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(33);
            rng.set_stream(trial as u64 + 1);
            let mut x = Vec::new();
            spec.sample_into(&mut rng, 40, &mut x);
            let mut y = Vec::new();
            spec.sample_into(&mut rng, 40, &mut y);
            let s = TwoSamples::new(x, y).unwrap();
            nulls::permutation_null(&s, &HksConfig::exact(1), 99, 1000 + trial as u64)
                .unwrap()
                .1
        })
        .collect();
    let slack = 2.0 / (trials as f64).sqrt();
    for alpha in [0.01, 0.05, 0.1] {
        let rate = p_values.iter().filter(|p| **p <= alpha).count() as f64 / trials as f64;
        assert!(
            rate <= alpha + slack,
            "alpha {alpha}: empirical rate {rate} > {}",
            alpha + slack
        );
    }
}

#[test]
fn covariance_matrices_are_symmetric_and_nearly_psd() {
    for (reference, k) in [
        (GpReference::Spec(DistributionSpec::normal(0.0, 1.0)), 0usize),
        (GpReference::Spec(DistributionSpec::normal(0.0, 1.0)), 2),
        (
            GpReference::Empirical(DistributionSpec::uniform(-1.0, 1.0).sample(400, 5)),
            1,
        ),
    ] {
        let grid = nulls::build_gp_grid(&reference, k, 48, 77).unwrap();
        let d = grid.t_grid.len();
        for i in 0..d {
            for j in 0..d {
                assert!(
                    (grid.cov[(i, j)] - grid.cov[(j, i)]).abs() <= 1e-10,
                    "asymmetry at ({i},{j})"
                );
            }
        }
        let sym = nalgebra::SymmetricEigen::new(grid.cov.clone());
        let min_eig = sym.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v));
        assert!(min_eig >= -1e-8, "k={k}: min eigenvalue {min_eig}");
    }
}

#[test]
fn asymptotic_null_order_zero_is_reference_free() {
    // the k = 0 limit is the Brownian-bridge supremum for any continuous
    // reference; two very different references must give matching draws
    let a = nulls::asymptotic_null(
        &GpReference::Spec(DistributionSpec::normal(0.0, 1.0)),
        0,
        256,
        20_000,
        4242,
    )
    .unwrap();
    let b = nulls::asymptotic_null(
        &GpReference::Spec(DistributionSpec::uniform(0.0, 1.0)),
        0,
        256,
        20_000,
        2424,
    )
    .unwrap();
    for q in [0.5, 0.9, 0.95] {
        let (qa, qb) = (a.quantile(q), b.quantile(q));
        assert!(
            (qa - qb).abs() < 0.03,
            "q{q}: normal ref {qa} vs uniform ref {qb}"
        );
    }
}

#[test]
fn approximation_routes_share_the_null() {
    // null draws of the exact-path statistic (tiny eps), the eps = 1/N
    // approximation, and the grid statistic must be nearly indistinguishable
    let spec = DistributionSpec::uniform(0.0, 1.0);
    let (m, n, k) = (2000usize, 2000usize, 6usize);
    let draws: Vec<(f64, f64, f64)> = (0..400)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(55);
            rng.set_stream(rep as u64 + 1);
            let mut x = Vec::new();
            spec.sample_into(&mut rng, m, &mut x);
            let mut y = Vec::new();
            spec.sample_into(&mut rng, n, &mut y);
            let s = TwoSamples::new(x, y).unwrap();
            let tight = hks_exact(&s, k, 1e-9).unwrap().statistic;
            let loose = hks_exact(&s, k, 1.0 / (m + n) as f64).unwrap().statistic;
            let grid = hks_grid(&s, k).unwrap().statistic;
            (tight, loose, grid)
        })
        .collect();
    let col = |f: fn(&(f64, f64, f64)) -> f64| -> Vec<f64> { draws.iter().map(f).collect() };
    let (t, te, ts) = (col(|d| d.0), col(|d| d.1), col(|d| d.2));
    for (a, b, label) in [(&t, &te, "T vs T_eps"), (&t, &ts, "T vs T*"), (&te, &ts, "T_eps vs T*")] {
        let ks = ks_classic(&TwoSamples::new(a.clone(), b.clone()).unwrap())
            .unwrap()
            .statistic;
        assert!(ks <= 0.05, "{label}: ks distance {ks}");
    }
}

#[test]
fn statistic_zero_iff_identical_multisets() {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for case in 0..500 {
        let n = rng.gen_range(1..=30);
        let base: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut shuffled = base.clone();
        shuffled.shuffle(&mut rng);
        let k = rng.gen_range(0..=5);

        let same = TwoSamples::new(base.clone(), shuffled.clone()).unwrap();
        assert_eq!(
            hks_exact(&same, k, DEFAULT_EPS).unwrap().statistic,
            0.0,
            "case {case}: identical multisets"
        );

        let mut perturbed = shuffled;
        let idx = rng.gen_range(0..n);
        perturbed[idx] += rng.gen_range(0.25..1.0);
        let diff = TwoSamples::new(base, perturbed).unwrap();
        assert!(
            hks_exact(&diff, k, DEFAULT_EPS).unwrap().statistic > 0.0,
            "case {case}: perturbed multisets"
        );
    }
}

#[test]
fn baseline_permutation_levels() {
    let spec = DistributionSpec::normal(0.0, 1.0);
    let trials = 1000usize;
    let alpha = 0.05;
    type StatFn = fn(&TwoSamples) -> f64;
    let stats: Vec<(&str, StatFn)> = vec![
        ("energy", |s| baselines::energy_distance(s).unwrap().statistic),
        ("mmd_gaussian", |s| {
            baselines::mmd_gaussian(s, baselines::Bandwidth::Auto)
                .unwrap()
                .statistic
        }),
        ("mmd_polynomial", |s| {
            baselines::mmd_polynomial(s, 2).unwrap().statistic
        }),
        ("anderson_darling", |s| {
            baselines::anderson_darling(s).unwrap().statistic
        }),
    ];
    for (name, f) in stats {
        let rejections: usize = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(88);
                rng.set_stream(trial as u64 + 1);
                let mut x = Vec::new();
                spec.sample_into(&mut rng, 100, &mut x);
                let mut y = Vec::new();
                spec.sample_into(&mut rng, 100, &mut y);
                let s = TwoSamples::new(x, y).unwrap();
                let (_, p) =
                    nulls::permutation_null_with(&s, |rel| Ok(f(rel)), 99, 7000 + trial as u64)
                        .unwrap();
                usize::from(p <= alpha)
            })
            .sum();
        let rate = rejections as f64 / trials as f64;
        assert!(
            (0.03..=0.07).contains(&rate),
            "{name}: level {rate} outside [0.03, 0.07]"
        );
    }
}

#[test]
fn covariance_closed_form_matches_monte_carlo_k0() {
    let spec = DistributionSpec::uniform(0.0, 1.0);
    let reference = GpReference::Spec(spec.clone());
    // same-branch pair on the positive axis
    let analytic = nulls::gp_covariance(&reference, 0, 0.25, 0.5).unwrap();
    let draws = spec.sample(nulls::COV_MC_DRAWS, 3);
    let empirical = {
        let r = GpReference::Empirical(draws);
        nulls::gp_covariance(&r, 0, 0.25, 0.5).unwrap()
    };
    assert!(
        (analytic - empirical).abs() < 3.0 * 0.0015,
        "analytic {analytic} vs plug-in {empirical}"
    );
}

#[test]
fn population_distance_positive_for_study_pairs() {
    let p = DistributionSpec::normal(0.0, 1.0);
    let pairs = [
        DistributionSpec::normal(0.0, 1.2),
        DistributionSpec::normal(0.2, 1.0),
        DistributionSpec::student_t(3.0),
    ];
    for q in &pairs {
        for k in 0..=2 {
            let v = hks::oracles::population_ipm(&p, q, k).unwrap();
            assert!(v > 1e-4, "{} k={k}: {v}", q.spec_string());
        }
    }
}

#[test]
fn population_distance_matches_monte_carlo_maximization() {
    // order-1 distance for the variance pair, cross-checked by maximizing
    // |mean(X - t)_+ - mean(Y - t)_+| over a t-grid with 1e7 draws per side
    let p = DistributionSpec::normal(0.0, 1.0);
    let q = DistributionSpec::normal(0.0, 1.2);
    let ipm = hks::oracles::population_ipm(&p, &q, 1).unwrap();

    let n = 10_000_000usize;
    let xs = p.sample(n, 91);
    let ys = q.sample(n, 92);
    let ts: Vec<f64> = (0..=60).map(|i| i as f64 * 0.05).collect();
    let mc = ts
        .par_iter()
        .map(|&t| {
            let mx = xs.iter().map(|&v| (v - t).max(0.0)).sum::<f64>() / n as f64;
            let my = ys.iter().map(|&v| (v - t).max(0.0)).sum::<f64>() / n as f64;
            (mx - my).abs()
        })
        .reduce(|| 0.0, f64::max);
    // both sides are symmetric here, so the plus branch carries the sup
    assert!(
        (ipm - mc).abs() < 1e-3,
        "integration route {ipm} vs Monte Carlo {mc}"
    );
}

#[test]
fn roc_output_files_are_bitwise_deterministic() {
    let run = |dir: &std::path::Path| -> Vec<u8> {
        let cfg = hks::experiments::ExperimentConfig {
            p: Some("normal:0,1".into()),
            q: Some("normal:0.4,1".into()),
            pair: None,
            m: 25,
            n: 25,
            reps: 40,
            seed: 12,
            tests: vec!["ks".into(), "hks:k=2".into()],
            output: Some(dir.join("out")),
        };
        hks::experiments::run_roc(&cfg).unwrap();
        let mut bytes = std::fs::read(dir.join("out/roc_ks.csv")).unwrap();
        bytes.extend(std::fs::read(dir.join("out/roc_hks_k_2.csv")).unwrap());
        bytes
    };
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    assert_eq!(run(d1.path()), run(d2.path()));
}

#[test]
fn degenerate_reference_exercises_jitter_ladder() {
    // constant empirical reference: every g value is identical, so the
    // covariance is all zeros and only the jitter makes Cholesky succeed
    let degenerate = GpReference::Empirical(vec![1.0; 50]);
    match nulls::asymptotic_null(&degenerate, 1, 8, 4, 1) {
        Ok(nd) => assert!(nd.samples().iter().all(|v| v.is_finite())),
        Err(e) => assert!(matches!(e, hks::Error::Numerical(_)), "{e}"),
    }
}
