mod common;

use std::sync::Arc;

use hawkes_mm::branching::{
    estimate_u, labels, run_particle, sample_label, solve_polynomial, taylor_generator, tree_rng, Coeffs,
    Expansion, GeneratorPoly, GridGuide, GuideProjection, ParticleConfig, Terms,
};
use hawkes_mm::hawkes::{IntensitySpec, MarketState};
use hawkes_mm::hjb::{solve, BeliefMap, GridSpec};
use hawkes_mm::kernels::ExpSumKernel;
use rand::SeedableRng;

fn origin() -> MarketState<f64> {
    MarketState::flat(0, 0)
}

fn full_poly() -> GeneratorPoly<f64> {
    let terms = Terms {
        constant: true,
        linear: true,
        first: [true; 2],
        second: [true; 2],
    };
    GeneratorPoly::new(ExpSumKernel::single(0.5, 2.0).unwrap(), terms, |_, i, _, _| Coeffs {
        f0: 0.3 - 0.01 * (i * i) as f64,
        f1: -0.2,
        f21: [0.4, 0.35],
        f22: [0.1, 0.12],
    })
}

#[test]
fn constant_generator_integrates_exactly() {
    let poly = GeneratorPoly::constant(2.0);
    let cfg = ParticleConfig::new(1.0, 3);
    let e = estimate_u(0.0, &origin(), &poly, &cfg, 40_000).unwrap();
    assert!((e.mean - 2.0).abs() < 3.0 * e.stderr, "{e:?}");
    // from t = 0.25 the remaining horizon is 0.75
    let e = estimate_u(0.25, &origin(), &poly, &cfg, 40_000).unwrap();
    assert!((e.mean - 1.5).abs() < 3.0 * e.stderr, "{e:?}");
}

#[test]
fn affine_generator_matches_the_ode() {
    // U' = -(1 + U/2), U(1) = 0  =>  U(0) = 2 (e^{1/2} - 1)
    let want = 1.297_442_541_400_256_2;
    let poly = GeneratorPoly::affine(1.0, 0.5);
    let e = estimate_u(0.0, &origin(), &poly, &ParticleConfig::new(1.0, 11), 40_000).unwrap();
    assert!((e.mean - want).abs() < 3.0 * e.stderr, "{e:?}");
}

#[test]
fn affine_estimates_are_unbiased_across_seeds() {
    let want = 2.0 * (0.5f64.exp() - 1.0);
    let poly = GeneratorPoly::affine(1.0, 0.5);
    let mut outliers = 0;
    let mut pooled = 0.0;
    let mut pooled_var = 0.0;
    for seed in 0..20 {
        let e = estimate_u(0.0, &origin(), &poly, &ParticleConfig::new(1.0, seed), 5_000).unwrap();
        if (e.mean - want).abs() > 3.0 * e.stderr {
            outliers += 1;
        }
        pooled += e.mean / 20.0;
        pooled_var += e.stderr * e.stderr / 400.0;
    }
    assert!(outliers <= 1, "{outliers} seeds off by more than 3 stderr");
    assert!((pooled - want).abs() < 3.0 * pooled_var.sqrt());
}

#[test]
fn zero_generator_is_exactly_zero() {
    let e = estimate_u(0.0, &origin(), &GeneratorPoly::zero(), &ParticleConfig::new(1.0, 0), 10).unwrap();
    assert_eq!((e.mean, e.stderr, e.mean_tree_size), (0.0, 0.0, 0.0));
}

#[test]
fn doubling_trees_halves_the_variance() {
    let poly = GeneratorPoly::affine(1.0, 0.5);
    let cfg = ParticleConfig::new(1.0, 21);
    let a = estimate_u(0.0, &origin(), &poly, &cfg, 20_000).unwrap();
    let b = estimate_u(0.0, &origin(), &poly, &cfg, 40_000).unwrap();
    let ratio = (b.stderr * b.stderr) / (a.stderr * a.stderr);
    assert!((ratio - 0.5).abs() < 0.1, "{ratio}");
}

#[test]
fn labels_are_drawn_uniformly() {
    let ls = labels(&full_poly());
    assert_eq!(ls.len(), 14);
    let mut rng = tree_rng(5, 0);
    let n = 140_000;
    let mut counts = vec![0usize; ls.len()];
    for _ in 0..n {
        let (l, p) = sample_label(&mut rng, &ls).unwrap();
        assert_eq!(p, 1.0 / 14.0);
        counts[ls.iter().position(|x| *x == l).unwrap()] += 1;
    }
    // chi-square with 13 degrees of freedom, 0.999 quantile 34.53
    let e = n as f64 / 14.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    assert!(chi2 < 34.53, "{chi2} {counts:?}");
}

#[test]
fn label_probabilities_multiply_along_the_tree() {
    let poly = full_poly();
    let cfg = ParticleConfig::new(1.0, 9);
    let per_label = (14.0f64).ln();
    for k in 0..2_000 {
        let mut rng = tree_rng(9, k);
        let (_, stats) = run_particle(0.0, &MarketState::flat(1, 1), &poly, &cfg, &mut rng).unwrap();
        let want = stats.branchings as f64 * per_label;
        assert!((stats.log_inverse_label_prob - want).abs() < 1e-9 * (1.0 + want));
        assert!(stats.branchings <= stats.particles);
    }
}

#[test]
fn estimates_do_not_depend_on_the_thread_count() {
    let poly = full_poly();
    let cfg = ParticleConfig::new(1.0, 17);
    let state = MarketState::flat(1, 2);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_u(0.0, &state, &poly, &cfg, 5_000).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn tree_sizes_have_the_same_law_across_seeds() {
    let poly = full_poly();
    let cfg = ParticleConfig::new(1.0, 0);
    let sizes = |seed: u64| -> Vec<f64> {
        (0..4_000)
            .map(|k| {
                let mut rng = tree_rng(seed, k);
                run_particle(0.0, &MarketState::flat(1, 1), &poly, &cfg, &mut rng).unwrap().1.particles as f64
            })
            .collect()
    };
    let (mut a, mut b) = (sizes(1), sizes(2));
    let (d, n) = common::ks_two_sample(&mut a, &mut b);
    assert!(common::ks_pvalue(d, n) > 0.01, "D = {d}");
}

#[test]
fn independent_seeding_is_reproducible() {
    let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let poly = full_poly();
    let cfg = ParticleConfig::new(1.0, 0);
    let x = run_particle(0.0, &MarketState::flat(1, 0), &poly, &cfg, &mut a).unwrap();
    let y = run_particle(0.0, &MarketState::flat(1, 0), &poly, &cfg, &mut b).unwrap();
    assert_eq!(x, y);
}

#[test]
fn fixed_expansion_beyond_the_kink_is_rejected() {
    let spec = IntensitySpec::new(0.1, ExpSumKernel::single(0.9, 1.0).unwrap(), 20.0).unwrap();
    assert!(taylor_generator(&spec, 0.1, 0.0, Expansion::Fixed([0.05, 0.0])).is_err());
    assert!(taylor_generator(&spec, 0.1, 0.0, Expansion::Fixed([0.0, 0.0])).is_ok());
}

#[test]
fn guided_expansion_reproduces_the_one_exponential_hjb() {
    let k = ExpSumKernel::<f64>::single(0.9, 1.0).unwrap();
    let grid = GridSpec::new(12, vec![8.0], 33, 1.0, 0.1, 20.0, 0.1, k.clone()).unwrap();
    let (exact, _) = solve(&grid).unwrap();
    let coarse = GridSpec::new(12, vec![8.0], 9, 1.0, 0.1, 20.0, 0.1, k.clone()).unwrap();
    let (guide_grid, _) = solve(&coarse).unwrap();
    let guide = GridGuide::new(guide_grid, k.clone(), GuideProjection::Belief(BeliefMap::new(&k, &k).unwrap())).unwrap();
    let spec = IntensitySpec::new(0.1, k, 20.0).unwrap();
    let poly = taylor_generator(&spec, 0.1, 0.0, Expansion::Guided(Arc::new(guide))).unwrap();

    // the finite-difference solution of the same polynomial PIDE
    let pde = solve_polynomial(&poly, &grid, 1.0).unwrap();
    let cfg = ParticleConfig::new(1.0, 7);
    for (i, c) in [(0i64, 0.0), (-5, 0.0), (2, 1.0)] {
        let u = exact.value_at_start(i, &[c], &[0.0]).unwrap();
        let p = pde.value_at_start(i, &[c], &[0.0]).unwrap();
        assert!((u - p).abs() < 1e-4 * (1.0 + u.abs()), "i={i}: {u} vs {p}");
        let e = estimate_u(0.0, &MarketState::new(i, vec![c], vec![0.0], 0.0).unwrap(), &poly, &cfg, 100_000).unwrap();
        let tol = (3.0 * e.stderr).max(0.02 * u.abs());
        assert!((e.mean - u).abs() <= tol, "i={i}: {} ± {} vs {u}", e.mean, e.stderr);
    }
}
