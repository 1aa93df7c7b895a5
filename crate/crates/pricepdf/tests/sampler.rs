use hydrobid_pdf::nuts::Point;
use hydrobid_pdf::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod support;
use support::stats::{batch_se, conjugate, ks_statistic};

fn std_normal_draws(seed: u64) -> PosteriorSamples {
    let cfg = NutsConfig {
        draws: 10_000,
        warmup: 1000,
        seed,
        ..Default::default()
    };
    nuts_sample(&StandardNormal { dim: 1 }, &[0.5], &cfg).unwrap()
}

#[test]
fn standard_normal_draws_pass_ks() {
    let s = std_normal_draws(2024);
    let x = s.column(0);
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 0.05, "{mean}");
    assert!((var - 1.0).abs() < 0.1, "{var}");
    // Asymptotic 1% critical value of the one-sample KS statistic.
    let d = ks_statistic(x);
    assert!(d < 1.628 / n.sqrt(), "{d}");
    assert!(
        s.mean_accept > 0.6 && s.divergences == 0,
        "{} {}",
        s.mean_accept,
        s.divergences
    );
}

#[test]
fn conjugate_posterior_mean_recovered() {
    let target = conjugate();
    let (mean, _) = target.posterior();
    let cfg = NutsConfig {
        draws: 4000,
        warmup: 500,
        seed: 3,
        ..Default::default()
    };
    let s = nuts_sample(&target, &[0.0], &cfg).unwrap();
    let x = s.column(0);
    let est = x.iter().sum::<f64>() / x.len() as f64;
    let se = batch_se(&x, 40);
    assert!((est - mean).abs() < 3.0 * se, "{est} vs {mean} (se {se})");
}

#[test]
fn same_seed_same_draws() {
    let target = conjugate();
    let cfg = NutsConfig {
        draws: 200,
        warmup: 100,
        seed: 9,
        ..Default::default()
    };
    let a = nuts_sample(&target, &[1.0], &cfg).unwrap();
    let b = nuts_sample(&target, &[1.0], &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn harmonic_step_tracks_rotation() {
    // log p = -x^2 / 2: exact flow is a rotation of (x, r).
    let target = StandardNormal { dim: 1 };
    for eps in [0.1, 0.05, 0.025] {
        let p = Point::new(&target, vec![1.0], vec![0.5]);
        let q = leapfrog(&target, &p, eps);
        let x = 1.0 * eps.cos() + 0.5 * eps.sin();
        let r = -eps.sin() + 0.5 * eps.cos();
        let err = (q.theta[0] - x).abs().max((q.r[0] - r).abs());
        assert!(err < 0.1 * eps.powi(3), "eps {eps}: {err}");
    }
}

#[test]
fn sharp_quadratic_turns_around() {
    struct Sharp;
    impl LogDensity for Sharp {
        fn dim(&self) -> usize {
            1
        }
        fn log_density_grad(&self, th: &[f64], g: &mut [f64]) -> f64 {
            g[0] = -1e4 * th[0];
            -0.5e4 * th[0] * th[0]
        }
    }
    let p = Point::new(&Sharp, vec![0.01], vec![0.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // Half a period is pi / 100; 16 steps of 0.005 overshoot it.
    let t = build_tree(&Sharp, &p, p.joint() - 5.0, 1.0, 4, 0.005, p.joint(), 1000.0, &mut rng);
    assert!(!t.keep_going && !t.diverged);
}

#[test]
fn all_divergent_warmup_fails() {
    struct Cliff;
    impl LogDensity for Cliff {
        fn dim(&self) -> usize {
            1
        }
        fn log_density_grad(&self, th: &[f64], g: &mut [f64]) -> f64 {
            g[0] = 0.0;
            if th[0] == 0.0 {
                0.0
            } else {
                f64::NAN
            }
        }
    }
    let cfg = NutsConfig {
        draws: 10,
        warmup: 20,
        ..Default::default()
    };
    assert!(matches!(
        nuts_sample(&Cliff, &[0.0], &cfg),
        Err(PdfError::AllDivergent { divergences: 20, .. })
    ));
}

#[test]
fn price_model_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let prices: Vec<f64> = (0..30).map(|_| rng.gen_range(10.0..60.0)).collect();
    for lik in [Likelihood::Normal, Likelihood::LogNormal] {
        let m = PriceModel::new(lik, &prices).unwrap();
        let base = m.initial();
        for _ in 0..20 {
            let th = [base[0] + rng.gen_range(-2.0..2.0), base[1] + rng.gen_range(-1.0..1.0)];
            let mut g = [0.0; 2];
            m.log_density_grad(&th, &mut g);
            for k in 0..2 {
                let h = 1e-5 * (1.0 + th[k].abs());
                let (mut a, mut b) = (th, th);
                a[k] += h;
                b[k] -= h;
                let mut scratch = [0.0; 2];
                let fd = (m.log_density_grad(&a, &mut scratch) - m.log_density_grad(&b, &mut scratch)) / (2.0 * h);
                assert!(
                    (fd - g[k]).abs() <= 1e-6 * (1.0 + g[k].abs()),
                    "{lik:?} {th:?} {k}: {fd} vs {}",
                    g[k]
                );
            }
        }
    }
}

proptest! {
    #[test]
    fn leapfrog_is_reversible(x in -3.0..3.0f64, y in -1.0..1.0f64, r0 in -3.0..3.0f64, r1 in -3.0..3.0f64, eps in 0.001..0.3f64) {
        let m = PriceModel::new(Likelihood::Normal, &[28.0, 31.0, 35.0, 30.5, 26.0]).unwrap();
        let init = m.initial();
        let p = Point::new(&m, vec![init[0] + x, init[1] + y], vec![r0, r1]);
        let q = leapfrog(&m, &p, eps);
        let back = leapfrog(&m, &Point { r: q.r.iter().map(|v| -v).collect(), ..q }, eps);
        for k in 0..2 {
            prop_assert!((back.theta[k] - p.theta[k]).abs() <= 1e-10);
            prop_assert!((back.r[k] + p.r[k]).abs() <= 1e-10);
        }
    }
}
