use hydrobid_pdf::{LogDensity, Predictive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal as Z;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Normal mean with known sigma and a normal prior: the conjugate case.
pub struct KnownSigma {
    pub data: Vec<f64>,
    pub sigma: f64,
    pub prior_mean: f64,
    pub prior_std: f64,
}

impl KnownSigma {
    /// Closed-form posterior mean and std of the location.
    pub fn posterior(&self) -> (f64, f64) {
        let prec = 1.0 / self.prior_std.powi(2) + self.data.len() as f64 / self.sigma.powi(2);
        let mean =
            (self.prior_mean / self.prior_std.powi(2) + self.data.iter().sum::<f64>() / self.sigma.powi(2)) / prec;
        (mean, prec.recip().sqrt())
    }
}

impl LogDensity for KnownSigma {
    fn dim(&self) -> usize {
        1
    }
    fn log_density_grad(&self, th: &[f64], g: &mut [f64]) -> f64 {
        let mu = th[0];
        let s2 = self.sigma * self.sigma;
        let p2 = self.prior_std * self.prior_std;
        g[0] = self.data.iter().map(|y| (y - mu) / s2).sum::<f64>() - (mu - self.prior_mean) / p2;
        -self.data.iter().map(|y| (y - mu).powi(2)).sum::<f64>() / (2.0 * s2)
            - (mu - self.prior_mean).powi(2) / (2.0 * p2)
    }
}

impl Predictive for KnownSigma {
    fn density(&self, th: &[f64], y: f64) -> f64 {
        Normal::new(th[0], self.sigma).unwrap().pdf(y)
    }
    fn cdf(&self, th: &[f64], y: f64) -> f64 {
        Normal::new(th[0], self.sigma).unwrap().cdf(y)
    }
    fn moments(&self, th: &[f64]) -> (f64, f64) {
        (th[0], self.sigma * self.sigma)
    }
}

pub fn conjugate() -> KnownSigma {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    KnownSigma {
        data: (0..20).map(|_| 25.0 + 4.0 * rng.sample::<f64, _>(Z)).collect(),
        sigma: 4.0,
        prior_mean: 20.0,
        prior_std: 3.0,
    }
}

/// Standard error of a chain mean by batch means.
pub fn batch_se(x: &[f64], batches: usize) -> f64 {
    let b = x.len() / batches;
    let means: Vec<f64> = x
        .chunks(b)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    (var / batches as f64).sqrt()
}

pub fn ks_statistic(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let z = Normal::standard();
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = z.cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
