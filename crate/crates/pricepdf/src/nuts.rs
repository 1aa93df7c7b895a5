//! No-U-Turn sampler: doubling trees with slice acceptance, and
//! dual-averaging adaptation of the step size during warmup.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::LogDensity;
use crate::PdfError;

/// Position, momentum and the target's value and gradient at the position.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub theta: Vec<f64>,
    pub r: Vec<f64>,
    pub grad: Vec<f64>,
    pub logp: f64,
}

impl Point {
    pub fn new(target: &impl LogDensity, theta: Vec<f64>, r: Vec<f64>) -> Self {
        let mut grad = vec![0.0; theta.len()];
        let logp = target.log_density_grad(&theta, &mut grad);
        Self { theta, r, grad, logp }
    }

    /// Log of the joint density, `log p(theta) - |r|^2 / 2`.
    pub fn joint(&self) -> f64 {
        self.logp - 0.5 * dot(&self.r, &self.r)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn leapfrog(target: &impl LogDensity, p: &Point, eps: f64) -> Point {
    let r_half: Vec<f64> = p.r.iter().zip(&p.grad).map(|(r, g)| r + 0.5 * eps * g).collect();
    let theta: Vec<f64> = p.theta.iter().zip(&r_half).map(|(t, r)| t + eps * r).collect();
    let mut grad = vec![0.0; theta.len()];
    let logp = target.log_density_grad(&theta, &mut grad);
    let r = r_half.iter().zip(&grad).map(|(r, g)| r + 0.5 * eps * g).collect();
    Point { theta, r, grad, logp }
}

/// A subtree: its two ends, the proposal sampled from its valid states, and
/// acceptance statistics for adaptation.
#[derive(Debug, Clone)]
pub struct Tree {
    pub minus: Point,
    pub plus: Point,
    pub proposal: Point,
    /// States inside the slice.
    pub n: usize,
    /// False once a U-turn or a divergence was met.
    pub keep_going: bool,
    pub diverged: bool,
    pub alpha: f64,
    pub n_alpha: usize,
}

fn no_uturn(minus: &Point, plus: &Point) -> bool {
    let d: Vec<f64> = plus.theta.iter().zip(&minus.theta).map(|(a, b)| a - b).collect();
    dot(&d, &minus.r) >= 0.0 && dot(&d, &plus.r) >= 0.0
}

/// Builds a subtree of `2^depth` leapfrog steps from `p` in direction
/// `dir` (+1 or -1). `joint0` is the joint log density at the trajectory's
/// start and `log_u` the slice level.
#[allow(clippy::too_many_arguments)]
pub fn build_tree(
    target: &impl LogDensity,
    p: &Point,
    log_u: f64,
    dir: f64,
    depth: usize,
    eps: f64,
    joint0: f64,
    max_delta_energy: f64,
    rng: &mut impl Rng,
) -> Tree {
    if depth == 0 {
        let q = leapfrog(target, p, dir * eps);
        let joint = q.joint();
        let joint = if joint.is_nan() { f64::NEG_INFINITY } else { joint };
        let diverged = !(log_u < joint + max_delta_energy);
        return Tree {
            minus: q.clone(),
            plus: q.clone(),
            proposal: q,
            n: usize::from(log_u <= joint),
            keep_going: !diverged,
            diverged,
            alpha: (joint - joint0).exp().min(1.0),
            n_alpha: 1,
        };
    }
    let mut t = build_tree(target, p, log_u, dir, depth - 1, eps, joint0, max_delta_energy, rng);
    if !t.keep_going {
        return t;
    }
    let start = if dir < 0.0 { &t.minus } else { &t.plus };
    let t2 = build_tree(
        target,
        &start.clone(),
        log_u,
        dir,
        depth - 1,
        eps,
        joint0,
        max_delta_energy,
        rng,
    );
    if dir < 0.0 {
        t.minus = t2.minus;
    } else {
        t.plus = t2.plus;
    }
    let total = t.n + t2.n;
    if total > 0 && rng.gen::<f64>() < t2.n as f64 / total as f64 {
        t.proposal = t2.proposal;
    }
    t.n = total;
    t.alpha += t2.alpha;
    t.n_alpha += t2.n_alpha;
    t.diverged |= t2.diverged;
    t.keep_going = t2.keep_going && no_uturn(&t.minus, &t.plus);
    t
}

fn momentum(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Doubles or halves a unit step until one leapfrog step's acceptance
/// ratio crosses 1/2.
pub fn find_reasonable_epsilon(target: &impl LogDensity, theta: &[f64], rng: &mut impl Rng) -> f64 {
    let mut eps = 1.0;
    let p = Point::new(target, theta.to_vec(), momentum(theta.len(), rng));
    let ratio = |eps: f64| {
        let q = leapfrog(target, &p, eps);
        let d = q.joint() - p.joint();
        if d.is_nan() {
            f64::NEG_INFINITY
        } else {
            d
        }
    };
    let a = if ratio(eps) > 0.5f64.ln() { 1.0 } else { -1.0 };
    for _ in 0..100 {
        if a * ratio(eps) <= -a * 2f64.ln() {
            break;
        }
        eps *= 2f64.powf(a);
    }
    eps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NutsConfig {
    pub draws: usize,
    pub warmup: usize,
    pub target_accept: f64,
    pub max_depth: usize,
    pub max_delta_energy: f64,
    pub seed: u64,
}

impl Default for NutsConfig {
    fn default() -> Self {
        Self {
            draws: 1000,
            warmup: 500,
            target_accept: 0.8,
            max_depth: 10,
            max_delta_energy: 1000.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    /// `[draw][parameter]`
    pub draws: Vec<Vec<f64>>,
    pub step_size: f64,
    /// Divergent transitions after warmup.
    pub divergences: usize,
    pub warmup_divergences: usize,
    pub mean_accept: f64,
    pub tree_depths: Vec<usize>,
}

impl PosteriorSamples {
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[k]).collect()
    }
}

pub fn nuts_sample(target: &impl LogDensity, init: &[f64], cfg: &NutsConfig) -> Result<PosteriorSamples, PdfError> {
    if cfg.draws == 0 || cfg.warmup == 0 {
        return Err(PdfError::Settings("draws and warmup must be positive".into()));
    }
    if !(cfg.target_accept > 0.0 && cfg.target_accept < 1.0) {
        return Err(PdfError::Settings(format!(
            "target acceptance {} outside (0, 1)",
            cfg.target_accept
        )));
    }
    if init.len() != target.dim() || init.iter().any(|v| !v.is_finite()) {
        return Err(PdfError::Settings(
            "initial point has the wrong size or is not finite".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = target.dim();
    let mut eps = find_reasonable_epsilon(target, init, &mut rng);
    // Dual averaging state.
    let (gamma, t0, kappa) = (0.05, 10.0, 0.75);
    let mu = (10.0 * eps).ln();
    let (mut h_bar, mut log_eps_bar) = (0.0, 0.0);

    let mut current = Point::new(target, init.to_vec(), vec![0.0; dim]);
    let mut out = PosteriorSamples {
        draws: Vec::with_capacity(cfg.draws),
        step_size: eps,
        divergences: 0,
        warmup_divergences: 0,
        mean_accept: 0.0,
        tree_depths: Vec::with_capacity(cfg.draws),
    };
    for m in 1..=cfg.warmup + cfg.draws {
        let start = Point::new(target, current.theta.clone(), momentum(dim, &mut rng));
        let joint0 = start.joint();
        let log_u = joint0 + (1.0 - rng.gen::<f64>()).ln();
        let (mut minus, mut plus) = (start.clone(), start.clone());
        let mut n = 1usize;
        let mut depth = 0;
        let mut diverged = false;
        let (mut alpha, mut n_alpha) = (0.0, 0usize);
        while depth < cfg.max_depth {
            let dir = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let from = if dir < 0.0 { minus.clone() } else { plus.clone() };
            let t = build_tree(
                target,
                &from,
                log_u,
                dir,
                depth,
                eps,
                joint0,
                cfg.max_delta_energy,
                &mut rng,
            );
            if dir < 0.0 {
                minus = t.minus.clone();
            } else {
                plus = t.plus.clone();
            }
            if t.keep_going && rng.gen::<f64>() < t.n as f64 / n as f64 {
                current = t.proposal.clone();
            }
            n += t.n;
            alpha = t.alpha;
            n_alpha = t.n_alpha;
            diverged |= t.diverged;
            depth += 1;
            if !(t.keep_going && no_uturn(&minus, &plus)) {
                break;
            }
        }
        let accept = if n_alpha > 0 { alpha / n_alpha as f64 } else { 0.0 };
        if m <= cfg.warmup {
            out.warmup_divergences += usize::from(diverged);
            let mf = m as f64;
            let w = 1.0 / (mf + t0);
            h_bar = (1.0 - w) * h_bar + w * (cfg.target_accept - accept);
            let log_eps = mu - mf.sqrt() / gamma * h_bar;
            let k = mf.powf(-kappa);
            log_eps_bar = k * log_eps + (1.0 - k) * log_eps_bar;
            eps = log_eps.exp();
            if m == cfg.warmup {
                if out.warmup_divergences == cfg.warmup {
                    return Err(PdfError::AllDivergent {
                        step_size: eps,
                        divergences: out.warmup_divergences,
                    });
                }
                eps = log_eps_bar.exp();
                out.step_size = eps;
            }
        } else {
            out.divergences += usize::from(diverged);
            out.mean_accept += accept / cfg.draws as f64;
            out.tree_depths.push(depth);
            out.draws.push(current.theta.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StandardNormal;

    struct Flat;
    impl LogDensity for Flat {
        fn dim(&self) -> usize {
            2
        }
        fn log_density_grad(&self, _: &[f64], g: &mut [f64]) -> f64 {
            g.fill(0.0);
            0.0
        }
    }

    #[test]
    fn zero_gradient_is_straight_drift() {
        let p = Point::new(&Flat, vec![1.0, -2.0], vec![0.5, 0.25]);
        let q = leapfrog(&Flat, &p, 0.1);
        assert_eq!(q.theta, vec![1.05, -1.975]);
        assert_eq!(q.r, p.r);
    }

    #[test]
    fn depth_zero_is_one_step() {
        let target = StandardNormal { dim: 1 };
        let p = Point::new(&target, vec![0.3], vec![1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = build_tree(&target, &p, p.joint() - 1.0, 1.0, 0, 0.1, p.joint(), 1000.0, &mut rng);
        let q = leapfrog(&target, &p, 0.1);
        assert_eq!(t.proposal.theta, q.theta);
        assert_eq!((t.n, t.n_alpha), (1, 1));
    }

    #[test]
    fn huge_step_diverges() {
        let target = StandardNormal { dim: 1 };
        let p = Point::new(&target, vec![1.0], vec![1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = build_tree(&target, &p, p.joint() - 0.1, 1.0, 0, 1e4, p.joint(), 1000.0, &mut rng);
        assert!(t.diverged && !t.keep_going && t.n == 0);
    }

    #[test]
    fn bad_settings_rejected() {
        let target = StandardNormal { dim: 1 };
        let cfg = NutsConfig {
            target_accept: 1.0,
            ..Default::default()
        };
        assert!(nuts_sample(&target, &[0.0], &cfg).is_err());
        assert!(nuts_sample(&target, &[0.0, 1.0], &NutsConfig::default()).is_err());
    }
}
