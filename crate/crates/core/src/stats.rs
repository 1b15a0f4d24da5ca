//! Central limit experiments and the statistical tests behind them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::walk::{chunk_rng, gap_profile, Character, Nilmanifold, Observable, WalkConfig, Walker, CHUNK};

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut s = NeumaierSum::default();
    values.into_iter().for_each(|v| s.add(v));
    s.total()
}

/// Kolmogorov-Smirnov distance between the empirical law of `data` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> f64 {
    let mut xs = data.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn ks_uniform(data: &[f64]) -> f64 {
    ks_statistic(data, |x| x.clamp(0.0, 1.0))
}

/// Distance to `N(0, sigma2)`; zero variance compares against a point mass at 0.
pub fn ks_normal(data: &[f64], sigma2: f64) -> f64 {
    if sigma2 <= 0.0 {
        return ks_statistic(data, |x| if x >= 0.0 { 1.0 } else { 0.0 });
    }
    let normal = Normal::new(0.0, sigma2.sqrt()).expect("positive standard deviation");
    ks_statistic(data, |x| normal.cdf(x))
}

/// Dvoretzky-Kiefer-Wolfowitz radius: `P(D_n > ε) <= alpha`.
pub fn dkw_bound(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Pearson χ² statistic of observed counts against expected probabilities.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

/// Upper `alpha` quantile of the χ² law with `dof` degrees of freedom.
pub fn chi_square_critical(dof: usize, alpha: f64) -> f64 {
    use statrs::distribution::ChiSquared;
    ChiSquared::new(dof as f64).expect("positive degrees of freedom").inverse_cdf(1.0 - alpha)
}

pub const DEFAULT_KS_THRESHOLD: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CLTReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub sigma2_hat: f64,
    pub ks_stat: f64,
    pub threshold: f64,
    pub degenerate: bool,
    pub pass: bool,
}

impl CLTReport {
    /// Centers `sums`, estimates the variance and tests normality.
    pub fn from_sums(n: usize, sums: &[f64], threshold: f64) -> Result<Self> {
        if sums.len() < 100 {
            return Err(Error::NotEnoughData(format!("{} trials; need at least 100", sums.len())));
        }
        let t = sums.len() as f64;
        let mean = neumaier_sum(sums.iter().copied()) / t;
        let centered: Vec<f64> = sums.iter().map(|s| s - mean).collect();
        let sigma2_hat = neumaier_sum(centered.iter().map(|c| c * c)) / (t - 1.0);
        let degenerate = sigma2_hat <= 1e-24;
        let ks_stat = if degenerate { 0.0 } else { ks_normal(&centered, sigma2_hat) };
        Ok(CLTReport {
            n,
            trials: sums.len(),
            mean,
            sigma2_hat: if degenerate { 0.0 } else { sigma2_hat },
            ks_stat,
            threshold,
            degenerate,
            pass: ks_stat < threshold,
        })
    }
}

/// `S = N^{-1/2} Σ_{n<N} A(x_n)` over independent Haar-started trials,
/// using the real part of `a`.
pub fn clt_sums(nil: &Nilmanifold, cfg: &WalkConfig, a: &Observable, n: usize, trials: usize) -> Result<Vec<f64>> {
    let walker = Walker::new(nil, cfg)?;
    let scale = (n as f64).sqrt();
    let chunks = trials.div_ceil(CHUNK);
    let sums: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(cfg.seed, c);
            (0..CHUNK.min(trials - c * CHUNK))
                .map(|_| {
                    let mut x = nil.uniform_point(&mut rng);
                    let mut s = NeumaierSum::default();
                    for t in 0..n {
                        if t > 0 {
                            x = walker.step(&x, &mut rng);
                        }
                        s.add(a.value(&x).re);
                    }
                    s.total() / scale
                })
                .collect()
        })
        .collect();
    Ok(sums.into_iter().flatten().collect())
}

pub fn clt_experiment(nil: &Nilmanifold, cfg: &WalkConfig, a: &Observable, n: usize, trials: usize) -> Result<CLTReport> {
    if trials < 100 {
        return Err(Error::NotEnoughData(format!("{trials} trials; need at least 100")));
    }
    CLTReport::from_sums(n, &clt_sums(nil, cfg, a, n, trials)?, DEFAULT_KS_THRESHOLD)
}

/// Same experiment for an arbitrary per-step sampler `f(rng)`, which returns
/// the next observable value of one trajectory started afresh per trial.
pub fn clt_from_sampler<F>(n: usize, trials: usize, seed: u64, threshold: f64, sampler: F) -> Result<CLTReport>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    if trials < 100 {
        return Err(Error::NotEnoughData(format!("{trials} trials; need at least 100")));
    }
    let scale = (n as f64).sqrt();
    let sums: Vec<f64> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            (0..CHUNK.min(trials - c * CHUNK))
                .map(|_| neumaier_sum((0..n).map(|_| sampler(&mut rng))) / scale)
                .collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    CLTReport::from_sums(n, &sums, threshold)
}

/// I.i.d. control: `A(x) = cos 2πx` with `x` resampled uniformly each step; `σ² = 1/2`.
pub fn iid_control(n: usize, trials: usize, seed: u64, threshold: f64) -> Result<CLTReport> {
    clt_from_sampler(n, trials, seed, threshold, |rng| (2.0 * PI * rng.gen::<f64>()).cos())
}

/// Limiting variance of `N^{-1/2} Σ Re χ(x_n)` for one character with
/// contraction factor `z`: `½ Re((1+z)/(1-z))`.
pub fn single_character_sigma2(z: Complex64) -> f64 {
    0.5 * ((1.0 + z) / (1.0 - z)).re
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MartingaleVariance {
    pub sigma2: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// `σ² = E q`, with `B = (1-ℒ)^{-1} A` built from the character expansion of
/// `a` and `q(x) = Σ_j p_j |B(g_j x)|² - |ℒB(x)|²` averaged along trajectories.
pub fn martingale_variance(
    nil: &Nilmanifold,
    cfg: &WalkConfig,
    a: &Observable,
    n: usize,
    trials: usize,
) -> Result<MartingaleVariance> {
    if trials < 2 || n == 0 {
        return Err(Error::NotEnoughData("need at least two trials of positive length".into()));
    }
    let expansion = a
        .expansion()
        .ok_or_else(|| Error::InvalidParameter("martingale_variance needs a character expansion".into()))?;
    if expansion.is_empty() {
        return Ok(MartingaleVariance { sigma2: 0.0, stderr: 0.0, samples: trials });
    }
    let chars: Vec<Character> = expansion.iter().map(|(_, c)| c.clone()).collect();
    let gaps = gap_profile(cfg, &chars);
    if let Some(g) = gaps.iter().find(|g| g.resonant || g.epsilon >= 1.0) {
        return Err(Error::Resonance(g.lambda.clone()));
    }
    let b_coeff: Vec<Complex64> = expansion.iter().zip(&gaps).map(|((c, _), g)| c / (1.0 - g.z())).collect();
    let walker = Walker::new(nil, cfg)?;
    let probs = cfg.probs_f64();
    let b_at = |x: &crate::walk::WalkPoint| -> Complex64 {
        chars.iter().zip(&b_coeff).map(|(c, w)| w * c.value(x)).sum()
    };
    let per_trial: Vec<f64> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(cfg.seed, c);
            (0..CHUNK.min(trials - c * CHUNK))
                .map(|_| {
                    let mut x = nil.uniform_point(&mut rng);
                    let mut acc = NeumaierSum::default();
                    for t in 0..n {
                        if t > 0 {
                            x = walker.step(&x, &mut rng);
                        }
                        let mut second = 0.0;
                        let mut first = Complex64::new(0.0, 0.0);
                        for (k, p) in probs.iter().enumerate() {
                            let b = b_at(&walker.apply(k, &x));
                            second += p * b.norm_sqr();
                            first += p * b;
                        }
                        acc.add(second - first.norm_sqr());
                    }
                    acc.total() / n as f64
                })
                .collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let t = trials as f64;
    let sigma2 = neumaier_sum(per_trial.iter().copied()) / t;
    let var = neumaier_sum(per_trial.iter().map(|q| (q - sigma2).powi(2))) / (t - 1.0);
    Ok(MartingaleVariance { sigma2, stderr: (var / t).sqrt(), samples: trials })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CosineBoundReport {
    pub grid_size: usize,
    pub max_residual: f64,
    pub argmax: f64,
}

/// Max over `θ_i = -1/2 + i/(grid_size-1)` of `|1 + e(θ)| - (2 - 8θ²)`.
pub fn lemma_a1_check(grid_size: usize) -> CosineBoundReport {
    let steps = grid_size.max(2) - 1;
    let (max_residual, argmax) = (0..=steps)
        .map(|i| {
            let theta = -0.5 + i as f64 / steps as f64;
            (lemma_a1_residual(theta), theta)
        })
        .fold((f64::NEG_INFINITY, 0.0), |best, cur| if cur.0 > best.0 { cur } else { best });
    CosineBoundReport { grid_size: steps + 1, max_residual, argmax }
}

/// `|1 + e(θ)| = 2|cos πθ|`.
pub fn lemma_a1_residual(theta: f64) -> f64 {
    2.0 * (PI * theta).cos().abs() - 2.0 + 8.0 * theta * theta
}
