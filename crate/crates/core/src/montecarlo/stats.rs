//! Aggregate statistics of exit samples: binomial intervals, a Kolmogorov–Smirnov
//! test against the fitted exponential law and a window × exit-time-quartile
//! independence test.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use super::ExitSample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} uncensored samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("window {0} has no exits")]
    DegenerateTable(usize),
    #[error("independence needs at least two windows")]
    SingleWindow,
}

pub const MIN_SAMPLES: usize = 100;
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * x * x).exp();
        sum += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test against `Exp(1/mean)`.
///
/// The rate is estimated from the same data, which makes the asymptotic
/// p-value conservative.
pub fn test_exponential(times: &[f64]) -> Result<(f64, f64), StatsError> {
    let n = times.len();
    if n < MIN_SAMPLES {
        return Err(StatsError::InsufficientData { needed: MIN_SAMPLES, got: n });
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rate = n as f64 / sorted.iter().sum::<f64>();
    let nf = n as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = 1.0 - (-rate * t).exp();
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    let sn = nf.sqrt();
    Ok((d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)))
}

/// Pearson chi-square on the window × exit-time-quartile table.
pub fn test_independence(samples: &[(f64, usize)], n_windows: usize) -> Result<(f64, usize, f64), StatsError> {
    if n_windows < 2 {
        return Err(StatsError::SingleWindow);
    }
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(StatsError::InsufficientData { needed: MIN_SAMPLES, got: n });
    }
    let mut times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    times.sort_by(f64::total_cmp);
    let cuts = [times[n / 4], times[n / 2], times[3 * n / 4]];
    let mut table = vec![[0usize; 4]; n_windows];
    for &(t, w) in samples {
        let q = cuts.iter().filter(|&&c| t >= c).count();
        table[w][q] += 1;
    }
    let rows: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    if let Some(w) = rows.iter().position(|&r| r == 0) {
        return Err(StatsError::DegenerateTable(w));
    }
    let cols: Vec<usize> = (0..4).map(|q| table.iter().map(|r| r[q]).sum()).collect();
    let total = n as f64;
    let mut chi2 = 0.0;
    for (w, row) in table.iter().enumerate() {
        for (q, &obs) in row.iter().enumerate() {
            let expected = rows[w] as f64 * cols[q] as f64 / total;
            if expected > 0.0 {
                chi2 += (obs as f64 - expected).powi(2) / expected;
            }
        }
    }
    let dof = (n_windows - 1) * 3;
    let p = 1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(chi2);
    Ok((chi2, dof, p))
}

/// Extrapolates a quantity with error `c √dt` from runs at `dt_coarse = ratio · dt_fine`.
pub fn richardson_sqrt_dt(coarse: f64, fine: f64, ratio: f64) -> f64 {
    let s = ratio.sqrt();
    (s * fine - coarse) / (s - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitStats {
    pub n_paths: usize,
    pub censored: usize,
    /// Paths that exited before the decorrelation time.
    pub discarded: usize,
    pub decorrelation_time: f64,
    pub mean_exit_time: f64,
    pub std_error: f64,
    pub lambda_hat: f64,
    pub counts: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub wilson: Vec<(f64, f64)>,
    pub ks: Option<(f64, f64)>,
    pub independence: Option<(f64, usize, f64)>,
    pub censored_fraction: f64,
}

impl ExitStats {
    /// Statistics of the exits after `decorrelation_time`, with times measured from it.
    pub fn from_samples(samples: &[ExitSample], n_windows: usize, decorrelation_time: f64) -> Self {
        let censored = samples.iter().filter(|s| s.censored).count();
        let used: Vec<(f64, usize)> = samples
            .iter()
            .filter(|s| !s.censored && s.exit_time > decorrelation_time)
            .filter_map(|s| s.window.map(|w| (s.exit_time - decorrelation_time, w)))
            .collect();
        let discarded = samples.len() - censored - used.len();
        let n = used.len();
        let (mean, se) = if n > 0 {
            let mean = used.iter().map(|u| u.0).sum::<f64>() / n as f64;
            let var = if n > 1 {
                used.iter().map(|u| (u.0 - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            (mean, (var / n as f64).sqrt())
        } else {
            (f64::NAN, f64::NAN)
        };
        let mut counts = vec![0; n_windows];
        for &(_, w) in &used {
            counts[w] += 1;
        }
        let probabilities = counts
            .iter()
            .map(|&c| if n > 0 { c as f64 / n as f64 } else { f64::NAN })
            .collect();
        let wilson = counts.iter().map(|&c| wilson_interval(c, n)).collect();
        let times: Vec<f64> = used.iter().map(|u| u.0).collect();
        Self {
            n_paths: samples.len(),
            censored,
            discarded,
            decorrelation_time,
            mean_exit_time: mean,
            std_error: se,
            lambda_hat: 1.0 / mean,
            counts,
            probabilities,
            wilson,
            ks: test_exponential(&times).ok(),
            independence: test_independence(&used, n_windows).ok(),
            censored_fraction: if samples.is_empty() {
                0.0
            } else {
                censored as f64 / samples.len() as f64
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    #[test]
    fn wilson_matches_closed_form() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.403_831).abs() < 1e-5 && (hi - 0.596_169).abs() < 1e-5);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
        let (lo, _) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // Reference quantiles of the Kolmogorov distribution.
        assert!((kolmogorov_survival(1.358_1) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.627_6) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn exponential_samples_pass_and_uniform_fail() {
        let mut passes = 0;
        for seed in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..10_000).map(|_| Exp::new(1.0).unwrap().sample(&mut rng)).collect();
            if test_exponential(&xs).unwrap().1 > 0.01 {
                passes += 1;
            }
        }
        assert!(passes >= 38, "{passes}/40");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let us: Vec<f64> = (0..10_000).map(|_| rng.gen_range(0.0..2.0)).collect();
        assert!(test_exponential(&us).unwrap().1 < 0.001);
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            test_exponential(&[1.0; 50]),
            Err(StatsError::InsufficientData { needed: 100, got: 50 })
        );
    }

    #[test]
    fn independence_detects_dependence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let indep: Vec<(f64, usize)> = (0..20_000).map(|_| (rng.gen::<f64>(), rng.gen_range(0..2))).collect();
        let (_, dof, p) = test_independence(&indep, 2).unwrap();
        assert_eq!(dof, 3);
        assert!(p > 1e-3);
        // Window 0 collects only the earliest exits.
        let dep: Vec<(f64, usize)> = (0..2000)
            .map(|i| {
                let t = i as f64;
                (t, usize::from(i >= 300))
            })
            .collect();
        assert!(test_independence(&dep, 2).unwrap().2 < 1e-3);
        assert_eq!(test_independence(&indep, 1), Err(StatsError::SingleWindow));
        let one_sided: Vec<(f64, usize)> = indep.iter().map(|&(t, _)| (t, 0)).collect();
        assert_eq!(test_independence(&one_sided, 2), Err(StatsError::DegenerateTable(1)));
    }

    #[test]
    fn richardson_removes_square_root_error() {
        let f = |dt: f64| 0.5 + 3.0 * dt.sqrt();
        let x = richardson_sqrt_dt(f(2e-5), f(1e-5), 2.0);
        assert!((x - 0.5).abs() < 1e-12);
    }
}
