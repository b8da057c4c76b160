//! Seeded Monte Carlo harness.
//!
//! Trial `t` at grid point `g` samples its instance from
//! `rng::trial_seed(master_seed, g, t)`, so results do not depend on how
//! trials are spread over worker threads. Success always means exact
//! recovery of the planted set.

use rand_distr::{Distribution, Gumbel, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coverage::{build_coverage, reduce_to_prem};
use crate::error::{Error, Result};
use crate::estimators::{estimate, ml_prem, Method, DEFAULT_BUDGET};
use crate::model::{sample_instance, weight_of_sorted, Family, ModelSpec};
use crate::rng::{self, Purpose};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Asymptotic 95% critical value of the one-sample Kolmogorov-Smirnov
/// statistic, scaled by `sqrt(n)`.
pub const KS_CRITICAL_95: f64 = 1.358;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub sigma_hat: f64,
    pub size: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    pub gamma_grid: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub estimator: Method,
    #[serde(default = "default_budget")]
    pub budget: u128,
}

fn default_budget() -> u128 {
    DEFAULT_BUDGET
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.gamma_grid.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::config("gamma_grid", "values must be positive"));
        }
        if self.gamma_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("gamma_grid", "must be strictly ascending"));
        }
        if self.estimator == Method::TopK && self.family != Family::Prem {
            return Err(Error::config("estimator", "topk applies to the prem family only"));
        }
        if self.estimator != Method::TopK && self.family == Family::Prem {
            return Err(Error::config("estimator", "prem instances are decoded with topk"));
        }
        self.spec_at(1.0).map(|_| ())
    }

    /// Model at SNR `gamma`: `mu_hat = gamma * sigma_hat`.
    pub fn spec_at(&self, gamma: f64) -> Result<ModelSpec> {
        ModelSpec {
            family: self.family,
            mu_hat: gamma * self.sigma_hat,
            sigma_hat: self.sigma_hat,
            size: self.size,
            k: self.k,
            h: match self.family {
                Family::Prem => None,
                Family::Wsbm => Some(2),
                Family::Hwsbm => self.h,
            },
        }
        .validated()
    }

    /// Short SHA-256 digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCount {
    pub successes: u64,
    pub trials: u64,
}

/// Runs `config.trials` independent trials at SNR `gamma` on lane `lane`.
pub fn run_trials(config: &ExperimentConfig, lane: u64, gamma: f64) -> Result<TrialCount> {
    let spec = config.spec_at(gamma)?;
    let outcomes: Vec<Result<bool>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = rng::trial_seed(config.master_seed, lane, t);
            let instance = sample_instance(&spec, seed, None)?;
            let est = estimate(&instance, config.estimator, config.budget)?;
            Ok(est.subset == instance.planted())
        })
        .collect();
    let mut successes = 0;
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(hit) => successes += hit as u64,
            Err(source) => {
                return Err(Error::Trial {
                    trial: t as u64,
                    source: Box::new(source),
                })
            }
        }
    }
    Ok(TrialCount {
        successes,
        trials: config.trials,
    })
}

/// Wilson score interval at the given normal quantile.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub gamma: f64,
    pub successes: u64,
    pub trials: u64,
    pub phat: f64,
    pub lo: f64,
    pub hi: f64,
}

impl CurveRow {
    pub fn new(gamma: f64, count: TrialCount) -> Self {
        let (lo, hi) = wilson_interval(count.successes, count.trials, Z95);
        Self {
            gamma,
            successes: count.successes,
            trials: count.trials,
            phat: count.successes as f64 / count.trials as f64,
            lo,
            hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryCurve {
    pub rows: Vec<CurveRow>,
    pub config_hash: String,
    pub master_seed: u64,
}

pub fn sweep(config: &ExperimentConfig) -> Result<RecoveryCurve> {
    config.validate()?;
    let rows = config
        .gamma_grid
        .iter()
        .enumerate()
        .map(|(lane, &gamma)| run_trials(config, lane as u64, gamma).map(|c| CurveRow::new(gamma, c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveryCurve {
        rows,
        config_hash: config.hash(),
        master_seed: config.master_seed,
    })
}

/// `count` points from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (count - 1) as f64;
            (0..count).map(|i| min + step * i as f64).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub gamma: f64,
    /// Grid points `(gamma, phat)` on either side of the crossing.
    pub below: (f64, f64),
    pub above: (f64, f64),
}

/// First upward crossing of `phat = 0.5`, located by linear interpolation.
pub fn estimate_threshold(curve: &RecoveryCurve) -> Result<ThresholdEstimate> {
    for pair in curve.rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.phat < 0.5 && b.phat >= 0.5 {
            let gamma = a.gamma + (0.5 - a.phat) * (b.gamma - a.gamma) / (b.phat - a.phat);
            return Ok(ThresholdEstimate {
                gamma,
                below: (a.gamma, a.phat),
                above: (b.gamma, b.phat),
            });
        }
    }
    Err(Error::NoCrossing)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureCell {
    pub size: usize,
    pub failures: u64,
    pub trials: u64,
}

impl FailureCell {
    /// Observed failure rate, or the rule-of-three bound `3 / T` when no
    /// failure was seen.
    pub fn rate(&self) -> f64 {
        if self.failures == 0 {
            3.0 / self.trials as f64
        } else {
            self.failures as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub gamma: f64,
    /// Least-squares slope of `-ln(failure rate)` against `ln(size)`.
    pub slope: f64,
    pub intercept: f64,
    /// Leading-order exponent at `gamma`.
    pub predicted: f64,
    pub cells: Vec<FailureCell>,
    /// Cells with no observed failure, fitted at the rule-of-three bound.
    pub bounded_cells: usize,
}

pub fn exponent_fit(cells: &[FailureCell], gamma: f64) -> Result<ExponentFit> {
    if !(gamma > 1.0) {
        return Err(Error::spec(format!("exponent fit needs gamma > 1, got {gamma}")));
    }
    if cells.len() < 3 {
        return Err(Error::spec("exponent fit needs at least three sizes"));
    }
    if cells.iter().any(|c| c.size < 2 || c.trials == 0) {
        return Err(Error::spec("exponent fit needs sizes >= 2 and trials >= 1"));
    }
    if cells.iter().all(|c| c.failures == 0) {
        let bound = cells
            .iter()
            .map(|c| (c.trials as f64 / 3.0).ln() / (c.size as f64).ln())
            .fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::ExponentLowerBoundOnly { bound });
    }
    let xs: Vec<f64> = cells.iter().map(|c| (c.size as f64).ln()).collect();
    let ys: Vec<f64> = cells.iter().map(|c| -c.rate().ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    Ok(ExponentFit {
        gamma,
        slope,
        intercept,
        predicted: crate::thresholds::failure_exponent(gamma),
        cells: cells.to_vec(),
        bounded_cells: cells.iter().filter(|c| c.failures == 0).count(),
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Failure counts at fixed `gamma` across sizes; lane `i` is used for the
/// `i`-th size.
pub fn failure_cells(config: &ExperimentConfig, gamma: f64, sizes: &[usize]) -> Result<Vec<FailureCell>> {
    sizes
        .iter()
        .enumerate()
        .map(|(lane, &size)| {
            let sized = ExperimentConfig {
                size,
                ..config.clone()
            };
            let count = run_trials(&sized, lane as u64, gamma)?;
            Ok(FailureCell {
                size,
                failures: count.trials - count.successes,
                trials: count.trials,
            })
        })
        .collect()
}

/// Normalising constants `(a_n, b_n)` for the maximum of `n` standard
/// Gaussians.
pub fn ftg_constants(n: u64) -> (f64, f64) {
    let two_log = 2.0 * (n as f64).ln();
    let a = two_log.powf(-0.5);
    let b = two_log.sqrt()
        - 0.5 * a * ((n as f64).ln().ln() + (4.0 * std::f64::consts::PI).ln());
    (a, b)
}

pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// One-sample Kolmogorov-Smirnov distance between `samples` and `cdf`.
pub fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtgReport {
    pub n: u64,
    pub trials: u64,
    pub a_n: f64,
    pub b_n: f64,
    pub ks_distance: f64,
}

/// Draws `trials` maxima of `n` standard Gaussians, normalises them with
/// `(a_n, b_n)` and measures their distance to the Gumbel law.
pub fn ftg_check(n: u64, trials: u64, seed: u64) -> Result<FtgReport> {
    if n < 3 {
        return Err(Error::spec(format!("need n >= 3 for ln ln n, got {n}")));
    }
    if trials < 100 {
        return Err(Error::spec(format!("need at least 100 trials, got {trials}")));
    }
    let (a_n, b_n) = ftg_constants(n);
    let mut normalised: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, Purpose::Extremes, n, t);
            let mut max = f64::NEG_INFINITY;
            for _ in 0..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                max = max.max(z);
            }
            (max - b_n) / a_n
        })
        .collect();
    Ok(FtgReport {
        n,
        trials,
        a_n,
        b_n,
        ks_distance: ks_distance(&mut normalised, gumbel_cdf),
    })
}

/// KS distance of `trials` direct standard Gumbel draws to the Gumbel CDF.
pub fn gumbel_self_test(trials: u64, seed: u64) -> f64 {
    let gumbel = Gumbel::new(0.0, 1.0).expect("unit Gumbel");
    let mut rng = rng::stream(seed, Purpose::Gumbel, 0, 0);
    let mut draws: Vec<f64> = (0..trials).map(|_| gumbel.sample(&mut rng)).collect();
    ks_distance(&mut draws, gumbel_cdf)
}

/// Group-restricted success against its reduced energy-model counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionCounts {
    /// Planted set strictly heavier than every group member.
    pub group_successes: u64,
    /// Top-1 decoder returns the planted state of the reduced instance.
    pub reduced_successes: u64,
    /// Trials where the two events disagree.
    pub disagreements: u64,
    pub trials: u64,
}

/// Compares recovery restricted to one coverage group (intersection = the
/// `m` smallest planted nodes) with top-1 decoding of the reduced instance.
pub fn reduction_consistency(spec: &ModelSpec, m: usize, trials: u64, master_seed: u64) -> Result<ReductionCounts> {
    let outcomes: Vec<Result<(bool, bool)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let instance = sample_instance(spec, rng::trial_seed(master_seed, 0, t), None)?;
            let planted = instance.planted();
            let group = build_coverage(
                instance.num_nodes(),
                instance.k(),
                instance.edge_cardinality(),
                m,
                planted,
                &planted[..m],
            )?;
            let planted_weight = weight_of_sorted(&instance, planted);
            let group_win = group
                .members
                .iter()
                .all(|member| planted_weight > weight_of_sorted(&instance, member));
            let reduced = reduce_to_prem(&instance, &group)?;
            let reduced_win = ml_prem(&reduced)?.subset == reduced.planted();
            Ok((group_win, reduced_win))
        })
        .collect();
    let mut counts = ReductionCounts {
        group_successes: 0,
        reduced_successes: 0,
        disagreements: 0,
        trials,
    };
    for (t, outcome) in outcomes.into_iter().enumerate() {
        let (a, b) = outcome.map_err(|source| Error::Trial {
            trial: t as u64,
            source: Box::new(source),
        })?;
        counts.group_successes += a as u64;
        counts.reduced_successes += b as u64;
        counts.disagreements += (a != b) as u64;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prem_config(m: usize, k: usize, grid: Vec<f64>, trials: u64) -> ExperimentConfig {
        ExperimentConfig {
            family: Family::Prem,
            sigma_hat: 1.0,
            size: m,
            k,
            h: None,
            gamma_grid: grid,
            trials,
            master_seed: 11,
            estimator: Method::TopK,
            budget: DEFAULT_BUDGET,
        }
    }

    #[test]
    fn wilson_contains_estimate() {
        for (s, n) in [(0, 10), (10, 10), (3, 7), (200, 400), (1, 1000)] {
            let (lo, hi) = wilson_interval(s, n, Z95);
            let p = s as f64 / n as f64;
            assert!(lo <= p && p <= hi && (0.0..=1.0).contains(&lo) && hi <= 1.0);
        }
        // textbook value: 5 of 10 -> (0.2366, 0.7634)
        let (lo, hi) = wilson_interval(5, 10, Z95);
        assert!((lo - 0.236_593).abs() < 1e-5 && (hi - 0.763_407).abs() < 1e-5);
    }

    #[test]
    fn crossing_interpolation() {
        let curve = RecoveryCurve {
            rows: vec![
                CurveRow::new(1.0, TrialCount { successes: 40, trials: 100 }),
                CurveRow::new(1.2, TrialCount { successes: 60, trials: 100 }),
            ],
            config_hash: String::new(),
            master_seed: 0,
        };
        let est = estimate_threshold(&curve).unwrap();
        assert!((est.gamma - 1.1).abs() < 1e-12);
        assert_eq!(est.below, (1.0, 0.4));

        let flat = RecoveryCurve {
            rows: vec![
                CurveRow::new(1.0, TrialCount { successes: 10, trials: 10 }),
                CurveRow::new(2.0, TrialCount { successes: 10, trials: 10 }),
            ],
            ..curve
        };
        assert!(matches!(estimate_threshold(&flat), Err(Error::NoCrossing)));
    }

    #[test]
    fn exact_power_law_fit() {
        let cells: Vec<FailureCell> = [1_000usize, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&m| {
                let trials = 1u64 << 40;
                FailureCell {
                    size: m,
                    failures: ((m as f64).powf(-0.25) * trials as f64).round() as u64,
                    trials,
                }
            })
            .collect();
        let fit = exponent_fit(&cells, 1.5).unwrap();
        assert!((fit.slope - 0.25).abs() < 1e-9);
        assert!((fit.predicted - 0.25).abs() < 1e-15);
        assert!((exponent_fit(&cells, 3.0).unwrap().predicted - 3.5).abs() < 1e-15);
    }

    #[test]
    fn zero_failures_give_lower_bound() {
        let cells: Vec<FailureCell> = [100usize, 1000, 10_000]
            .iter()
            .map(|&size| FailureCell { size, failures: 0, trials: 3000 })
            .collect();
        match exponent_fit(&cells, 3.0) {
            Err(Error::ExponentLowerBoundOnly { bound }) => {
                assert!((bound - 1000f64.ln() / 100f64.ln()).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        assert!(exponent_fit(&cells[..2], 3.0).is_err());
    }

    #[test]
    fn ftg_constants_at_e_squared() {
        // n = e^2 is not an integer; evaluate the formula directly
        let two_log: f64 = 4.0;
        assert!((two_log.powf(-0.5) - 0.5).abs() < 1e-15);
        let (a, _) = ftg_constants(1_000_000);
        assert!((a - (2.0 * 1e6f64.ln()).powf(-0.5)).abs() < 1e-15);
        assert!(ftg_check(2, 100, 0).is_err());
        assert!(ftg_check(10, 99, 0).is_err());
    }

    #[test]
    fn ks_distance_of_exact_quantiles_is_small() {
        let n = 1000;
        let mut xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn gumbel_self_test_rejects_at_nominal_rate() {
        let trials = 2000;
        let critical = KS_CRITICAL_95 / (trials as f64).sqrt();
        let rejections = (0..100).filter(|&s| gumbel_self_test(trials, s) >= critical).count();
        // Binomial(100, 0.05): P(X > 12) < 0.001
        assert!(rejections <= 12, "{rejections} rejections");
    }

    #[test]
    fn high_snr_always_recovers() {
        let cfg = prem_config(100, 1, vec![50.0], 200);
        assert_eq!(run_trials(&cfg, 0, 50.0).unwrap().successes, 200);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = prem_config(500, 2, vec![0.8, 1.2], 300);
        assert_eq!(sweep(&cfg).unwrap(), sweep(&cfg).unwrap());
    }

    #[test]
    fn chance_level_at_vanishing_signal() {
        // C(5, 2) = 10 equally likely subsets
        let cfg = prem_config(3, 2, vec![1e-9], 4000);
        let count = run_trials(&cfg, 0, 1e-9).unwrap();
        let (lo, hi) = wilson_interval(count.successes, count.trials, 3.0);
        assert!(lo <= 0.1 && 0.1 <= hi, "{count:?}");
    }

    #[test]
    fn config_validation() {
        let mut cfg = prem_config(100, 1, vec![1.0, 0.5], 10);
        assert!(cfg.validate().is_err());
        cfg.gamma_grid = vec![0.5, 1.0];
        assert!(cfg.validate().is_ok());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 10;
        cfg.estimator = Method::Exhaustive;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn budget_errors_carry_trial_index() {
        let cfg = ExperimentConfig {
            family: Family::Wsbm,
            size: 14,
            k: 5,
            h: Some(2),
            estimator: Method::Exhaustive,
            budget: 10,
            ..prem_config(0, 0, vec![1.0], 3)
        };
        match run_trials(&cfg, 0, 1.0) {
            Err(Error::Trial { trial: 0, source }) => assert!(matches!(*source, Error::Budget { .. })),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reduction_matches_group_restricted_recovery() {
        let spec = ModelSpec::wsbm(0.5, 1.0, 16, 4).unwrap();
        let counts = reduction_consistency(&spec, 2, 300, 5).unwrap();
        assert_eq!(counts.disagreements, 0);
        let (lo, hi) = wilson_interval(counts.reduced_successes, counts.trials, Z95);
        let p = counts.group_successes as f64 / counts.trials as f64;
        assert!(lo <= p && p <= hi);
    }
}
