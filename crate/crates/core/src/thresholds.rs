//! Closed-form recovery thresholds and the parameters of the energy model
//! induced by an independent-coverage group.
//!
//! Logarithms are natural throughout. The regimes of the upper threshold are
//! asymptotic statements; at finite sizes all three values are reported and
//! one is selected by a fixed heuristic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::binomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `k` (or `C(k-1,h-1)/h`) small against `log N`.
    SmallK,
    /// `C(k-1,h-1)/h ~ c log N`.
    LogK,
    /// `k ~ N^alpha`.
    PowerK,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::SmallK => "small_k",
            Regime::LogK => "log_k",
            Regime::PowerK => "power_k",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeBounds {
    pub small_k: f64,
    pub log_k: f64,
    pub power_k: f64,
}

impl RegimeBounds {
    pub fn get(&self, regime: Regime) -> f64 {
        match regime {
            Regime::SmallK => self.small_k,
            Regime::LogK => self.log_k,
            Regime::PowerK => self.power_k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub gamma_minus: f64,
    pub gamma_plus_by_regime: RegimeBounds,
    pub selected_regime: Regime,
    pub gamma_conjectured: Option<f64>,
    pub alpha: f64,
    pub c: Option<f64>,
}

impl ThresholdReport {
    /// Upper threshold of the selected regime.
    pub fn gamma_plus(&self) -> f64 {
        self.gamma_plus_by_regime.get(self.selected_regime)
    }
}

/// Thresholds of the `k`-state planted energy model with `M` unbiased states.
///
/// The lower threshold is 1. The upper threshold is `1 + sqrt(alpha)` with
/// `alpha = ln k / ln M`, which is 1 when `k = 1`; any `k` growing slower
/// than every power of `M` has the same limit 1, reported under
/// [`Regime::SmallK`] and [`Regime::LogK`].
pub fn prem_thresholds(m: usize, k: usize) -> Result<ThresholdReport> {
    if m < 2 || k < 1 {
        return Err(Error::spec(format!("PREM thresholds need M >= 2 and k >= 1, got M = {m}, k = {k}")));
    }
    if k >= m {
        return Err(Error::AlphaOutOfRange { m, k });
    }
    let alpha = (k as f64).ln() / (m as f64).ln();
    prem_thresholds_with_alpha(m, k, alpha)
}

/// As [`prem_thresholds`] with a caller-supplied growth exponent.
pub fn prem_thresholds_with_alpha(m: usize, k: usize, alpha: f64) -> Result<ThresholdReport> {
    if k >= m {
        return Err(Error::AlphaOutOfRange { m, k });
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::spec(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    Ok(ThresholdReport {
        gamma_minus: 1.0,
        gamma_plus_by_regime: RegimeBounds {
            small_k: 1.0,
            log_k: 1.0,
            power_k: 1.0 + alpha.sqrt(),
        },
        selected_regime: if k == 1 { Regime::SmallK } else { Regime::PowerK },
        gamma_conjectured: Some(1.0),
        alpha,
        c: None,
    })
}

/// Thresholds of the block model on `h`-uniform hypergraphs (`h = 2` is the
/// graph case).
///
/// Regime selection: [`Regime::SmallK`] when `C(k-1,h-1)/h <= ln N / 10`,
/// otherwise [`Regime::PowerK`] when `k >= N^0.3`, otherwise
/// [`Regime::LogK`] with `c = C(k-1,h-1) / (h ln N)`.
pub fn hwsbm_thresholds(n: usize, k: usize, h: usize) -> Result<ThresholdReport> {
    check_graph_sizes(n, k, h)?;
    let ln_n = (n as f64).ln();
    let c = edge_degree(k, h) / h as f64 / ln_n;
    let alpha = (k as f64).ln() / ln_n;
    let mut report = hwsbm_thresholds_with(n, k, h, alpha, c)?;
    let degree_over_h = edge_degree(k, h) / h as f64;
    report.selected_regime = if degree_over_h <= ln_n / 10.0 {
        Regime::SmallK
    } else if (k as f64) >= (n as f64).powf(0.3) {
        Regime::PowerK
    } else {
        Regime::LogK
    };
    Ok(report)
}

/// As [`hwsbm_thresholds`] with caller-supplied `alpha` and `c`; pass
/// `c = f64::INFINITY` for the `1/c = 0` limit. The selected regime is
/// [`Regime::LogK`] unless `c` is not finite, in which case it is
/// [`Regime::PowerK`].
pub fn hwsbm_thresholds_with(n: usize, k: usize, h: usize, alpha: f64, c: f64) -> Result<ThresholdReport> {
    check_graph_sizes(n, k, h)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::spec(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(c > 0.0) {
        return Err(Error::spec(format!("c must be positive, got {c}")));
    }
    let ln_n = (n as f64).ln();
    let degree = edge_degree(k, h);
    let inv_c = if c.is_finite() { 1.0 / c } else { 0.0 };
    let ln2 = std::f64::consts::LN_2;
    Ok(ThresholdReport {
        gamma_minus: (1.0 / degree).sqrt(),
        gamma_plus_by_regime: RegimeBounds {
            small_k: 2.0 * ((h as f64 / 2.0) / degree).sqrt(),
            log_k: 2.0 * ((1.0 + ln2 + inv_c) / ln_n).sqrt(),
            power_k: 2.0 * ((1.0 + ln2) / ((1.0 - alpha) * ln_n)).sqrt(),
        },
        selected_regime: if c.is_finite() { Regime::LogK } else { Regime::PowerK },
        gamma_conjectured: Some((h as f64 / degree).sqrt()),
        alpha,
        c: c.is_finite().then_some(c),
    })
}

fn check_graph_sizes(n: usize, k: usize, h: usize) -> Result<()> {
    if h < 2 || h > k || k + 1 > n {
        return Err(Error::spec(format!(
            "thresholds need 2 <= h <= k <= N - 1, got N = {n}, k = {k}, h = {h}"
        )));
    }
    Ok(())
}

/// `C(k-1, h-1)`: hyperedges through one planted node inside the planted set.
fn edge_degree(k: usize, h: usize) -> f64 {
    binomial((k - 1) as u64, (h - 1) as u64) as f64
}

/// Leading-order recovery prediction for the single-state energy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSuccess {
    /// `1 - M^(-exponent)`, or 0 below the threshold.
    pub success: f64,
    /// Failure exponent: `(gamma-1)^2` on `(1, 2)`, `gamma^2/2 - 1` above 2,
    /// 0 below 1.
    pub exponent: f64,
}

pub fn asymptotic_success(gamma: f64, m: usize) -> Result<AsymptoticSuccess> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::spec(format!("gamma must be positive, got {gamma}")));
    }
    if m < 2 {
        return Err(Error::DegenerateSize(m as f64));
    }
    if gamma == 1.0 || gamma == 2.0 {
        return Err(Error::BoundaryGamma(gamma));
    }
    let exponent = failure_exponent(gamma);
    let success = if gamma < 1.0 {
        0.0
    } else {
        1.0 - (m as f64).powf(-exponent)
    };
    Ok(AsymptoticSuccess { success, exponent })
}

/// Failure exponent without the boundary check; continuous at 2.
pub fn failure_exponent(gamma: f64) -> f64 {
    if gamma < 1.0 {
        0.0
    } else if gamma < 2.0 {
        (gamma - 1.0).powi(2)
    } else {
        gamma * gamma / 2.0 - 1.0
    }
}

/// Energy model induced by a coverage group at overlap `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InducedPrem {
    /// Hyperedges aggregated into each reduced state, `C(k,h) - C(m,h)`.
    pub ell_m: u64,
    /// Competing states, `floor((N - k) / (k - m))`.
    pub states: u64,
    pub gamma_m: f64,
    pub m: usize,
}

/// Hyperedges per reduced state at overlap `m`.
pub fn ell(k: usize, h: usize, m: usize) -> u64 {
    (binomial(k as u64, h as u64) - binomial(m as u64, h as u64)) as u64
}

/// Coverage-group size at overlap `m`.
pub fn group_size(n: usize, k: usize, m: usize) -> usize {
    (n - k) / (k - m)
}

/// `gamma_m = gamma sqrt(ell_m ln N / ln M_m)`, without the `sqrt(ell_m)`
/// shortcut.
pub fn induced_prem(n: usize, k: usize, h: usize, m: usize, gamma: f64) -> Result<InducedPrem> {
    if h < 1 || h > k || k + 1 > n {
        return Err(Error::spec(format!("need 1 <= h <= k <= N - 1, got N = {n}, k = {k}, h = {h}")));
    }
    if m >= k {
        return Err(Error::spec(format!("overlap m = {m} must be below k = {k}")));
    }
    let states = group_size(n, k, m);
    if states < 2 {
        return Err(Error::DegenerateCoverage { n, k, m, groups: states });
    }
    let ell_m = ell(k, h, m);
    let gamma_m = gamma * (ell_m as f64 * (n as f64).ln() / (states as f64).ln()).sqrt();
    Ok(InducedPrem {
        ell_m,
        states: states as u64,
        gamma_m,
        m,
    })
}

/// One row of the summary table for `k = o(log N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub h_label: String,
    pub model: String,
    pub gamma_minus: Option<(f64, f64)>,
    pub gamma_plus: Option<(f64, f64)>,
    pub gamma_conjectured: Option<(f64, f64)>,
}

/// Rows `h = 1`, `h = 2`, `2 < h < k`, `h = k` of the threshold summary.
///
/// Values are `(low, high)` ranges; they coincide except in the `2 < h < k`
/// row, which spans every `h` strictly between 2 and `k` and is `None` when
/// that range is empty. The `h = 1` and `h = k` rows are energy models
/// (over `N` and `C(N, k)` states) and use that model's own scaling; the
/// conjectured column is in the `ln N` scaling of the block model.
pub fn summary_table(n: usize, k: usize) -> Result<Vec<TableRow>> {
    if k < 2 || k + 1 > n {
        return Err(Error::spec(format!("summary table needs 2 <= k <= N - 1, got N = {n}, k = {k}")));
    }
    let point = |v: f64| Some((v, v));
    let one = prem_thresholds_with_alpha(n, k, 0.0)?;
    let mut rows = vec![TableRow {
        h_label: "1".into(),
        model: "k-P-REM".into(),
        gamma_minus: point(one.gamma_minus),
        gamma_plus: point(one.gamma_plus_by_regime.small_k),
        gamma_conjectured: point(1.0),
    }];

    let two = hwsbm_thresholds(n, k, 2)?;
    rows.push(TableRow {
        h_label: "2".into(),
        model: "2-WSBM".into(),
        gamma_minus: point(two.gamma_minus),
        gamma_plus: point(two.gamma_plus_by_regime.small_k),
        gamma_conjectured: two.gamma_conjectured.and_then(point),
    });

    let middle: Vec<ThresholdReport> = (3..k).map(|h| hwsbm_thresholds(n, k, h)).collect::<Result<_>>()?;
    let span = |f: &dyn Fn(&ThresholdReport) -> f64| {
        if middle.is_empty() {
            None
        } else {
            let lo = middle.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = middle.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            Some((lo, hi))
        }
    };
    rows.push(TableRow {
        h_label: "2<h<k".into(),
        model: "2-hWSBM".into(),
        gamma_minus: span(&|r| r.gamma_minus),
        gamma_plus: span(&|r| r.gamma_plus_by_regime.small_k),
        gamma_conjectured: span(&|r| r.gamma_conjectured.unwrap_or(f64::NAN)),
    });

    rows.push(TableRow {
        h_label: "k".into(),
        model: "1-P-REM".into(),
        gamma_minus: point(1.0),
        gamma_plus: point(1.0),
        gamma_conjectured: point((k as f64).sqrt()),
    });
    Ok(rows)
}
