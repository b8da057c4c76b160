//! Output formats: CSV with `#` metadata lines, aligned text tables and a
//! JSON instance record.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a CSV
//! parsed back yields bit-identical values.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{CurveRow, ExponentFit, FtgReport, RecoveryCurve};
use crate::model::{sample_instance, Family, Instance, ModelSpec};
use crate::thresholds::{TableRow, ThresholdReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CURVE_HEADER: &str = "gamma,successes,trials,phat,lo,hi";
pub const INSTANCE_FORMAT: &str = "planted-instance";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Text,
    Structured,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            "structured" => Ok(Format::Structured),
            other => Err(Error::config("format", format!("unknown format `{other}` (csv|text|structured)"))),
        }
    }
}

/// Provenance written at the top of every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Resolved configuration, one `key = value  # source` line each.
    #[serde(default)]
    pub config: Vec<String>,
}

impl Metadata {
    pub fn new(config_hash: impl Into<String>, seed: Option<u64>, config: Vec<String>) -> Self {
        Self {
            version: VERSION.to_string(),
            config_hash: config_hash.into(),
            seed,
            config,
        }
    }

    /// `# key=value` lines, then the echoed configuration.
    pub fn comment_block(&self) -> String {
        let mut out = format!("# version={}\n# config_hash={}\n", self.version, self.config_hash);
        if let Some(seed) = self.seed {
            writeln!(out, "# seed={seed}").unwrap();
        }
        for line in &self.config {
            writeln!(out, "# config: {line}").unwrap();
        }
        out
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// JSON object holding `meta` under `"meta"` and `body` under `"result"`.
pub fn structured<T: Serialize>(meta: &Metadata, body: &T) -> String {
    let value = serde_json::json!({ "meta": meta, "result": body });
    let mut text = serde_json::to_string_pretty(&value).expect("serializable output");
    text.push('\n');
    text
}

pub fn curve_csv(curve: &RecoveryCurve, meta: &Metadata) -> String {
    let mut out = meta.comment_block();
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for r in &curve.rows {
        writeln!(out, "{},{},{},{},{},{}", r.gamma, r.successes, r.trials, r.phat, r.lo, r.hi).unwrap();
    }
    out
}

/// Parses [`curve_csv`] output. Hash and seed come from the metadata lines.
pub fn parse_curve_csv(text: &str) -> Result<RecoveryCurve> {
    let mut curve = RecoveryCurve {
        rows: Vec::new(),
        config_hash: String::new(),
        master_seed: 0,
    };
    let mut header_seen = false;
    for (lineno, line) in text.lines().enumerate() {
        let bad = |what: &str| Error::spec(format!("curve csv line {}: {what}", lineno + 1));
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(hash) = comment.strip_prefix("config_hash=") {
                curve.config_hash = hash.to_string();
            } else if let Some(seed) = comment.strip_prefix("seed=") {
                curve.master_seed = seed.parse().map_err(|_| bad("bad seed"))?;
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line.trim() != CURVE_HEADER {
                return Err(bad("expected the curve header"));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad("expected 6 columns"));
        }
        let float = |i: usize| fields[i].trim().parse::<f64>().map_err(|_| bad("bad number"));
        let int = |i: usize| fields[i].trim().parse::<u64>().map_err(|_| bad("bad integer"));
        curve.rows.push(CurveRow {
            gamma: float(0)?,
            successes: int(1)?,
            trials: int(2)?,
            phat: float(3)?,
            lo: float(4)?,
            hi: float(5)?,
        });
    }
    if !header_seen {
        return Err(Error::spec("curve csv has no header"));
    }
    Ok(curve)
}

pub fn curve_text(curve: &RecoveryCurve, meta: &Metadata) -> String {
    let mut out = meta.comment_block();
    writeln!(out, "{:>8}  {:>9}  {:>7}  {:>7}  {:>15}", "gamma", "successes", "trials", "phat", "95% interval").unwrap();
    for r in &curve.rows {
        writeln!(
            out,
            "{:>8.4}  {:>9}  {:>7}  {:>7.4}  [{:.4}, {:.4}]",
            r.gamma, r.successes, r.trials, r.phat, r.lo, r.hi
        )
        .unwrap();
    }
    out
}

fn range_cell(value: Option<(f64, f64)>) -> String {
    match value {
        None => "-".into(),
        Some((lo, hi)) if (lo - hi).abs() < 1e-12 => format!("{lo:.4}"),
        Some((lo, hi)) => format!("{lo:.4} .. {hi:.4}"),
    }
}

/// Summary table with one row per `h` class.
pub fn threshold_table_text(n: usize, k: usize, rows: &[TableRow], meta: &Metadata) -> String {
    let mut out = meta.comment_block();
    writeln!(out, "# N={n} k={k}").unwrap();
    writeln!(
        out,
        "{:<6}  {:<8}  {:>18}  {:>18}  {:>18}",
        "h", "model", "gamma_minus", "gamma_plus", "gamma_conjectured"
    )
    .unwrap();
    for row in rows {
        writeln!(
            out,
            "{:<6}  {:<8}  {:>18}  {:>18}  {:>18}",
            row.h_label,
            row.model,
            range_cell(row.gamma_minus),
            range_cell(row.gamma_plus),
            range_cell(row.gamma_conjectured)
        )
        .unwrap();
    }
    out
}

pub fn threshold_table_csv(rows: &[TableRow], meta: &Metadata) -> String {
    let mut out = meta.comment_block();
    out.push_str("h,model,gamma_minus_lo,gamma_minus_hi,gamma_plus_lo,gamma_plus_hi,gamma_conjectured_lo,gamma_conjectured_hi\n");
    let cells = |v: Option<(f64, f64)>| match v {
        Some((lo, hi)) => format!("{lo},{hi}"),
        None => ",".to_string(),
    };
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.h_label,
            row.model,
            cells(row.gamma_minus),
            cells(row.gamma_plus),
            cells(row.gamma_conjectured)
        )
        .unwrap();
    }
    out
}

/// Thresholds at one `(N, k, h)`, every regime listed.
pub fn threshold_report_text(report: &ThresholdReport, meta: &Metadata) -> String {
    let mut out = meta.comment_block();
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    writeln!(out, "gamma_minus        {:.6}", report.gamma_minus).unwrap();
    writeln!(out, "gamma_plus small_k {:.6}", report.gamma_plus_by_regime.small_k).unwrap();
    writeln!(out, "gamma_plus log_k   {:.6}", report.gamma_plus_by_regime.log_k).unwrap();
    writeln!(out, "gamma_plus power_k {:.6}", report.gamma_plus_by_regime.power_k).unwrap();
    writeln!(out, "selected regime    {}", report.selected_regime.as_str()).unwrap();
    writeln!(out, "gamma_plus         {:.6}", report.gamma_plus()).unwrap();
    writeln!(out, "gamma_conjectured  {}", opt(report.gamma_conjectured)).unwrap();
    writeln!(out, "alpha              {:.6}", report.alpha).unwrap();
    writeln!(out, "c                  {}", opt(report.c)).unwrap();
    out
}

pub fn threshold_report_csv(report: &ThresholdReport, meta: &Metadata) -> String {
    let mut out = meta.comment_block();
    out.push_str("gamma_minus,gamma_plus_small_k,gamma_plus_log_k,gamma_plus_power_k,selected_regime,gamma_plus,gamma_conjectured,alpha,c\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{}",
        report.gamma_minus,
        report.gamma_plus_by_regime.small_k,
        report.gamma_plus_by_regime.log_k,
        report.gamma_plus_by_regime.power_k,
        report.selected_regime.as_str(),
        report.gamma_plus(),
        opt(report.gamma_conjectured),
        report.alpha,
        opt(report.c)
    )
    .unwrap();
    out
}

pub fn exponent_csv(fit: &ExponentFit, meta: &Metadata) -> String {
    let mut out = meta.comment_block();
    writeln!(out, "# gamma={} slope={} predicted={}", fit.gamma, fit.slope, fit.predicted).unwrap();
    out.push_str("size,failures,trials,rate,rule_of_three\n");
    for c in &fit.cells {
        writeln!(out, "{},{},{},{},{}", c.size, c.failures, c.trials, c.rate(), c.failures == 0).unwrap();
    }
    out
}

pub fn exponent_text(fit: &ExponentFit, meta: &Metadata) -> String {
    let mut out = meta.comment_block();
    writeln!(out, "{:>10}  {:>9}  {:>9}  {:>12}", "size", "failures", "trials", "rate").unwrap();
    for c in &fit.cells {
        let mark = if c.failures == 0 { " (<=, rule of three)" } else { "" };
        writeln!(out, "{:>10}  {:>9}  {:>9}  {:>12.4e}{mark}", c.size, c.failures, c.trials, c.rate()).unwrap();
    }
    writeln!(out, "gamma {}: fitted slope {:.4}, leading-order exponent {:.4}", fit.gamma, fit.slope, fit.predicted).unwrap();
    out
}

pub fn ftg_csv(report: &FtgReport, meta: &Metadata) -> String {
    let mut out = meta.comment_block();
    out.push_str("n,trials,a_n,b_n,ks_distance\n");
    writeln!(out, "{},{},{},{},{}", report.n, report.trials, report.a_n, report.b_n, report.ks_distance).unwrap();
    out
}

pub fn ftg_text(report: &FtgReport, meta: &Metadata) -> String {
    let mut out = meta.comment_block();
    writeln!(out, "n            {}", report.n).unwrap();
    writeln!(out, "trials       {}", report.trials).unwrap();
    writeln!(out, "a_n          {:.6}", report.a_n).unwrap();
    writeln!(out, "b_n          {:.6}", report.b_n).unwrap();
    writeln!(out, "ks_distance  {:.6}", report.ks_distance).unwrap();
    out
}

/// Self-describing instance record. Without `weights` the instance is
/// regenerated from `seed` and `planted`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub format: String,
    pub version: String,
    pub family: Family,
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub size: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    pub seed: u64,
    pub planted: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl InstanceRecord {
    pub fn from_instance(instance: &Instance, include_weights: bool) -> Self {
        let spec = instance.spec();
        Self {
            format: INSTANCE_FORMAT.into(),
            version: VERSION.into(),
            family: spec.family,
            mu_hat: spec.mu_hat,
            sigma_hat: spec.sigma_hat,
            size: spec.size,
            k: spec.k,
            h: spec.h,
            seed: instance.seed(),
            planted: instance.planted().to_vec(),
            weights: include_weights.then(|| instance.weights().to_vec()),
        }
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        ModelSpec {
            family: self.family,
            mu_hat: self.mu_hat,
            sigma_hat: self.sigma_hat,
            size: self.size,
            k: self.k,
            h: self.h,
        }
        .validated()
    }

    pub fn to_instance(&self) -> Result<Instance> {
        if self.format != INSTANCE_FORMAT {
            return Err(Error::spec(format!("not an instance record (format `{}`)", self.format)));
        }
        let spec = self.spec()?;
        match &self.weights {
            Some(weights) => Instance::from_parts(spec, weights.clone(), self.planted.clone(), self.seed),
            None => sample_instance(&spec, self.seed, Some(self.planted.clone())),
        }
    }
}

pub fn instance_json(instance: &Instance, include_weights: bool) -> String {
    let mut text = serde_json::to_string_pretty(&InstanceRecord::from_instance(instance, include_weights))
        .expect("serializable instance");
    text.push('\n');
    text
}

pub fn parse_instance_json(text: &str) -> Result<Instance> {
    let record: InstanceRecord =
        serde_json::from_str(text).map_err(|e| Error::spec(format!("instance record: {e}")))?;
    record.to_instance()
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    parse_instance_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::TrialCount;
    use crate::thresholds::summary_table;

    fn meta() -> Metadata {
        Metadata::new("0123456789abcdef", Some(9), vec!["trials = 3  # file".into()])
    }

    #[test]
    fn curve_round_trip() {
        let curve = RecoveryCurve {
            rows: vec![
                CurveRow::new(0.1 + 0.2, TrialCount { successes: 1, trials: 3 }),
                CurveRow::new(1.7, TrialCount { successes: 3, trials: 3 }),
            ],
            config_hash: "0123456789abcdef".into(),
            master_seed: 9,
        };
        let text = curve_csv(&curve, &meta());
        assert_eq!(parse_curve_csv(&text).unwrap(), curve);
    }

    #[test]
    fn empty_curve_is_header_only() {
        let curve = RecoveryCurve {
            rows: vec![],
            config_hash: "x".into(),
            master_seed: 0,
        };
        let text = curve_csv(&curve, &Metadata::new("x", None, vec![]));
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec![CURVE_HEADER]);
    }

    #[test]
    fn threshold_table_has_four_rows() {
        let rows = summary_table(100, 5).unwrap();
        let text = threshold_table_text(100, 5, &rows, &Metadata::new("x", None, vec![]));
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(body.len(), 4);
        for (line, label) in body.iter().zip(["1 ", "2 ", "2<h<k", "k "]) {
            assert!(line.starts_with(label), "{line}");
        }
    }

    #[test]
    fn instance_round_trip() {
        let spec = ModelSpec::hwsbm(1.0, 1.0, 9, 3, 3).unwrap();
        let inst = sample_instance(&spec, 4, None).unwrap();
        for weights in [true, false] {
            let back = parse_instance_json(&instance_json(&inst, weights)).unwrap();
            assert_eq!(back.weights(), inst.weights());
            assert_eq!(back.planted(), inst.planted());
            assert_eq!(back.spec(), inst.spec());
        }
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = emit("x", Some(Path::new("/nonexistent-dir/sub/out.csv"))).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
        assert_eq!(err.exit_code(), 4);
    }
}
