use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use planted::config::Config;
use planted::coverage::{build_coverage, verify_coverage, CoverageGroup, CoverageReport};
use planted::estimators::{estimate, Estimate, Method};
use planted::experiments::{exponent_fit, failure_cells, ftg_check, sweep};
use planted::model::{sample_planted, Family};
use planted::output::{self, Format, Metadata};
use planted::thresholds::{hwsbm_thresholds, prem_thresholds, summary_table};
use planted::{sample_instance, Error, Result};

/// Worker-count override for the parallel trial runner.
const WORKERS_ENV: &str = "PLANTED_WORKERS";

#[derive(Parser)]
#[command(name = "planted", version, about = "Planted energy model and weighted SBM recovery laboratory")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat-key TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// `key=value` override, applied after the file; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv, text or structured.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Master seed; required by every stochastic subcommand.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one instance and write its record.
    Sample {
        /// Omit the weight array; the record is regenerated from its seed.
        #[arg(long)]
        no_weights: bool,
    },
    /// Decode an instance, read from a record or sampled from the config.
    Solve {
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Threshold table for (N, k), or the full report at one h.
    Thresholds {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        h: Option<usize>,
    },
    /// Build and verify one coverage group at overlap m.
    Coverage {
        #[arg(long)]
        m: usize,
    },
    /// Recovery curve over an SNR grid.
    Sweep {
        #[arg(long)]
        gamma_min: Option<f64>,
        #[arg(long)]
        gamma_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Failure counts at one SNR over several sizes, with the fitted slope.
    Exponent {
        #[arg(long)]
        gamma: Option<f64>,
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Distance of normalised Gaussian maxima to the Gumbel law.
    Ftg {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn configure_workers() -> Result<()> {
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        let workers: usize = raw
            .parse()
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| Error::config(WORKERS_ENV, "expected a positive integer"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::config(WORKERS_ENV, e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_workers()?;
    let common = cli.common;
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    let flag = |overrides: &mut Vec<String>, key: &str, value: Option<String>| {
        if let Some(v) = value {
            overrides.push(format!("{key}={v}"));
        }
    };
    let stochastic = !matches!(cli.command, Command::Thresholds { .. })
        && !matches!(cli.command, Command::Solve { instance: Some(_), .. });
    if stochastic && common.seed.is_none() {
        return Err(Error::config("seed", "--seed is required for this subcommand"));
    }

    let format = match &common.format {
        Some(f) => Some(f.parse::<Format>()?),
        None => None,
    };
    let out = common.out.as_deref();

    match cli.command {
        Command::Sample { no_weights } => {
            let config = Config::load(common.config.as_deref(), &overrides)?;
            let spec = config.model_spec()?;
            let seed = config.u64("seed")?;
            config.finish("sample")?;
            let instance = sample_instance(&spec, seed, None)?;
            match format.unwrap_or(Format::Structured) {
                Format::Structured => output::emit(&output::instance_json(&instance, !no_weights), out),
                Format::Text => {
                    let meta = Metadata::new(config.hash(), Some(seed), config.echo());
                    let text = format!(
                        "{}planted {:?}\nweights {}\n",
                        meta.comment_block(),
                        instance.planted(),
                        instance.weights().len()
                    );
                    output::emit(&text, out)
                }
                Format::Csv => {
                    let meta = Metadata::new(config.hash(), Some(seed), config.echo());
                    let mut text = meta.comment_block();
                    text.push_str(&format!("# planted={}\n", join(instance.planted())));
                    text.push_str("rank,nodes,weight\n");
                    let codec = instance.codec();
                    for (rank, w) in instance.weights().iter().enumerate() {
                        text.push_str(&format!("{rank},{},{w}\n", join(&codec.unrank(rank)?)));
                    }
                    output::emit(&text, out)
                }
            }
        }
        Command::Solve { method, instance } => {
            flag(&mut overrides, "estimator", method);
            let config = Config::load(common.config.as_deref(), &overrides)?;
            let (inst, seed) = match instance {
                Some(path) => {
                    let inst = output::load_instance(&path)?;
                    let seed = inst.seed();
                    (inst, seed)
                }
                None => {
                    let spec = config.model_spec()?;
                    let seed = config.u64("seed")?;
                    (sample_instance(&spec, seed, None)?, seed)
                }
            };
            let method: Method = config.estimator(inst.spec().family)?;
            let budget = config.budget()?;
            config.finish("solve")?;
            let est = estimate(&inst, method, budget)?;
            let report = SolveReport {
                success: est.subset == inst.planted(),
                planted: inst.planted().to_vec(),
                estimate: est,
            };
            let meta = Metadata::new(config.hash(), Some(seed), config.echo());
            let text = match format.unwrap_or(Format::Text) {
                Format::Structured => output::structured(&meta, &report),
                Format::Csv => format!(
                    "{}method,subset,weight,explored,planted,success\n{},{},{},{},{},{}\n",
                    meta.comment_block(),
                    report.estimate.method.as_str(),
                    join(&report.estimate.subset),
                    report.estimate.weight,
                    report.estimate.explored,
                    join(&report.planted),
                    report.success
                ),
                Format::Text => format!(
                    "{}method   {}\nsubset   {:?}\nweight   {}\nexplored {}\nplanted  {:?}\nsuccess  {}\n",
                    meta.comment_block(),
                    report.estimate.method.as_str(),
                    report.estimate.subset,
                    report.estimate.weight,
                    report.estimate.explored,
                    report.planted,
                    report.success
                ),
            };
            output::emit(&text, out)
        }
        Command::Thresholds { n, k, h } => {
            overrides.push(format!("N={n}"));
            overrides.push(format!("k={k}"));
            flag(&mut overrides, "h", h.map(|v| v.to_string()));
            let config = Config::load(common.config.as_deref(), &overrides)?;
            let (n, k) = (config.usize("N")?, config.usize("k")?);
            let h = if config.contains("h") { Some(config.usize("h")?) } else { None };
            config.finish("thresholds")?;
            let meta = Metadata::new(config.hash(), None, config.echo());
            let format = format.unwrap_or(Format::Text);
            let text = match h {
                None => {
                    let rows = summary_table(n, k)?;
                    match format {
                        Format::Text => output::threshold_table_text(n, k, &rows, &meta),
                        Format::Csv => output::threshold_table_csv(&rows, &meta),
                        Format::Structured => output::structured(&meta, &rows),
                    }
                }
                Some(h) => {
                    let report = if h == 1 { prem_thresholds(n, k)? } else { hwsbm_thresholds(n, k, h)? };
                    match format {
                        Format::Text => output::threshold_report_text(&report, &meta),
                        Format::Csv => output::threshold_report_csv(&report, &meta),
                        Format::Structured => output::structured(&meta, &report),
                    }
                }
            };
            output::emit(&text, out)
        }
        Command::Coverage { m } => {
            overrides.push(format!("m={m}"));
            let config = Config::load(common.config.as_deref(), &overrides)?;
            let (family, n, k, h) = config.shape()?;
            if family == Family::Prem {
                return Err(Error::config("family", "coverage groups need wsbm or hwsbm"));
            }
            let h = h.expect("graph families have h");
            let m = config.usize("m")?;
            let seed = config.u64("seed")?;
            config.finish("coverage")?;
            let planted = sample_planted(n, k, seed);
            let group = build_coverage(n, k, h, m, &planted, &planted[..m.min(k)])?;
            let report = verify_coverage(&group, &planted);
            let meta = Metadata::new(config.hash(), Some(seed), config.echo());
            let text = coverage_output(&group, &report, &planted, &meta, format.unwrap_or(Format::Text));
            output::emit(&text, out)
        }
        Command::Sweep {
            gamma_min,
            gamma_max,
            steps,
            trials,
        } => {
            flag(&mut overrides, "gamma_min", gamma_min.map(|v| format!("{v:?}")));
            flag(&mut overrides, "gamma_max", gamma_max.map(|v| format!("{v:?}")));
            flag(&mut overrides, "steps", steps.map(|v| v.to_string()));
            flag(&mut overrides, "trials", trials.map(|v| v.to_string()));
            let config = Config::load(common.config.as_deref(), &overrides)?;
            let experiment = config.experiment()?;
            config.finish("sweep")?;
            let curve = sweep(&experiment)?;
            let meta = Metadata::new(curve.config_hash.clone(), Some(curve.master_seed), config.echo());
            let text = match format.unwrap_or(Format::Csv) {
                Format::Csv => output::curve_csv(&curve, &meta),
                Format::Text => output::curve_text(&curve, &meta),
                Format::Structured => output::structured(&meta, &curve),
            };
            output::emit(&text, out)
        }
        Command::Exponent { gamma, sizes, trials } => {
            flag(&mut overrides, "gamma", gamma.map(|v| format!("{v:?}")));
            if !sizes.is_empty() {
                overrides.push(format!("sizes=[{}]", join(&sizes).replace(' ', ",")));
            }
            flag(&mut overrides, "trials", trials.map(|v| v.to_string()));
            let config = Config::load(common.config.as_deref(), &overrides)?;
            let (experiment, gamma, sizes) = config.exponent_experiment()?;
            config.finish("exponent")?;
            let cells = failure_cells(&experiment, gamma, &sizes)?;
            let fit = exponent_fit(&cells, gamma)?;
            let meta = Metadata::new(experiment.hash(), Some(experiment.master_seed), config.echo());
            let text = match format.unwrap_or(Format::Csv) {
                Format::Csv => output::exponent_csv(&fit, &meta),
                Format::Text => output::exponent_text(&fit, &meta),
                Format::Structured => output::structured(&meta, &fit),
            };
            output::emit(&text, out)
        }
        Command::Ftg { n, trials } => {
            flag(&mut overrides, "n", n.map(|v| v.to_string()));
            flag(&mut overrides, "trials", trials.map(|v| v.to_string()));
            let config = Config::load(common.config.as_deref(), &overrides)?;
            let n = config.u64("n")?;
            let trials = config.u64("trials")?;
            let seed = config.u64("seed")?;
            config.finish("ftg")?;
            let report = ftg_check(n, trials, seed)?;
            let meta = Metadata::new(config.hash(), Some(seed), config.echo());
            let text = match format.unwrap_or(Format::Text) {
                Format::Csv => output::ftg_csv(&report, &meta),
                Format::Text => output::ftg_text(&report, &meta),
                Format::Structured => output::structured(&meta, &report),
            };
            output::emit(&text, out)
        }
    }
}

#[derive(Serialize)]
struct SolveReport {
    estimate: Estimate,
    planted: Vec<usize>,
    success: bool,
}

#[derive(Serialize)]
struct CoverageOutput<'a> {
    planted: &'a [usize],
    group: &'a CoverageGroup,
    report: &'a CoverageReport,
}

fn coverage_output(
    group: &CoverageGroup,
    report: &CoverageReport,
    planted: &[usize],
    meta: &Metadata,
    format: Format,
) -> String {
    match format {
        Format::Structured => output::structured(meta, &CoverageOutput { planted, group, report }),
        Format::Csv => {
            let mut text = meta.comment_block();
            text.push_str(&format!(
                "# planted={} intersection={} reduced_ell={} passed={}\n",
                join(planted),
                join(&group.intersection),
                group.reduced_ell,
                report.passed
            ));
            text.push_str("member,nodes\n");
            for (i, member) in group.members.iter().enumerate() {
                text.push_str(&format!("{i},{}\n", join(member)));
            }
            text
        }
        Format::Text => {
            let mut text = meta.comment_block();
            text.push_str(&format!("planted       {planted:?}\n"));
            text.push_str(&format!("intersection  {:?}\n", group.intersection));
            text.push_str(&format!("members       {}\n", group.members.len()));
            text.push_str(&format!("reduced ell   {}\n", group.reduced_ell));
            for member in &group.members {
                text.push_str(&format!("  {member:?}\n"));
            }
            text.push_str(&format!("pairs checked {}\n", report.pairs_checked));
            text.push_str(&format!(
                "verification  {}\n",
                if report.passed { "passed".to_string() } else { format!("failed: {:?}", report.violation) }
            ));
            text
        }
    }
}

fn join(values: &[usize]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}
