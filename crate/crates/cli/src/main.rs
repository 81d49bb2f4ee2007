use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use robust_sfft::granular::{anticoncentration_probe, anticoncentration_level, c_alpha, counterexample_level, counterexample_signal, jensen_check};
use robust_sfft::harness::{run_experiment, write_outputs, Algorithm, ExperimentConfig, ExperimentOutcome};
use robust_sfft::lab::{run_concentration, Claim, ConcentrationConfig, ConcentrationRow};
use robust_sfft::noise::{NoiseModel, OutlierStrategy};

#[derive(Parser)]
#[command(name = "robust-sfft", version, about = "Outlier-robust sparse Fourier recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sparse recovery on {0,1}^n.
    BooleanRecover(BooleanArgs),
    /// Sparse recovery on the torus.
    TorusRecover(TorusArgs),
    /// Degree-d recovery under adversarial outliers.
    LowdegRecover(LowdegArgs),
    /// Exhaustive decoding of granular torus signals.
    GranularRecover(GranularArgs),
    /// Monte Carlo check of a concentration or isolation claim.
    ConcentrationCheck(ConcentrationArgs),
    /// Grid probe of the normalized (1 + e^{2πit})^k signal.
    Anticoncentration(AntiArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Random,
    RandomPerPoint,
    Adversarial,
}

#[derive(Clone, Copy, ValueEnum)]
enum Outlier {
    LargeConstant,
    Zero,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, value_enum, default_value = "random")]
    model: Model,
    #[arg(long, value_enum, default_value = "large-constant")]
    outlier: Outlier,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Experiment name; outputs are `<name>.csv` and `<name>.json`.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// JSON file whose keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BooleanArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long)]
    ell: Option<usize>,
    /// Samples per bucket decode.
    #[arg(long)]
    inner_samples: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TorusArgs {
    #[arg(long = "F", alias = "bandlimit", default_value_t = 64)]
    bandlimit: u64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long)]
    prime_floor: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pool_size: usize,
    #[arg(long)]
    inner_samples: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct LowdegArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long)]
    samples: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GranularArgs {
    #[arg(long = "F", alias = "bandlimit", default_value_t = 8)]
    bandlimit: u64,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Acceptance radius of the decoder; the oracle noise is `--eps`.
    #[arg(long, default_value_t = 1e-4)]
    accept_eps: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ConcentrationArgs {
    #[arg(long, value_enum, default_value = "ell1")]
    claim: ClaimArg,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value = "concentration")]
    name: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClaimArg {
    Ell1,
    Ell2,
    Isolation,
    Family,
}

#[derive(Args)]
struct AntiArgs {
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1 << 14)]
    grid: usize,
    #[arg(long, default_value = "anticoncentration")]
    name: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (key, v) in o {
                match b.get_mut(&key) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(key, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn overlay<T: serde::Serialize + serde::de::DeserializeOwned>(base: &T, path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(serde_json::from_value(serde_json::to_value(base)?)?);
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let over: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut v = serde_json::to_value(base)?;
    merge(&mut v, over);
    serde_json::from_value(v).with_context(|| format!("validating {}", path.display()))
}

fn base_config(algorithm: Algorithm, default_name: &str, c: &Common) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        name: c.name.clone().unwrap_or_else(|| default_name.to_string()),
        algorithm,
        delta: c.delta,
        trials: c.trials,
        seed: c.seed,
        workers: c.workers,
        output: Some(c.out_dir.clone()),
        ..Default::default()
    };
    cfg.noise.rho = c.rho;
    cfg.noise.epsilon = c.eps;
    cfg.noise.model = match c.model {
        Model::Random => NoiseModel::Random,
        Model::RandomPerPoint => NoiseModel::RandomPerPoint,
        Model::Adversarial => NoiseModel::Adversarial,
    };
    cfg.noise.outlier = match c.outlier {
        Outlier::LargeConstant => OutlierStrategy::LargeConstant,
        Outlier::Zero => OutlierStrategy::Zero,
    };
    cfg
}

fn finish(cfg: ExperimentConfig) -> Result<ExitCode> {
    let outcome: ExperimentOutcome = run_experiment(&cfg)?;
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
    let (csv, json) = write_outputs(&outcome, &dir)?;
    let s = &outcome.summary;
    println!(
        "{}: {}/{} succeeded (rate {:.3}), linf p95 {:.3e}; wrote {} and {}",
        s.name,
        s.successes,
        s.trials,
        s.success_rate,
        s.linf_p95,
        csv.display(),
        json.display()
    );
    Ok(if s.pass == Some(false) { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn write_rows(dir: &Path, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.csv"));
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(path)
}

fn concentration_csv(row: &ConcentrationRow) -> Vec<String> {
    vec![
        row.claim.clone(),
        row.m.to_string(),
        row.trials.to_string(),
        format!("{:.6e}", row.p50),
        format!("{:.6e}", row.p95),
        format!("{:.6e}", row.max),
        row.pass.to_string(),
    ]
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::BooleanRecover(a) => {
            let mut cfg = base_config(Algorithm::BooleanSfft, "boolean-recover", &a.common);
            cfg.n = a.n;
            cfg.k = a.k;
            cfg.eta = a.eta;
            cfg.boolean.ell = a.ell;
            cfg.boolean.inner.samples = a.inner_samples;
            finish(overlay(&cfg, a.common.config.as_deref())?)
        }
        Command::TorusRecover(a) => {
            let mut cfg = base_config(Algorithm::TorusSfft, "torus-recover", &a.common);
            cfg.bandlimit = a.bandlimit;
            cfg.k = a.k;
            cfg.eta = a.eta;
            cfg.torus.prime_floor = a.prime_floor;
            cfg.torus.prime_pool_size = a.pool_size;
            cfg.torus.inner.samples = a.inner_samples;
            finish(overlay(&cfg, a.common.config.as_deref())?)
        }
        Command::LowdegRecover(a) => {
            let mut cfg = base_config(Algorithm::LowDegree, "lowdeg-recover", &a.common);
            cfg.n = a.n;
            cfg.d = a.d;
            cfg.eta = a.eta;
            cfg.lowdeg.samples = a.samples;
            finish(overlay(&cfg, a.common.config.as_deref())?)
        }
        Command::GranularRecover(a) => {
            let mut cfg = base_config(Algorithm::Granular, "granular-recover", &a.common);
            cfg.bandlimit = a.bandlimit;
            cfg.k = a.k;
            cfg.eta = a.eta;
            cfg.granular.epsilon = a.accept_eps;
            finish(overlay(&cfg, a.common.config.as_deref())?)
        }
        Command::ConcentrationCheck(a) => {
            let mut cfg = ConcentrationConfig {
                claim: match a.claim {
                    ClaimArg::Ell1 => Claim::Ell1,
                    ClaimArg::Ell2 => Claim::Ell2,
                    ClaimArg::Isolation => Claim::Isolation,
                    ClaimArg::Family => Claim::Family,
                },
                ..Default::default()
            };
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            if let Some(t) = a.trials {
                cfg.trials = t;
            }
            let cfg = overlay(&cfg, a.config.as_deref())?;
            let row = run_concentration(&cfg)?;
            let path = write_rows(
                &a.out_dir,
                &a.name,
                &["claim", "m", "trials", "p50", "p95", "max", "pass"],
                vec![concentration_csv(&row)],
            )?;
            std::fs::write(a.out_dir.join(format!("{}.json", a.name)), serde_json::to_string_pretty(&serde_json::json!({"config": cfg, "result": row}))?)?;
            println!("{}: p95 {:.4} max {:.4} pass {}; wrote {}", row.claim, row.p95, row.max, row.pass, path.display());
            Ok(if row.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Anticoncentration(a) => {
            if !(a.alpha > 0.0 && a.alpha < 1.0) {
                bail!("alpha must lie in (0, 1)");
            }
            let f = counterexample_signal(a.k)?;
            let tau = counterexample_level(a.k, a.alpha);
            let frac = anticoncentration_probe(&f, tau, a.grid)?;
            let jensen = jensen_check(&f, a.grid)?;
            let row = vec![
                a.k.to_string(),
                a.alpha.to_string(),
                a.grid.to_string(),
                format!("{tau:.6e}"),
                format!("{frac:.6}"),
                format!("{:.6e}", c_alpha(a.alpha)),
                format!("{:.6e}", anticoncentration_level(f.iter().map(|(_, c)| c.norm()).fold(f64::INFINITY, f64::min), a.alpha)),
                format!("{:.6e}", jensen.slack),
                (frac >= a.alpha).to_string(),
            ];
            let path = write_rows(
                &a.out_dir,
                &a.name,
                &["k", "alpha", "grid", "tau", "fraction", "c_alpha", "lemma_level", "jensen_slack", "pass"],
                vec![row],
            )?;
            println!("Pr[|f| <= {tau:.4e}] = {frac:.4} on {} points; wrote {}", a.grid, path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
