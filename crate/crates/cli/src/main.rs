use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use hvloss_cli::config::ExperimentConfig;
use hvloss_cli::output::format_g;
use hvloss_cli::{cmd_compare, cmd_gradcheck, cmd_pareto_demo, cmd_train, ParetoDemoOptions};
use hvloss_core::gradcheck::{GradcheckOptions, THRESHOLD};
use hvloss_core::optim::Objective;

/// Hypervolume-maximization training of denoising autoencoders.
#[derive(Parser)]
#[command(name = "hvloss", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one CSV per (corruption level, seed, objective).
    Train(ExperimentArgs),
    /// Compare paired runs, training any that are missing.
    Compare {
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[arg(long, default_value = "mean")]
        baseline: Objective,
        #[arg(long, default_value = "hv")]
        candidate: Objective,
    },
    /// Weighted sum versus log-hypervolume on a concave toy frontier.
    ParetoDemo(ParetoArgs),
    /// Finite-difference check of the analytic gradients.
    Gradcheck(GradcheckArgs),
}

/// Settings start from the desk-scale defaults, then the `--config` file,
/// then any flag given here.
#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// mean, hv or both.
    #[arg(long)]
    objective: Option<String>,
    /// Seeds, e.g. `3` or `0-9` or `1,4,7`.
    #[arg(long)]
    seed: Option<String>,
    /// Corruption levels, e.g. `0.1,0.3`.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    epsilon0: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    /// batch or full.
    #[arg(long)]
    mu_scope: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Use generated digits instead of IDX files.
    #[arg(long)]
    synthetic: bool,
    #[arg(long)]
    downsample: Option<String>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if self.synthetic {
            config.set("data", "synthetic")?;
        }
        let overrides = [
            ("objective", &self.objective),
            ("seeds", &self.seed),
            ("corruption", &self.p),
            ("epochs", &self.epochs),
            ("lr", &self.lr),
            ("batch", &self.batch),
            ("epsilon0", &self.epsilon0),
            ("kappa", &self.kappa),
            ("hidden", &self.hidden),
            ("mu_scope", &self.mu_scope),
            ("out", &self.out),
            ("downsample", &self.downsample),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                config
                    .set(key, value)
                    .map_err(|e| e.context(format!("--{}", key.replace('_', "-"))))?;
            }
        }
        Ok(config)
    }
}

#[derive(Args)]
struct ParetoArgs {
    #[arg(long, default_value_t = 0.9)]
    exponent: f64,
    #[arg(long, default_value_t = 2.0)]
    z1: f64,
    #[arg(long, default_value_t = 2.0)]
    z2: f64,
    #[arg(long, default_value_t = 1.0)]
    w1: f64,
    #[arg(long, default_value_t = 1.0)]
    w2: f64,
    #[arg(long, default_value_t = 1e-4)]
    grid_step: f64,
    #[arg(long, default_value = "pareto")]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    input: usize,
    #[arg(long, default_value_t = 4)]
    hidden: usize,
    #[arg(long, default_value_t = 3)]
    batch: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Added to every analytic gradient entry (negative control).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    perturb: f64,
}

fn log(message: &str) {
    eprintln!("{message}");
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Train(args) => {
            let written = cmd_train(&args.resolve()?, &mut log)?;
            println!("wrote {} run files", written.len());
        }
        Command::Compare {
            experiment,
            baseline,
            candidate,
        } => {
            let report = cmd_compare(&experiment.resolve()?, baseline, candidate, &mut log)?;
            println!("corruption_p  {baseline} (sd)  {candidate} (sd)  t  p  wins");
            for r in &report.rows {
                let (t, p) = r.t_test.map_or(("nan".into(), "nan".into()), |t| {
                    (format_g(t.t), format_g(t.p_two_sided))
                });
                println!(
                    "{}  {} ({})  {} ({})  {t}  {p}  {}/{}",
                    format_g(r.corruption_p),
                    format_g(r.mean_baseline),
                    format_g(r.sd_baseline),
                    format_g(r.mean_candidate),
                    format_g(r.sd_candidate),
                    r.candidate_wins,
                    r.runs
                );
            }
        }
        Command::ParetoDemo(a) => {
            let opts = ParetoDemoOptions {
                exponent: a.exponent,
                z1: a.z1,
                z2: a.z2,
                w1: a.w1,
                w2: a.w2,
                grid_step: a.grid_step,
                out: a.out,
            };
            let report = cmd_pareto_demo(&opts)?;
            println!(
                "weighted sum ({}, {}): x* = {}",
                format_g(opts.w1),
                format_g(opts.w2),
                format_g(report.linear_x)
            );
            println!(
                "log-hypervolume ({}, {}): x* = {} (efficient: {})",
                format_g(opts.z1),
                format_g(opts.z2),
                format_g(report.hv_x),
                report.hv_efficient
            );
        }
        Command::Gradcheck(a) => {
            let opts = GradcheckOptions {
                seed: a.seed,
                input_dim: a.input,
                hidden_dim: a.hidden,
                batch_size: a.batch,
                trials: a.trials,
                perturb: a.perturb,
            };
            let results = cmd_gradcheck(&opts)?;
            let mut ok = true;
            for r in &results {
                let status = if r.passed() { "pass" } else { "FAIL" };
                println!(
                    "{:<18} {status}  max relative error {:.3e}  ({} trials, {} entries)",
                    r.name, r.max_relative_error, r.trials, r.entries
                );
                ok &= r.passed();
            }
            println!("threshold {THRESHOLD:e}");
            if !ok {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
