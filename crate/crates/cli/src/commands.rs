//! The four subcommands. Each writes its CSV output under a directory and
//! returns what it wrote so `main` can report it.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use hvloss_core::gradcheck::{self, CheckResult, GradcheckOptions};
use hvloss_core::optim::{self, Objective};
use hvloss_core::pareto::{self, ToyProblem};
use hvloss_core::stats::{self, Metric, RunRecord, Split, SummaryRow};

use crate::config::{ExperimentConfig, ObjectiveSelection};
use crate::output::{self, format_g};

/// Progress sink; `main` prints to stderr, tests pass a no-op.
pub type Log<'a> = &'a mut dyn FnMut(&str);

fn write_config(config: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&config.out)
        .with_context(|| format!("creating {}", config.out.display()))?;
    let path = config.out.join(output::CONFIG_FILE);
    fs::write(&path, config.serialize()).with_context(|| format!("writing {}", path.display()))
}

/// Trains every (corruption level, seed, objective) run and writes one CSV
/// per run. With both objectives selected the runs are paired.
pub fn cmd_train(config: &ExperimentConfig, log: Log<'_>) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let dataset = config.load_dataset()?;
    write_config(config)?;
    let mut written = Vec::new();
    for &p in &config.corruption {
        for &seed in &config.seeds {
            let records = match config.objective {
                ObjectiveSelection::Both => {
                    let base = config.train_config(seed, p, Objective::MeanLoss);
                    let (a, b) = optim::paired_run(
                        &base,
                        &base.with_objective(Objective::Hypervolume),
                        &dataset,
                    )?;
                    vec![a, b]
                }
                ObjectiveSelection::Only(o) => vec![optim::train_run(
                    &dataset,
                    &config.train_config(seed, p, o),
                )?],
            };
            for record in records {
                let path = output::run_path(&config.out, record.objective, p, seed);
                output::write_run(&path, &record)?;
                log(&format!("wrote {}", path.display()));
                written.push(path);
            }
        }
    }
    Ok(written)
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub rows: Vec<SummaryRow>,
    pub files: Vec<PathBuf>,
}

/// Pairs `baseline` and `candidate` runs by seed, training any run whose
/// CSV is missing. Results are always read back from the CSV files, so a
/// comparison of existing runs and of fresh ones agree.
pub fn cmd_compare(
    config: &ExperimentConfig,
    baseline: Objective,
    candidate: Objective,
    log: Log<'_>,
) -> Result<CompareReport> {
    config.validate()?;
    write_config(config)?;
    let mut dataset = None;
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for &p in &config.corruption {
        let mut loaded: [Vec<RunRecord>; 2] = [Vec::new(), Vec::new()];
        for &seed in &config.seeds {
            for (slot, objective) in [baseline, candidate].into_iter().enumerate() {
                let path = output::run_path(&config.out, objective, p, seed);
                if !path.is_file() {
                    if dataset.is_none() {
                        dataset = Some(config.load_dataset()?);
                    }
                    let train = config.train_config(seed, p, objective);
                    let record = optim::train_run(dataset.as_ref().expect("loaded above"), &train)?;
                    output::write_run(&path, &record)?;
                    log(&format!("trained missing run {}", path.display()));
                }
                loaded[slot].push(output::read_run(&path, seed, objective, p)?);
            }
        }
        let [base, cand] = &loaded;
        for split in Split::ALL {
            for metric in Metric::ALL {
                let series = stats::difference_series(base, cand, split, metric)?;
                let path = config.out.join(output::diff_file_name(p, split, metric));
                output::write_diff(&path, &series)?;
                files.push(path);
            }
        }
        let row = stats::summarize(base, cand)?;
        if row.t_test.is_none() {
            log(&format!(
                "p = {}: paired differences have zero variance, no t-test",
                format_g(p)
            ));
        }
        rows.push(row);
    }
    let summary = config.out.join(output::SUMMARY_FILE);
    output::write_summary(&summary, &rows)?;
    files.push(summary);
    Ok(CompareReport { rows, files })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParetoDemoOptions {
    pub exponent: f64,
    pub z1: f64,
    pub z2: f64,
    pub w1: f64,
    pub w2: f64,
    pub grid_step: f64,
    pub out: PathBuf,
}

impl Default for ParetoDemoOptions {
    fn default() -> Self {
        Self {
            exponent: ToyProblem::DEFAULT_EXPONENT,
            z1: 2.0,
            z2: 2.0,
            w1: 1.0,
            w2: 1.0,
            grid_step: 1e-4,
            out: PathBuf::from("pareto"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParetoReport {
    pub linear_x: f64,
    pub hv_x: f64,
    pub hv_efficient: bool,
    /// Minimizers of the weighted sum for `w1 = k/100, w2 = 1 - w1`.
    pub sweep: Vec<(f64, f64)>,
    pub files: Vec<PathBuf>,
}

pub const FRONTIER_FILE: &str = "frontier.csv";
pub const OPTIMA_FILE: &str = "optima.csv";

/// Writes the sampled frontier with both scalarizations, and the optimum of
/// each: the weighted sum at the given weights and over 99 weight ratios,
/// the log-hypervolume at the given Nadir point.
pub fn cmd_pareto_demo(opts: &ParetoDemoOptions) -> Result<ParetoReport> {
    let problem = ToyProblem::new(opts.exponent)?;
    let linear_x = pareto::linear_argmin(&problem, opts.w1, opts.w2, opts.grid_step)?;
    let hv_x = pareto::hv_argmax(&problem, opts.z1, opts.z2, opts.grid_step)?;
    let hv_efficient = pareto::is_grid_efficient(&problem, hv_x, opts.grid_step)?;
    let sweep = (1..100)
        .map(|k| {
            let w1 = k as f64 / 100.0;
            Ok((
                w1,
                pareto::linear_argmin(&problem, w1, 1.0 - w1, opts.grid_step)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
    let frontier = opts.out.join(FRONTIER_FILE);
    let mut w = csv::Writer::from_path(&frontier)?;
    w.write_record(["x", "f1", "f2", "linear", "log_hv"])?;
    for r in pareto::frontier_table(
        &problem,
        (opts.w1, opts.w2),
        (opts.z1, opts.z2),
        opts.grid_step,
    )? {
        w.write_record([r.x, r.f1, r.f2, r.linear, r.log_hv].map(format_g))?;
    }
    w.flush()?;

    let optima = opts.out.join(OPTIMA_FILE);
    let mut w = csv::Writer::from_path(&optima)?;
    w.write_record(["scalarization", "a", "b", "x", "f1", "f2"])?;
    let mut row = |name: &str, a: f64, b: f64, x: f64| -> Result<()> {
        let (f1, f2) = problem.objectives(x)?;
        let mut rec = vec![name.to_string()];
        rec.extend([a, b, x, f1, f2].map(format_g));
        Ok(w.write_record(&rec)?)
    };
    row("hypervolume", opts.z1, opts.z2, hv_x)?;
    row("linear", opts.w1, opts.w2, linear_x)?;
    for &(w1, x) in &sweep {
        row("linear", w1, 1.0 - w1, x)?;
    }
    w.flush()?;

    Ok(ParetoReport {
        linear_x,
        hv_x,
        hv_efficient,
        sweep,
        files: vec![frontier, optima],
    })
}

pub fn cmd_gradcheck(opts: &GradcheckOptions) -> Result<Vec<CheckResult>> {
    if opts.input_dim == 0 || opts.input_dim > gradcheck::MAX_INPUT_DIM {
        bail!(
            "input dimension must be in 1..={}",
            gradcheck::MAX_INPUT_DIM
        );
    }
    if opts.hidden_dim == 0 || opts.hidden_dim > gradcheck::MAX_HIDDEN_DIM {
        bail!(
            "hidden dimension must be in 1..={}",
            gradcheck::MAX_HIDDEN_DIM
        );
    }
    if opts.batch_size == 0 || opts.trials == 0 {
        bail!("batch size and trials must be >= 1");
    }
    Ok(gradcheck::run_all(opts)?)
}
