//! CSV files written by the commands and read back by `compare`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hvloss_core::optim::{EpochMetrics, Objective, SplitMetrics};
use hvloss_core::stats::{DifferencePoint, Metric, RunRecord, Split, SummaryRow};

pub const RUN_HEADER: [&str; 7] = [
    "epoch",
    "train_mean",
    "train_max",
    "valid_mean",
    "valid_max",
    "test_mean",
    "test_max",
];
pub const DIFF_HEADER: [&str; 4] = ["epoch", "median", "lower", "upper"];
pub const SUMMARY_HEADER: [&str; 7] = [
    "corruption_p",
    "mean_loss_baseline",
    "sd_baseline",
    "mean_loss_hv",
    "sd_hv",
    "t",
    "p",
];
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.conf";

/// `%.9g`: nine significant digits, trailing zeros dropped, exponent form
/// outside `[1e-4, 1e9)`.
pub fn format_g(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn run_file_name(objective: Objective, corruption_p: f64, seed: u64) -> String {
    format!(
        "run_{}_p{}_seed{seed}.csv",
        objective.name(),
        format_g(corruption_p)
    )
}

pub fn diff_file_name(corruption_p: f64, split: Split, metric: Metric) -> String {
    format!(
        "diff_p{}_{}_{}.csv",
        format_g(corruption_p),
        split.name(),
        metric.name()
    )
}

pub fn run_path(dir: &Path, objective: Objective, corruption_p: f64, seed: u64) -> PathBuf {
    dir.join(run_file_name(objective, corruption_p, seed))
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

pub fn write_run(path: &Path, record: &RunRecord) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RUN_HEADER)?;
    for e in &record.epochs {
        let mut row = vec![e.epoch.to_string()];
        for split in Split::ALL {
            let m = e.split(split);
            row.push(format_g(m.mean));
            row.push(format_g(m.max));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a run file; seed, objective and corruption level come from the
/// caller since the file name encodes them.
pub fn read_run(
    path: &Path,
    seed: u64,
    objective: Objective,
    corruption_p: f64,
) -> Result<RunRecord> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RUN_HEADER {
        bail!("{}: unexpected header {header:?}", path.display());
    }
    let mut epochs = Vec::new();
    for (n, row) in r.records().enumerate() {
        let row = row.with_context(|| format!("{}: row {}", path.display(), n + 1))?;
        let epoch: usize = row[0]
            .parse()
            .with_context(|| format!("{}: row {}", path.display(), n + 1))?;
        let mut v = [0.0; 6];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = row[k + 1].parse().with_context(|| {
                format!(
                    "{}: row {} column {}",
                    path.display(),
                    n + 1,
                    RUN_HEADER[k + 1]
                )
            })?;
        }
        let m = |i: usize| SplitMetrics {
            mean: v[i],
            max: v[i + 1],
        };
        epochs.push(EpochMetrics {
            epoch,
            train: m(0),
            valid: m(2),
            test: m(4),
        });
    }
    let record = RunRecord {
        seed,
        objective,
        corruption_p,
        epochs,
    };
    record
        .validate()
        .with_context(|| format!("{}", path.display()))?;
    Ok(record)
}

pub fn write_diff(path: &Path, series: &[DifferencePoint]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(DIFF_HEADER)?;
    for d in series {
        w.write_record([
            d.epoch.to_string(),
            format_g(d.median),
            format_g(d.lower),
            format_g(d.upper),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        let (t, p) = r
            .t_test
            .map_or((f64::NAN, f64::NAN), |t| (t.t, t.p_two_sided));
        w.write_record(
            [
                r.corruption_p,
                r.mean_baseline,
                r.sd_baseline,
                r.mean_candidate,
                r.sd_candidate,
                t,
                p,
            ]
            .map(format_g),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_g_matches_printf() {
        // Reference strings from C printf("%.9g").
        let cases = [
            (0.1, "0.1"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (99.99999999, "100"),
            (f64::NAN, "nan"),
            (0.0, "0"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g(x), want, "{x}");
        }
    }

    #[test]
    fn file_names() {
        assert_eq!(
            run_file_name(Objective::Hypervolume, 0.1, 7),
            "run_hv_p0.1_seed7.csv"
        );
        assert_eq!(
            run_file_name(Objective::MeanLoss, 0.0, 0),
            "run_mean_p0_seed0.csv"
        );
        assert_eq!(
            diff_file_name(0.3, Split::Test, Metric::Max),
            "diff_p0.3_test_max.csv"
        );
    }

    #[test]
    fn run_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = |v: f64| SplitMetrics {
            mean: v,
            max: 2.0 * v,
        };
        let record = RunRecord {
            seed: 3,
            objective: Objective::Hypervolume,
            corruption_p: 0.1,
            epochs: (0..4)
                .map(|e| EpochMetrics {
                    epoch: e,
                    train: m(1.5),
                    valid: m(0.25),
                    test: m(0.125),
                })
                .collect(),
        };
        let path = dir.path().join("r.csv");
        write_run(&path, &record).unwrap();
        assert_eq!(
            read_run(&path, 3, Objective::Hypervolume, 0.1).unwrap(),
            record
        );
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "epoch,train_mean,train_max,valid_mean,valid_max,test_mean,test_max\n0,1.5,3,"
        ));
    }

    #[test]
    fn read_rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_run(&path, 0, Objective::MeanLoss, 0.0).is_err());
        fs::write(
            &path,
            "epoch,train_mean,train_max,valid_mean,valid_max,test_mean,test_max\n0,x,1,1,1,1,1\n",
        )
        .unwrap();
        assert!(read_run(&path, 0, Objective::MeanLoss, 0.0).is_err());
        assert!(read_run(&dir.path().join("missing.csv"), 0, Objective::MeanLoss, 0.0).is_err());
    }
}
