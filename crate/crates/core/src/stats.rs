//! Aggregation over paired runs.
//!
//! Baseline and hypervolume runs that share a seed are paired. For every
//! epoch the per-seed difference `baseline - hypervolume` is summarised by
//! its median and its min/max over seeds (positive means the hypervolume run
//! is better). The table summary compares test mean losses at each run's
//! best-validation epoch with a paired t-test.

use crate::error::{Error, Result};
use crate::optim::{EpochMetrics, Objective, SplitMetrics};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Mean,
    Max,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Mean, Metric::Max];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mean => "mean",
            Metric::Max => "max",
        }
    }
}

/// Per-epoch metrics of one training run. Entry 0 holds the metrics of the
/// initial parameters; entry `k` the metrics after `k` training epochs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub objective: Objective,
    pub corruption_p: f64,
    pub epochs: Vec<EpochMetrics>,
}

impl EpochMetrics {
    pub fn split(&self, split: Split) -> SplitMetrics {
        match split {
            Split::Train => self.train,
            Split::Valid => self.valid,
            Split::Test => self.test,
        }
    }

    pub fn value(&self, split: Split, metric: Metric) -> f64 {
        let m = self.split(split);
        match metric {
            Metric::Mean => m.mean,
            Metric::Max => m.max,
        }
    }
}

impl RunRecord {
    /// Epoch numbers strictly increasing and every metric finite.
    pub fn validate(&self) -> Result<()> {
        if self.epochs.windows(2).any(|w| w[1].epoch <= w[0].epoch) {
            return Err(Error::Invariant(format!(
                "seed {}: epochs not increasing",
                self.seed
            )));
        }
        let finite = self.epochs.iter().all(|e| {
            Split::ALL
                .iter()
                .all(|&s| Metric::ALL.iter().all(|&m| e.value(s, m).is_finite()))
        });
        if !finite {
            return Err(Error::Invariant(format!(
                "seed {}: non-finite metric",
                self.seed
            )));
        }
        Ok(())
    }
}

/// Median and bounds of the per-seed differences at one epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DifferencePoint {
    pub epoch: usize,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

fn pair_up<'a>(
    baseline: &'a [RunRecord],
    candidate: &'a [RunRecord],
) -> Result<Vec<(&'a RunRecord, &'a RunRecord)>> {
    if baseline.len() != candidate.len() {
        return Err(Error::Unpaired(format!(
            "{} baseline runs vs {} candidate runs",
            baseline.len(),
            candidate.len()
        )));
    }
    let mut pairs = Vec::with_capacity(baseline.len());
    for b in baseline {
        let mut matches = candidate.iter().filter(|c| c.seed == b.seed);
        let c = matches
            .next()
            .ok_or_else(|| Error::Unpaired(format!("no candidate run for seed {}", b.seed)))?;
        if matches.next().is_some() {
            return Err(Error::Unpaired(format!(
                "seed {} appears more than once",
                b.seed
            )));
        }
        if b.epochs.len() != c.epochs.len() {
            return Err(Error::Unpaired(format!(
                "seed {}: {} vs {} epochs",
                b.seed,
                b.epochs.len(),
                c.epochs.len()
            )));
        }
        pairs.push((b, c));
    }
    Ok(pairs)
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Per epoch: median, min and max over seeds of `baseline - candidate`.
pub fn difference_series(
    baseline: &[RunRecord],
    candidate: &[RunRecord],
    split: Split,
    metric: Metric,
) -> Result<Vec<DifferencePoint>> {
    let pairs = pair_up(baseline, candidate)?;
    let Some(&(first, _)) = pairs.first() else {
        return Err(Error::Empty("no runs to compare"));
    };
    let epochs = first.epochs.len();
    if pairs.iter().any(|(b, _)| b.epochs.len() != epochs) {
        return Err(Error::Unpaired("runs have different epoch counts".into()));
    }
    (0..epochs)
        .map(|k| {
            let mut diffs: Vec<f64> = pairs
                .iter()
                .map(|(b, c)| b.epochs[k].value(split, metric) - c.epochs[k].value(split, metric))
                .collect();
            diffs.sort_by(f64::total_cmp);
            Ok(DifferencePoint {
                epoch: first.epochs[k].epoch,
                median: median_of_sorted(&diffs),
                lower: diffs[0],
                upper: diffs[diffs.len() - 1],
            })
        })
        .collect()
}

/// Position of the smallest validation mean loss; ties go to the earliest.
pub fn best_validation_index(record: &RunRecord) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in record.epochs.iter().enumerate() {
        if best.is_none_or(|(_, v)| e.valid.mean < v) {
            best = Some((i, e.valid.mean));
        }
    }
    best.map(|(i, _)| i)
        .ok_or(Error::Empty("run record has no epochs"))
}

/// Epoch number with the smallest validation mean loss.
pub fn best_validation_epoch(record: &RunRecord) -> Result<usize> {
    best_validation_index(record).map(|i| record.epochs[i].epoch)
}

/// Test mean loss at the best-validation epoch.
pub fn test_loss_at_best_validation(record: &RunRecord) -> Result<f64> {
    best_validation_index(record).map(|i| record.epochs[i].test.mean)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p_two_sided: f64,
    pub df: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

/// Paired t-test on `a - b` with a two-sided p-value.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Domain(format!(
            "paired t-test needs n >= 2, got {}",
            a.len()
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if let Some(index) = d.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            index,
            value: d[index],
        });
    }
    let n = d.len() as f64;
    let sd = sample_std(&d);
    if sd == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = mean(&d) * n.sqrt() / sd;
    let df = n - 1.0;
    Ok(TTest {
        t,
        p_two_sided: student_t_two_sided_p(t, df),
        df,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, 0.5 * df, 0.5)
}

/// Student's t cumulative distribution function.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_sided_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

// Lanczos approximation, g = 7, nine coefficients.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta `I_x(a, b)` via the modified Lentz continued
/// fraction, using the symmetry `I_x(a, b) = 1 - I_{1-x}(b, a)` where the
/// fraction converges faster.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// One row of the test-loss summary table.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub corruption_p: f64,
    pub mean_baseline: f64,
    pub sd_baseline: f64,
    pub mean_candidate: f64,
    pub sd_candidate: f64,
    /// `None` when the paired differences have zero variance.
    pub t_test: Option<TTest>,
    /// Seeds where the candidate's test loss is strictly lower.
    pub candidate_wins: usize,
    pub runs: usize,
}

/// Test mean loss at each run's best-validation epoch, aggregated over the
/// paired seeds of one corruption level.
pub fn summarize(baseline: &[RunRecord], candidate: &[RunRecord]) -> Result<SummaryRow> {
    let pairs = pair_up(baseline, candidate)?;
    let Some(&(first, _)) = pairs.first() else {
        return Err(Error::Empty("no runs to summarize"));
    };
    let mut base = Vec::with_capacity(pairs.len());
    let mut cand = Vec::with_capacity(pairs.len());
    for (b, c) in &pairs {
        base.push(test_loss_at_best_validation(b)?);
        cand.push(test_loss_at_best_validation(c)?);
    }
    let t_test = if base.len() < 2 {
        None
    } else {
        match paired_t_test(&base, &cand) {
            Ok(t) => Some(t),
            Err(Error::ZeroVariance) => None,
            Err(e) => return Err(e),
        }
    };
    let sd = |v: &[f64]| if v.len() > 1 { sample_std(v) } else { 0.0 };
    Ok(SummaryRow {
        corruption_p: first.corruption_p,
        mean_baseline: mean(&base),
        sd_baseline: sd(&base),
        mean_candidate: mean(&cand),
        sd_candidate: sd(&cand),
        t_test,
        candidate_wins: base.iter().zip(&cand).filter(|(b, c)| c < b).count(),
        runs: base.len(),
    })
}
