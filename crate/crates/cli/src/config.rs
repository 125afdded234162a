//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # desk-scale comparison
//! data = synthetic
//! downsample = 2
//! n_train = 1000
//! corruption = 0.1, 0.3
//! seeds = 0-9
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are an error.
//! Lists are comma-separated; `seeds` also accepts inclusive ranges `a-b`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use hvloss_core::data::{self, Dataset, SplitSizes};
use hvloss_core::optim::{MuScope, Objective, TrainConfig};
use hvloss_core::scalarize::NadirSchedule;

/// Side length of the images produced by the synthetic generator.
pub const SYNTHETIC_SIDE: usize = 28;

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Synthetic,
    Idx {
        train_images: PathBuf,
        test_images: PathBuf,
    },
}

/// Which objectives `train` runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveSelection {
    Both,
    Only(Objective),
}

impl ObjectiveSelection {
    pub fn objectives(self) -> Vec<Objective> {
        match self {
            ObjectiveSelection::Both => vec![Objective::MeanLoss, Objective::Hypervolume],
            ObjectiveSelection::Only(o) => vec![o],
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("both") {
            Ok(ObjectiveSelection::Both)
        } else {
            Ok(ObjectiveSelection::Only(s.parse()?))
        }
    }

    fn name(self) -> &'static str {
        match self {
            ObjectiveSelection::Both => "both",
            ObjectiveSelection::Only(o) => o.name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub data_seed: u64,
    pub downsample: usize,
    pub sizes: SplitSizes,
    pub hidden: usize,
    pub corruption: Vec<f64>,
    pub seeds: Vec<u64>,
    pub objective: ObjectiveSelection,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub epsilon0: f64,
    pub kappa: f64,
    pub mu_scope: MuScope,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    /// Desk scale: synthetic 28x28 digits averaged down to 14x14,
    /// 1000/500/500 samples, 100 hidden units, 20 epochs of batch 100.
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            data_seed: 2024,
            downsample: 2,
            sizes: SplitSizes::new(1000, 500, 500),
            hidden: 100,
            corruption: vec![0.1, 0.3],
            seeds: (0..10).collect(),
            objective: ObjectiveSelection::Both,
            learning_rate: 0.1,
            batch_size: 100,
            epochs: 20,
            epsilon0: 1.0,
            kappa: 1.0,
            mu_scope: MuScope::Batch,
            out: PathBuf::from("runs"),
        }
    }
}

fn parse_f64_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {s:?}"))
        })
        .collect()
}

fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in value.split(',').map(str::trim) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
                if b < a {
                    bail!("empty seed range {part}");
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().with_context(|| format!("bad seed {part:?}"))?),
        }
    }
    Ok(seeds)
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "data" => match value {
                "synthetic" => self.source = DataSource::Synthetic,
                "idx" => {
                    if self.source == DataSource::Synthetic {
                        self.source = DataSource::Idx {
                            train_images: PathBuf::new(),
                            test_images: PathBuf::new(),
                        };
                    }
                }
                other => bail!("data must be 'synthetic' or 'idx', got {other:?}"),
            },
            "train_images" | "test_images" => {
                if self.source == DataSource::Synthetic {
                    self.source = DataSource::Idx {
                        train_images: PathBuf::new(),
                        test_images: PathBuf::new(),
                    };
                }
                if let DataSource::Idx {
                    train_images,
                    test_images,
                } = &mut self.source
                {
                    let slot = if key.trim() == "train_images" {
                        train_images
                    } else {
                        test_images
                    };
                    *slot = PathBuf::from(value);
                }
            }
            "data_seed" => self.data_seed = value.parse()?,
            "downsample" => self.downsample = value.parse()?,
            "n_train" => self.sizes.train = value.parse()?,
            "n_valid" => self.sizes.valid = value.parse()?,
            "n_test" => self.sizes.test = value.parse()?,
            "hidden" => self.hidden = value.parse()?,
            "corruption" => self.corruption = parse_f64_list(value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "objective" => self.objective = ObjectiveSelection::parse(value)?,
            "lr" => self.learning_rate = value.parse()?,
            "batch" => self.batch_size = value.parse()?,
            "epochs" => self.epochs = value.parse()?,
            "epsilon0" => self.epsilon0 = value.parse()?,
            "kappa" => self.kappa = value.parse()?,
            "mu_scope" => self.mu_scope = value.parse()?,
            "out" => self.out = PathBuf::from(value),
            other => bail!("unknown configuration key {other:?}"),
        }
        Ok(())
    }

    /// Parses a configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            config
                .set(key, value)
                .with_context(|| format!("line {}", n + 1))?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Every key in a fixed order; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        match &self.source {
            DataSource::Synthetic => s.push_str("data = synthetic\n"),
            DataSource::Idx {
                train_images,
                test_images,
            } => {
                s.push_str("data = idx\n");
                let _ = writeln!(s, "train_images = {}", train_images.display());
                let _ = writeln!(s, "test_images = {}", test_images.display());
            }
        }
        let _ = writeln!(s, "data_seed = {}", self.data_seed);
        let _ = writeln!(s, "downsample = {}", self.downsample);
        let _ = writeln!(s, "n_train = {}", self.sizes.train);
        let _ = writeln!(s, "n_valid = {}", self.sizes.valid);
        let _ = writeln!(s, "n_test = {}", self.sizes.test);
        let _ = writeln!(s, "hidden = {}", self.hidden);
        let _ = writeln!(s, "corruption = {}", join(&self.corruption));
        let _ = writeln!(s, "seeds = {}", join(&self.seeds));
        let _ = writeln!(s, "objective = {}", self.objective.name());
        let _ = writeln!(s, "lr = {}", self.learning_rate);
        let _ = writeln!(s, "batch = {}", self.batch_size);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "epsilon0 = {}", self.epsilon0);
        let _ = writeln!(s, "kappa = {}", self.kappa);
        let _ = writeln!(s, "mu_scope = {}", self.mu_scope.name());
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }

    pub fn validate(&self) -> Result<()> {
        if let DataSource::Idx {
            train_images,
            test_images,
        } = &self.source
        {
            for path in [train_images, test_images] {
                if !path.is_file() {
                    bail!("IDX file {} does not exist", path.display());
                }
            }
        }
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            bail!("seeds must be distinct");
        }
        if self.corruption.is_empty() {
            bail!("at least one corruption level is required");
        }
        if self.sizes.train == 0 || self.sizes.valid == 0 || self.sizes.test == 0 {
            bail!("every split needs at least one sample");
        }
        for &p in &self.corruption {
            for objective in self.objective.objectives() {
                self.train_config(self.seeds[0], p, objective)
                    .validate(self.sizes.train)?;
            }
        }
        Ok(())
    }

    pub fn train_config(&self, seed: u64, corruption_p: f64, objective: Objective) -> TrainConfig {
        TrainConfig {
            objective,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            hidden_dim: self.hidden,
            schedule: NadirSchedule {
                epsilon0: self.epsilon0,
                kappa: self.kappa,
            },
            seed,
            corruption_p,
            mu_scope: self.mu_scope,
        }
    }

    /// Loads or generates the data and reduces it to the configured scale.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let full = match &self.source {
            DataSource::Synthetic => {
                data::synthetic_digits(self.sizes, SYNTHETIC_SIDE * SYNTHETIC_SIDE, self.data_seed)?
            }
            DataSource::Idx {
                train_images,
                test_images,
            } => {
                let train = data::load_idx_images(train_images)
                    .with_context(|| format!("loading {}", train_images.display()))?;
                let test = data::load_idx_images(test_images)
                    .with_context(|| format!("loading {}", test_images.display()))?;
                data::split_mnist(train, test)?
            }
        };
        Ok(data::downsample(&full, self.sizes, self.downsample)?)
    }
}
