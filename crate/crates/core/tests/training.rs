//! Training against an independent scalar-loop implementation, and the
//! pairing guarantees between baseline and hypervolume runs.

#![allow(clippy::needless_range_loop)]

use hvloss_core::data::{synthetic_digits, SplitSizes};
use hvloss_core::gradcheck::{finite_difference_gradient, STEP};
use hvloss_core::net::{self, Batch};
use hvloss_core::optim::{self, plan_epoch, train_epoch, EpochPlan};
use hvloss_core::scalarize::{hv_weights, log_hypervolume_mu, Mu};
use hvloss_core::{AutoencoderParams, Dataset, MuScope, NadirSchedule, Objective, TrainConfig};

fn toy() -> Dataset {
    synthetic_digits(SplitSizes::new(10, 4, 4), 16, 3).unwrap()
}

fn config(objective: Objective) -> TrainConfig {
    TrainConfig {
        objective,
        learning_rate: 0.1,
        batch_size: 4,
        epochs: 3,
        hidden_dim: 5,
        schedule: NadirSchedule {
            epsilon0: 0.5,
            kappa: 1.0,
        },
        seed: 7,
        corruption_p: 0.25,
        mu_scope: MuScope::Batch,
    }
}

/// Plain nested-vector copy of the parameters.
#[derive(Clone)]
struct Plain {
    we: Vec<Vec<f64>>,
    be: Vec<f64>,
    wd: Vec<Vec<f64>>,
    bd: Vec<f64>,
}

impl Plain {
    fn from(p: &AutoencoderParams) -> Self {
        let rows = |a: &ndarray::Array2<f64>| a.outer_iter().map(|r| r.to_vec()).collect();
        Self {
            we: rows(&p.enc_weights),
            be: p.enc_bias.to_vec(),
            wd: rows(&p.dec_weights),
            bd: p.dec_bias.to_vec(),
        }
    }

    fn max_abs_diff(&self, p: &AutoencoderParams) -> f64 {
        let other = Plain::from(p);
        let flat = |q: &Plain| {
            let mut v: Vec<f64> = q.we.concat();
            v.extend(&q.be);
            v.extend(q.wd.concat());
            v.extend(&q.bd);
            v
        };
        flat(self)
            .iter()
            .zip(flat(&other))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One epoch of minibatch SGD written with explicit loops.
fn reference_epoch(
    start: &Plain,
    clean: &[Vec<f64>],
    plan: &EpochPlan,
    cfg: &TrainConfig,
    epoch: usize,
) -> Plain {
    let mut p = start.clone();
    let (d, h) = (p.wd.len(), p.we.len());
    for rows in plan.order.chunks(cfg.batch_size) {
        let mut hidden = Vec::new();
        let mut recon = Vec::new();
        let mut losses = Vec::new();
        for &r in rows {
            let x: Vec<f64> = plan.corrupted.row(r).to_vec();
            let hv: Vec<f64> = (0..h)
                .map(|j| sigmoid(p.be[j] + (0..d).map(|k| p.we[j][k] * x[k]).sum::<f64>()))
                .collect();
            let rv: Vec<f64> = (0..d)
                .map(|k| sigmoid(p.bd[k] + (0..h).map(|j| p.wd[k][j] * hv[j]).sum::<f64>()))
                .collect();
            let mut loss = 0.0;
            for k in 0..d {
                let q = rv[k].clamp(1e-12, 1.0 - 1e-12);
                let t = clean[r][k];
                loss -= t * q.ln() + (1.0 - t) * (1.0 - q).ln();
            }
            hidden.push(hv);
            recon.push(rv);
            losses.push(loss);
        }
        let n = rows.len();
        let weights: Vec<f64> = match cfg.objective {
            Objective::MeanLoss => vec![1.0 / n as f64; n],
            Objective::Hypervolume => {
                let worst = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mu = worst + cfg.schedule.epsilon0 + cfg.schedule.kappa * epoch as f64;
                let raw: Vec<f64> = losses.iter().map(|l| 1.0 / (mu - l)).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|w| w / total).collect()
            }
        };
        let mut g = Plain {
            we: vec![vec![0.0; d]; h],
            be: vec![0.0; h],
            wd: vec![vec![0.0; h]; d],
            bd: vec![0.0; d],
        };
        for (s, &r) in rows.iter().enumerate() {
            let x: Vec<f64> = plan.corrupted.row(r).to_vec();
            let delta_out: Vec<f64> = (0..d)
                .map(|k| weights[s] * (recon[s][k] - clean[r][k]))
                .collect();
            for k in 0..d {
                g.bd[k] += delta_out[k];
                for j in 0..h {
                    g.wd[k][j] += delta_out[k] * hidden[s][j];
                }
            }
            for j in 0..h {
                let back: f64 = (0..d).map(|k| delta_out[k] * p.wd[k][j]).sum();
                let delta_h = back * hidden[s][j] * (1.0 - hidden[s][j]);
                g.be[j] += delta_h;
                for k in 0..d {
                    g.we[j][k] += delta_h * x[k];
                }
            }
        }
        let lr = cfg.learning_rate;
        for j in 0..h {
            p.be[j] -= lr * g.be[j];
            for k in 0..d {
                p.we[j][k] -= lr * g.we[j][k];
            }
        }
        for k in 0..d {
            p.bd[k] -= lr * g.bd[k];
            for j in 0..h {
                p.wd[k][j] -= lr * g.wd[k][j];
            }
        }
    }
    p
}

#[test]
fn epochs_match_scalar_loop_reference() {
    let data = toy();
    let clean: Vec<Vec<f64>> = data.train.outer_iter().map(|r| r.to_vec()).collect();
    for objective in [Objective::MeanLoss, Objective::Hypervolume] {
        let cfg = config(objective);
        let mut params = net::init_params(cfg.seed, data.dim(), cfg.hidden_dim).unwrap();
        let mut plain = Plain::from(&params);
        for epoch in 0..cfg.epochs {
            let plan = plan_epoch(data.train.view(), cfg.seed, cfg.corruption_p, epoch).unwrap();
            plain = reference_epoch(&plain, &clean, &plan, &cfg, epoch);
            params = train_epoch(&params, &data, &plan, &cfg, epoch).unwrap().0;
            let diff = plain.max_abs_diff(&params);
            assert!(diff < 1e-12, "{objective} epoch {epoch}: {diff:e}");
        }
    }
}

#[test]
fn huge_slack_tracks_mean_loss() {
    let data = toy();
    let mut cfg = config(Objective::MeanLoss);
    cfg.schedule = NadirSchedule {
        epsilon0: 1e12,
        kappa: 0.0,
    };
    let (_, mean) = optim::train_run_with_params(&data, &cfg).unwrap();
    let (_, hv) =
        optim::train_run_with_params(&data, &cfg.with_objective(Objective::Hypervolume)).unwrap();
    assert!(mean.max_abs_diff(&hv) < 1e-6);

    // A small slack must make a visible difference.
    cfg.schedule = NadirSchedule {
        epsilon0: 0.1,
        kappa: 0.0,
    };
    let (_, hv) =
        optim::train_run_with_params(&data, &cfg.with_objective(Objective::Hypervolume)).unwrap();
    assert!(mean.max_abs_diff(&hv) > 1e-4);
}

#[test]
fn hypervolume_gradient_composition() {
    let data = toy();
    let params = net::init_params(3, data.dim(), 4).unwrap();
    let plan = plan_epoch(data.train.view(), 3, 0.3, 0).unwrap();
    let batch = Batch::new(data.train.clone(), plan.corrupted.clone()).unwrap();
    let losses = net::batch_losses(&params, &batch).unwrap();
    let mu = Mu(losses.max() + 0.7);
    let weights = hv_weights(&losses, mu).unwrap();
    let analytic = net::weighted_backward(&params, &batch, &weights).unwrap();
    let numeric = finite_difference_gradient(
        &params,
        |p| Ok(-log_hypervolume_mu(&net::batch_losses(p, &batch)?, mu)?),
        STEP,
    )
    .unwrap();
    for (a, n) in analytic.iter().zip(&numeric) {
        assert!(
            (a - n).abs() <= 1e-5 * a.abs().max(n.abs()).max(1e-3),
            "{a} vs {n}"
        );
    }

    // The single-pass helper returns the same losses, weights and gradient.
    let (l2, w2, g2) = net::loss_and_gradient(&params, &batch, |l| hv_weights(l, mu)).unwrap();
    assert_eq!(l2, losses);
    assert_eq!(w2, weights);
    assert_eq!(g2.max_abs_diff(&analytic), 0.0);
}

#[test]
fn paired_runs_share_initialization_and_noise() {
    let data = toy();
    let base = config(Objective::MeanLoss);
    let cand = base.with_objective(Objective::Hypervolume);
    let (a, b) = optim::paired_run(&base, &cand, &data).unwrap();
    assert_eq!(a.epochs[0], b.epochs[0]);
    assert_eq!(a.epochs.len(), base.epochs + 1);
    assert_ne!(a.epochs[1], b.epochs[1]);

    // Noise and order depend on (seed, epoch) only.
    let p0 = plan_epoch(data.train.view(), base.seed, base.corruption_p, 0).unwrap();
    assert_eq!(
        p0,
        plan_epoch(data.train.view(), base.seed, base.corruption_p, 0).unwrap()
    );
    assert_ne!(
        p0.corrupted,
        plan_epoch(data.train.view(), base.seed, base.corruption_p, 1)
            .unwrap()
            .corrupted
    );

    let (a2, b2) = optim::paired_run(&base, &cand, &data).unwrap();
    assert_eq!((a, b), (a2, b2));

    let mut other = cand.clone();
    other.learning_rate = 0.2;
    assert!(optim::paired_run(&base, &other, &data).is_err());
}
