//! Scalarization of per-sample losses.
//!
//! A training set with `N` samples is an `N`-objective problem. This module
//! turns a vector of objective values into a single scalar, either by a
//! linear combination (the usual weighted/mean loss) or by the logarithm of
//! the single-solution hypervolume with respect to a Nadir point.
//!
//! When every objective shares the same Nadir value `mu`, the gradient of the
//! log-hypervolume is `-sum_i w_i * grad l_i` with `w_i = 1 / (mu - l_i)`.
//! [`hv_weights`] produces those weights, [`normalize_weights`] rescales them
//! to sum to one, and [`NadirSchedule`] / [`mu_for_batch`] place `mu` a slack
//! `eps(t) = eps0 + kappa * t` above the current worst loss.

use crate::error::{Error, Result};

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Per-sample loss (or abstract objective) values.
#[derive(Clone, Debug, PartialEq)]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("loss vector"));
        }
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

/// Shared Nadir value used for every objective.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Mu(pub f64);

impl Mu {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// General per-objective Nadir point.
#[derive(Clone, Debug, PartialEq)]
pub struct NadirPoint(pub Vec<f64>);

impl NadirPoint {
    /// The point with every coordinate equal to `mu`.
    pub fn uniform(mu: Mu, n: usize) -> Self {
        Self(vec![mu.0; n])
    }
}

/// Sample weights. `normalized` is set once the weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    normalized: bool,
}

impl WeightVector {
    /// Raw (unnormalized) weights; every entry must be finite and positive.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("weight vector"));
        }
        check_finite(&values)?;
        if let Some(i) = values.iter().position(|&w| w <= 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weight {i} is {} (must be > 0)",
                values[i]
            )));
        }
        Ok(Self {
            values,
            normalized: false,
        })
    }

    /// `1/n` everywhere: the mean-loss weighting.
    pub fn uniform(n: usize) -> Self {
        Self {
            values: vec![1.0 / n as f64; n],
            normalized: true,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Multiplies every weight by `factor` (> 0). The result is unnormalized.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|w| w * factor).collect())
    }
}

/// Slack schedule `eps(t) = epsilon0 + kappa * t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NadirSchedule {
    pub epsilon0: f64,
    pub kappa: f64,
}

impl NadirSchedule {
    pub fn new(epsilon0: f64, kappa: f64) -> Result<Self> {
        if !(epsilon0.is_finite() && epsilon0 >= 0.0) {
            return Err(Error::Domain(format!(
                "epsilon0 must be finite and >= 0, got {epsilon0}"
            )));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::Domain(format!(
                "kappa must be finite and >= 0, got {kappa}"
            )));
        }
        Ok(Self { epsilon0, kappa })
    }

    pub fn epsilon_at(&self, epoch: usize) -> f64 {
        epsilon_at(self, epoch)
    }
}

impl Default for NadirSchedule {
    fn default() -> Self {
        Self {
            epsilon0: 1.0,
            kappa: 1.0,
        }
    }
}

/// `sum_i w_i * l_i`.
pub fn linear_scalarize(losses: &LossVector, weights: &[f64]) -> Result<f64> {
    if weights.len() != losses.len() {
        return Err(Error::LengthMismatch {
            expected: losses.len(),
            got: weights.len(),
        });
    }
    check_finite(weights)?;
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidWeights(
            "linear weights must be non-negative".into(),
        ));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::InvalidWeights(
            "at least one linear weight must be positive".into(),
        ));
    }
    Ok(losses
        .values()
        .iter()
        .zip(weights)
        .map(|(l, w)| l * w)
        .sum())
}

fn gaps<'a>(
    objectives: &'a [f64],
    nadir: impl Fn(usize) -> f64 + 'a,
) -> impl Iterator<Item = Result<f64>> + 'a {
    objectives.iter().enumerate().map(move |(index, &value)| {
        let z = nadir(index);
        if z > value {
            Ok(z - value)
        } else {
            Err(Error::DominanceViolation {
                index,
                nadir: z,
                value,
            })
        }
    })
}

/// `sum_i log(z_i - f_i)`; every `z_i` must strictly exceed `f_i`.
pub fn log_hypervolume(objectives: &LossVector, nadir: &NadirPoint) -> Result<f64> {
    if nadir.0.len() != objectives.len() {
        return Err(Error::LengthMismatch {
            expected: objectives.len(),
            got: nadir.0.len(),
        });
    }
    check_finite(&nadir.0)?;
    gaps(objectives.values(), |i| nadir.0[i])
        .map(|g| g.map(f64::ln))
        .sum()
}

/// `sum_i log(mu - l_i)`, i.e. [`log_hypervolume`] with `z_i = mu` for all `i`.
pub fn log_hypervolume_mu(losses: &LossVector, mu: Mu) -> Result<f64> {
    gaps(losses.values(), |_| mu.0)
        .map(|g| g.map(f64::ln))
        .sum()
}

/// Self-adjusting weights `w_i = 1 / (mu - l_i)`.
pub fn hv_weights(losses: &LossVector, mu: Mu) -> Result<WeightVector> {
    let values = gaps(losses.values(), |_| mu.0)
        .map(|g| g.map(f64::recip))
        .collect::<Result<Vec<_>>>()?;
    WeightVector::new(values)
}

/// Divides each weight by the sum of all weights.
pub fn normalize_weights(weights: &WeightVector) -> WeightVector {
    let total = weights.sum();
    WeightVector {
        values: weights.values.iter().map(|w| w / total).collect(),
        normalized: true,
    }
}

pub fn epsilon_at(schedule: &NadirSchedule, epoch: usize) -> f64 {
    schedule.epsilon0 + schedule.kappa * epoch as f64
}

/// `mu = max_i l_i + epsilon`.
pub fn mu_for_batch(losses: &LossVector, epsilon: f64) -> Result<Mu> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::NonPositiveSlack(epsilon));
    }
    Ok(Mu(losses.max() + epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn lv(v: &[f64]) -> LossVector {
        LossVector::new(v.to_vec()).unwrap()
    }

    // Cross-entropy of the correct class at the confidences of the
    // two-sample classification example, rounded to 6 decimals.
    const THETA1: [f64; 2] = [0.010050, 0.713350];
    const THETA2: [f64; 2] = [0.105361, 0.634878];

    #[test]
    fn linear_examples() {
        assert_eq!(
            linear_scalarize(&lv(&[1.0, 3.0]), &[0.5, 0.5]).unwrap(),
            2.0
        );
        assert_eq!(
            linear_scalarize(&lv(&[0.0, 0.0]), &[0.3, 2.0]).unwrap(),
            0.0
        );
        let a = linear_scalarize(&lv(&THETA1), &[0.5, 0.5]).unwrap();
        let b = linear_scalarize(&lv(&THETA2), &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(a, 0.361700, epsilon = 1e-6);
        assert_abs_diff_eq!(b, 0.370120, epsilon = 1e-6);
        assert!(a < b);
    }

    #[test]
    fn linear_errors() {
        assert!(matches!(
            linear_scalarize(&lv(&[1.0, 2.0]), &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            linear_scalarize(&lv(&[1.0]), &[f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
        assert!(linear_scalarize(&lv(&[1.0, 2.0]), &[0.0, 0.0]).is_err());
        assert!(linear_scalarize(&lv(&[1.0, 2.0]), &[-1.0, 2.0]).is_err());
        assert!(LossVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(LossVector::new(vec![]).is_err());
    }

    #[test]
    fn log_hypervolume_examples() {
        let v = log_hypervolume(&lv(&[1.0, 1.0]), &NadirPoint(vec![2.0, 3.0])).unwrap();
        assert_abs_diff_eq!(v, 2f64.ln(), epsilon = 1e-15);
        assert_eq!(
            log_hypervolume(&lv(&[0.0]), &NadirPoint(vec![1.0])).unwrap(),
            0.0
        );
        let v = log_hypervolume(&lv(&[0.5, 1.5]), &NadirPoint(vec![2.0, 2.0])).unwrap();
        assert_abs_diff_eq!(v, -0.287682072452, epsilon = 1e-12);
    }

    #[test]
    fn dominance_violation_is_an_error() {
        let err = log_hypervolume(&lv(&[1.0, 2.0]), &NadirPoint(vec![3.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::DominanceViolation { index: 1, .. }));
        assert!(log_hypervolume_mu(&lv(&[1.0, 2.5]), Mu(2.0)).is_err());
        assert!(hv_weights(&lv(&[1.0, 2.0]), Mu(2.0)).is_err());
        assert!(log_hypervolume(&lv(&[1.0]), &NadirPoint(vec![2.0, 2.0])).is_err());
    }

    #[test]
    fn log_hypervolume_mu_examples() {
        assert_abs_diff_eq!(
            log_hypervolume_mu(&lv(&[0.5, 1.5]), Mu(2.0)).unwrap(),
            -0.287682072452,
            epsilon = 1e-12
        );
        assert_eq!(log_hypervolume_mu(&lv(&[0.0, 0.0]), Mu(1.0)).unwrap(), 0.0);
        // Reference values from a 40-digit evaluation of the rounded losses.
        let h1 = log_hypervolume_mu(&lv(&THETA1), Mu(1.0)).unwrap();
        let h2 = log_hypervolume_mu(&lv(&THETA2), Mu(1.0)).unwrap();
        assert_abs_diff_eq!(h1, -1.259594162, epsilon = 1e-6);
        assert_abs_diff_eq!(h2, -1.118858729, epsilon = 1e-6);
        assert!(h2 > h1);
    }

    #[test]
    fn weight_examples() {
        let w = hv_weights(&lv(&[0.5, 1.5]), Mu(2.0)).unwrap();
        assert!(!w.is_normalized());
        assert_abs_diff_eq!(w.values()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.values()[1], 2.0, epsilon = 1e-15);

        let w = hv_weights(&lv(&[0.7, 0.7, 0.7]), Mu(3.1)).unwrap();
        assert!(w.values().iter().all(|&x| x == w.values()[0]));

        let n = normalize_weights(&WeightVector::new(vec![2.0 / 3.0, 2.0]).unwrap());
        assert!(n.is_normalized());
        assert_abs_diff_eq!(n.values()[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(n.values()[1], 0.75, epsilon = 1e-15);
        assert_eq!(
            normalize_weights(&WeightVector::new(vec![5.0]).unwrap()).values(),
            &[1.0]
        );
    }

    #[test]
    fn schedule_and_mu() {
        let s = NadirSchedule::new(1.0, 1.0).unwrap();
        assert_eq!(epsilon_at(&s, 0), 1.0);
        assert_eq!(epsilon_at(&s, 3), 4.0);
        assert_eq!(NadirSchedule::new(0.5, 0.0).unwrap().epsilon_at(100), 0.5);
        assert!(NadirSchedule::new(-1.0, 0.0).is_err());

        assert_eq!(mu_for_batch(&lv(&[0.5, 1.5]), 1.0).unwrap(), Mu(2.5));
        assert_abs_diff_eq!(
            mu_for_batch(&lv(&[7.0]), 0.1).unwrap().0,
            7.1,
            epsilon = 1e-15
        );
        assert!(matches!(
            mu_for_batch(&lv(&[1.0]), 0.0),
            Err(Error::NonPositiveSlack(_))
        ));
        assert!(matches!(
            mu_for_batch(&lv(&[1.0]), -0.5),
            Err(Error::NonPositiveSlack(_))
        ));
    }

    #[test]
    fn equivalence_with_uniform_nadir() {
        let l = lv(&[0.3, 2.2, 1.7, 0.0]);
        let mu = Mu(2.9);
        let a = log_hypervolume_mu(&l, mu).unwrap();
        let b = log_hypervolume(&l, &NadirPoint::uniform(mu, 4)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    // Convex quadratic toy losses l_i(x) = a_i (x - c_i)^2 + b_i.
    #[derive(Debug)]
    struct Quadratics(Vec<(f64, f64, f64)>);

    impl Quadratics {
        fn losses(&self, x: f64) -> LossVector {
            lv(&self
                .0
                .iter()
                .map(|&(a, c, b)| a * (x - c).powi(2) + b)
                .collect::<Vec<_>>())
        }
        fn derivatives(&self, x: f64) -> Vec<f64> {
            self.0.iter().map(|&(a, c, _)| 2.0 * a * (x - c)).collect()
        }
    }

    fn quadratics() -> impl Strategy<Value = Quadratics> {
        prop::collection::vec((0.1f64..2.0, -1.0f64..1.0, 0.0f64..1.0), 1..8).prop_map(Quadratics)
    }

    proptest! {
        #[test]
        fn weights_follow_loss_order(v in prop::collection::vec(0.0f64..1.0, 1..40)) {
            let l = lv(&v);
            let mu = Mu(l.max() + 1.0);
            let w = hv_weights(&l, mu).unwrap();
            for i in 0..v.len() {
                for j in 0..v.len() {
                    if v[i] > v[j] {
                        prop_assert!(w.values()[i] > w.values()[j]);
                    } else if v[i] == v[j] {
                        prop_assert_eq!(w.values()[i], w.values()[j]);
                    }
                }
            }
        }

        #[test]
        fn normalized_weights_sum_to_one(v in prop::collection::vec(1e-6f64..1e6, 1..100)) {
            let w = normalize_weights(&WeightVector::new(v.clone()).unwrap());
            prop_assert!((w.sum() - 1.0).abs() < 1e-12);
            for i in 1..v.len() {
                prop_assert_eq!(v[i] > v[i - 1], w.values()[i] > w.values()[i - 1]);
            }
        }

        #[test]
        fn batch_mu_gives_finite_positive_weights(
            v in prop::collection::vec(0.0f64..100.0, 1..64),
            eps in 1e-6f64..10.0,
        ) {
            let l = lv(&v);
            let mu = mu_for_batch(&l, eps).unwrap();
            prop_assert!(mu.0 > l.max());
            let w = hv_weights(&l, mu).unwrap();
            prop_assert!(w.values().iter().all(|x| x.is_finite() && *x > 0.0));
        }

        #[test]
        fn large_mu_approaches_uniform(v in prop::collection::vec(0.0f64..10.0, 2..50)) {
            let l = lv(&v);
            let range = l.max() - l.min();
            let mu = Mu(l.max() + 1e6 * range.max(1e-12));
            let w = normalize_weights(&hv_weights(&l, mu).unwrap());
            let uniform = 1.0 / v.len() as f64;
            prop_assert!(w.values().iter().all(|x| (x - uniform).abs() < 1e-6));
        }

        #[test]
        fn small_slack_focuses_on_worst_case(
            rest in prop::collection::vec(0.0f64..0.5, 1..20),
            top in 1.0f64..2.0,
        ) {
            // The maximum is separated from the rest by at least half the range.
            let mut v = rest.clone();
            v.push(top);
            let l = lv(&v);
            let eps = 1e-4 * (l.max() - l.min());
            let w = normalize_weights(&hv_weights(&l, mu_for_batch(&l, eps).unwrap()).unwrap());
            prop_assert!(*w.values().last().unwrap() > 0.99);
        }

        #[test]
        fn log_hypervolume_is_midpoint_concave(
            q in quadratics(),
            x0 in -2.0f64..2.0,
            x1 in -2.0f64..2.0,
        ) {
            let mid = 0.5 * (x0 + x1);
            let worst = [x0, x1, mid].iter().map(|&x| q.losses(x).max()).fold(f64::MIN, f64::max);
            let mu = Mu(worst + 1.0);
            let h = |x: f64| log_hypervolume_mu(&q.losses(x), mu).unwrap();
            prop_assert!(h(mid) >= 0.5 * (h(x0) + h(x1)) - 1e-12);
        }

        #[test]
        fn gradient_is_negative_weighted_loss_gradient(q in quadratics(), x in -1.0f64..1.0) {
            let mu = Mu(q.losses(x).max() + 0.5);
            let w = hv_weights(&q.losses(x), mu).unwrap();
            let analytic: f64 = -w.values().iter().zip(q.derivatives(x)).map(|(w, d)| w * d).sum::<f64>();
            let h = 1e-6;
            let numeric = (log_hypervolume_mu(&q.losses(x + h), mu).unwrap()
                - log_hypervolume_mu(&q.losses(x - h), mu).unwrap())
                / (2.0 * h);
            let scale = analytic.abs().max(numeric.abs()).max(1e-3);
            prop_assert!((analytic - numeric).abs() / scale < 1e-6);
        }
    }
}
