//! The two-term weak-supervision objective `L_U + L_S` and its gradient.
//!
//! `L_U` is the cross-entropy of the predictions against EM targets computed
//! from the same prediction snapshot and held constant. `L_S = -log Z` is the
//! negative log-probability of the annotation. Because
//! `d log Z / d log p_j(y)` is the posterior at `(j, y)`, the gradient with
//! respect to softmax logits is `u * (p - t) + s * (p - posterior)` per row.

use serde::{Deserialize, Serialize};

use crate::automaton::{build_trellis, Trellis};
use crate::error::{Error, Result};
use crate::forward_backward::{posteriors, EmOutput};
use crate::supervision::{GroupSpec, MultiClassSpec, SupervisionSpec};
use crate::table::{log_sigmoid, log_softmax_rows, Table};

/// Coefficients on the two loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub unsupervised: f64,
    pub supervised: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            unsupervised: 1.0,
            supervised: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub l_u: f64,
    pub l_s: f64,
    pub targets: Table,
}

impl LossOutput {
    pub fn total(&self, weights: LossWeights) -> f64 {
        weights.unsupervised * self.l_u + weights.supervised * self.l_s
    }
}

/// `sum_jk -t_jk * log_probs_jk`; zero-target terms contribute nothing even
/// where the log-probability is `-inf`.
pub fn cross_entropy(targets: &Table, log_probs: &Table) -> f64 {
    targets
        .as_slice()
        .iter()
        .zip(log_probs.as_slice())
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, lp)| -t * lp)
        .sum()
}

fn trellis_for(spec: &SupervisionSpec, num_classes: usize) -> Result<Trellis> {
    let trellis = build_trellis(&spec.compile(num_classes)?, spec.len());
    if trellis.is_infeasible() {
        return Err(Error::InfeasibleSupervision);
    }
    Ok(trellis)
}

fn check_rows(spec_len: usize, probs: &Table) -> Result<()> {
    if probs.rows() != spec_len {
        return Err(Error::shape(
            format!("{spec_len} rows"),
            format!("{} rows", probs.rows()),
        ));
    }
    Ok(())
}

/// Losses and softmax-logit gradient for log-probabilities on a compiled
/// trellis.
pub fn objective(
    trellis: &Trellis,
    log_probs: &Table,
    weights: LossWeights,
) -> Result<(LossOutput, Table)> {
    let em = posteriors(trellis, log_probs)?;
    let l_u = cross_entropy(&em.targets, log_probs);
    let l_s = -em.log_z;
    let mut grad = Table::zeros(log_probs.rows(), log_probs.cols());
    for j in 0..grad.rows() {
        let (lp, t) = (log_probs.row(j), em.targets.row(j));
        for (k, g) in grad.row_mut(j).iter_mut().enumerate() {
            let p = lp[k].exp();
            // L_U gives p - t, L_S gives p - posterior, and the two coincide
            *g = (weights.unsupervised + weights.supervised) * (p - t[k]);
        }
    }
    Ok((
        LossOutput {
            l_u,
            l_s,
            targets: em.targets,
        },
        grad,
    ))
}

/// EM targets and log-likelihood for one group. Unconstrained groups return
/// the predictions themselves with a log-likelihood of exactly zero.
pub fn em_targets(spec: &SupervisionSpec, probs: &Table) -> Result<EmOutput> {
    probs.check_row_stochastic()?;
    check_rows(spec.len(), probs)?;
    if let SupervisionSpec::Unconstrained { .. } = spec {
        spec.validate(probs.cols())?;
        return Ok(EmOutput {
            targets: probs.clone(),
            log_z: 0.0,
        });
    }
    posteriors(&trellis_for(spec, probs.cols())?, &probs.ln())
}

/// `L_U` and `L_S` for one group, with `probs` as both the target snapshot
/// and the model being scored.
pub fn em_losses(spec: &SupervisionSpec, probs: &Table) -> Result<LossOutput> {
    Ok(single(spec, probs, LossWeights::default())?.0)
}

/// Gradient of `L_U + L_S` with respect to the logits whose softmax is `probs`.
pub fn grad_logits(spec: &SupervisionSpec, probs: &Table) -> Result<Table> {
    grad_logits_weighted(spec, probs, LossWeights::default())
}

pub fn grad_logits_weighted(
    spec: &SupervisionSpec,
    probs: &Table,
    weights: LossWeights,
) -> Result<Table> {
    Ok(single(spec, probs, weights)?.1)
}

fn single(
    spec: &SupervisionSpec,
    probs: &Table,
    weights: LossWeights,
) -> Result<(LossOutput, Table)> {
    probs.check_row_stochastic()?;
    check_rows(spec.len(), probs)?;
    CompiledSpec::new(&spec.clone().into(), probs.cols())?
        .loss_and_grad_log_probs(&probs.ln(), weights)
}

/// Unconstrained groups: the posterior is the prediction itself and `L_S`
/// is exactly zero.
fn unconstrained_objective(log_probs: &Table) -> (LossOutput, Table) {
    let targets = log_probs.exp();
    let l_u = cross_entropy(&targets, log_probs);
    let grad = Table::zeros(log_probs.rows(), log_probs.cols());
    (
        LossOutput {
            l_u,
            l_s: 0.0,
            targets,
        },
        grad,
    )
}

/// One-vs-rest objective from per-class positive log-probabilities and their
/// complements. Returns losses summed over classes, per-class positive
/// targets, and the gradient with respect to the pre-sigmoid scores.
fn ovr_objective(
    trellises: &[Trellis],
    log_pos: &Table,
    log_neg: &Table,
    weights: LossWeights,
) -> Result<(LossOutput, Table)> {
    let (rows, k) = (log_pos.rows(), log_pos.cols());
    let mut targets = Table::zeros(rows, k);
    let mut grad = Table::zeros(rows, k);
    let (mut l_u, mut l_s) = (0.0, 0.0);
    for (class, trellis) in trellises.iter().enumerate() {
        let mut binary = Table::zeros(rows, 2);
        for j in 0..rows {
            binary
                .row_mut(j)
                .copy_from_slice(&[log_neg.get(j, class), log_pos.get(j, class)]);
        }
        let (out, g) = objective(trellis, &binary, weights)?;
        l_u += out.l_u;
        l_s += out.l_s;
        for j in 0..rows {
            targets.set(j, class, out.targets.get(j, 1));
            // softmax over (0, s) has d/ds equal to the class-1 logit gradient
            grad.set(j, class, g.get(j, 1));
        }
    }
    Ok((LossOutput { l_u, l_s, targets }, grad))
}

fn ovr_trellises(spec: &MultiClassSpec) -> Result<Vec<Trellis>> {
    (0..spec.num_classes())
        .map(|class| trellis_for(&spec.one_vs_rest(class)?, 2))
        .collect()
}

fn check_ovr(spec: &MultiClassSpec, probs: &Table) -> Result<()> {
    probs.check_open_unit()?;
    check_rows(spec.len(), probs)?;
    if probs.cols() != spec.num_classes() {
        return Err(Error::shape(
            format!("{} classes", spec.num_classes()),
            format!("{} columns", probs.cols()),
        ));
    }
    Ok(())
}

/// Sum over classes of the binary losses of each one-vs-rest projection.
/// `probs[j][k]` is the independent positive probability of class `k`.
pub fn ovr_losses(spec: &MultiClassSpec, probs: &Table) -> Result<LossOutput> {
    check_ovr(spec, probs)?;
    let trellises = ovr_trellises(spec)?;
    let log_neg = probs.map(|p| (1.0 - p).ln());
    Ok(ovr_objective(&trellises, &probs.ln(), &log_neg, LossWeights::default())?.0)
}

/// Gradient of the one-vs-rest losses with respect to pre-sigmoid scores.
pub fn ovr_grad_scores(spec: &MultiClassSpec, probs: &Table) -> Result<Table> {
    check_ovr(spec, probs)?;
    let trellises = ovr_trellises(spec)?;
    let log_neg = probs.map(|p| (1.0 - p).ln());
    Ok(ovr_objective(&trellises, &probs.ln(), &log_neg, LossWeights::default())?.1)
}

/// A group annotation with its trellis(es) built once, ready to be scored
/// against model outputs many times.
#[derive(Debug, Clone)]
pub enum CompiledSpec {
    /// Softmax output over all classes.
    Softmax(Trellis),
    /// Softmax output with no constraint on the labels.
    Unconstrained { len: usize },
    /// One binary trellis per class, independent sigmoid outputs.
    OneVsRest(Vec<Trellis>),
}

impl CompiledSpec {
    pub fn new(spec: &GroupSpec, num_classes: usize) -> Result<Self> {
        match spec {
            GroupSpec::Single(s @ SupervisionSpec::Unconstrained { len }) => {
                s.validate(num_classes)?;
                Ok(CompiledSpec::Unconstrained { len: *len })
            }
            GroupSpec::Single(s) => Ok(CompiledSpec::Softmax(trellis_for(s, num_classes)?)),
            GroupSpec::MultiClass(m) => {
                if m.num_classes() != num_classes {
                    return Err(Error::shape(
                        format!("{num_classes} classes"),
                        format!("{} classes in annotation", m.num_classes()),
                    ));
                }
                Ok(CompiledSpec::OneVsRest(ovr_trellises(m)?))
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            CompiledSpec::Softmax(t) => t.len(),
            CompiledSpec::Unconstrained { len } => *len,
            CompiledSpec::OneVsRest(ts) => ts.first().map_or(0, Trellis::len),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Losses and gradient with respect to raw model outputs: softmax logits
    /// or per-class sigmoid scores.
    pub fn loss_and_grad(
        &self,
        outputs: &Table,
        weights: LossWeights,
    ) -> Result<(LossOutput, Table)> {
        match self {
            CompiledSpec::Softmax(_) | CompiledSpec::Unconstrained { .. } => {
                self.loss_and_grad_log_probs(&log_softmax_rows(outputs), weights)
            }
            CompiledSpec::OneVsRest(trellises) => {
                let log_pos = outputs.map(log_sigmoid);
                let log_neg = outputs.map(|s| log_sigmoid(-s));
                ovr_objective(trellises, &log_pos, &log_neg, weights)
            }
        }
    }
}

impl CompiledSpec {
    /// Softmax-mode losses from log-probabilities; the gradient is with
    /// respect to the logits behind them.
    pub fn loss_and_grad_log_probs(
        &self,
        log_probs: &Table,
        weights: LossWeights,
    ) -> Result<(LossOutput, Table)> {
        if log_probs.rows() != self.len() {
            return Err(Error::shape(
                format!("{} rows", self.len()),
                format!("{} rows", log_probs.rows()),
            ));
        }
        match self {
            CompiledSpec::Softmax(trellis) => objective(trellis, log_probs, weights),
            CompiledSpec::Unconstrained { .. } => Ok(unconstrained_objective(log_probs)),
            CompiledSpec::OneVsRest(_) => Err(Error::InvalidSpec(
                "one-vs-rest annotations score sigmoid outputs, not a softmax".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn pairwise_comparison_uniform() {
        let out = em_losses(&SupervisionSpec::PairwiseComparison, &Table::uniform(2, 2)).unwrap();
        approx(out.l_s, -(0.75f64.ln()), 1e-15);
        approx(out.l_s, 0.287_682_072_451_780_9, 1e-15);
        approx(out.l_u, 2.0 * 2f64.ln(), 1e-14);
        let g = grad_logits(&SupervisionSpec::PairwiseComparison, &Table::uniform(2, 2)).unwrap();
        approx(g.get(0, 0), 1.0 / 3.0, 1e-15);
        approx(g.get(0, 1), -1.0 / 3.0, 1e-15);
    }

    #[test]
    fn full_labels_reduce_to_cross_entropy() {
        let probs = Table::from_rows(&[[0.3, 0.7], [0.8, 0.2], [0.55, 0.45]]).unwrap();
        let labels = vec![1, 0, 0];
        let spec = SupervisionSpec::FullLabels {
            labels: labels.clone(),
        };
        let out = em_losses(&spec, &probs).unwrap();
        let ce: f64 = labels
            .iter()
            .enumerate()
            .map(|(j, &y)| -probs.get(j, y).ln())
            .sum();
        approx(out.l_s, ce, 1e-12);
        approx(out.l_u, ce, 1e-12);
        let g = grad_logits(&spec, &probs).unwrap();
        for (j, &y) in labels.iter().enumerate() {
            for k in 0..2 {
                let onehot = if k == y { 1.0 } else { 0.0 };
                approx(g.get(j, k), 2.0 * (probs.get(j, k) - onehot), 1e-15);
            }
        }
    }

    #[test]
    fn unconstrained_is_entropy() {
        let probs = Table::from_rows(&[[0.9, 0.1]]).unwrap();
        let out = em_losses(&SupervisionSpec::Unconstrained { len: 1 }, &probs).unwrap();
        assert_eq!(out.l_s, 0.0);
        let entropy = -0.9 * 0.9f64.ln() - 0.1 * 0.1f64.ln();
        approx(out.l_u, entropy, 1e-15);
        approx(out.l_u, 0.325_082_973_391_448_2, 1e-15);
    }

    #[test]
    fn ovr_negative_class_and_sums() {
        let spec = MultiClassSpec::MultiClassMultiInstance {
            len: 2,
            present: vec![true, true],
        };
        let out = ovr_losses(&spec, &Table::filled(2, 2, 0.5)).unwrap();
        approx(out.l_s, -2.0 * 0.75f64.ln(), 1e-15);

        let spec = MultiClassSpec::MultiClassMultiInstance {
            len: 2,
            present: vec![true, false],
        };
        let probs = Table::from_rows(&[[0.6, 0.3], [0.2, 0.1]]).unwrap();
        let out = ovr_losses(&spec, &probs).unwrap();
        assert_eq!(out.targets.get(0, 1), 0.0);
        assert_eq!(out.targets.get(1, 1), 0.0);
        let class1 = -(0.7f64.ln() + 0.9f64.ln());
        let class0 = -(1.0 - 0.4 * 0.8f64).ln();
        approx(out.l_s, class0 + class1, 1e-14);
    }

    #[test]
    fn ovr_label_proportion_uniform() {
        let spec = MultiClassSpec::MultiClassLabelProportion {
            len: 2,
            counts: vec![1, 1],
        };
        let out = ovr_losses(&spec, &Table::filled(2, 2, 0.5)).unwrap();
        approx(out.l_s, -2.0 * 0.5f64.ln(), 1e-15);
    }

    #[test]
    fn infeasible_and_shape_errors() {
        let spec = SupervisionSpec::PositiveConfidence {
            confidences: vec![1.0],
        };
        let probs = Table::from_rows(&[[1.0, 0.0]]).unwrap();
        assert_eq!(
            em_losses(&spec, &probs).unwrap_err(),
            Error::InfeasibleSupervision
        );
        let err =
            em_losses(&SupervisionSpec::PairwiseComparison, &Table::uniform(3, 2)).unwrap_err();
        assert_eq!(err.code(), "ShapeMismatch");
        let bad = Table::from_rows(&[[-0.5, 1.5], [0.5, 0.5]]).unwrap();
        assert!(em_losses(&SupervisionSpec::PairwiseComparison, &bad).is_err());
    }

    #[test]
    fn compiled_spec_matches_free_functions() {
        let spec = SupervisionSpec::LabelProportion {
            len: 3,
            positives: 1,
        };
        let logits = Table::from_rows(&[[0.2, -1.0], [1.5, 0.3], [0.0, 0.9]]).unwrap();
        let probs = log_softmax_rows(&logits).exp();
        let compiled = CompiledSpec::new(&spec.clone().into(), 2).unwrap();
        let (out, grad) = compiled
            .loss_and_grad(&logits, LossWeights::default())
            .unwrap();
        let reference = em_losses(&spec, &probs).unwrap();
        approx(out.l_s, reference.l_s, 1e-12);
        approx(out.l_u, reference.l_u, 1e-12);
        assert!(grad.max_abs_diff(&grad_logits(&spec, &probs).unwrap()) < 1e-12);
    }
}
