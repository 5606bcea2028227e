//! Brute-force reference: enumerate all `K^L` labelings.
//!
//! Each labeling is weighted by a direct reading of the annotation (count the
//! positives, look up the pair weight, ...) and by the compiled automaton via
//! [`Nfa::accepts`]; the two must agree. Posteriors and likelihood are then
//! summed in linear probability space. Nothing here touches the trellis or
//! the forward-backward code.

use crate::automaton::Nfa;
use crate::error::{Error, Result};
use crate::forward_backward::EmOutput;
use crate::losses::{cross_entropy, LossOutput};
use crate::supervision::{pair_index, SupervisionSpec};
use crate::table::Table;

/// Largest `K^L` the oracle will enumerate.
pub const MAX_LABELINGS: f64 = 1e7;

/// Weight of `labeling` under the annotation, read directly from its meaning.
pub fn direct_weight(spec: &SupervisionSpec, labeling: &[usize]) -> f64 {
    let positives = labeling.iter().filter(|&&y| y == 1).count();
    let indicator = |b: bool| if b { 1.0 } else { 0.0 };
    match spec {
        SupervisionSpec::PartialLabel { candidates } => indicator(
            labeling
                .iter()
                .zip(candidates)
                .all(|(y, set)| set.contains(y)),
        ),
        SupervisionSpec::MultiInstance { present, .. } => indicator((positives > 0) == *present),
        SupervisionSpec::LabelProportion { positives: m, .. } => indicator(positives == *m),
        SupervisionSpec::ClassPrior { prior, len } => {
            indicator(positives == SupervisionSpec::expected_count(*prior, *len))
        }
        SupervisionSpec::PairwiseComparison => indicator(labeling[0] >= labeling[1]),
        SupervisionSpec::PairwiseSimilarity {
            similar,
            confidence,
        } => {
            let c = confidence.unwrap_or(1.0);
            if (labeling[0] == labeling[1]) == *similar {
                c
            } else {
                1.0 - c
            }
        }
        SupervisionSpec::WeightedPair { weights } => weights[pair_index(labeling[0], labeling[1])],
        SupervisionSpec::PositiveConfidence { confidences } => labeling
            .iter()
            .zip(confidences)
            .map(|(&y, &c)| if y == 1 { c } else { 1.0 - c })
            .product(),
        SupervisionSpec::FullLabels { labels } => indicator(labels == labeling),
        SupervisionSpec::Unconstrained { .. } => 1.0,
    }
}

fn automaton_weight(nfa: &Nfa, labeling: &[usize]) -> Result<f64> {
    Ok(nfa.accepts(labeling)?.map_or(0.0, f64::exp))
}

/// Every labeling of length `len` over `k` classes, in lexicographic order.
pub fn labelings(len: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (k as u64).checked_pow(len as u32).unwrap_or(u64::MAX);
    (0..total).map(move |mut code| {
        let mut y = vec![0; len];
        for slot in y.iter_mut().rev() {
            *slot = (code % k as u64) as usize;
            code /= k as u64;
        }
        y
    })
}

/// Exact targets and log-likelihood by enumeration.
pub fn enumerate(spec: &SupervisionSpec, probs: &Table) -> Result<EmOutput> {
    let (len, k) = (spec.len(), probs.cols());
    if probs.rows() != len {
        return Err(Error::ShapeMismatch {
            expected: format!("{len} rows"),
            found: format!("{} rows", probs.rows()),
        });
    }
    let count = (k as f64).powi(len as i32);
    if count > MAX_LABELINGS {
        return Err(Error::TooLarge {
            labelings: count,
            limit: MAX_LABELINGS,
        });
    }
    let nfa = spec.compile(k)?;
    let mut mass = Table::zeros(len, k);
    let mut total = 0.0;
    for y in labelings(len, k) {
        let direct = direct_weight(spec, &y);
        let via_nfa = automaton_weight(&nfa, &y)?;
        if (direct - via_nfa).abs() > 1e-12 * direct.max(1.0) {
            return Err(Error::CompilerMismatch(y));
        }
        if direct == 0.0 {
            continue;
        }
        let path: f64 = y
            .iter()
            .enumerate()
            .map(|(j, &c)| probs.get(j, c))
            .product();
        let w = direct * path;
        total += w;
        for (j, &c) in y.iter().enumerate() {
            mass.set(j, c, mass.get(j, c) + w);
        }
    }
    if total <= 0.0 {
        return Err(Error::InfeasibleSupervision);
    }
    let targets = mass.map(|m| m / total);
    Ok(EmOutput {
        targets,
        log_z: total.ln(),
    })
}

/// Losses from the enumerated posterior, same formulas as the engine.
pub fn enumerate_losses(spec: &SupervisionSpec, probs: &Table) -> Result<LossOutput> {
    let em = enumerate(spec, probs)?;
    Ok(LossOutput {
        l_u: cross_entropy(&em.targets, &probs.ln()),
        l_s: -em.log_z,
        targets: em.targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn label_proportion_symmetry() {
        let spec = SupervisionSpec::LabelProportion {
            len: 3,
            positives: 1,
        };
        let out = enumerate(&spec, &Table::uniform(3, 2)).unwrap();
        approx(out.log_z, 0.375f64.ln(), 1e-15);
        for j in 0..3 {
            approx(out.targets.get(j, 1), 1.0 / 3.0, 1e-15);
        }
    }

    #[test]
    fn partial_label_renormalizes() {
        let spec = SupervisionSpec::PartialLabel {
            candidates: vec![vec![0, 2]],
        };
        let probs = Table::from_rows(&[[0.2, 0.3, 0.5]]).unwrap();
        let out = enumerate(&spec, &probs).unwrap();
        approx(out.log_z, 0.7f64.ln(), 1e-15);
        approx(out.targets.get(0, 0), 0.2 / 0.7, 1e-15);
        approx(out.targets.get(0, 0), 0.2857, 1e-4);
        assert_eq!(out.targets.get(0, 1), 0.0);
        approx(out.targets.get(0, 2), 0.7143, 1e-4);
    }

    #[test]
    fn weighted_pair_two_terms() {
        let spec = SupervisionSpec::WeightedPair {
            weights: [0.0, 1.0, 1.0, 0.0],
        };
        let probs = Table::from_rows(&[[0.6, 0.4], [0.3, 0.7]]).unwrap();
        let out = enumerate(&spec, &probs).unwrap();
        approx(out.log_z, 0.54f64.ln(), 1e-15);
    }

    #[test]
    fn losses_for_trivial_specs() {
        let probs = Table::from_rows(&[[0.1, 0.9], [0.6, 0.4]]).unwrap();
        let full =
            enumerate_losses(&SupervisionSpec::FullLabels { labels: vec![1, 1] }, &probs).unwrap();
        approx(full.l_s, -(0.9f64.ln() + 0.4f64.ln()), 1e-15);
        let free = enumerate_losses(&SupervisionSpec::Unconstrained { len: 2 }, &probs).unwrap();
        approx(free.l_s, 0.0, 1e-15);
    }

    #[test]
    fn guard_and_infeasibility() {
        let spec = SupervisionSpec::Unconstrained { len: 30 };
        let err = enumerate(&spec, &Table::uniform(30, 2)).unwrap_err();
        assert_eq!(err.code(), "TooLarge");
        let spec = SupervisionSpec::FullLabels { labels: vec![0] };
        let probs = Table::from_rows(&[[0.0, 1.0]]).unwrap();
        assert_eq!(
            enumerate(&spec, &probs).unwrap_err(),
            Error::InfeasibleSupervision
        );
    }

    #[test]
    fn enumeration_order() {
        let all: Vec<_> = labelings(2, 3).collect();
        assert_eq!(all.len(), 9);
        assert_eq!(all[0], [0, 0]);
        assert_eq!(all[5], [1, 2]);
        assert_eq!(all[8], [2, 2]);
    }
}
