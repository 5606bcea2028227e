//! Weak-supervision annotations and their compilation to automata.
//!
//! Each [`SupervisionSpec`] describes what is known about the labels of one
//! group of `L` instances. [`SupervisionSpec::compile`] produces an [`Nfa`]
//! whose accepted length-`L` language is exactly the set of labelings
//! consistent with the annotation, with path weights for the soft variants.

use serde::{Deserialize, Serialize};

use crate::automaton::{Nfa, Transition};
use crate::error::{Error, Result};
use crate::table::Table;

/// Index into [`SupervisionSpec::WeightedPair`] weights for labeling `(a, b)`.
#[inline]
pub fn pair_index(first: usize, second: usize) -> usize {
    2 * first + second
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupervisionSpec {
    /// Candidate label set per position.
    PartialLabel {
        candidates: Vec<Vec<usize>>,
    },
    /// At least one positive (`present`) or no positive at all.
    MultiInstance {
        len: usize,
        present: bool,
    },
    /// Exactly `positives` instances of class 1.
    LabelProportion {
        len: usize,
        positives: usize,
    },
    /// The first instance is at least as positive as the second.
    PairwiseComparison,
    /// The pair shares a label (`similar`) or not. With a confidence `c`, the
    /// stated relation is weighted `c` and the opposite one `1 - c`.
    PairwiseSimilarity {
        similar: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        confidence: Option<f64>,
    },
    /// Explicit weights for `(0,0), (0,1), (1,0), (1,1)`.
    WeightedPair {
        weights: [f64; 4],
    },
    /// Per-instance probability of being positive.
    PositiveConfidence {
        confidences: Vec<f64>,
    },
    /// Unlabeled group with positive-class prior `prior`.
    ClassPrior {
        prior: f64,
        len: usize,
    },
    FullLabels {
        labels: Vec<usize>,
    },
    Unconstrained {
        len: usize,
    },
}

impl SupervisionSpec {
    /// Complementary label: every class except `excluded` is a candidate.
    pub fn complementary(num_classes: usize, excluded: &[usize]) -> Self {
        let candidates = excluded
            .iter()
            .map(|&e| (0..num_classes).filter(|&k| k != e).collect())
            .collect();
        SupervisionSpec::PartialLabel { candidates }
    }

    /// Similarity-confidence pair: probability `c` that the pair shares a label.
    pub fn similarity_confidence(c: f64) -> Self {
        SupervisionSpec::PairwiseSimilarity {
            similar: true,
            confidence: Some(c),
        }
    }

    /// Confidence-difference pair with `c = p(y2 = 1 | x2) - p(y1 = 1 | x1)`.
    ///
    /// Weights: `w(0,1) = (1+c)/2`, `w(1,0) = (1-c)/2`, `w(0,0) = w(1,1) = 1/2`.
    pub fn confidence_difference(c: f64) -> Self {
        SupervisionSpec::WeightedPair {
            weights: [0.5, (1.0 + c) / 2.0, (1.0 - c) / 2.0, 0.5],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SupervisionSpec::PartialLabel { .. } => "partial_label",
            SupervisionSpec::MultiInstance { .. } => "multi_instance",
            SupervisionSpec::LabelProportion { .. } => "label_proportion",
            SupervisionSpec::PairwiseComparison => "pairwise_comparison",
            SupervisionSpec::PairwiseSimilarity { .. } => "pairwise_similarity",
            SupervisionSpec::WeightedPair { .. } => "weighted_pair",
            SupervisionSpec::PositiveConfidence { .. } => "positive_confidence",
            SupervisionSpec::ClassPrior { .. } => "class_prior",
            SupervisionSpec::FullLabels { .. } => "full_labels",
            SupervisionSpec::Unconstrained { .. } => "unconstrained",
        }
    }

    /// Group length `L`.
    pub fn len(&self) -> usize {
        match self {
            SupervisionSpec::PartialLabel { candidates } => candidates.len(),
            SupervisionSpec::MultiInstance { len, .. }
            | SupervisionSpec::LabelProportion { len, .. }
            | SupervisionSpec::ClassPrior { len, .. }
            | SupervisionSpec::Unconstrained { len } => *len,
            SupervisionSpec::PairwiseComparison
            | SupervisionSpec::PairwiseSimilarity { .. }
            | SupervisionSpec::WeightedPair { .. } => 2,
            SupervisionSpec::PositiveConfidence { confidences } => confidences.len(),
            SupervisionSpec::FullLabels { labels } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether this variant only exists for binary classification.
    pub fn is_binary_only(&self) -> bool {
        !matches!(
            self,
            SupervisionSpec::PartialLabel { .. }
                | SupervisionSpec::FullLabels { .. }
                | SupervisionSpec::Unconstrained { .. }
        )
    }

    /// Positive count used for a class-prior group: `round(prior * len)` with
    /// ties to even.
    pub fn expected_count(prior: f64, len: usize) -> usize {
        (prior * len as f64).round_ties_even() as usize
    }

    /// Path weights `(w00, w01, w10, w11)` for the pairwise variants.
    pub fn pair_weights(&self) -> Option<[f64; 4]> {
        match *self {
            SupervisionSpec::PairwiseComparison => Some([1.0, 0.0, 1.0, 1.0]),
            SupervisionSpec::PairwiseSimilarity {
                similar,
                confidence,
            } => {
                let c = confidence.unwrap_or(1.0);
                let (same, diff) = if similar { (c, 1.0 - c) } else { (1.0 - c, c) };
                Some([same, diff, diff, same])
            }
            SupervisionSpec::WeightedPair { weights } => Some(weights),
            _ => None,
        }
    }

    /// Checks the annotation against its invariants for `num_classes` classes.
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if num_classes < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if self.is_binary_only() && num_classes != 2 {
            return Err(Error::UnsupportedCardinality {
                kind: self.kind(),
                num_symbols: num_classes,
            });
        }
        if self.is_empty() {
            return Err(Error::InvalidSpec("group length must be at least 1".into()));
        }
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} {v} is not in [0,1]")))
            }
        };
        match self {
            SupervisionSpec::PartialLabel { candidates } => {
                for (j, set) in candidates.iter().enumerate() {
                    if set.is_empty() {
                        return Err(Error::InvalidSpec(format!("empty candidate set at {j}")));
                    }
                    if let Some(k) = set.iter().find(|&&k| k >= num_classes) {
                        return Err(Error::InvalidSpec(format!(
                            "candidate {k} at {j} is not a class of {num_classes}"
                        )));
                    }
                }
            }
            SupervisionSpec::LabelProportion { len, positives } => {
                if positives > len {
                    return Err(Error::InvalidSpec(format!(
                        "{positives} positives exceed group length {len}"
                    )));
                }
            }
            SupervisionSpec::PairwiseSimilarity {
                confidence: Some(c),
                ..
            } => unit("confidence", *c)?,
            SupervisionSpec::WeightedPair { weights } => {
                for w in weights {
                    unit("pair weight", *w)?;
                }
                if weights.iter().all(|&w| w == 0.0) {
                    return Err(Error::InvalidSpec("pair weights are all zero".into()));
                }
            }
            SupervisionSpec::PositiveConfidence { confidences } => {
                for c in confidences {
                    unit("confidence", *c)?;
                }
            }
            SupervisionSpec::ClassPrior { prior, .. } => {
                if !(*prior > 0.0 && *prior < 1.0) {
                    return Err(Error::InvalidSpec(format!("prior {prior} is not in (0,1)")));
                }
            }
            SupervisionSpec::FullLabels { labels } => {
                if let Some(y) = labels.iter().find(|&&y| y >= num_classes) {
                    return Err(Error::InvalidSpec(format!(
                        "label {y} is not a class of {num_classes}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Compiles the annotation into an automaton over `num_classes` symbols.
    pub fn compile(&self, num_classes: usize) -> Result<Nfa> {
        self.validate(num_classes)?;
        match self {
            SupervisionSpec::PartialLabel { candidates } => {
                chain(num_classes, candidates.iter().map(|s| s.as_slice()))
            }
            SupervisionSpec::FullLabels { labels } => {
                chain(num_classes, labels.iter().map(std::slice::from_ref))
            }
            SupervisionSpec::MultiInstance { present: true, .. } => Nfa::checked(
                2,
                2,
                0,
                [1],
                vec![
                    Transition::new(0, 0, 0),
                    Transition::new(0, 1, 1),
                    Transition::new(1, 0, 1),
                    Transition::new(1, 1, 1),
                ],
            ),
            SupervisionSpec::MultiInstance { present: false, .. } => {
                Nfa::checked(1, 2, 0, [0], vec![Transition::new(0, 0, 0)])
            }
            SupervisionSpec::LabelProportion { positives, .. } => count_automaton(*positives),
            SupervisionSpec::ClassPrior { prior, len } => {
                count_automaton(Self::expected_count(*prior, *len))
            }
            SupervisionSpec::PairwiseComparison => Nfa::checked(
                3,
                2,
                0,
                [2],
                vec![
                    Transition::new(0, 1, 1),
                    Transition::new(0, 0, 2),
                    Transition::new(1, 0, 2),
                    Transition::new(1, 1, 2),
                    Transition::new(2, 0, 2),
                ],
            ),
            SupervisionSpec::PairwiseSimilarity { .. } | SupervisionSpec::WeightedPair { .. } => {
                weighted_pair(self.pair_weights().expect("pairwise variant"))
            }
            SupervisionSpec::PositiveConfidence { confidences } => {
                let any = vec![0, 1];
                let nfa = chain(2, confidences.iter().map(|_| any.as_slice()))?;
                let rows: Vec<[f64; 2]> = confidences
                    .iter()
                    .map(|&c| {
                        [
                            crate::logspace::ln_or_neg_inf(1.0 - c),
                            crate::logspace::ln_or_neg_inf(c),
                        ]
                    })
                    .collect();
                nfa.with_position_weights(Table::from_rows(&rows)?)
            }
            SupervisionSpec::Unconstrained { .. } => Nfa::checked(
                1,
                num_classes,
                0,
                [0],
                (0..num_classes).map(|y| Transition::new(0, y, 0)).collect(),
            ),
        }
    }
}

/// `L + 1` states in a line; step `j` admits exactly the symbols in `allowed[j]`.
fn chain<'a>(num_symbols: usize, allowed: impl Iterator<Item = &'a [usize]>) -> Result<Nfa> {
    let mut transitions = Vec::new();
    let mut len = 0;
    for (j, symbols) in allowed.enumerate() {
        let mut symbols = symbols.to_vec();
        symbols.sort_unstable();
        symbols.dedup();
        transitions.extend(symbols.into_iter().map(|y| Transition::new(j, y, j + 1)));
        len = j + 1;
    }
    Nfa::checked(len + 1, num_symbols, 0, [len], transitions)
}

/// `m + 1` states counting positives; accepting after exactly `m`.
fn count_automaton(m: usize) -> Result<Nfa> {
    let mut transitions = Vec::with_capacity(2 * m + 1);
    for q in 0..=m {
        transitions.push(Transition::new(q, 0, q));
        if q < m {
            transitions.push(Transition::new(q, 1, q + 1));
        }
    }
    Nfa::checked(m + 1, 2, 0, [m], transitions)
}

/// Start, one state per first label, accept. Zero-weight paths are dropped.
fn weighted_pair(weights: [f64; 4]) -> Result<Nfa> {
    let mut transitions = Vec::new();
    for first in 0..2 {
        let row = [weights[pair_index(first, 0)], weights[pair_index(first, 1)]];
        if row.iter().all(|&w| w == 0.0) {
            continue;
        }
        transitions.push(Transition::new(0, first, 1 + first));
        for (second, &w) in row.iter().enumerate() {
            if w > 0.0 {
                transitions.push(Transition::weighted(1 + first, second, 3, w));
            }
        }
    }
    Nfa::checked(4, 2, 0, [3], transitions)
}

/// Multi-class aggregate annotations, reduced to binary problems one class at
/// a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiClassSpec {
    /// Per-class presence flags.
    MultiClassMultiInstance { len: usize, present: Vec<bool> },
    /// Per-class counts; they partition the group.
    MultiClassLabelProportion { len: usize, counts: Vec<usize> },
}

impl MultiClassSpec {
    pub fn len(&self) -> usize {
        match self {
            MultiClassSpec::MultiClassMultiInstance { len, .. }
            | MultiClassSpec::MultiClassLabelProportion { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_classes(&self) -> usize {
        match self {
            MultiClassSpec::MultiClassMultiInstance { present, .. } => present.len(),
            MultiClassSpec::MultiClassLabelProportion { counts, .. } => counts.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidSpec("group length must be at least 1".into()));
        }
        if self.num_classes() < 2 {
            return Err(Error::InvalidSpec("need at least 2 classes".into()));
        }
        match self {
            MultiClassSpec::MultiClassMultiInstance { len, present } => {
                let n = present.iter().filter(|&&p| p).count();
                if n > *len {
                    return Err(Error::InvalidSpec(format!(
                        "{n} classes present in a group of {len}"
                    )));
                }
            }
            MultiClassSpec::MultiClassLabelProportion { len, counts } => {
                let total: usize = counts.iter().sum();
                if total != *len {
                    return Err(Error::InvalidSpec(format!(
                        "class counts sum to {total}, group length is {len}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Binary annotation for `class` against all other classes.
    pub fn one_vs_rest(&self, class: usize) -> Result<SupervisionSpec> {
        self.validate()?;
        if class >= self.num_classes() {
            return Err(Error::InvalidSpec(format!(
                "class {class} is not one of {}",
                self.num_classes()
            )));
        }
        Ok(match self {
            MultiClassSpec::MultiClassMultiInstance { len, present } => {
                SupervisionSpec::MultiInstance {
                    len: *len,
                    present: present[class],
                }
            }
            MultiClassSpec::MultiClassLabelProportion { len, counts } => {
                SupervisionSpec::LabelProportion {
                    len: *len,
                    positives: counts[class],
                }
            }
        })
    }
}

/// Annotation attached to one group of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    Single(SupervisionSpec),
    MultiClass(MultiClassSpec),
}

impl GroupSpec {
    pub fn len(&self) -> usize {
        match self {
            GroupSpec::Single(s) => s.len(),
            GroupSpec::MultiClass(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GroupSpec::Single(s) => s.kind(),
            GroupSpec::MultiClass(MultiClassSpec::MultiClassMultiInstance { .. }) => {
                "multi_class_multi_instance"
            }
            GroupSpec::MultiClass(MultiClassSpec::MultiClassLabelProportion { .. }) => {
                "multi_class_label_proportion"
            }
        }
    }
}

impl From<SupervisionSpec> for GroupSpec {
    fn from(spec: SupervisionSpec) -> Self {
        GroupSpec::Single(spec)
    }
}

impl From<MultiClassSpec> for GroupSpec {
    fn from(spec: MultiClassSpec) -> Self {
        GroupSpec::MultiClass(spec)
    }
}

/// One-vs-rest projection of a group annotation. Only multi-class aggregate
/// annotations have one.
pub fn one_vs_rest(spec: &GroupSpec, class: usize) -> Result<SupervisionSpec> {
    match spec {
        GroupSpec::MultiClass(m) => m.one_vs_rest(class),
        GroupSpec::Single(s) => Err(Error::InvalidSpec(format!(
            "{} has no multi-class form",
            s.kind()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::build_trellis;

    fn all_labelings(len: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..k).map(move |y| {
                        let mut q = p.clone();
                        q.push(y);
                        q
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn label_proportion_has_m_plus_one_states() {
        let nfa = SupervisionSpec::LabelProportion {
            len: 4,
            positives: 2,
        }
        .compile(2)
        .unwrap();
        assert_eq!(nfa.num_states, 3);
        assert_eq!(nfa.accepting.iter().copied().collect::<Vec<_>>(), [2]);
    }

    #[test]
    fn full_candidate_sets_accept_everything() {
        let spec = SupervisionSpec::PartialLabel {
            candidates: vec![vec![0, 1, 2]; 3],
        };
        let nfa = spec.compile(3).unwrap();
        for y in all_labelings(3, 3) {
            assert_eq!(nfa.accepts(&y).unwrap(), Some(0.0));
        }
        assert_eq!(build_trellis(&nfa, 3).labelings().len(), 27);
    }

    #[test]
    fn class_prior_rounds_to_count() {
        assert_eq!(SupervisionSpec::expected_count(0.4, 10), 4);
        // ties go to even
        assert_eq!(SupervisionSpec::expected_count(0.5, 5), 2);
        assert_eq!(SupervisionSpec::expected_count(0.5, 7), 4);
        let nfa = SupervisionSpec::ClassPrior {
            prior: 0.4,
            len: 10,
        }
        .compile(2)
        .unwrap();
        assert_eq!(nfa.num_states, 5);
        assert_eq!(nfa.accepting.iter().copied().collect::<Vec<_>>(), [4]);
    }

    #[test]
    fn pairwise_comparison_language() {
        let nfa = SupervisionSpec::PairwiseComparison.compile(2).unwrap();
        assert_eq!(nfa.num_states, 3);
        let accepted: Vec<_> = all_labelings(2, 2)
            .into_iter()
            .filter(|y| nfa.accepts(y).unwrap().is_some())
            .collect();
        assert_eq!(accepted, [vec![0, 0], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn similarity_weights() {
        let spec = SupervisionSpec::PairwiseSimilarity {
            similar: true,
            confidence: Some(0.8),
        };
        let nfa = spec.compile(2).unwrap();
        let w = |y: [usize; 2]| nfa.accepts(&y).unwrap().map(f64::exp);
        assert!((w([0, 0]).unwrap() - 0.8).abs() < 1e-12);
        assert!((w([1, 0]).unwrap() - 0.2).abs() < 1e-12);
        let hard = SupervisionSpec::PairwiseSimilarity {
            similar: false,
            confidence: None,
        }
        .compile(2)
        .unwrap();
        assert_eq!(hard.accepts(&[1, 1]).unwrap(), None);
        assert_eq!(hard.accepts(&[0, 1]).unwrap(), Some(0.0));
    }

    #[test]
    fn confidence_difference_weights() {
        let spec = SupervisionSpec::confidence_difference(0.6);
        assert_eq!(
            spec,
            SupervisionSpec::WeightedPair {
                weights: [0.5, 0.8, 0.2, 0.5]
            }
        );
    }

    #[test]
    fn binary_only_variants_reject_other_cardinalities() {
        let err = SupervisionSpec::PairwiseComparison.compile(3).unwrap_err();
        assert_eq!(err.code(), "UnsupportedCardinality");
        assert!(SupervisionSpec::Unconstrained { len: 3 }.compile(5).is_ok());
    }

    #[test]
    fn invalid_specs() {
        let cases = [
            SupervisionSpec::PartialLabel {
                candidates: vec![vec![]],
            },
            SupervisionSpec::LabelProportion {
                len: 2,
                positives: 3,
            },
            SupervisionSpec::WeightedPair { weights: [0.0; 4] },
            SupervisionSpec::WeightedPair {
                weights: [1.5, 0.0, 0.0, 0.0],
            },
            SupervisionSpec::PositiveConfidence {
                confidences: vec![1.2],
            },
            SupervisionSpec::ClassPrior { prior: 1.0, len: 4 },
            SupervisionSpec::FullLabels { labels: vec![2] },
            SupervisionSpec::Unconstrained { len: 0 },
        ];
        for spec in cases {
            assert_eq!(
                spec.compile(2).unwrap_err().code(),
                "InvalidSpec",
                "{spec:?}"
            );
        }
    }

    #[test]
    fn full_labels_accept_one_sequence() {
        let nfa = SupervisionSpec::FullLabels {
            labels: vec![2, 0, 1],
        }
        .compile(3)
        .unwrap();
        let accepted: Vec<_> = all_labelings(3, 3)
            .into_iter()
            .filter_map(|y| nfa.accepts(&y).unwrap().map(|w| (y, w)))
            .collect();
        assert_eq!(accepted, [(vec![2, 0, 1], 0.0)]);
    }

    #[test]
    fn one_vs_rest_projection() {
        let flags = GroupSpec::from(MultiClassSpec::MultiClassMultiInstance {
            len: 5,
            present: vec![true, true, false],
        });
        assert_eq!(
            one_vs_rest(&flags, 2).unwrap(),
            SupervisionSpec::MultiInstance {
                len: 5,
                present: false
            }
        );
        let counts = MultiClassSpec::MultiClassLabelProportion {
            len: 4,
            counts: vec![2, 1, 1],
        };
        assert_eq!(
            counts.one_vs_rest(0).unwrap(),
            SupervisionSpec::LabelProportion {
                len: 4,
                positives: 2
            }
        );
        let bad = MultiClassSpec::MultiClassLabelProportion {
            len: 4,
            counts: vec![2, 1, 2],
        };
        assert_eq!(bad.one_vs_rest(0).unwrap_err().code(), "InvalidSpec");
        let single = GroupSpec::from(SupervisionSpec::PairwiseComparison);
        assert_eq!(one_vs_rest(&single, 0).unwrap_err().code(), "InvalidSpec");
        assert_eq!(counts.one_vs_rest(3).unwrap_err().code(), "InvalidSpec");
    }

    #[test]
    fn group_spec_json_shape() {
        let g = GroupSpec::from(SupervisionSpec::LabelProportion {
            len: 3,
            positives: 1,
        });
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"kind":"label_proportion","len":3,"positives":1}"#);
        let m: GroupSpec = serde_json::from_str(
            r#"{"kind":"multi_class_label_proportion","len":2,"counts":[1,1]}"#,
        )
        .unwrap();
        assert_eq!(m.kind(), "multi_class_label_proportion");
        let back: GroupSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }
}
