//! Randomized comparison of the forward-backward engine against the
//! enumeration oracle, plus a finite-difference gradient check.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::automaton::build_trellis;
use crate::datagen::rng_for;
use crate::error::{Error, Result};
use crate::forward_backward::{log_likelihood, position_masses, score_tables};
use crate::logspace::log_sum_exp;
use crate::losses::{cross_entropy, grad_logits};
use crate::oracle::{self, MAX_LABELINGS};
use crate::supervision::SupervisionSpec;
use crate::table::{log_softmax_rows, Table};
use crate::EmOutput;

/// Largest class count drawn for the multi-class variants.
pub const MAX_CLASSES: usize = 4;

/// Allowed deviation of targets and log-likelihood from the oracle.
pub const TARGET_TOLERANCE: f64 = 1e-9;

/// Allowed deviation of each position's total mass from the log-likelihood.
pub const MASS_TOLERANCE: f64 = 1e-10;

/// Every annotation kind exercised by [`run`].
pub const KINDS: [&str; 10] = [
    "partial_label",
    "multi_instance",
    "label_proportion",
    "pairwise_comparison",
    "pairwise_similarity",
    "weighted_pair",
    "positive_confidence",
    "class_prior",
    "full_labels",
    "unconstrained",
];

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub kinds: Vec<&'static str>,
    pub trials: usize,
    pub max_len: usize,
    pub seed: u64,
    /// Perturb the engine's log-likelihood on this trial of every kind, to
    /// exercise the failure path.
    pub inject_fault: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            kinds: KINDS.to_vec(),
            trials: 200,
            max_len: 8,
            seed: 0,
            inject_fault: None,
        }
    }
}

/// Resolves `all` or a single kind name.
pub fn parse_kinds(name: &str) -> Result<Vec<&'static str>> {
    if name == "all" {
        return Ok(KINDS.to_vec());
    }
    KINDS
        .iter()
        .find(|&&k| k == name)
        .map(|&k| vec![k])
        .ok_or_else(|| Error::InvalidParams(format!("unknown kind {name:?}")))
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_len == 0 {
            return Err(Error::InvalidParams("max length must be at least 1".into()));
        }
        let worst = (MAX_CLASSES as f64).powi(self.max_len.min(i32::MAX as usize) as i32);
        if worst > MAX_LABELINGS {
            return Err(Error::TooLarge {
                labelings: worst,
                limit: MAX_LABELINGS,
            });
        }
        for k in &self.kinds {
            parse_kinds(k)?;
        }
        Ok(())
    }
}

/// Seed of one trial, reported with failures so a case can be replayed.
pub fn case_seed(seed: u64, kind_index: usize, trial: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(((kind_index as u64) << 32) | trial as u64)
}

fn unit_with_edges(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random(),
    }
}

/// Random row-stochastic table; about one row in ten has a zero entry.
pub fn random_probs(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Table {
    let logits = random_logits(rng, rows, cols);
    let mut probs = log_softmax_rows(&logits).exp();
    for j in 0..rows {
        if rng.random_range(0..10) == 0 {
            let c = rng.random_range(0..cols);
            probs.set(j, c, 0.0);
            let total: f64 = probs.row(j).iter().sum();
            probs.row_mut(j).iter_mut().for_each(|p| *p /= total);
        }
    }
    probs
}

pub fn random_logits(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Table {
    let normal = Normal::new(0.0, 1.5).expect("valid normal");
    let data = (0..rows * cols).map(|_| normal.sample(rng)).collect();
    Table::from_vec(rows, cols, data).expect("sized")
}

/// A random annotation of `kind` with length at most `max_len`, and the
/// number of classes to pair it with.
pub fn random_spec(
    kind: &str,
    rng: &mut ChaCha8Rng,
    max_len: usize,
) -> Result<(SupervisionSpec, usize)> {
    let len = rng.random_range(1..=max_len);
    let multi = rng.random_range(2..=MAX_CLASSES);
    let spec = match kind {
        "partial_label" => {
            let candidates = (0..len)
                .map(|_| {
                    let mut set: Vec<usize> = (0..multi).filter(|_| rng.random_bool(0.5)).collect();
                    if set.is_empty() {
                        set.push(rng.random_range(0..multi));
                    }
                    set
                })
                .collect();
            return Ok((SupervisionSpec::PartialLabel { candidates }, multi));
        }
        "full_labels" => {
            let labels = (0..len).map(|_| rng.random_range(0..multi)).collect();
            return Ok((SupervisionSpec::FullLabels { labels }, multi));
        }
        "unconstrained" => return Ok((SupervisionSpec::Unconstrained { len }, multi)),
        "multi_instance" => SupervisionSpec::MultiInstance {
            len,
            present: rng.random(),
        },
        "label_proportion" => SupervisionSpec::LabelProportion {
            len,
            positives: rng.random_range(0..=len),
        },
        "pairwise_comparison" => SupervisionSpec::PairwiseComparison,
        "pairwise_similarity" => SupervisionSpec::PairwiseSimilarity {
            similar: rng.random(),
            confidence: if rng.random_bool(1.0 / 3.0) {
                None
            } else {
                Some(unit_with_edges(rng))
            },
        },
        "weighted_pair" => {
            let mut weights = [0.0; 4];
            for w in &mut weights {
                *w = if rng.random_bool(0.25) {
                    0.0
                } else {
                    rng.random()
                };
            }
            if weights.iter().all(|&w| w == 0.0) {
                weights[rng.random_range(0..4)] = 1.0;
            }
            SupervisionSpec::WeightedPair { weights }
        }
        "positive_confidence" => SupervisionSpec::PositiveConfidence {
            confidences: (0..len).map(|_| unit_with_edges(rng)).collect(),
        },
        "class_prior" => SupervisionSpec::ClassPrior {
            prior: rng.random_range(0.01..0.99),
            len,
        },
        other => return Err(Error::InvalidParams(format!("unknown kind {other:?}"))),
    };
    Ok((spec, 2))
}

/// Deviations of the engine from the oracle on one case.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Deviation {
    pub targets: f64,
    pub log_z: f64,
    /// Worst gap between a position's total mass and the log-likelihood.
    pub mass: f64,
}

impl Deviation {
    pub fn within_tolerance(&self) -> bool {
        self.targets <= TARGET_TOLERANCE
            && self.log_z <= TARGET_TOLERANCE
            && self.mass <= MASS_TOLERANCE
    }
}

/// Engine targets, log-likelihood, and per-position log masses.
fn engine(spec: &SupervisionSpec, probs: &Table) -> Result<(EmOutput, Vec<f64>)> {
    let trellis = build_trellis(&spec.compile(probs.cols())?, spec.len());
    let log_probs = probs.ln();
    let scores = score_tables(&trellis, &log_probs)?;
    let log_z = log_likelihood(&trellis, &scores.alpha);
    if trellis.is_infeasible() || log_z == f64::NEG_INFINITY {
        return Err(Error::InfeasibleSupervision);
    }
    let mass = position_masses(&trellis, &scores);
    let totals: Vec<f64> = mass
        .iter_rows()
        .map(|r| log_sum_exp(r.iter().copied()))
        .collect();
    let mut targets = mass.clone();
    for (j, total) in totals.iter().enumerate() {
        targets
            .row_mut(j)
            .iter_mut()
            .for_each(|m| *m = (*m - total).exp());
    }
    Ok((EmOutput { targets, log_z }, totals))
}

/// Compares engine and oracle on one case. Agreement on an error (for
/// example, both finding the annotation infeasible) counts as zero deviation.
pub fn compare(spec: &SupervisionSpec, probs: &Table, fault: bool) -> Result<Deviation> {
    let reference = oracle::enumerate(spec, probs);
    let computed = engine(spec, probs);
    match (computed, reference) {
        (Ok((mut got, totals)), Ok(want)) => {
            if fault {
                got.log_z += 1e-6;
            }
            Ok(Deviation {
                targets: got.targets.max_abs_diff(&want.targets),
                log_z: (got.log_z - want.log_z).abs(),
                mass: totals
                    .iter()
                    .map(|t| (t - got.log_z).abs())
                    .fold(0.0, f64::max),
            })
        }
        (Err(a), Err(b)) if a.code() == b.code() => Ok(Deviation::default()),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub kind: &'static str,
    pub trial: usize,
    pub seed: u64,
    pub len: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindReport {
    pub kind: &'static str,
    pub trials: usize,
    pub max: Deviation,
    pub failures: usize,
    pub first_failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub kinds: Vec<KindReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.kinds.iter().all(|k| k.failures == 0)
    }

    pub fn first_failure(&self) -> Option<&Failure> {
        self.kinds.iter().find_map(|k| k.first_failure.as_ref())
    }

    pub fn max(&self) -> Deviation {
        self.kinds
            .iter()
            .fold(Deviation::default(), |acc, k| Deviation {
                targets: acc.targets.max(k.max.targets),
                log_z: acc.log_z.max(k.max.log_z),
                mass: acc.mass.max(k.max.mass),
            })
    }

    pub fn total_trials(&self) -> usize {
        self.kinds.iter().map(|k| k.trials).sum()
    }
}

fn run_kind(config: &VerifyConfig, kind_index: usize, kind: &'static str) -> Result<KindReport> {
    let mut report = KindReport {
        kind,
        trials: config.trials,
        max: Deviation::default(),
        failures: 0,
        first_failure: None,
    };
    for trial in 0..config.trials {
        let seed = case_seed(config.seed, kind_index, trial);
        let mut rng = rng_for(seed, 0);
        let (spec, k) = random_spec(kind, &mut rng, config.max_len)?;
        let probs = random_probs(&mut rng, spec.len(), k);
        let outcome = compare(&spec, &probs, config.inject_fault == Some(trial));
        let message = match outcome {
            Ok(dev) => {
                report.max.targets = report.max.targets.max(dev.targets);
                report.max.log_z = report.max.log_z.max(dev.log_z);
                report.max.mass = report.max.mass.max(dev.mass);
                if dev.within_tolerance() {
                    continue;
                }
                format!(
                    "targets {:.3e}, log_z {:.3e}, mass {:.3e}",
                    dev.targets, dev.log_z, dev.mass
                )
            }
            Err(e) => e.to_string(),
        };
        report.failures += 1;
        report.first_failure.get_or_insert(Failure {
            kind,
            trial,
            seed,
            len: spec.len(),
            message,
        });
    }
    Ok(report)
}

/// Runs every configured kind for `config.trials` random cases.
pub fn run(config: &VerifyConfig) -> Result<VerifyReport> {
    config.validate()?;
    let kinds = config
        .kinds
        .iter()
        .map(|&kind| {
            let index = KINDS.iter().position(|&k| k == kind).expect("validated");
            run_kind(config, index, kind)
        })
        .collect::<Result<_>>()?;
    Ok(VerifyReport { kinds })
}

/// Relative error between the analytic logit gradient and central finite
/// differences of `L_U + L_S`, with the targets of `L_U` held at their value
/// for `logits`. Gradients that both vanish below `1e-8` count as exact.
pub fn gradient_error(spec: &SupervisionSpec, logits: &Table, step: f64) -> Result<f64> {
    let log_probs = log_softmax_rows(logits);
    let probs = log_probs.exp();
    let analytic = grad_logits(spec, &probs)?;
    let trellis = build_trellis(&spec.compile(logits.cols())?, spec.len());
    let targets = crate::losses::em_losses(spec, &probs)?.targets;
    let objective = |z: &Table| -> Result<f64> {
        let lp = log_softmax_rows(z);
        let log_z = match spec {
            SupervisionSpec::Unconstrained { .. } => 0.0,
            _ => crate::forward_backward::posteriors(&trellis, &lp)?.log_z,
        };
        Ok(cross_entropy(&targets, &lp) - log_z)
    };
    let mut numeric = Table::zeros(logits.rows(), logits.cols());
    for j in 0..logits.rows() {
        for c in 0..logits.cols() {
            let mut plus = logits.clone();
            plus.set(j, c, logits.get(j, c) + step);
            let mut minus = logits.clone();
            minus.set(j, c, logits.get(j, c) - step);
            numeric.set(
                j,
                c,
                (objective(&plus)? - objective(&minus)?) / (2.0 * step),
            );
        }
    }
    let norm = |t: &Table| t.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff = norm(&Table::from_vec(
        logits.rows(),
        logits.cols(),
        analytic
            .as_slice()
            .iter()
            .zip(numeric.as_slice())
            .map(|(a, n)| a - n)
            .collect(),
    )?);
    let scale = norm(&analytic).max(norm(&numeric));
    Ok(if scale < 1e-8 && diff < 1e-8 {
        0.0
    } else {
        diff / scale
    })
}

/// A random kind name.
pub fn random_kind(rng: &mut ChaCha8Rng) -> &'static str {
    KINDS.choose(rng).copied().expect("non-empty")
}
