//! `gen`, `marginals`, `train` and `verify`.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use weakauto::trainer::{Architecture, Optimizer, TestSet};
use weakauto::verify::{self, VerifyConfig, VerifyReport};
use weakauto::{
    em_targets, gen_gaussians, ovr_losses, weaken, Gaussians, GroupSpec, LossWeights, Matching,
    Setting, TrainConfig, WeakenParams,
};

use crate::formats::{read_dataset, read_probs, write_dataset, write_json};
use crate::{Outcome, EXIT_CHECK_FAILED};

fn parse_setting(s: &str) -> Result<Setting, String> {
    s.parse().map_err(|e: weakauto::Error| e.to_string())
}

fn parse_optimizer(s: &str) -> Result<Optimizer, String> {
    s.parse().map_err(|e: weakauto::Error| e.to_string())
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    <[f64; 2]>::try_from(values).map_err(|_| "expected two comma-separated values".into())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    /// supervised, partial, complementary, multi_instance, label_proportion,
    /// pcomp, psim, simconf, confdiff, pos_conf, pos_unlabeled,
    /// unlabeled_unlabeled or sd_unlabeled.
    #[arg(long, value_parser = parse_setting)]
    pub setting: Setting,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Labeled draws per class before weakening.
    #[arg(long, default_value_t = 2000)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 1.0)]
    pub stddev: f64,
    #[arg(long, default_value_t = 0.5)]
    pub partial_ratio: f64,
    /// Single-instance groups to emit; every instance once if omitted.
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long, default_value_t = 500)]
    pub bags: usize,
    #[arg(long, default_value_t = 10.0)]
    pub size_mean: f64,
    #[arg(long, default_value_t = 2.0)]
    pub size_std: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub prior: f64,
    #[arg(long, default_value_t = 2000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 200)]
    pub labeled: usize,
    #[arg(long, default_value_t = 4000)]
    pub unlabeled: usize,
    #[arg(long, default_value_t = 32)]
    pub pool_size: usize,
    /// Priors of the two unlabeled sets, comma-separated.
    #[arg(long, value_parser = parse_pair, default_value = "0.7,0.3")]
    pub uu_priors: [f64; 2],
    #[arg(long, default_value_t = 0.0)]
    pub teacher_noise: f64,
}

impl GenArgs {
    pub fn params(&self) -> WeakenParams {
        WeakenParams {
            partial_ratio: self.partial_ratio,
            instances: self.instances,
            bags: self.bags,
            size_mean: self.size_mean,
            size_std: self.size_std,
            prior: self.prior,
            pairs: self.pairs,
            labeled: self.labeled,
            unlabeled: self.unlabeled,
            pool_size: self.pool_size,
            uu_priors: self.uu_priors,
            teacher_noise: self.teacher_noise,
        }
    }
}

pub fn gen(args: &GenArgs) -> Result<Outcome> {
    let params = args.params();
    params.validate()?;
    let gaussians = Gaussians::standard(args.classes, args.stddev)?;
    let data = gen_gaussians(args.n_per_class, &gaussians, args.seed)?;
    let dataset = weaken(&data, args.setting, &params, args.seed)?;
    write_dataset(&args.out, &dataset)?;
    println!(
        "wrote {} groups ({} instances) to {}",
        dataset.groups.len(),
        dataset.num_instances(),
        args.out.display()
    );
    Ok(Outcome::ok(Some(args.out.clone())))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MarginalsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Predicted probabilities, one row per instance in dataset order.
    #[arg(long)]
    pub probs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct GroupMarginals {
    pub kind: &'static str,
    pub log_z: f64,
    pub targets: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct MarginalsFile {
    pub groups: Vec<GroupMarginals>,
}

pub fn marginals(args: &MarginalsArgs) -> Result<Outcome> {
    let dataset = read_dataset(&args.dataset)?;
    let probs = read_probs(&args.probs)?;
    if probs.rows() != dataset.num_instances() || probs.cols() != dataset.num_classes {
        bail!(
            "probabilities are {}x{}, dataset has {} instances and {} classes",
            probs.rows(),
            probs.cols(),
            dataset.num_instances(),
            dataset.num_classes
        );
    }
    let mut groups = Vec::with_capacity(dataset.groups.len());
    let mut offset = 0;
    for (index, group) in dataset.groups.iter().enumerate() {
        let rows = probs.slice_rows(offset, group.instances.len());
        offset += group.instances.len();
        let (targets, log_z) = match &group.spec {
            GroupSpec::Single(spec) => em_targets(spec, &rows).map(|o| (o.targets, o.log_z)),
            GroupSpec::MultiClass(spec) => ovr_losses(spec, &rows).map(|o| (o.targets, -o.l_s)),
        }
        .map_err(|e| e.in_group(index))?;
        groups.push(GroupMarginals {
            kind: group.spec.kind(),
            log_z,
            targets: targets.to_rows(),
        });
    }
    write_json(&args.out, &MarginalsFile { groups })?;
    println!(
        "wrote marginals of {} groups to {}",
        dataset.groups.len(),
        args.out.display()
    );
    Ok(Outcome::ok(Some(args.out.clone())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchingArg {
    /// Whatever the dataset records for its setting.
    Auto,
    None,
    Permute,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Labeled evaluation set, for example from `gen --setting supervised`.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelKind::Linear)]
    pub model: ModelKind,
    /// Hidden units of the MLP.
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Groups per minibatch.
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    /// sgd, momentum or adam.
    #[arg(long, value_parser = parse_optimizer, default_value = "adam")]
    pub optimizer: Optimizer,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MatchingArg::Auto)]
    pub matching: MatchingArg,
    /// Coefficient on the unsupervised (EM target) loss.
    #[arg(long, default_value_t = 1.0)]
    pub unsupervised_weight: f64,
    /// Coefficient on the annotation log-likelihood loss.
    #[arg(long, default_value_t = 1.0)]
    pub supervised_weight: f64,
    /// Evaluate test accuracy every this many epochs.
    #[arg(long, default_value_t = 1)]
    pub eval_every: usize,
    #[arg(long)]
    pub out: PathBuf,
}

impl TrainArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            architecture: match self.model {
                ModelKind::Linear => Architecture::Linear,
                ModelKind::Mlp => Architecture::Mlp {
                    hidden: self.hidden,
                },
            },
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            optimizer: self.optimizer,
            seed: self.seed,
            loss_weights: LossWeights {
                unsupervised: self.unsupervised_weight,
                supervised: self.supervised_weight,
            },
            eval_every: self.eval_every,
        }
    }
}

/// Training metrics. Holds no timings so reruns are byte-identical.
#[derive(Debug, Serialize)]
pub struct Metrics {
    pub setting: Setting,
    pub num_classes: usize,
    pub groups: usize,
    pub matching: Matching,
    pub config: TrainConfig,
    pub epochs: Vec<weakauto::trainer::EpochRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_test_accuracy: Option<f64>,
}

pub fn train(args: &TrainArgs) -> Result<Outcome> {
    let dataset = read_dataset(&args.dataset)?;
    let test = args
        .test
        .as_ref()
        .map(|path| -> Result<_> {
            let test = read_dataset(path)?;
            test.labeled()
                .with_context(|| format!("test set {}", path.display()))
        })
        .transpose()?;
    let matching = match args.matching {
        MatchingArg::Auto => dataset.metadata.matching,
        MatchingArg::None => Matching::None,
        MatchingArg::Permute => Matching::Permute,
    };
    let config = args.config();
    let test_set = test.as_ref().map(|data| TestSet { data, matching });
    let (_, log) = weakauto::train(&dataset, &config, test_set)?;
    for record in &log.epochs {
        let acc = record
            .test_accuracy
            .map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
        println!(
            "epoch {:>4}  l_u {:>10.6}  l_s {:>10.6}  test_accuracy {acc}",
            record.epoch, record.l_u, record.l_s
        );
    }
    let metrics = Metrics {
        setting: dataset.setting,
        num_classes: dataset.num_classes,
        groups: dataset.groups.len(),
        matching,
        config,
        final_test_accuracy: log.final_accuracy(),
        epochs: log.epochs,
    };
    write_json(&args.out, &metrics)?;
    Ok(Outcome::ok(Some(args.out.clone())))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// `all` or one of the annotation kinds.
    #[arg(long, default_value = "all")]
    pub kind: String,
    /// Random cases per kind.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Perturb the engine on this trial of every kind.
    #[arg(long, hide = true)]
    pub inject_fault: Option<usize>,
    /// Optional JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn print_report(report: &VerifyReport) {
    println!(
        "{:<20} {:>7} {:>12} {:>12} {:>12} {:>9}",
        "kind", "trials", "targets", "log_z", "mass", "failures"
    );
    for k in &report.kinds {
        println!(
            "{:<20} {:>7} {:>12.3e} {:>12.3e} {:>12.3e} {:>9}",
            k.kind, k.trials, k.max.targets, k.max.log_z, k.max.mass, k.failures
        );
    }
    let max = report.max();
    println!(
        "max deviation: targets {:.3e}, log_z {:.3e}, mass {:.3e} over {} trials",
        max.targets,
        max.log_z,
        max.mass,
        report.total_trials()
    );
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome> {
    let config = VerifyConfig {
        kinds: verify::parse_kinds(&args.kind)?,
        trials: args.trials,
        max_len: args.max_len,
        seed: args.seed,
        inject_fault: args.inject_fault,
    };
    let report = verify::run(&config)?;
    print_report(&report);
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    let status = match report.first_failure() {
        None => {
            println!("PASS");
            crate::EXIT_OK
        }
        Some(f) => {
            println!(
                "FAIL: first failure kind={} seed={} L={} (trial {}): {}",
                f.kind, f.seed, f.len, f.trial, f.message
            );
            EXIT_CHECK_FAILED
        }
    };
    Ok(Outcome {
        status,
        out: args.out.clone(),
    })
}
