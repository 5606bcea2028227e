//! Synthetic Gaussian data and its conversion into weakly supervised groups.
//!
//! [`gen_gaussians`] draws fully labeled instances from isotropic Gaussians.
//! [`weaken`] hides the labels behind one of the supported annotation
//! settings and records the hidden labels alongside each group so that
//! faithfulness can be checked.

use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::supervision::{GroupSpec, MultiClassSpec, SupervisionSpec};
use crate::trainer::Matching;

/// Current on-disk dataset format version.
pub const FORMAT_VERSION: u32 = 1;

/// Teacher confidences are kept this far from 0 and 1.
pub const CONFIDENCE_FLOOR: f64 = 1e-6;

/// Deterministic generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Class-conditional isotropic Gaussians sharing one standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussians {
    pub means: Vec<Vec<f64>>,
    pub stddev: f64,
}

impl Gaussians {
    /// `K` means in the plane, neighbours 4 apart: `(-2,0), (2,0)` for two
    /// classes, a regular polygon otherwise.
    pub fn standard(num_classes: usize, stddev: f64) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        let means = if num_classes == 2 {
            vec![vec![-2.0, 0.0], vec![2.0, 0.0]]
        } else {
            let step = std::f64::consts::TAU / num_classes as f64;
            let radius = 2.0 / (step / 2.0).sin();
            (0..num_classes)
                .map(|k| {
                    let angle = std::f64::consts::PI + step * k as f64;
                    vec![radius * angle.cos(), radius * angle.sin()]
                })
                .collect()
        };
        let g = Gaussians { means, stddev };
        g.validate()?;
        Ok(g)
    }

    pub fn num_classes(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stddev > 0.0 && self.stddev.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "stddev must be positive, got {}",
                self.stddev
            )));
        }
        if self.means.len() < 2 {
            return Err(Error::InvalidParams("need at least 2 class means".into()));
        }
        let d = self.dim();
        if d == 0 || self.means.iter().any(|m| m.len() != d) {
            return Err(Error::InvalidParams(
                "class means must share a positive dimension".into(),
            ));
        }
        for (a, ma) in self.means.iter().enumerate() {
            if self.means[..a].contains(ma) {
                return Err(Error::InvalidParams(format!("class mean {a} is repeated")));
            }
        }
        Ok(())
    }

    /// Bayes posterior over classes at `x` under class weights `prior`.
    pub fn posterior(&self, x: &[f64], prior: &[f64]) -> Vec<f64> {
        let scale = 2.0 * self.stddev * self.stddev;
        let log_joint: Vec<f64> = self
            .means
            .iter()
            .zip(prior)
            .map(|(m, &p)| {
                let dist: f64 = m.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                p.ln() - dist / scale
            })
            .collect();
        let norm = crate::logspace::log_sum_exp(log_joint.iter().copied());
        log_joint.iter().map(|l| (l - norm).exp()).collect()
    }
}

/// Fully labeled instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledData {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Generating distribution, needed for teacher confidences.
    pub generator: Option<Gaussians>,
}

impl LabeledData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or_else(
            || self.generator.as_ref().map_or(0, Gaussians::dim),
            Vec::len,
        )
    }

    /// Instance indices per class.
    fn by_class(&self) -> Vec<Vec<usize>> {
        let mut pools = vec![Vec::new(); self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            pools[y].push(i);
        }
        pools
    }
}

/// `n_per_class` draws from each Gaussian, class by class.
pub fn gen_gaussians(n_per_class: usize, gaussians: &Gaussians, seed: u64) -> Result<LabeledData> {
    gaussians.validate()?;
    let mut rng = rng_for(seed, 0);
    let noise = Normal::new(0.0, gaussians.stddev)
        .map_err(|e| Error::InvalidParams(format!("stddev: {e}")))?;
    let mut features = Vec::with_capacity(n_per_class * gaussians.num_classes());
    let mut labels = Vec::with_capacity(features.capacity());
    for (class, mean) in gaussians.means.iter().enumerate() {
        for _ in 0..n_per_class {
            features.push(mean.iter().map(|m| m + noise.sample(&mut rng)).collect());
            labels.push(class);
        }
    }
    Ok(LabeledData {
        features,
        labels,
        num_classes: gaussians.num_classes(),
        generator: Some(gaussians.clone()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Exact labels, one instance per group. Used for test sets.
    Supervised,
    Partial,
    Complementary,
    MultiInstance,
    LabelProportion,
    Pcomp,
    Psim,
    Simconf,
    Confdiff,
    PosConf,
    PosUnlabeled,
    UnlabeledUnlabeled,
    SdUnlabeled,
}

impl Setting {
    pub const ALL: [Setting; 13] = [
        Setting::Supervised,
        Setting::Partial,
        Setting::Complementary,
        Setting::MultiInstance,
        Setting::LabelProportion,
        Setting::Pcomp,
        Setting::Psim,
        Setting::Simconf,
        Setting::Confdiff,
        Setting::PosConf,
        Setting::PosUnlabeled,
        Setting::UnlabeledUnlabeled,
        Setting::SdUnlabeled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Setting::Supervised => "supervised",
            Setting::Partial => "partial",
            Setting::Complementary => "complementary",
            Setting::MultiInstance => "multi_instance",
            Setting::LabelProportion => "label_proportion",
            Setting::Pcomp => "pcomp",
            Setting::Psim => "psim",
            Setting::Simconf => "simconf",
            Setting::Confdiff => "confdiff",
            Setting::PosConf => "pos_conf",
            Setting::PosUnlabeled => "pos_unlabeled",
            Setting::UnlabeledUnlabeled => "unlabeled_unlabeled",
            Setting::SdUnlabeled => "sd_unlabeled",
        }
    }

    /// Settings whose annotations cannot tell the classes apart.
    pub fn default_matching(self) -> Matching {
        match self {
            Setting::Psim
            | Setting::Simconf
            | Setting::UnlabeledUnlabeled
            | Setting::SdUnlabeled => Matching::Permute,
            _ => Matching::None,
        }
    }

    fn binary_only(self) -> bool {
        !matches!(
            self,
            Setting::Supervised
                | Setting::Partial
                | Setting::Complementary
                | Setting::MultiInstance
                | Setting::LabelProportion
        )
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown setting {s:?}")))
    }
}

/// Knobs for [`weaken`]. Each setting reads only the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeakenParams {
    /// Probability that each incorrect label joins a candidate set.
    pub partial_ratio: f64,
    /// Single-instance groups to emit; `None` uses every instance once.
    pub instances: Option<usize>,
    pub bags: usize,
    pub size_mean: f64,
    pub size_std: f64,
    /// Positive-class prior for pair sampling, teachers and unlabeled pools.
    pub prior: f64,
    pub pairs: usize,
    /// Labeled positives in the positive-unlabeled setting.
    pub labeled: usize,
    /// Unlabeled instances, split into pools of `pool_size`.
    pub unlabeled: usize,
    pub pool_size: usize,
    /// Priors of the two unlabeled sets in the unlabeled-unlabeled setting.
    pub uu_priors: [f64; 2],
    /// Standard deviation of Gaussian noise added to teacher posteriors.
    pub teacher_noise: f64,
}

impl Default for WeakenParams {
    fn default() -> Self {
        WeakenParams {
            partial_ratio: 0.5,
            instances: None,
            bags: 500,
            size_mean: 10.0,
            size_std: 2.0,
            prior: 0.5,
            pairs: 2000,
            labeled: 200,
            unlabeled: 4000,
            pool_size: 32,
            uu_priors: [0.7, 0.3],
            teacher_noise: 0.0,
        }
    }
}

impl WeakenParams {
    pub fn validate(&self) -> Result<()> {
        let open = |name: &str, p: f64| {
            if p > 0.0 && p < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must lie in (0,1)")))
            }
        };
        open("prior", self.prior)?;
        for p in self.uu_priors {
            open("unlabeled-unlabeled prior", p)?;
        }
        if !(0.0..=1.0).contains(&self.partial_ratio) {
            return Err(Error::InvalidParams("ratio must lie in [0,1]".into()));
        }
        if !(self.size_mean.is_finite() && self.size_std >= 0.0 && self.size_std.is_finite()) {
            return Err(Error::InvalidParams(
                "bag size mean must be finite and stddev non-negative".into(),
            ));
        }
        if !(self.teacher_noise >= 0.0 && self.teacher_noise.is_finite()) {
            return Err(Error::InvalidParams(
                "teacher noise must be non-negative".into(),
            ));
        }
        if self.pool_size == 0 {
            return Err(Error::InvalidParams("pool size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub instances: Vec<Vec<f64>>,
    pub spec: GroupSpec,
    /// Hidden true labels, kept for checks and never used in training.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub setting: Setting,
    pub seed: u64,
    pub params: WeakenParams,
    pub matching: Matching,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakDataset {
    pub version: u32,
    pub setting: Setting,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub groups: Vec<Group>,
    pub metadata: Metadata,
}

impl WeakDataset {
    pub fn num_instances(&self) -> usize {
        self.groups.iter().map(|g| g.instances.len()).sum()
    }

    /// Structural checks: lengths, dimensions and annotation validity.
    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::InvalidParams(format!(
                "unsupported dataset version {}",
                self.version
            )));
        }
        for (index, group) in self.groups.iter().enumerate() {
            self.validate_group(group).map_err(|e| e.in_group(index))?;
        }
        Ok(())
    }

    fn validate_group(&self, group: &Group) -> Result<()> {
        if group.spec.len() != group.instances.len() {
            return Err(Error::shape(
                format!("{} instances", group.spec.len()),
                format!("{}", group.instances.len()),
            ));
        }
        if let Some(x) = group.instances.iter().find(|x| x.len() != self.feature_dim) {
            return Err(Error::shape(
                format!("feature dimension {}", self.feature_dim),
                format!("{}", x.len()),
            ));
        }
        match &group.spec {
            GroupSpec::Single(s) => s.validate(self.num_classes)?,
            GroupSpec::MultiClass(m) => {
                m.validate()?;
                if m.num_classes() != self.num_classes {
                    return Err(Error::shape(
                        format!("{} classes", self.num_classes),
                        format!("{}", m.num_classes()),
                    ));
                }
            }
        }
        if let Some(labels) = &group.labels {
            if labels.len() != group.instances.len() {
                return Err(Error::shape(
                    format!("{} hidden labels", group.instances.len()),
                    format!("{}", labels.len()),
                ));
            }
        }
        Ok(())
    }

    /// Every instance with its label, from hidden labels or exact annotations.
    pub fn labeled(&self) -> Result<LabeledData> {
        let mut features = Vec::with_capacity(self.num_instances());
        let mut labels = Vec::with_capacity(features.capacity());
        for (index, group) in self.groups.iter().enumerate() {
            let known = match (&group.labels, &group.spec) {
                (Some(l), _) => l.as_slice(),
                (None, GroupSpec::Single(SupervisionSpec::FullLabels { labels })) => labels,
                _ => {
                    return Err(Error::InvalidParams(format!(
                        "group {index} carries no labels"
                    )))
                }
            };
            features.extend(group.instances.iter().cloned());
            labels.extend_from_slice(known);
        }
        Ok(LabeledData {
            features,
            labels,
            num_classes: self.num_classes,
            generator: None,
        })
    }
}

/// Per-instance positive rate at which a bag of `mean_size` instances holds
/// no positive with probability one half.
pub fn balanced_positive_rate(mean_size: f64) -> f64 {
    1.0 - 0.5f64.powf(1.0 / mean_size.max(1.0))
}

/// Round a Gaussian draw to the nearest integer and clip at 1.
pub fn bag_size(rng: &mut impl Rng, normal: &Normal<f64>) -> usize {
    normal.sample(rng).round().max(1.0) as usize
}

struct Builder<'a> {
    data: &'a LabeledData,
    pools: Vec<Vec<usize>>,
    params: &'a WeakenParams,
    rng: ChaCha8Rng,
    groups: Vec<Group>,
}

impl<'a> Builder<'a> {
    fn new(data: &'a LabeledData, params: &'a WeakenParams, seed: u64) -> Self {
        Builder {
            data,
            pools: data.by_class(),
            params,
            rng: rng_for(seed, 1),
            groups: Vec::new(),
        }
    }

    fn push(&mut self, members: &[usize], spec: impl Into<GroupSpec>) {
        self.groups.push(Group {
            instances: members
                .iter()
                .map(|&i| self.data.features[i].clone())
                .collect(),
            spec: spec.into(),
            labels: Some(members.iter().map(|&i| self.data.labels[i]).collect()),
        });
    }

    fn label(&self, i: usize) -> usize {
        self.data.labels[i]
    }

    fn any(&mut self) -> usize {
        self.rng.random_range(0..self.data.len())
    }

    fn draw_class(&mut self, class: usize) -> Result<usize> {
        self.pools[class]
            .choose(&mut self.rng)
            .copied()
            .ok_or_else(|| Error::InvalidParams(format!("no instances of class {class}")))
    }

    /// An instance whose class is drawn positive with probability `prior`.
    fn by_prior(&mut self, prior: f64) -> Result<usize> {
        let positive = self.rng.random_bool(prior);
        self.draw_class(usize::from(positive))
    }

    fn single_instances(&mut self) -> Vec<usize> {
        match self.params.instances {
            None => (0..self.data.len()).collect(),
            Some(n) => (0..n).map(|_| self.any()).collect(),
        }
    }

    /// Bayes posterior of the positive class, perturbed and kept off 0 and 1.
    fn teacher(&mut self, i: usize) -> Result<f64> {
        let generator = self.data.generator.as_ref().ok_or_else(|| {
            Error::InvalidParams("teacher confidences need the generating distribution".into())
        })?;
        let prior = self.params.prior;
        let mut c = generator.posterior(&self.data.features[i], &[1.0 - prior, prior])[1];
        if self.params.teacher_noise > 0.0 {
            let noise = Normal::new(0.0, self.params.teacher_noise)
                .map_err(|e| Error::InvalidParams(format!("teacher noise: {e}")))?;
            c += noise.sample(&mut self.rng);
        }
        Ok(c.clamp(CONFIDENCE_FLOOR, 1.0 - CONFIDENCE_FLOOR))
    }

    fn bag_sizes(&mut self) -> Result<Vec<usize>> {
        let normal = Normal::new(self.params.size_mean, self.params.size_std)
            .map_err(|e| Error::InvalidParams(format!("bag size: {e}")))?;
        Ok((0..self.params.bags)
            .map(|_| bag_size(&mut self.rng, &normal))
            .collect())
    }

    /// Unlabeled pools whose positive count is exactly `round(prior * n)`.
    fn prior_pools(&mut self, total: usize, prior: f64) -> Result<()> {
        let size = self.params.pool_size;
        let mut remaining = total;
        while remaining > 0 {
            let n = remaining.min(size);
            remaining -= n;
            let m = SupervisionSpec::expected_count(prior, n);
            let mut members = Vec::with_capacity(n);
            for slot in 0..n {
                members.push(self.draw_class(usize::from(slot < m))?);
            }
            members.shuffle(&mut self.rng);
            self.push(&members, SupervisionSpec::ClassPrior { prior, len: n });
        }
        Ok(())
    }

    /// Pairs whose members are independently positive with the prior.
    fn prior_pair(&mut self) -> Result<[usize; 2]> {
        Ok([
            self.by_prior(self.params.prior)?,
            self.by_prior(self.params.prior)?,
        ])
    }

    fn similarity_pairs(&mut self) -> Result<()> {
        for _ in 0..self.params.pairs {
            let pair = self.prior_pair()?;
            let similar = self.label(pair[0]) == self.label(pair[1]);
            self.push(
                &pair,
                SupervisionSpec::PairwiseSimilarity {
                    similar,
                    confidence: None,
                },
            );
        }
        Ok(())
    }

    fn build(&mut self, setting: Setting) -> Result<()> {
        let k = self.data.num_classes;
        match setting {
            Setting::Supervised => {
                for i in self.single_instances() {
                    let labels = vec![self.label(i)];
                    self.push(&[i], SupervisionSpec::FullLabels { labels });
                }
            }
            Setting::Partial => {
                for i in self.single_instances() {
                    let truth = self.label(i);
                    let ratio = self.params.partial_ratio;
                    let set: Vec<usize> = (0..k)
                        .filter(|&c| c == truth || self.rng.random_bool(ratio))
                        .collect();
                    self.push(
                        &[i],
                        SupervisionSpec::PartialLabel {
                            candidates: vec![set],
                        },
                    );
                }
            }
            Setting::Complementary => {
                for i in self.single_instances() {
                    let truth = self.label(i);
                    let wrong: Vec<usize> = (0..k).filter(|&c| c != truth).collect();
                    let excluded = *wrong.choose(&mut self.rng).expect("k >= 2");
                    self.push(&[i], SupervisionSpec::complementary(k, &[excluded]));
                }
            }
            Setting::MultiInstance => {
                let rate = balanced_positive_rate(self.params.size_mean);
                for n in self.bag_sizes()? {
                    let members: Vec<usize> = if k == 2 {
                        (0..n).map(|_| self.by_prior(rate)).collect::<Result<_>>()?
                    } else {
                        (0..n).map(|_| self.any()).collect()
                    };
                    let labels: Vec<usize> = members.iter().map(|&i| self.label(i)).collect();
                    let spec: GroupSpec = if k == 2 {
                        SupervisionSpec::MultiInstance {
                            len: n,
                            present: labels.contains(&1),
                        }
                        .into()
                    } else {
                        MultiClassSpec::MultiClassMultiInstance {
                            len: n,
                            present: (0..k).map(|c| labels.contains(&c)).collect(),
                        }
                        .into()
                    };
                    self.push(&members, spec);
                }
            }
            Setting::LabelProportion => {
                for n in self.bag_sizes()? {
                    let members: Vec<usize> = (0..n).map(|_| self.any()).collect();
                    let mut counts = vec![0; k];
                    for &i in &members {
                        counts[self.label(i)] += 1;
                    }
                    let spec: GroupSpec = if k == 2 {
                        SupervisionSpec::LabelProportion {
                            len: n,
                            positives: counts[1],
                        }
                        .into()
                    } else {
                        MultiClassSpec::MultiClassLabelProportion { len: n, counts }.into()
                    };
                    self.push(&members, spec);
                }
            }
            Setting::Pcomp => {
                for _ in 0..self.params.pairs {
                    let mut pair = self.prior_pair()?;
                    if self.label(pair[0]) < self.label(pair[1]) {
                        pair.swap(0, 1);
                    }
                    self.push(&pair, SupervisionSpec::PairwiseComparison);
                }
            }
            Setting::Psim => self.similarity_pairs()?,
            Setting::Simconf => {
                for _ in 0..self.params.pairs {
                    let pair = self.prior_pair()?;
                    let (a, b) = (self.teacher(pair[0])?, self.teacher(pair[1])?);
                    let c = a * b + (1.0 - a) * (1.0 - b);
                    self.push(&pair, SupervisionSpec::similarity_confidence(c));
                }
            }
            Setting::Confdiff => {
                for _ in 0..self.params.pairs {
                    let pair = self.prior_pair()?;
                    let (a, b) = (self.teacher(pair[0])?, self.teacher(pair[1])?);
                    self.push(&pair, SupervisionSpec::confidence_difference(b - a));
                }
            }
            Setting::PosConf => {
                let n = self.params.instances.unwrap_or(self.pools[1].len());
                for _ in 0..n {
                    let i = self.draw_class(1)?;
                    let c = self.teacher(i)?;
                    self.push(
                        &[i],
                        SupervisionSpec::PositiveConfidence {
                            confidences: vec![c],
                        },
                    );
                }
            }
            Setting::PosUnlabeled => {
                for _ in 0..self.params.labeled {
                    let i = self.draw_class(1)?;
                    self.push(&[i], SupervisionSpec::FullLabels { labels: vec![1] });
                }
                self.prior_pools(self.params.unlabeled, self.params.prior)?;
            }
            Setting::UnlabeledUnlabeled => {
                let half = self.params.unlabeled / 2;
                let [first, second] = self.params.uu_priors;
                self.prior_pools(half, first)?;
                self.prior_pools(self.params.unlabeled - half, second)?;
            }
            Setting::SdUnlabeled => {
                self.similarity_pairs()?;
                self.prior_pools(self.params.unlabeled, self.params.prior)?;
            }
        }
        Ok(())
    }
}

/// Whether the hidden labels of `group` are accepted by its annotation with
/// positive weight.
pub fn is_faithful(group: &Group, num_classes: usize) -> Result<bool> {
    let Some(labels) = &group.labels else {
        return Ok(true);
    };
    match &group.spec {
        GroupSpec::Single(spec) => {
            let nfa = spec.compile(num_classes)?;
            Ok(nfa.accepts(labels)?.is_some_and(|w| w > f64::NEG_INFINITY))
        }
        GroupSpec::MultiClass(spec) => {
            for class in 0..spec.num_classes() {
                let binary: Vec<usize> = labels.iter().map(|&y| usize::from(y == class)).collect();
                let nfa = spec.one_vs_rest(class)?.compile(2)?;
                if nfa.accepts(&binary)?.is_none() {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Converts labeled data into weakly supervised groups.
pub fn weaken(
    data: &LabeledData,
    setting: Setting,
    params: &WeakenParams,
    seed: u64,
) -> Result<WeakDataset> {
    params.validate()?;
    if data.labels.len() != data.features.len() {
        return Err(Error::shape(
            format!("{} labels", data.features.len()),
            format!("{}", data.labels.len()),
        ));
    }
    if data.num_classes < 2 || data.labels.iter().any(|&y| y >= data.num_classes) {
        return Err(Error::InvalidParams(
            "labels must index at least 2 classes".into(),
        ));
    }
    if setting.binary_only() && data.num_classes != 2 {
        return Err(Error::InvalidParams(format!(
            "setting {setting} needs 2 classes, data has {}",
            data.num_classes
        )));
    }
    if data.is_empty() {
        return Err(Error::InvalidParams("no labeled instances".into()));
    }
    let mut builder = Builder::new(data, params, seed);
    builder.build(setting)?;
    let dataset = WeakDataset {
        version: FORMAT_VERSION,
        setting,
        num_classes: data.num_classes,
        feature_dim: data.feature_dim(),
        groups: builder.groups,
        metadata: Metadata {
            setting,
            seed,
            params: params.clone(),
            matching: setting.default_matching(),
        },
    };
    for (index, group) in dataset.groups.iter().enumerate() {
        if !is_faithful(group, dataset.num_classes)? {
            let labels = group.labels.clone().unwrap_or_default();
            return Err(Error::CompilerMismatch(labels).in_group(index));
        }
    }
    dataset.validate()?;
    Ok(dataset)
}
