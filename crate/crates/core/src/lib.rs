//! # weakauto
//!
//! Learning from weak supervision by compiling each annotation into a weighted
//! finite automaton. A forward-backward pass over the automaton unrolled
//! against the classifier's per-instance predictions gives exact EM targets
//! and the annotation log-likelihood in time linear in the group length.
//!
//! ```
//! use weakauto::{em_losses, SupervisionSpec, Table};
//!
//! // "the first instance is at least as positive as the second"
//! let spec = SupervisionSpec::PairwiseComparison;
//! let out = em_losses(&spec, &Table::uniform(2, 2)).unwrap();
//! assert!((out.l_s + 0.75f64.ln()).abs() < 1e-12);
//! assert!((out.targets.get(0, 1) - 2.0 / 3.0).abs() < 1e-12);
//! ```

pub mod automaton;
pub mod datagen;
pub mod error;
pub mod flat;
pub mod forward_backward;
pub mod logspace;
pub mod losses;
pub mod oracle;
pub mod supervision;
pub mod table;
pub mod trainer;
pub mod verify;

pub use automaton::{build_trellis, Nfa, Transition, Trellis, Violation};
pub use datagen::{
    gen_gaussians, weaken, Gaussians, LabeledData, Setting, WeakDataset, WeakenParams,
};
pub use error::{Error, Result};
pub use forward_backward::{posteriors, EmOutput};
pub use losses::{
    em_losses, em_targets, grad_logits, ovr_losses, CompiledSpec, LossOutput, LossWeights,
};
pub use supervision::{GroupSpec, MultiClassSpec, SupervisionSpec};
pub use table::Table;
pub use trainer::{evaluate, train, Matching, Model, TrainConfig, TrainingLog};
