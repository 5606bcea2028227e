//! Flat-buffer entry points for foreign callers.
//!
//! Probabilities cross as contiguous row-major `f64` buffers with explicit
//! dimensions, and annotations as JSON objects shaped like
//! [`SupervisionSpec`] (for example `{"kind": "label_proportion", "len": 3,
//! "positives": 1}`). Results are bit-identical to the typed API.

use crate::error::{Error, Result};
use crate::losses::{em_losses, em_targets, grad_logits};
use crate::supervision::SupervisionSpec;
use crate::table::Table;

pub fn parse_spec(json: &str) -> Result<SupervisionSpec> {
    serde_json::from_str(json).map_err(|e| Error::InvalidSpec(e.to_string()))
}

fn table(probs: &[f64], rows: usize, cols: usize) -> Result<Table> {
    Table::from_vec(rows, cols, probs.to_vec())
}

/// Row-major targets and the log-likelihood.
pub fn em_targets_flat(
    probs: &[f64],
    rows: usize,
    cols: usize,
    spec_json: &str,
) -> Result<(Vec<f64>, f64)> {
    let spec = parse_spec(spec_json)?;
    let out = em_targets(&spec, &table(probs, rows, cols)?)?;
    Ok((out.targets.into_vec(), out.log_z))
}

/// `L_U`, `L_S`, and the row-major logit gradient.
pub fn em_losses_and_grad_flat(
    probs: &[f64],
    rows: usize,
    cols: usize,
    spec_json: &str,
) -> Result<(f64, f64, Vec<f64>)> {
    let spec = parse_spec(spec_json)?;
    let probs = table(probs, rows, cols)?;
    let losses = em_losses(&spec, &probs)?;
    let grad = grad_logits(&spec, &probs)?;
    Ok((losses.l_u, losses.l_s, grad.into_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_comparison_fixture() {
        let (targets, log_z) =
            em_targets_flat(&[0.5; 4], 2, 2, r#"{"kind":"pairwise_comparison"}"#).unwrap();
        assert!((log_z - 0.75f64.ln()).abs() < 1e-12);
        assert!((log_z + 0.287_682_072_4).abs() < 1e-10);
        let expected = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0];
        for (t, e) in targets.iter().zip(expected) {
            assert!((t - e).abs() < 1e-12);
        }
    }

    #[test]
    fn unconstrained_passes_through() {
        let probs = [0.2, 0.8, 0.65, 0.35];
        let (targets, log_z) =
            em_targets_flat(&probs, 2, 2, r#"{"kind":"unconstrained","len":2}"#).unwrap();
        assert_eq!(targets, probs);
        assert_eq!(log_z, 0.0);
    }

    #[test]
    fn full_labels_gradient() {
        let probs = [0.3, 0.7, 0.9, 0.1];
        let (_, l_s, grad) =
            em_losses_and_grad_flat(&probs, 2, 2, r#"{"kind":"full_labels","labels":[1,0]}"#)
                .unwrap();
        assert!((l_s + 0.7f64.ln() + 0.9f64.ln()).abs() < 1e-12);
        let expected = [0.6, -0.6, -0.2, 0.2];
        for (g, e) in grad.iter().zip(expected) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn errors_carry_codes() {
        let err =
            em_targets_flat(&[-0.5, 1.5], 1, 2, r#"{"kind":"unconstrained","len":1}"#).unwrap_err();
        assert_eq!(err.code(), "InvalidProbs");
        let err = em_targets_flat(&[0.5; 4], 2, 2, r#"{"kind":"nope"}"#).unwrap_err();
        assert_eq!(err.code(), "InvalidSpec");
        let err =
            em_targets_flat(&[0.5; 3], 2, 2, r#"{"kind":"pairwise_comparison"}"#).unwrap_err();
        assert_eq!(err.code(), "ShapeMismatch");
        let err = em_targets_flat(&[1.0, 0.0], 1, 2, r#"{"kind":"full_labels","labels":[1]}"#)
            .unwrap_err();
        assert_eq!(err.code(), "InfeasibleSupervision");
    }
}
