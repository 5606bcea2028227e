//! Log-space forward-backward over a [`Trellis`].
//!
//! `alpha[j][n]` is the log mass of all accepted prefixes ending in node `n`
//! at position `j`, emission at `j` included. `beta[j][n]` is the log mass of
//! all accepted suffixes after `n`, emission at `j` excluded, so that
//! `alpha + beta` counts each emission exactly once. Work per pass is linear
//! in the number of trellis edges.

use crate::automaton::Trellis;
use crate::error::{Error, Result};
use crate::logspace::{log_add_exp, log_sum_exp, LOG_ZERO};
use crate::table::Table;

/// Per-node log scores, one vector per position.
pub type NodeScores = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTables {
    pub alpha: NodeScores,
    pub beta: NodeScores,
}

/// EM targets `p(y_j | x, w)` and the accepted log-likelihood `log p(w | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmOutput {
    pub targets: Table,
    pub log_z: f64,
}

fn check_shape(trellis: &Trellis, log_probs: &Table) -> Result<()> {
    if log_probs.rows() != trellis.len() || log_probs.cols() != trellis.num_symbols {
        return Err(Error::shape(
            format!(
                "{}x{} log-probabilities",
                trellis.len(),
                trellis.num_symbols
            ),
            format!("{}x{}", log_probs.rows(), log_probs.cols()),
        ));
    }
    Ok(())
}

pub fn forward(trellis: &Trellis, log_probs: &Table) -> Result<NodeScores> {
    check_shape(trellis, log_probs)?;
    let mut alpha: NodeScores = Vec::with_capacity(trellis.len());
    let start = [0.0];
    for (j, column) in trellis.columns.iter().enumerate() {
        let prev: &[f64] = if j == 0 { &start } else { &alpha[j - 1] };
        let mut scores = vec![LOG_ZERO; column.nodes.len()];
        for e in &column.edges {
            scores[e.to] = log_add_exp(scores[e.to], prev[e.from] + e.log_weight);
        }
        let emit = log_probs.row(j);
        for (s, node) in scores.iter_mut().zip(&column.nodes) {
            *s += emit[node.symbol];
        }
        alpha.push(scores);
    }
    Ok(alpha)
}

pub fn backward(trellis: &Trellis, log_probs: &Table) -> Result<NodeScores> {
    check_shape(trellis, log_probs)?;
    let len = trellis.len();
    let mut beta: NodeScores = trellis
        .columns
        .iter()
        .map(|c| vec![LOG_ZERO; c.nodes.len()])
        .collect();
    if len == 0 {
        return Ok(beta);
    }
    beta[len - 1].iter_mut().for_each(|b| *b = 0.0);
    for j in (0..len - 1).rev() {
        let next = &trellis.columns[j + 1];
        let emit = log_probs.row(j + 1);
        let (head, tail) = beta.split_at_mut(j + 1);
        let (current, after) = (&mut head[j], &tail[0]);
        for e in &next.edges {
            let through = after[e.to] + e.log_weight + emit[next.nodes[e.to].symbol];
            current[e.from] = log_add_exp(current[e.from], through);
        }
    }
    Ok(beta)
}

pub fn score_tables(trellis: &Trellis, log_probs: &Table) -> Result<ScoreTables> {
    Ok(ScoreTables {
        alpha: forward(trellis, log_probs)?,
        beta: backward(trellis, log_probs)?,
    })
}

/// Accepted log-likelihood from the last forward column.
pub fn log_likelihood(trellis: &Trellis, alpha: &NodeScores) -> f64 {
    match (trellis.len(), alpha.last()) {
        (0, _) | (_, None) => 0.0,
        (_, Some(last)) => log_sum_exp(last.iter().copied()),
    }
}

/// Unnormalized log mass `ln sum_q exp(alpha + beta)` per position and class.
pub fn position_masses(trellis: &Trellis, scores: &ScoreTables) -> Table {
    let k = trellis.num_symbols;
    let mut mass = Table::filled(trellis.len(), k, LOG_ZERO);
    for (j, column) in trellis.columns.iter().enumerate() {
        let row = mass.row_mut(j);
        for (n, node) in column.nodes.iter().enumerate() {
            let v = scores.alpha[j][n] + scores.beta[j][n];
            row[node.symbol] = log_add_exp(row[node.symbol], v);
        }
    }
    mass
}

/// Posterior EM targets and accepted log-likelihood.
pub fn posteriors(trellis: &Trellis, log_probs: &Table) -> Result<EmOutput> {
    let scores = score_tables(trellis, log_probs)?;
    let log_z = log_likelihood(trellis, &scores.alpha);
    if log_z == LOG_ZERO || trellis.is_infeasible() {
        return Err(Error::InfeasibleSupervision);
    }
    let mass = position_masses(trellis, &scores);
    let mut targets = Table::zeros(mass.rows(), mass.cols());
    for j in 0..mass.rows() {
        let row = mass.row(j);
        let norm = log_sum_exp(row.iter().copied());
        for (t, &m) in targets.row_mut(j).iter_mut().zip(row) {
            *t = (m - norm).exp();
        }
    }
    Ok(EmOutput { targets, log_z })
}
