//! Weighted non-deterministic finite automata over class labels, and the
//! position-unrolled trellis the forward-backward pass runs on.
//!
//! A trellis node at position `j` is a pair `(q, y)`: the automaton is in
//! state `q` after consuming label `y` at position `j`. Keeping the arriving
//! symbol in the node makes per-position class posteriors a plain reduction
//! over the nodes of one column.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::{log_add_exp, LOG_ZERO};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub symbol: usize,
    pub to: usize,
    /// Log of the transition weight; `0.0` for unweighted edges.
    pub log_weight: f64,
}

impl Transition {
    pub fn new(from: usize, symbol: usize, to: usize) -> Self {
        Transition {
            from,
            symbol,
            to,
            log_weight: 0.0,
        }
    }

    pub fn weighted(from: usize, symbol: usize, to: usize, weight: f64) -> Self {
        Transition {
            from,
            symbol,
            to,
            log_weight: crate::logspace::ln_or_neg_inf(weight),
        }
    }
}

/// Weighted NFA `(Q, Sigma, delta, q0, F)` with optional per-position symbol
/// weights.
///
/// `position_log_weights`, when present, is a `positions x num_symbols` table
/// added to the weight of every transition consuming that symbol at that
/// position. Positions past the end of the table carry no extra weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nfa {
    pub num_states: usize,
    pub num_symbols: usize,
    pub initial: usize,
    pub accepting: BTreeSet<usize>,
    pub transitions: Vec<Transition>,
    pub position_log_weights: Option<Table>,
}

/// A broken automaton invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStates,
    TooFewSymbols { num_symbols: usize },
    InitialOutOfRange { initial: usize },
    EmptyAcceptingSet,
    AcceptingOutOfRange { state: usize },
    StateOutOfRange { transition: usize },
    SymbolOutOfRange { transition: usize },
    PositiveLogWeight { transition: usize },
    NanLogWeight { transition: usize },
    PositionWeightShape { cols: usize },
    PositionWeightInvalid { position: usize, symbol: usize },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::NoStates => "NoStates",
            Violation::TooFewSymbols { .. } => "TooFewSymbols",
            Violation::InitialOutOfRange { .. } => "InitialOutOfRange",
            Violation::EmptyAcceptingSet => "EmptyAcceptingSet",
            Violation::AcceptingOutOfRange { .. } => "AcceptingOutOfRange",
            Violation::StateOutOfRange { .. } => "StateOutOfRange",
            Violation::SymbolOutOfRange { .. } => "SymbolOutOfRange",
            Violation::PositiveLogWeight { .. } => "PositiveLogWeight",
            Violation::NanLogWeight { .. } => "NanLogWeight",
            Violation::PositionWeightShape { .. } => "PositionWeightShape",
            Violation::PositionWeightInvalid { .. } => "PositionWeightInvalid",
        }
    }
}

impl Nfa {
    /// Builds an automaton and rejects it if any invariant is broken.
    pub fn checked(
        num_states: usize,
        num_symbols: usize,
        initial: usize,
        accepting: impl IntoIterator<Item = usize>,
        transitions: Vec<Transition>,
    ) -> Result<Nfa> {
        Nfa {
            num_states,
            num_symbols,
            initial,
            accepting: accepting.into_iter().collect(),
            transitions,
            position_log_weights: None,
        }
        .into_checked()
    }

    pub fn with_position_weights(mut self, log_weights: Table) -> Result<Nfa> {
        self.position_log_weights = Some(log_weights);
        self.into_checked()
    }

    fn into_checked(self) -> Result<Nfa> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidNfa(violations))
        }
    }

    /// Every invariant violation, in a stable order. Empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.num_states == 0 {
            out.push(Violation::NoStates);
        }
        if self.num_symbols < 2 {
            out.push(Violation::TooFewSymbols {
                num_symbols: self.num_symbols,
            });
        }
        if self.initial >= self.num_states {
            out.push(Violation::InitialOutOfRange {
                initial: self.initial,
            });
        }
        if self.accepting.is_empty() {
            out.push(Violation::EmptyAcceptingSet);
        }
        for &state in &self.accepting {
            if state >= self.num_states {
                out.push(Violation::AcceptingOutOfRange { state });
            }
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if t.from >= self.num_states || t.to >= self.num_states {
                out.push(Violation::StateOutOfRange { transition: i });
            }
            if t.symbol >= self.num_symbols {
                out.push(Violation::SymbolOutOfRange { transition: i });
            }
            if t.log_weight.is_nan() {
                out.push(Violation::NanLogWeight { transition: i });
            } else if t.log_weight > 0.0 {
                out.push(Violation::PositiveLogWeight { transition: i });
            }
        }
        if let Some(w) = &self.position_log_weights {
            if w.cols() != self.num_symbols {
                out.push(Violation::PositionWeightShape { cols: w.cols() });
            } else {
                for position in 0..w.rows() {
                    for symbol in 0..w.cols() {
                        let v = w.get(position, symbol);
                        if v.is_nan() || v > 0.0 {
                            out.push(Violation::PositionWeightInvalid { position, symbol });
                        }
                    }
                }
            }
        }
        out
    }

    #[inline]
    fn position_weight(&self, position: usize, symbol: usize) -> f64 {
        match &self.position_log_weights {
            Some(w) if position < w.rows() => w.get(position, symbol),
            _ => 0.0,
        }
    }

    /// Total log-weight of all accepting runs on `labeling`, or `None` if no
    /// run ends in an accepting state with positive weight.
    pub fn accepts(&self, labeling: &[usize]) -> Result<Option<f64>> {
        if let Some(&symbol) = labeling.iter().find(|&&y| y >= self.num_symbols) {
            return Err(Error::SymbolOutOfRange {
                symbol,
                num_symbols: self.num_symbols,
            });
        }
        let mut current = vec![LOG_ZERO; self.num_states];
        current[self.initial] = 0.0;
        for (position, &symbol) in labeling.iter().enumerate() {
            let extra = self.position_weight(position, symbol);
            let mut next = vec![LOG_ZERO; self.num_states];
            for t in self.transitions.iter().filter(|t| t.symbol == symbol) {
                let src = current[t.from];
                if src == LOG_ZERO {
                    continue;
                }
                next[t.to] = log_add_exp(next[t.to], src + t.log_weight + extra);
            }
            current = next;
        }
        let total = self
            .accepting
            .iter()
            .fold(LOG_ZERO, |acc, &q| log_add_exp(acc, current[q]));
        Ok((total > LOG_ZERO).then_some(total))
    }

    fn transitions_by_source(&self) -> Vec<Vec<usize>> {
        let mut by_from = vec![Vec::new(); self.num_states];
        for (i, t) in self.transitions.iter().enumerate() {
            by_from[t.from].push(i);
        }
        by_from
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrellisNode {
    pub state: usize,
    pub symbol: usize,
}

/// Edge from node `from` of the previous column to node `to` of this column.
/// In column 0, `from` is always 0 and refers to the virtual start node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrellisEdge {
    pub from: usize,
    pub to: usize,
    pub log_weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Column {
    pub nodes: Vec<TrellisNode>,
    pub edges: Vec<TrellisEdge>,
}

/// Pruned product of an automaton with a length-`L` label chain. Every node
/// lies on at least one start-to-accept path of exactly `L` edges; every node
/// of the last column is accepting.
#[derive(Debug, Clone, PartialEq)]
pub struct Trellis {
    pub num_symbols: usize,
    pub columns: Vec<Column>,
}

impl Trellis {
    #[inline]
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// True when no labeling of this length is accepted.
    pub fn is_infeasible(&self) -> bool {
        self.columns.iter().any(|c| c.nodes.is_empty())
    }

    pub fn num_nodes(&self) -> usize {
        self.columns.iter().map(|c| c.nodes.len()).sum()
    }

    pub fn num_edges(&self) -> usize {
        self.columns.iter().map(|c| c.edges.len()).sum()
    }

    /// All distinct labelings spelled by start-to-accept paths. Exponential;
    /// meant for tests and small diagnostics.
    pub fn labelings(&self) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        if self.is_infeasible() || self.is_empty() {
            return out;
        }
        // depth-first over (column, node) with the prefix so far
        let mut stack: Vec<(usize, usize, Vec<usize>)> = self.columns[0]
            .edges
            .iter()
            .map(|e| (0, e.to, vec![self.columns[0].nodes[e.to].symbol]))
            .collect();
        while let Some((j, node, prefix)) = stack.pop() {
            if j + 1 == self.len() {
                out.insert(prefix);
                continue;
            }
            for e in self.columns[j + 1].edges.iter().filter(|e| e.from == node) {
                let mut next = prefix.clone();
                next.push(self.columns[j + 1].nodes[e.to].symbol);
                stack.push((j + 1, e.to, next));
            }
        }
        out
    }
}

/// Expands `nfa` into the pruned trellis for sequences of length `length`.
///
/// Work is linear in `length` times the number of transitions. When no
/// labeling of this length is accepted every column is empty.
pub fn build_trellis(nfa: &Nfa, length: usize) -> Trellis {
    let n = nfa.num_states;
    let k = nfa.num_symbols;
    let by_from = nfa.transitions_by_source();
    let live_edge = |position: usize, t: &Transition| {
        t.log_weight > LOG_ZERO && nfa.position_weight(position, t.symbol) > LOG_ZERO
    };

    // reach[i][q]: q reachable from q0 after consuming i symbols
    let mut reach = vec![vec![false; n]; length + 1];
    reach[0][nfa.initial] = true;
    for i in 0..length {
        for q in 0..n {
            if !reach[i][q] {
                continue;
            }
            for &ti in &by_from[q] {
                let t = &nfa.transitions[ti];
                if live_edge(i, t) {
                    reach[i + 1][t.to] = true;
                }
            }
        }
    }

    // co[i][q]: an accepting state is reachable from q in exactly length - i steps
    let mut co = vec![vec![false; n]; length + 1];
    for &q in &nfa.accepting {
        co[length][q] = true;
    }
    for i in (0..length).rev() {
        for q in 0..n {
            co[i][q] = by_from[q].iter().any(|&ti| {
                let t = &nfa.transitions[ti];
                live_edge(i, t) && co[i + 1][t.to]
            });
        }
    }

    if !co[0][nfa.initial] {
        return Trellis {
            num_symbols: k,
            columns: vec![Column::default(); length],
        };
    }

    let live = |i: usize, q: usize| reach[i][q] && co[i][q];
    let mut columns: Vec<Column> = Vec::with_capacity(length);
    // node indices of the previous column, grouped by state
    let mut prev_by_state: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..length {
        let mut index: Vec<Option<usize>> = vec![None; n * k];
        let mut column = Column::default();
        for p in 0..n {
            if !live(j, p) {
                continue;
            }
            for &ti in &by_from[p] {
                let t = &nfa.transitions[ti];
                if !live_edge(j, t) || !live(j + 1, t.to) {
                    continue;
                }
                let slot = t.to * k + t.symbol;
                let to = *index[slot].get_or_insert_with(|| {
                    column.nodes.push(TrellisNode {
                        state: t.to,
                        symbol: t.symbol,
                    });
                    column.nodes.len() - 1
                });
                let log_weight = t.log_weight + nfa.position_weight(j, t.symbol);
                if j == 0 {
                    column.edges.push(TrellisEdge {
                        from: 0,
                        to,
                        log_weight,
                    });
                } else {
                    for &from in &prev_by_state[p] {
                        column.edges.push(TrellisEdge {
                            from,
                            to,
                            log_weight,
                        });
                    }
                }
            }
        }
        prev_by_state.iter_mut().for_each(Vec::clear);
        for (i, node) in column.nodes.iter().enumerate() {
            prev_by_state[node.state].push(i);
        }
        columns.push(column);
    }
    Trellis {
        num_symbols: k,
        columns,
    }
}
