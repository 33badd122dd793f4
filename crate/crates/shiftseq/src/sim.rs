//! Synchronous round-based message-passing simulator.
//!
//! Each round advances all nodes together: node `n` replaces its value by
//! a weighted sum over its in-neighbors' previous-round values, the
//! weights being that round's shift-operator entries. A node reads its
//! own previous value only through a self-loop. Per-node summation order
//! is the edge-list order, so runs are bit-reproducible.

use std::path::Path;

use nalgebra::DVector;

use crate::design::ShiftSequence;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Node values at a synchronization point.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub values: DVector<f64>,
    /// Rounds applied so far; never exceeds the sequence length.
    pub round: usize,
}

/// Full record of a simulation: the state after every round (round 0 is
/// the input signal, bit-exact) and per-round message counts.
#[derive(Debug, Clone)]
pub struct RoundTrace {
    pub states: Vec<DVector<f64>>,
    pub messages_sent: Vec<usize>,
}

impl RoundTrace {
    /// Number of rounds executed.
    pub fn rounds(&self) -> usize {
        self.states.len() - 1
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trace holds at least the input")
    }
}

/// Observes every read a node performs while updating. The simulator
/// reports each `(reader, source)` value access; a tracking implementation
/// can assert that only in-neighborhood values are ever touched.
pub trait ReadObserver {
    fn record(&mut self, reader: usize, source: usize);
}

/// Observer that ignores everything.
pub struct NoOpObserver;

impl ReadObserver for NoOpObserver {
    fn record(&mut self, _reader: usize, _source: usize) {}
}

/// Runs the sequence on an input signal, one operator per round.
pub fn run_rounds(graph: &Graph, seq: &ShiftSequence, signal: &DVector<f64>) -> Result<RoundTrace> {
    run_rounds_observed(graph, seq, signal, &mut NoOpObserver)
}

/// [`run_rounds`] with an access observer attached.
pub fn run_rounds_observed(
    graph: &Graph,
    seq: &ShiftSequence,
    signal: &DVector<f64>,
    observer: &mut dyn ReadObserver,
) -> Result<RoundTrace> {
    let n = graph.n_vertices();
    if signal.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} entries but the graph has {n} vertices",
            signal.len()
        )));
    }
    if seq.graph() != graph {
        return Err(Error::PatternMismatch(
            "sequence was built against a different graph".into(),
        ));
    }
    // Per-receiver rows in edge-list order: (sender, edge index).
    let mut rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, &(recv, send)) in graph.edges().iter().enumerate() {
        rows[recv].push((send, k));
    }
    let non_self_edges = graph
        .edges()
        .iter()
        .filter(|&&(recv, send)| recv != send)
        .count();

    let mut state = NetworkState {
        values: signal.clone(),
        round: 0,
    };
    let mut trace = RoundTrace {
        states: vec![state.values.clone()],
        messages_sent: Vec::with_capacity(seq.len()),
    };
    for l in 0..seq.len() {
        let coeffs = seq.coeffs(l);
        let mut next = DVector::zeros(n);
        for (node, row) in rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(send, k) in row {
                observer.record(node, send);
                acc += coeffs[k] * state.values[send];
            }
            next[node] = acc;
        }
        state = NetworkState {
            values: next,
            round: l + 1,
        };
        trace.states.push(state.values.clone());
        trace.messages_sent.push(non_self_edges);
    }
    Ok(trace)
}

/// Max-abs deviation of every traced state from the centralized prefix
/// product `S_l .. S_1 z`, including round 0. Panics on inconsistent
/// inputs.
pub fn compare_centralized(
    trace: &RoundTrace,
    seq: &ShiftSequence,
    signal: &DVector<f64>,
) -> Vec<f64> {
    assert_eq!(trace.rounds(), seq.len(), "trace and sequence length");
    assert_eq!(signal.len(), seq.n(), "signal length");
    let mut reference = signal.clone();
    let mut out = Vec::with_capacity(seq.len() + 1);
    out.push((&trace.states[0] - &reference).amax());
    for l in 0..seq.len() {
        reference = seq.dense(l) * reference;
        out.push((&trace.states[l + 1] - &reference).amax());
    }
    out
}

/// Per-node coefficient storage for an `L`-round design: node `n` keeps
/// `L` scalars per in-neighbor.
pub fn storage_per_node(graph: &Graph, rounds: usize) -> Vec<usize> {
    (0..graph.n_vertices())
        .map(|n| rounds * graph.in_degree(n))
        .collect()
}

/// Reads a signal vector: one real value per line.
pub fn read_signal(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: format!("invalid number `{line}`"),
        })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "empty signal file".into(),
        });
    }
    Ok(DVector::from_vec(values))
}

/// Writes a signal vector in the format read by [`read_signal`].
pub fn write_signal(path: impl AsRef<Path>, signal: &DVector<f64>) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    for v in signal.iter() {
        writeln!(out, "{v:.16e}").expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}
