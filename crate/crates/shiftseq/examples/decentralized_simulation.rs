//! Runs a designed sequence through the synchronous message-passing
//! simulator with an access tracker attached, demonstrating that every
//! node update touches in-neighborhood values only and that the
//! round-by-round states match the centralized matrix product.

use std::collections::HashSet;

use nalgebra::DVector;
use shiftseq::design::{bcd_design, make_weights, DesignProblem, SolverConfig, WeightScheme};
use shiftseq::graph::er_random_graph;
use shiftseq::sim::{compare_centralized, run_rounds_observed, storage_per_node, ReadObserver};
use shiftseq::targets::consensus_matrix;

struct Auditor {
    edges: HashSet<(usize, usize)>,
    reads: usize,
    violations: usize,
}

impl ReadObserver for Auditor {
    fn record(&mut self, reader: usize, source: usize) {
        self.reads += 1;
        if !self.edges.contains(&(reader, source)) {
            self.violations += 1;
        }
    }
}

fn main() -> shiftseq::Result<()> {
    let n = 12;
    let rounds = 5;
    let graph = er_random_graph(n, 0.4, true, true, 23, true)?;
    let weights = make_weights(WeightScheme::Linear, rounds)?;
    let problem = DesignProblem::new(consensus_matrix(n), graph.clone(), weights, false)?;
    let (seq, _) = bcd_design(&problem, &SolverConfig::default())?;

    let signal = DVector::from_fn(n, |i, _| (i as f64) - n as f64 / 2.0);
    let mut auditor = Auditor {
        edges: graph.edges().iter().copied().collect(),
        reads: 0,
        violations: 0,
    };
    let trace = run_rounds_observed(&graph, &seq, &signal, &mut auditor)?;

    println!(
        "{} rounds on {} nodes: {} value reads, {} outside any neighborhood",
        trace.rounds(),
        n,
        auditor.reads,
        auditor.violations
    );
    println!("messages per round: {:?}", trace.messages_sent);
    let deviations = compare_centralized(&trace, &seq, &signal);
    println!("max deviation from the centralized product, per round:");
    for (l, d) in deviations.iter().enumerate() {
        println!("  round {l}: {d:.3e}");
    }
    let storage = storage_per_node(&graph, rounds);
    println!(
        "per-node coefficient storage: min {} / max {} scalars",
        storage.iter().min().unwrap(),
        storage.iter().max().unwrap()
    );
    Ok(())
}
