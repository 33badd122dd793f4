//! Designs a short operator sequence that drives a sensor network to the
//! average of its initial values, then reports how fast the error decays
//! per communication round.

use shiftseq::design::{bcd_design, make_weights, DesignProblem, SolverConfig, WeightScheme};
use shiftseq::graph::er_random_graph;
use shiftseq::targets::consensus_matrix;

fn main() -> shiftseq::Result<()> {
    let n = 20;
    let rounds = 8;
    let graph = er_random_graph(n, 0.3, false, true, 7, true)?;
    println!(
        "graph: {} vertices, {} stored edge pairs (undirected, self-loops)",
        graph.n_vertices(),
        graph.n_edges()
    );

    let weights = make_weights(WeightScheme::Linear, rounds)?;
    let problem = DesignProblem::new(consensus_matrix(n), graph, weights, false)?;
    let cfg = SolverConfig {
        i_max: 15,
        ..SolverConfig::default()
    };
    let (seq, report) = bcd_design(&problem, &cfg)?;

    println!(
        "designed {} operators in {:.2} s",
        seq.len(),
        report.wall_time
    );
    println!("round | relative stage error");
    for (l, err) in report.stage_errors.iter().enumerate() {
        println!("{:>5} | {:.6e}", l + 1, err);
    }
    match report.effective_rounds {
        Some(l) => println!("relative error falls below 1e-3 after {l} rounds"),
        None => println!("the 1e-3 threshold was not reached; try more rounds"),
    }
    Ok(())
}
