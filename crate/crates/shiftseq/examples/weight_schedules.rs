//! Compares the stage-weight schedules on one fixed problem. Increasing
//! weights trade early-round accuracy for a better final approximation;
//! `final-only` optimizes the last round alone.

use shiftseq::design::{bcd_design, make_weights, DesignProblem, SolverConfig, WeightScheme};
use shiftseq::graph::er_random_graph;
use shiftseq::targets::consensus_matrix;

fn main() -> shiftseq::Result<()> {
    let n = 15;
    let rounds = 6;
    let graph = er_random_graph(n, 0.35, false, true, 3, true)?;
    let target = consensus_matrix(n);

    let schemes = [
        WeightScheme::Uniform,
        WeightScheme::Linear,
        WeightScheme::Geometric(2.0),
        WeightScheme::FinalOnly,
    ];

    println!("relative stage errors by weight schedule (rows: scheme, cols: round 1..{rounds})");
    for scheme in schemes {
        let weights = make_weights(scheme, rounds)?;
        let problem = DesignProblem::new(target.clone(), graph.clone(), weights, false)?;
        let (_, report) = bcd_design(&problem, &SolverConfig::default())?;
        let cells: Vec<String> = report
            .stage_errors
            .iter()
            .map(|e| format!("{e:.2e}"))
            .collect();
        println!("{:<14} {}", scheme.to_string(), cells.join("  "));
    }
    Ok(())
}
