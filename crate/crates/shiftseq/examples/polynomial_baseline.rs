//! Pits the successive-operator design against the classical baseline:
//! a polynomial in one fixed shift matrix. Both use the same number of
//! exchange rounds; the successive design has one full operator per round
//! instead of one scalar coefficient, and correspondingly lower error.

use nalgebra::DMatrix;
use shiftseq::design::{bcd_design, make_weights, DesignProblem, SolverConfig, WeightScheme};
use shiftseq::graph::er_random_graph;
use shiftseq::targets::{consensus_matrix, gf_baseline_fit};

fn main() -> shiftseq::Result<()> {
    let n = 15;
    let graph = er_random_graph(n, 0.35, false, true, 3, true)?;
    let target = consensus_matrix(n);

    // fixed shift for the baseline: the 0/1 adjacency (with self-loops)
    let mut shift = DMatrix::zeros(n, n);
    for &(recv, send) in graph.edges() {
        shift[(recv, send)] = 1.0;
    }

    println!("rounds | fixed-shift polynomial | successive operators");
    for rounds in 1..=5 {
        // a degree-(rounds) polynomial costs `rounds` exchanges
        let fit = gf_baseline_fit(&shift, &target, rounds + 1)?;

        let weights = make_weights(WeightScheme::Linear, rounds)?;
        let problem = DesignProblem::new(target.clone(), graph.clone(), weights, false)?;
        let (_, report) = bcd_design(&problem, &SolverConfig::default())?;

        println!(
            "{rounds:>6} | {:>22.6e} | {:>20.6e}",
            fit.residual,
            report.stage_errors.last().unwrap()
        );
    }
    Ok(())
}
