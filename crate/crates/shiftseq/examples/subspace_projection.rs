//! Decentralized denoising: project a noisy signal onto a low-dimensional
//! signal subspace using only neighbor-to-neighbor exchanges.
//!
//! The clean signal lives in a random r-dimensional subspace; the target
//! transformation is the orthogonal projector onto it. After the design,
//! running the operator sequence on the noisy observation approximates
//! the centralized projection.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shiftseq::design::{bcd_design, make_weights, DesignProblem, SolverConfig, WeightScheme};
use shiftseq::graph::er_random_graph;
use shiftseq::sim::run_rounds;
use shiftseq::targets::{projection_from_basis, random_subspace_basis};

fn main() -> shiftseq::Result<()> {
    let n = 16;
    let r = 3;
    let rounds = 8;
    let graph = er_random_graph(n, 0.35, false, true, 11, true)?;
    let basis = random_subspace_basis(n, r, 42)?;
    let projector = projection_from_basis(&basis);

    let weights = make_weights(WeightScheme::Linear, rounds)?;
    let problem = DesignProblem::new(projector.clone(), graph.clone(), weights, false)?;
    let (seq, report) = bcd_design(&problem, &SolverConfig::default())?;
    println!(
        "projector design: final stage error {:.3e}",
        report.stage_errors.last().unwrap()
    );

    // noisy observation z = x + v with x in the subspace
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let coeffs = DVector::from_fn(r, |_, _| rng.random_range(-1.0..1.0));
    let clean = &basis * &coeffs;
    let noise = DVector::from_fn(n, |_, _| 0.3 * rng.random_range(-1.0..1.0));
    let observed = &clean + &noise;

    let trace = run_rounds(&graph, &seq, &observed)?;
    let recovered = trace.final_state();
    let centralized = &projector * &observed;

    println!(
        "noise level            |z - x| = {:.4e}",
        (&observed - &clean).norm()
    );
    println!(
        "decentralized estimate |out - x| = {:.4e}",
        (recovered - &clean).norm()
    );
    println!(
        "gap to centralized projection    = {:.4e}",
        (recovered - centralized).norm()
    );
    println!(
        "({} rounds, {} messages per round)",
        trace.rounds(),
        trace.messages_sent[0]
    );
    Ok(())
}
