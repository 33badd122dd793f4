//! Round-trips every file format: writes a graph to the edge-list format,
//! dumps a designed sequence as matrix text files, saves a signal, then
//! reloads everything and replays the sequence in the simulator.

use nalgebra::DVector;
use shiftseq::design::{bcd_design, make_weights, DesignProblem, SolverConfig, WeightScheme};
use shiftseq::graph::{er_random_graph, read_edge_list, write_edge_list};
use shiftseq::harness::load_sequence;
use shiftseq::sim::{compare_centralized, read_signal, run_rounds, write_signal};
use shiftseq::targets::{consensus_matrix, save_matrix};

fn main() -> shiftseq::Result<()> {
    let dir = std::env::temp_dir().join("shiftseq_persist_and_replay");
    std::fs::create_dir_all(&dir)?;

    let n = 10;
    let rounds = 4;
    let graph = er_random_graph(n, 0.4, false, true, 13, true)?;
    write_edge_list(&graph, dir.join("network.edges"))?;

    let weights = make_weights(WeightScheme::Linear, rounds)?;
    let problem = DesignProblem::new(consensus_matrix(n), graph.clone(), weights, false)?;
    let (seq, _) = bcd_design(&problem, &SolverConfig::default())?;
    for i in 0..seq.len() {
        save_matrix(dir.join(format!("seq_{}.mat", i + 1)), &seq.dense(i))?;
    }
    write_signal(
        dir.join("signal.sig"),
        &DVector::from_fn(n, |i, _| i as f64),
    )?;

    // reload from disk and replay
    let graph_back = read_edge_list(dir.join("network.edges"))?;
    assert_eq!(graph, graph_back, "edge-list format round-trips exactly");
    let seq_back = load_sequence(&graph_back, &dir)?;
    assert_eq!(seq, seq_back, "matrix text format round-trips exactly");
    let signal = read_signal(dir.join("signal.sig"))?;

    let trace = run_rounds(&graph_back, &seq_back, &signal)?;
    let worst = compare_centralized(&trace, &seq_back, &signal)
        .into_iter()
        .fold(0.0f64, f64::max);
    println!("replayed {} rounds from {}", trace.rounds(), dir.display());
    println!(
        "input  {:?}",
        signal.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>()
    );
    println!(
        "output {:?}",
        trace
            .final_state()
            .iter()
            .map(|v| format!("{v:.2}"))
            .collect::<Vec<_>>()
    );
    println!("max deviation from the centralized product: {worst:.2e}");
    Ok(())
}
