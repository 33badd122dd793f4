//! The successive shift-operator designer: weighted multi-stage objective,
//! per-block vectorized least-squares assembly, and the block-coordinate
//! descent outer loop.
//!
//! A design instance asks for operators `S_1 .. S_L`, each constrained to
//! the graph's sparsity pattern, whose composed prefix products
//! `S_l .. S_1` track a target matrix `H` at every stage:
//!
//! ```text
//! minimize  sum_l  alpha_l * |H - S_l S_{l-1} ... S_1|_F^2
//! ```
//!
//! Each block subproblem (all stages fixed except `S_j`) is an exact
//! linear least-squares problem in the free edge coefficients; cycling
//! through the blocks never increases the objective.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, SelectionMatrix};
use crate::linalg;

/// Absolute slack allowed on the nonincreasing objective trace before a
/// step counts as a monotonicity violation.
pub const MONOTONICITY_SLACK: f64 = 1e-10;

/// Weight schedules over the per-stage errors. Later stages get at least
/// as much weight as earlier ones except under `Uniform`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    Uniform,
    Linear,
    Geometric(f64),
    FinalOnly,
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Uniform => write!(f, "uniform"),
            WeightScheme::Linear => write!(f, "linear"),
            WeightScheme::Geometric(q) => write!(f, "geometric:{q}"),
            WeightScheme::FinalOnly => write!(f, "final-only"),
        }
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(WeightScheme::Uniform),
            "linear" => Ok(WeightScheme::Linear),
            "final-only" | "final_only" | "final" => Ok(WeightScheme::FinalOnly),
            other => {
                if let Some(q) = other.strip_prefix("geometric:") {
                    let q: f64 = q.parse().map_err(|_| {
                        Error::InvalidParameter(format!("invalid geometric ratio `{q}`"))
                    })?;
                    Ok(WeightScheme::Geometric(q))
                } else {
                    Err(Error::InvalidParameter(format!(
                        "unknown weight scheme `{other}` \
                         (expected uniform | linear | geometric:RATIO | final-only)"
                    )))
                }
            }
        }
    }
}

/// Builds a nonnegative weight vector of length `len` summing to one.
pub fn make_weights(scheme: WeightScheme, len: usize) -> Result<DVector<f64>> {
    if len == 0 {
        return Err(Error::InvalidParameter(
            "weight vector needs at least one stage".into(),
        ));
    }
    let raw: DVector<f64> = match scheme {
        WeightScheme::Uniform => DVector::from_element(len, 1.0),
        WeightScheme::Linear => DVector::from_fn(len, |l, _| (l + 1) as f64),
        WeightScheme::Geometric(q) => {
            if q <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "geometric ratio must be positive, got {q}"
                )));
            }
            DVector::from_fn(len, |l, _| q.powi(l as i32))
        }
        WeightScheme::FinalOnly => {
            DVector::from_fn(len, |l, _| if l + 1 == len { 1.0 } else { 0.0 })
        }
    };
    let total: f64 = raw.sum();
    Ok(raw / total)
}

/// An ordered list of topology-constrained operators, stored as one
/// coefficient vector per stage against a shared selection matrix.
///
/// Every reconstructed stage has exact zeros off the edge pattern, by
/// construction. The list may be empty when only simulation is involved;
/// design problems require at least one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSequence {
    graph: Graph,
    selection: SelectionMatrix,
    coeffs: Vec<DVector<f64>>,
}

impl ShiftSequence {
    /// The identity masked onto the edge pattern, repeated `len` times:
    /// diagonal ones only where self-loops exist (possibly the zero
    /// matrix). This is the solver's initial iterate.
    pub fn masked_identity(graph: &Graph, len: usize) -> Self {
        let selection = graph.selection_matrix();
        let coeffs = DVector::from_iterator(
            graph.n_edges(),
            graph
                .edges()
                .iter()
                .map(|&(recv, send)| if recv == send { 1.0 } else { 0.0 }),
        );
        ShiftSequence {
            graph: graph.clone(),
            selection,
            coeffs: vec![coeffs; len],
        }
    }

    /// Wraps raw per-stage coefficient vectors (edge order) for `graph`.
    pub fn from_coeffs(graph: &Graph, coeffs: Vec<DVector<f64>>) -> Result<Self> {
        for (i, c) in coeffs.iter().enumerate() {
            if c.len() != graph.n_edges() {
                return Err(Error::DimensionMismatch(format!(
                    "stage {} has {} coefficients but the graph has {} edges",
                    i + 1,
                    c.len(),
                    graph.n_edges()
                )));
            }
        }
        Ok(ShiftSequence {
            graph: graph.clone(),
            selection: graph.selection_matrix(),
            coeffs,
        })
    }

    /// Gathers dense operators into a sequence, rejecting any nonzero off
    /// the edge pattern.
    pub fn from_dense(graph: &Graph, operators: &[DMatrix<f64>]) -> Result<Self> {
        let n = graph.n_vertices();
        let selection = graph.selection_matrix();
        let pattern: std::collections::HashSet<(usize, usize)> =
            graph.edges().iter().copied().collect();
        let mut coeffs = Vec::with_capacity(operators.len());
        for (i, op) in operators.iter().enumerate() {
            if op.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "stage {} operator is {}x{}, expected {n}x{n}",
                    i + 1,
                    op.nrows(),
                    op.ncols()
                )));
            }
            for r in 0..n {
                for c in 0..n {
                    if op[(r, c)] != 0.0 && !pattern.contains(&(r, c)) {
                        return Err(Error::PatternMismatch(format!(
                            "stage {} has nonzero entry at ({r}, {c}) with no edge",
                            i + 1
                        )));
                    }
                }
            }
            coeffs.push(selection.gather(op));
        }
        Ok(ShiftSequence {
            graph: graph.clone(),
            selection,
            coeffs,
        })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn n(&self) -> usize {
        self.graph.n_vertices()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn selection(&self) -> &SelectionMatrix {
        &self.selection
    }

    /// Coefficients of stage `i` (0-based), in edge order.
    pub fn coeffs(&self, i: usize) -> &DVector<f64> {
        &self.coeffs[i]
    }

    /// Dense reconstruction of stage `i` (0-based).
    pub fn dense(&self, i: usize) -> DMatrix<f64> {
        self.selection.scatter(&self.coeffs[i])
    }

    /// Replaces stage `i`'s coefficients, in edge order.
    pub fn set_stage(&mut self, i: usize, coeffs: DVector<f64>) -> Result<()> {
        if coeffs.len() != self.graph.n_edges() {
            return Err(Error::DimensionMismatch(format!(
                "stage {} given {} coefficients but the graph has {} edges",
                i + 1,
                coeffs.len(),
                self.graph.n_edges()
            )));
        }
        self.coeffs[i] = coeffs;
        Ok(())
    }

    /// Running prefix products `S_1, S_2 S_1, ..., S_L .. S_1`.
    pub fn prefix_products(&self) -> Vec<DMatrix<f64>> {
        let n = self.n();
        let mut out = Vec::with_capacity(self.len());
        let mut prod = DMatrix::identity(n, n);
        for i in 0..self.len() {
            prod = self.dense(i) * prod;
            out.push(prod.clone());
        }
        out
    }

    /// The full composed product `S_L .. S_1`; identity when empty.
    pub fn product(&self) -> DMatrix<f64> {
        self.prefix_products()
            .pop()
            .unwrap_or_else(|| DMatrix::identity(self.n(), self.n()))
    }
}

/// A complete design instance: target, graph, per-stage weights, and the
/// optional symmetry constraint.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    target: DMatrix<f64>,
    graph: Graph,
    weights: DVector<f64>,
    symmetric: bool,
}

impl DesignProblem {
    pub fn new(
        target: DMatrix<f64>,
        graph: Graph,
        weights: DVector<f64>,
        symmetric: bool,
    ) -> Result<Self> {
        let n = graph.n_vertices();
        if target.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "target is {}x{} but the graph has {n} vertices",
                target.nrows(),
                target.ncols()
            )));
        }
        if weights.is_empty() {
            return Err(Error::InvalidParameter(
                "a design needs at least one stage".into(),
            ));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidParameter(
                "stage weights must be nonnegative".into(),
            ));
        }
        let total: f64 = weights.sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "stage weights must sum to one, got {total}"
            )));
        }
        if symmetric && graph.is_directed() {
            return Err(Error::InvalidParameter(
                "the symmetry constraint requires an undirected graph".into(),
            ));
        }
        Ok(DesignProblem {
            target,
            graph,
            weights,
            symmetric,
        })
    }

    pub fn target(&self) -> &DMatrix<f64> {
        &self.target
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Number of stages `L`.
    pub fn rounds(&self) -> usize {
        self.weights.len()
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }
}

/// Solver knobs. `i_max` bounds the outer sweeps; a sweep that reduces
/// the objective by less than `rel_tol` of its previous value stops
/// early. `ridge` adds a Tikhonov term to each block solve; `delta` is
/// the relative stage-error threshold behind the effective-rounds metric.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverConfig {
    pub i_max: usize,
    pub rel_tol: f64,
    pub ridge: f64,
    pub delta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            i_max: 50,
            rel_tol: 1e-9,
            ridge: 0.0,
            delta: 1e-3,
        }
    }
}

/// One objective evaluation in the solve trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// Outer sweep, 1-based.
    pub sweep: usize,
    /// Block index `j`, 1-based.
    pub block: usize,
    /// Objective value right after this block update.
    pub objective: f64,
}

/// Everything the solver reports besides the sequence itself.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Objective after every block update, in update order.
    pub objective_trace: Vec<TracePoint>,
    /// `|H - S_l .. S_1|_F` for each stage `l`.
    pub stage_errors: Vec<f64>,
    /// Smallest stage whose relative error meets the `delta` threshold.
    pub effective_rounds: Option<usize>,
    /// Seconds spent in the solver.
    pub wall_time: f64,
    /// Trace steps where the objective rose beyond the allowed slack;
    /// zero for exact (ridge-free) block solves.
    pub nonmonotone_steps: usize,
}

/// The weighted multi-stage objective
/// `sum_l alpha_l |H - S_l .. S_1|_F^2`, evaluated with running prefix
/// products.
pub fn objective(problem: &DesignProblem, seq: &ShiftSequence) -> Result<f64> {
    check_compatible(problem, seq)?;
    let n = problem.graph.n_vertices();
    let mut prod = DMatrix::identity(n, n);
    let mut total = 0.0;
    for l in 0..seq.len() {
        prod = seq.dense(l) * prod;
        total += problem.weights[l] * (&problem.target - &prod).norm_squared();
    }
    Ok(total)
}

/// Frobenius error of every prefix product against the target:
/// entry `l` is `|H - S_{l+1} .. S_1|_F`.
pub fn stage_errors(target: &DMatrix<f64>, seq: &ShiftSequence) -> Result<Vec<f64>> {
    if target.shape() != (seq.n(), seq.n()) {
        return Err(Error::DimensionMismatch(format!(
            "target is {}x{} but the sequence acts on {} nodes",
            target.nrows(),
            target.ncols(),
            seq.n()
        )));
    }
    let n = seq.n();
    let mut prod = DMatrix::identity(n, n);
    let mut out = Vec::with_capacity(seq.len());
    for l in 0..seq.len() {
        prod = seq.dense(l) * prod;
        out.push((target - &prod).norm());
    }
    Ok(out)
}

/// The smallest 1-based stage whose relative error
/// `stage_errors[l] / target_norm` is at most `delta`; `None` if no
/// stage qualifies.
pub fn effective_rounds(stage_errors: &[f64], target_norm: f64, delta: f64) -> Option<usize> {
    assert!(delta > 0.0, "delta must be positive");
    assert!(target_norm > 0.0, "target norm must be positive");
    stage_errors
        .iter()
        .position(|&err| err / target_norm <= delta)
        .map(|idx| idx + 1)
}

/// Ties mirrored edge coefficients together for symmetric designs: one
/// free variable per unordered vertex pair.
#[derive(Debug, Clone)]
pub struct SymmetricTying {
    free_of_edge: Vec<usize>,
    n_free: usize,
}

impl SymmetricTying {
    pub fn new(graph: &Graph) -> Result<Self> {
        if graph.is_directed() {
            return Err(Error::InvalidParameter(
                "symmetric tying requires an undirected graph".into(),
            ));
        }
        let mut first_seen: HashMap<(usize, usize), usize> = HashMap::new();
        let mut free_of_edge = Vec::with_capacity(graph.n_edges());
        let mut n_free = 0;
        for &(recv, send) in graph.edges() {
            let key = (recv.min(send), recv.max(send));
            let idx = *first_seen.entry(key).or_insert_with(|| {
                let idx = n_free;
                n_free += 1;
                idx
            });
            free_of_edge.push(idx);
        }
        Ok(SymmetricTying {
            free_of_edge,
            n_free,
        })
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Free-variable index backing edge `k`.
    pub fn free_index(&self, k: usize) -> usize {
        self.free_of_edge[k]
    }

    /// Expands free coefficients back to per-edge coefficients; mirrored
    /// edges receive bitwise-identical values.
    pub fn expand(&self, free: &DVector<f64>) -> DVector<f64> {
        assert_eq!(free.len(), self.n_free, "free coefficient count");
        DVector::from_iterator(
            self.free_of_edge.len(),
            self.free_of_edge.iter().map(|&f| free[f]),
        )
    }
}

/// Stacks the vectorized least-squares system for block `j` (1-based):
/// one row block per stage `l = j..L`, with block `l` holding
/// `sqrt(alpha_l) * (row n' of S_{j-1:1}) kron (column n of S_{l:j+1})`
/// per free entry, and right-hand side `sqrt(alpha_l) * vec(H)`.
///
/// No `N^2 x N^2` Kronecker product is ever formed. Under the symmetry
/// constraint the columns of mirrored edges are summed into one free
/// column; otherwise columns match the edge order.
pub fn assemble_block_ls(
    problem: &DesignProblem,
    seq: &ShiftSequence,
    j: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_compatible(problem, seq)?;
    let rounds = problem.rounds();
    if j == 0 || j > rounds {
        return Err(Error::InvalidParameter(format!(
            "block index must lie in 1..={rounds}, got {j}"
        )));
    }
    let tying = if problem.symmetric {
        Some(SymmetricTying::new(&problem.graph)?)
    } else {
        None
    };
    let n = problem.graph.n_vertices();
    let mut prefix = DMatrix::identity(n, n);
    for i in 0..j - 1 {
        prefix = seq.dense(i) * prefix;
    }
    let suffixes = suffix_products(seq, j, rounds);
    Ok(assemble_with_products(
        &problem.target,
        &problem.graph,
        tying.as_ref(),
        &problem.weights.as_slice()[j - 1..],
        &prefix,
        &suffixes,
    ))
}

/// Minimizer of `|y - M s|^2 + ridge |s|^2`; minimum-norm on rank
/// deficiency when `ridge = 0`.
pub fn solve_block(m: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    linalg::lstsq(m, y, ridge)
}

/// Runs block coordinate descent on the design problem: every stage
/// starts as the identity masked onto the edge pattern, blocks are
/// updated cyclically `j = 1..L` by exact least squares, and the
/// objective is recorded after every update. With `ridge = 0`, an update
/// that fails to improve the objective (possible only through
/// floating-point rank decisions in a degenerate block) is rejected, so
/// the trace never increases.
///
/// Stops after `cfg.i_max` sweeps or once a full sweep improves the
/// objective by less than `cfg.rel_tol` of its previous value (or not at
/// all).
pub fn bcd_design(
    problem: &DesignProblem,
    cfg: &SolverConfig,
) -> Result<(ShiftSequence, SolveReport)> {
    if cfg.i_max == 0 {
        return Err(Error::InvalidParameter("i_max must be at least 1".into()));
    }
    if cfg.ridge < 0.0 {
        return Err(Error::InvalidParameter("ridge must be nonnegative".into()));
    }
    if cfg.rel_tol < 0.0 {
        return Err(Error::InvalidParameter(
            "rel_tol must be nonnegative".into(),
        ));
    }
    if cfg.delta <= 0.0 {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let start = Instant::now();
    let rounds = problem.rounds();
    let n = problem.graph.n_vertices();
    let tying = if problem.symmetric {
        Some(SymmetricTying::new(&problem.graph)?)
    } else {
        None
    };
    let mut seq = ShiftSequence::masked_identity(&problem.graph, rounds);
    let mut trace = Vec::new();
    let mut nonmonotone = 0usize;
    let mut current = objective(problem, &seq)?;
    let mut sweep_start = current;

    for sweep in 1..=cfg.i_max {
        let mut prefix = DMatrix::identity(n, n);
        for j in 1..=rounds {
            let suffixes = suffix_products(&seq, j, rounds);
            let (m, y) = assemble_with_products(
                &problem.target,
                &problem.graph,
                tying.as_ref(),
                &problem.weights.as_slice()[j - 1..],
                &prefix,
                &suffixes,
            );
            let solution = linalg::lstsq(&m, &y, cfg.ridge)?;
            let candidate = match &tying {
                Some(t) => t.expand(&solution),
                None => solution,
            };
            let previous = std::mem::replace(&mut seq.coeffs[j - 1], candidate);
            let value = objective(problem, &seq)?;
            // An exact block solve never increases the objective; a rise
            // means the rank decision went against floating-point noise,
            // so the previous (feasible) coefficients stay.
            if cfg.ridge == 0.0 && value > current {
                log::debug!(
                    "sweep {sweep} block {j}: rejecting update ({current:.6e} -> {value:.6e})"
                );
                seq.coeffs[j - 1] = previous;
            } else {
                if value > current + MONOTONICITY_SLACK {
                    nonmonotone += 1;
                }
                current = value;
            }
            trace.push(TracePoint {
                sweep,
                block: j,
                objective: current,
            });
            prefix = seq.dense(j - 1) * prefix;
        }
        let decrease = sweep_start - current;
        log::debug!("sweep {sweep}: objective {current:.6e} (decrease {decrease:.3e})");
        if decrease <= 0.0 || decrease < cfg.rel_tol * sweep_start {
            break;
        }
        sweep_start = current;
    }

    let errors = stage_errors(&problem.target, &seq)?;
    let target_norm = problem.target.norm();
    let effective = effective_rounds(
        &errors,
        if target_norm > 0.0 { target_norm } else { 1.0 },
        cfg.delta,
    );
    let report = SolveReport {
        objective_trace: trace,
        stage_errors: errors,
        effective_rounds: effective,
        wall_time: start.elapsed().as_secs_f64(),
        nonmonotone_steps: nonmonotone,
    };
    Ok((seq, report))
}

fn check_compatible(problem: &DesignProblem, seq: &ShiftSequence) -> Result<()> {
    if seq.graph() != problem.graph() {
        return Err(Error::PatternMismatch(
            "sequence was built against a different graph".into(),
        ));
    }
    if seq.len() != problem.rounds() {
        return Err(Error::DimensionMismatch(format!(
            "sequence has {} stages but the problem has {}",
            seq.len(),
            problem.rounds()
        )));
    }
    Ok(())
}

/// `S_{l:j+1}` for `l = j..L`: identity first, then growing products.
fn suffix_products(seq: &ShiftSequence, j: usize, rounds: usize) -> Vec<DMatrix<f64>> {
    let n = seq.n();
    let mut out = Vec::with_capacity(rounds - j + 1);
    out.push(DMatrix::identity(n, n));
    for l in (j + 1)..=rounds {
        let next = seq.dense(l - 1) * out.last().expect("nonempty");
        out.push(next);
    }
    out
}

fn assemble_with_products(
    target: &DMatrix<f64>,
    graph: &Graph,
    tying: Option<&SymmetricTying>,
    weights: &[f64],
    prefix: &DMatrix<f64>,
    suffixes: &[DMatrix<f64>],
) -> (DMatrix<f64>, DVector<f64>) {
    let n = graph.n_vertices();
    let edges = graph.edges();
    let n_cols = tying.map_or(edges.len(), SymmetricTying::n_free);
    let block_rows = n * n;
    let mut m = DMatrix::zeros(suffixes.len() * block_rows, n_cols);
    let mut y = DVector::zeros(suffixes.len() * block_rows);
    for (bi, suffix) in suffixes.iter().enumerate() {
        let w = weights[bi].sqrt();
        let offset = bi * block_rows;
        for c in 0..n {
            for r in 0..n {
                y[offset + c * n + r] = w * target[(r, c)];
            }
        }
        for (k, &(recv, send)) in edges.iter().enumerate() {
            let col = tying.map_or(k, |t| t.free_index(k));
            for c in 0..n {
                let scale = w * prefix[(send, c)];
                if scale != 0.0 {
                    let base = offset + c * n;
                    for r in 0..n {
                        m[(base + r, col)] += scale * suffix[(r, recv)];
                    }
                }
            }
        }
    }
    (m, y)
}
