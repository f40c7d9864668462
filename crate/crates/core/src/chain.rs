//! The frame-level DTMC over (MMPP phase, queue length, connections).
//!
//! Within a frame the phase, the connection count and the queue move
//! conditionally independently given the state at the start of the frame:
//!
//! ```text
//! P[(i,j,k) -> (i',j',k')] = phase[i][i'] * conn_k[k'] * queue_{i,k}[j][j']
//! ```
//!
//! The queue first transmits from its backlog, then admits the frame's
//! arrivals, and drops whatever exceeds the capacity `L`.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::channel::{rate_pmf, transmission_pmf};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::mmpp::phase_transition_matrix;
use crate::pmf::Pmf;
use crate::solver::{self, CsrMatrix};
use crate::traffic::{
    aggregate_arrival_pmf, connection_transition_probs, per_connection_arrival_pmf, AdmissionMode,
    ArrivalPmf,
};

/// Largest chain solved by state reduction when the method is `Auto`.
pub const DIRECT_STATE_LIMIT: usize = 20_000;

/// Canonical linear index of `(i, j, k)` with `i` in {0,1}, `j <= L`, `k <= K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateIndexer {
    queue_capacity: usize,
    max_connections: usize,
}

impl StateIndexer {
    pub fn new(queue_capacity: usize, max_connections: usize) -> Self {
        StateIndexer {
            queue_capacity,
            max_connections,
        }
    }

    /// `L`.
    pub fn queue_capacity(&self) -> usize {
        self.queue_capacity
    }

    /// `K`.
    pub fn max_connections(&self) -> usize {
        self.max_connections
    }

    pub fn len(&self) -> usize {
        2 * (self.queue_capacity + 1) * (self.max_connections + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, phase: usize, queue: usize, connections: usize) -> usize {
        debug_assert!(phase < 2 && queue <= self.queue_capacity && connections <= self.max_connections);
        let k1 = self.max_connections + 1;
        phase * (self.queue_capacity + 1) * k1 + queue * k1 + connections
    }

    pub fn state(&self, index: usize) -> (usize, usize, usize) {
        let k1 = self.max_connections + 1;
        let per_phase = (self.queue_capacity + 1) * k1;
        (index / per_phase, (index % per_phase) / k1, index % k1)
    }

    /// States grouped by connection count, then phase, then queue length.
    /// Transitions change `k` by at most one, so this ordering confines the
    /// transition matrix to a band of half-width about `4(L+1)`.
    pub fn connection_major_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        for k in 0..=self.max_connections {
            for i in 0..2 {
                for j in 0..=self.queue_capacity {
                    order.push(self.index(i, j, k));
                }
            }
        }
        order
    }
}

/// Queue-length transitions for one frame with a fixed arrival and
/// transmission distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueKernel {
    capacity: usize,
    /// Row-major `(L+1) x (L+1)`.
    probs: Vec<f64>,
    expected_drops: Vec<f64>,
}

impl QueueKernel {
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let w = self.capacity + 1;
        &self.probs[j * w..(j + 1) * w]
    }

    pub fn prob(&self, j: usize, next: usize) -> f64 {
        self.row(j)[next]
    }

    pub fn expected_drops(&self) -> &[f64] {
        &self.expected_drops
    }
}

/// One-frame queue kernel: `j' = min(L, max(0, j - t) + a)` and
/// `drops = max(0, max(0, j - t) + a - L)` over independent `a` and `t`.
pub fn queue_kernel(arrivals: &Pmf, tx: &Pmf, capacity: usize) -> QueueKernel {
    let w = capacity + 1;
    let pa = arrivals.probs();
    // tail[x] = Pr[a >= x], excess[x] = E[(a - x)^+], both for x in 0..=L.
    let tail: Vec<f64> = (0..=capacity).map(|x| arrivals.tail(x)).collect();
    let excess: Vec<f64> = (0..=capacity)
        .map(|x| {
            pa.iter()
                .enumerate()
                .skip(x + 1)
                .map(|(a, p)| (a - x) as f64 * p)
                .sum()
        })
        .collect();

    let mut probs = vec![0.0; w * w];
    let mut expected_drops = vec![0.0; w];
    let mut backlog = vec![0.0; w];
    for j in 0..=capacity {
        // Backlog after transmission.
        backlog[..=j].fill(0.0);
        for (t, &pt) in tx.probs().iter().enumerate().take(j) {
            backlog[j - t] += pt;
        }
        backlog[0] += tx.tail(j);

        let row = &mut probs[j * w..(j + 1) * w];
        let mut drops = 0.0;
        for (b, &pb) in backlog[..=j].iter().enumerate() {
            if pb == 0.0 {
                continue;
            }
            let room = capacity - b;
            for (a, &p) in pa.iter().enumerate().take(room) {
                row[b + a] += pb * p;
            }
            row[capacity] += pb * tail[room];
            drops += pb * excess[room];
        }
        expected_drops[j] = drops;
    }
    QueueKernel {
        capacity,
        probs,
        expected_drops,
    }
}

/// Sparse one-frame transition matrix with per-state companions.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    matrix: CsrMatrix,
    indexer: StateIndexer,
    mode: AdmissionMode,
    expected_drops: Vec<f64>,
    expected_arrivals: Vec<f64>,
}

impl TransitionMatrix {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn indexer(&self) -> StateIndexer {
        self.indexer
    }

    pub fn mode(&self) -> AdmissionMode {
        self.mode
    }

    pub fn states(&self) -> usize {
        self.indexer.len()
    }

    /// Expected packets dropped during a frame that starts in each state.
    pub fn expected_drops(&self) -> &[f64] {
        &self.expected_drops
    }

    /// Expected packets arriving during a frame that starts in each state.
    pub fn expected_arrivals(&self) -> &[f64] {
        &self.expected_arrivals
    }
}

/// Per-(phase, connections) ingredients shared by the matrix and its users.
fn queue_kernels(config: &SystemConfig) -> Result<(Vec<QueueKernel>, [ArrivalPmf; 2])> {
    let rates = rate_pmf(&config.channel, &config.amc)?;
    let tx = transmission_pmf(&rates, &config.amc, config.channel.subchannels)?;
    let per_conn = [
        per_connection_arrival_pmf(config.mmpp.lambda0, config.arrival_cap)?,
        per_connection_arrival_pmf(config.mmpp.lambda1, config.arrival_cap)?,
    ];
    let k_max = config.max_connections();
    let kernels = (0..2 * (k_max + 1))
        .into_par_iter()
        .map(|ik| {
            let (i, k) = (ik / (k_max + 1), ik % (k_max + 1));
            let arrivals = aggregate_arrival_pmf(&per_conn[i], k);
            queue_kernel(arrivals.pmf(), &tx, config.queue_capacity)
        })
        .collect();
    Ok((kernels, per_conn))
}

pub fn build_transition_matrix(config: &SystemConfig) -> Result<TransitionMatrix> {
    config.validate()?;
    let indexer = StateIndexer::new(config.queue_capacity, config.max_connections());
    let n = indexer.len();
    if n > config.solver.state_budget {
        return Err(Error::CapacityOverflow {
            states: n,
            budget: config.solver.state_budget,
        });
    }
    let conn = config.connection_params();
    let phase = phase_transition_matrix(&config.mmpp, 1.0)?;
    let k_max = indexer.max_connections();
    let steps = (0..=k_max)
        .map(|k| connection_transition_probs(k, &conn))
        .collect::<Result<Vec<_>>>()?;
    let (kernels, per_conn) = queue_kernels(config)?;

    let mut builder = CsrMatrix::builder(n);
    let mut expected_drops = vec![0.0; n];
    let mut expected_arrivals = vec![0.0; n];
    for row in 0..n {
        let (i, j, k) = indexer.state(row);
        let kernel = &kernels[i * (k_max + 1) + k];
        let step = steps[k];
        let conn_moves = [
            (k.wrapping_sub(1), step.down),
            (k, step.stay),
            (k + 1, step.up),
        ];
        for (next_i, &p_phase) in phase[i].iter().enumerate() {
            if p_phase == 0.0 {
                continue;
            }
            for (next_j, &p_queue) in kernel.row(j).iter().enumerate() {
                if p_queue == 0.0 {
                    continue;
                }
                // k' increases fastest in the canonical index, so columns stay sorted.
                for &(next_k, p_conn) in &conn_moves {
                    if p_conn == 0.0 || next_k > k_max {
                        continue;
                    }
                    let v = p_phase * p_conn * p_queue;
                    if v != 0.0 {
                        builder.push(indexer.index(next_i, next_j, next_k), v);
                    }
                }
            }
        }
        builder.end_row();
        expected_drops[row] = kernel.expected_drops()[j];
        expected_arrivals[row] = k as f64 * per_conn[i].mean();
    }
    Ok(TransitionMatrix {
        matrix: builder.finish(),
        indexer,
        mode: config.mode,
        expected_drops,
        expected_arrivals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Direct for at most [`DIRECT_STATE_LIMIT`] states, power iteration above.
    Auto,
    Direct,
    Power,
}

impl SolveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveMethod::Auto => "auto",
            SolveMethod::Direct => "direct",
            SolveMethod::Power => "power",
        }
    }
}

impl std::str::FromStr for SolveMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(SolveMethod::Auto),
            "direct" => Ok(SolveMethod::Direct),
            "power" => Ok(SolveMethod::Power),
            other => Err(format!("expected auto, direct or power, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub method: SolveMethod,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: SolveMethod::Auto,
            tol: 1e-10,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
    indexer: StateIndexer,
    mode: AdmissionMode,
    residual: f64,
    method: SolveMethod,
    iterations: usize,
}

impl StationaryDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.pi
    }

    pub fn indexer(&self) -> StateIndexer {
        self.indexer
    }

    pub fn mode(&self) -> AdmissionMode {
        self.mode
    }

    /// `||pi P - pi||_1` at the returned solution.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// The method actually used (never `Auto`).
    pub fn method(&self) -> SolveMethod {
        self.method
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn prob(&self, phase: usize, queue: usize, connections: usize) -> f64 {
        self.pi[self.indexer.index(phase, queue, connections)]
    }

    /// Marginal law of the connection count.
    pub fn connection_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.indexer.max_connections() + 1];
        for (s, &p) in self.pi.iter().enumerate() {
            out[self.indexer.state(s).2] += p;
        }
        out
    }

    /// Marginal law of the MMPP phase.
    pub fn phase_marginal(&self) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (s, &p) in self.pi.iter().enumerate() {
            out[self.indexer.state(s).0] += p;
        }
        out
    }

    /// Marginal law of the queue length.
    pub fn queue_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.indexer.queue_capacity() + 1];
        for (s, &p) in self.pi.iter().enumerate() {
            out[self.indexer.state(s).1] += p;
        }
        out
    }
}

pub fn solve_stationary(p: &TransitionMatrix, options: &SolveOptions) -> Result<StationaryDistribution> {
    let n = p.states();
    let method = match options.method {
        SolveMethod::Auto if n <= DIRECT_STATE_LIMIT => SolveMethod::Direct,
        SolveMethod::Auto => SolveMethod::Power,
        m => m,
    };
    let (mut pi, iterations) = match method {
        SolveMethod::Direct => {
            let order = p.indexer.connection_major_order();
            (solver::gth(&p.matrix, Some(&order))?, 0)
        }
        _ => {
            let out = solver::power_iteration(&p.matrix, options.tol, options.max_iterations)?;
            (out.pi, out.iterations)
        }
    };
    pi.iter_mut().for_each(|v| *v = v.max(0.0));
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    let residual = solver::residual_l1(&p.matrix, &pi);
    if !(residual <= options.tol) {
        return Err(Error::Residual {
            residual,
            tol: options.tol,
        });
    }
    Ok(StationaryDistribution {
        pi,
        indexer: p.indexer,
        mode: p.mode,
        residual,
        method,
        iterations,
    })
}

/// Boundary probability threshold above which truncation at `C_tr` is suspect.
pub const TRUNCATION_WARNING: f64 = 2e-4;

/// `max_{i,j} pi(i, j, C_tr)` for a chain solved without admission control.
pub fn truncation_check(pi: &StationaryDistribution) -> Result<f64> {
    if pi.mode != AdmissionMode::NoCac {
        return Err(Error::WrongMode(
            "truncation check applies only to the no-CAC chain",
        ));
    }
    let ix = pi.indexer;
    let k = ix.max_connections();
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..=ix.queue_capacity() {
            worst = worst.max(pi.prob(i, j, k));
        }
    }
    Ok(worst)
}

/// Writes `P` as sparse triplets to `path` and, when given, `pi` to
/// `<path>.pi`. Both files start with `#` header lines naming `N`, `L`, `K`
/// and the index formula; data lines are `row col value` and `index value`.
pub fn dump_chain(path: &Path, p: &TransitionMatrix, pi: Option<&StationaryDistribution>) -> Result<()> {
    let ix = p.indexer;
    let header = |w: &mut dyn Write, what: &str| -> std::io::Result<()> {
        writeln!(w, "# {what}")?;
        writeln!(
            w,
            "# N {} L {} K {} mode {}",
            ix.len(),
            ix.queue_capacity(),
            ix.max_connections(),
            p.mode.as_str()
        )?;
        writeln!(w, "# index = i*(L+1)*(K+1) + j*(K+1) + k")
    };
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    header(&mut w, "transition matrix: row col value")?;
    for (r, c, v) in p.matrix.triplets() {
        writeln!(w, "{r} {c} {v:e}")?;
    }
    w.flush()?;
    if let Some(pi) = pi {
        let mut pi_path = path.as_os_str().to_owned();
        pi_path.push(".pi");
        let mut w = BufWriter::new(std::fs::File::create(pi_path)?);
        header(&mut w, "stationary distribution: index value")?;
        for (s, v) in pi.pi.iter().enumerate() {
            writeln!(w, "{s} {v:e}")?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Reads the `row col value` lines written by [`dump_chain`].
pub fn read_triplets(reader: impl BufRead) -> Result<Vec<(usize, usize, f64)>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::InvalidParams(format!("malformed triplet line `{line}`"));
        let mut parts = line.split_whitespace();
        let r = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let c = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let v = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        out.push((r, c, v));
    }
    Ok(out)
}
