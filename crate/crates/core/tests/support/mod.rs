//! Shared scenarios and an independent dense oracle for integration tests.
//!
//! The oracle rebuilds the transition matrix by enumerating every
//! per-connection arrival count and every per-subchannel rate outcome, using
//! closed forms only (Rayleigh tails, Taylor-series matrix exponential,
//! Poisson terms), and solves it with a dense LU factorization. It shares no
//! code with the library's kernel, convolution or GTH paths.

#![allow(dead_code)]

use cac_core::channel::{AmcTable, ChannelModel, Fading};
use cac_core::config::{SolverSettings, SystemConfig};
use cac_core::metrics::MetricMode;
use cac_core::mmpp::MmppParams;
use cac_core::traffic::AdmissionMode;
use nalgebra::{DMatrix, DVector};

/// 24-state chain: L = 3, C = 2, A = 2, S = 1, two phases. One-second
/// frames make every connection event probability about 1/3 and the phase
/// mixes within a few frames, so power iteration converges quickly.
pub fn tiny_config() -> SystemConfig {
    SystemConfig {
        mode: AdmissionMode::Cac,
        cac_threshold: 2,
        truncation_level: 2,
        queue_capacity: 3,
        arrival_cap: 2,
        rho: 20.0,
        mean_holding: 0.05,
        frame_ms: 1000.0,
        mmpp: MmppParams {
            q01: 0.3,
            q10: 0.2,
            lambda0: 0.5,
            lambda1: 1.5,
        },
        channel: ChannelModel {
            mean_snr_db: 8.0,
            fading: Fading::Nakagami { m: 1.0 },
            subchannels: 1,
        },
        amc: AmcTable::new(vec![3.0, 9.0, 14.0], vec![1, 2, 3]).unwrap(),
        metric_mode: MetricMode::Consistent,
        solver: SolverSettings::default(),
    }
}

/// Fast connection dynamics for simulation cross-checks: about 1e-2
/// connection events per 1 ms frame, L = 20, C = 5, A = 3, S = 2.
pub fn desk_config() -> SystemConfig {
    SystemConfig {
        mode: AdmissionMode::Cac,
        cac_threshold: 5,
        truncation_level: 12,
        queue_capacity: 20,
        arrival_cap: 3,
        rho: 600.0,
        mean_holding: 0.005,
        frame_ms: 1.0,
        mmpp: MmppParams {
            q01: 0.05,
            q10: 0.05,
            lambda0: 0.5,
            lambda1: 1.5,
        },
        channel: ChannelModel {
            mean_snr_db: 12.0,
            fading: Fading::Nakagami { m: 1.0 },
            subchannels: 2,
        },
        amc: AmcTable::default_802_16(),
        metric_mode: MetricMode::Consistent,
        solver: SolverSettings::default(),
    }
}

pub struct DenseOracle {
    pub n: usize,
    pub l: usize,
    pub k_max: usize,
    pub p: Vec<Vec<f64>>,
    /// Expected drops, arrivals and transmissions in a frame from each state.
    pub drops: Vec<f64>,
    pub arrivals: Vec<f64>,
    pub served: Vec<f64>,
}

impl DenseOracle {
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * (self.l + 1) + j) * (self.k_max + 1) + k
    }

    pub fn state(&self, s: usize) -> (usize, usize, usize) {
        let k = s % (self.k_max + 1);
        let j = (s / (self.k_max + 1)) % (self.l + 1);
        (s / ((self.k_max + 1) * (self.l + 1)), j, k)
    }
}

/// `exp(Q t)` for the two-state generator by Taylor series.
fn expm_2x2(q01: f64, q10: f64, t: f64) -> [[f64; 2]; 2] {
    let q = DMatrix::from_row_slice(2, 2, &[-q01, q01, q10, -q10]) * t;
    let mut term = DMatrix::<f64>::identity(2, 2);
    let mut sum = term.clone();
    for n in 1..60 {
        term = &term * &q / n as f64;
        sum += &term;
    }
    [[sum[(0, 0)], sum[(0, 1)]], [sum[(1, 0)], sum[(1, 1)]]]
}

fn poisson_capped(lambda: f64, cap: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..cap)
        .map(|n| {
            let fact: f64 = (1..=n).map(|x| x as f64).product();
            (-lambda).exp() * lambda.powi(n as i32) / fact
        })
        .collect();
    let head: f64 = p.iter().sum();
    p.push(1.0 - head);
    p
}

/// Per-subchannel packet pmf for Rayleigh fading, deterministic for
/// `Fading::Deterministic`.
fn subchannel_packets(c: &SystemConfig) -> Vec<f64> {
    let thr: Vec<f64> = c.amc.thresholds_db().iter().map(|t| 10f64.powf(t / 10.0)).collect();
    let pk = c.amc.packets_per_rate();
    let mean = 10f64.powf(c.channel.mean_snr_db / 10.0);
    let mut out = vec![0.0; *pk.last().unwrap() as usize + 1];
    match c.channel.fading {
        Fading::Nakagami { m } => {
            assert_eq!(m, 1.0, "oracle only covers Rayleigh fading");
            let exceed = |r: usize| thr.get(r).map_or(0.0, |t| (-t / mean).exp());
            out[0] += 1.0 - exceed(0);
            for r in 0..thr.len() {
                out[pk[r] as usize] += exceed(r) - exceed(r + 1);
            }
        }
        Fading::Deterministic => {
            let best = thr.iter().rposition(|&t| t <= mean);
            out[best.map_or(0, |r| pk[r] as usize)] = 1.0;
        }
    }
    out
}

/// Enumerates all outcome vectors of `count` i.i.d. draws from `pmf`,
/// calling `f(sum, probability)`.
fn enumerate_sums(pmf: &[f64], count: usize, f: &mut dyn FnMut(usize, f64)) {
    fn rec(pmf: &[f64], left: usize, sum: usize, prob: f64, f: &mut dyn FnMut(usize, f64)) {
        if left == 0 {
            f(sum, prob);
            return;
        }
        for (x, &p) in pmf.iter().enumerate() {
            if p != 0.0 {
                rec(pmf, left - 1, sum + x, prob * p, f);
            }
        }
    }
    rec(pmf, count, 0, 1.0, f)
}

pub fn build_dense(c: &SystemConfig) -> DenseOracle {
    let l = c.queue_capacity;
    let k_max = c.max_connections();
    let n = 2 * (l + 1) * (k_max + 1);
    let frame = c.frame_ms / 60_000.0;
    // Switching rates are per frame.
    let phase = expm_2x2(c.mmpp.q01, c.mmpp.q10, 1.0);
    let a = 1.0 - (-c.rho * frame).exp();
    let per_conn = [
        poisson_capped(c.mmpp.lambda0, c.arrival_cap),
        poisson_capped(c.mmpp.lambda1, c.arrival_cap),
    ];
    let sub = subchannel_packets(c);
    let mut oracle = DenseOracle {
        n,
        l,
        k_max,
        p: vec![vec![0.0; n]; n],
        drops: vec![0.0; n],
        arrivals: vec![0.0; n],
        served: vec![0.0; n],
    };
    for s in 0..n {
        let (i, j, k) = oracle.state(s);
        let d = 1.0 - (-(k as f64) * frame / c.mean_holding).exp();
        let mut conn = vec![(k, 1.0)];
        if k < k_max {
            conn.push((k + 1, a * (1.0 - d)));
        }
        if k > 0 {
            conn.push((k - 1, d * (1.0 - a)));
        }
        let moved: f64 = conn[1..].iter().map(|x| x.1).sum();
        conn[0].1 = 1.0 - moved;

        let mut queue = vec![0.0; l + 1];
        let (mut drops, mut arrivals, mut served) = (0.0, 0.0, 0.0);
        enumerate_sums(&per_conn[i], k, &mut |arr, pa| {
            enumerate_sums(&sub, c.channel.subchannels as usize, &mut |tx, pt| {
                let after = j.saturating_sub(tx) + arr;
                queue[after.min(l)] += pa * pt;
                drops += pa * pt * after.saturating_sub(l) as f64;
                arrivals += pa * pt * arr as f64;
                served += pa * pt * tx.min(j) as f64;
            });
        });
        oracle.drops[s] = drops;
        oracle.arrivals[s] = arrivals;
        oracle.served[s] = served;
        for (ni, &pp) in phase[i].iter().enumerate() {
            for &(nk, pc) in &conn {
                for (nj, &pq) in queue.iter().enumerate() {
                    let t = oracle.index(ni, nj, nk);
                    oracle.p[s][t] += pp * pc * pq;
                }
            }
        }
    }
    oracle
}

/// Solves `pi P = pi`, `sum pi = 1` by dense LU with one balance equation
/// replaced by normalization.
pub fn dense_stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            a[(c, r)] = p[r][c];
        }
        a[(r, r)] -= 1.0;
    }
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).expect("nonsingular balance system");
    x.iter().copied().collect()
}

/// Metrics from a dense solution, by direct summation.
pub struct OracleMetrics {
    pub p_block: f64,
    pub n_connections: f64,
    pub n_queue: f64,
    pub n_drop: f64,
    pub lambda_bar: f64,
    pub served: f64,
}

pub fn oracle_metrics(o: &DenseOracle, pi: &[f64]) -> OracleMetrics {
    let mut m = OracleMetrics {
        p_block: 0.0,
        n_connections: 0.0,
        n_queue: 0.0,
        n_drop: 0.0,
        lambda_bar: 0.0,
        served: 0.0,
    };
    for (s, &p) in pi.iter().enumerate() {
        let (_, j, k) = o.state(s);
        if k == o.k_max {
            m.p_block += p;
        }
        m.n_connections += k as f64 * p;
        m.n_queue += j as f64 * p;
        m.n_drop += o.drops[s] * p;
        m.lambda_bar += o.arrivals[s] * p;
        m.served += o.served[s] * p;
    }
    m
}
