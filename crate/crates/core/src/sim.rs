//! Frame-synchronous Monte-Carlo simulation of the same system.
//!
//! Every frame: the MMPP phase may switch, at most one connection event is
//! resolved (arrivals at the threshold are blocked), each connection emits a
//! capped Poisson number of packets at the rate of the phase the frame
//! started in, and every subchannel draws an instantaneous SNR. The queue
//! then transmits from its backlog in FIFO order, takes the new packets and
//! tail-drops the overflow.
//!
//! Each stochastic component draws from its own ChaCha stream derived from
//! the seed, so changing one component does not perturb the others.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::channel::{db_to_linear, Fading};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::mmpp::{phase_transition_matrix, steady_state};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    /// Total frames simulated, warmup included.
    pub frames: u64,
    pub warmup: u64,
    pub batches: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames <= self.warmup {
            return Err(Error::InvalidParams(format!(
                "frames ({}) must exceed warmup ({})",
                self.frames, self.warmup
            )));
        }
        if self.batches < 2 {
            return Err(Error::InvalidParams("at least two batches are required".into()));
        }
        if self.frames - self.warmup < self.batches as u64 {
            return Err(Error::InvalidParams("fewer measured frames than batches".into()));
        }
        Ok(())
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            frames: 2_000_000,
            warmup: 100_000,
            batches: 40,
        }
    }
}

/// Batch-means point estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean from the spread of batch values.
    pub std_error: f64,
    /// Half-width of the 99% Student-t confidence interval.
    pub half_width: f64,
}

impl Estimate {
    /// Whether `value` lies within `sigmas` standard errors of the estimate.
    pub fn covers(&self, value: f64, sigmas: f64) -> bool {
        (value - self.mean).abs() <= sigmas * self.std_error
    }
}

/// Whole-run event counts, warmup included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimCounts {
    pub arrived: u64,
    pub served: u64,
    pub dropped: u64,
    pub final_backlog: u64,
    pub offered: u64,
    pub blocked: u64,
}

impl SimCounts {
    /// Every arrived packet was served, dropped, or is still queued.
    pub fn conserves_packets(&self) -> bool {
        self.served + self.dropped + self.final_backlog == self.arrived
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub p_block: Estimate,
    pub n_connections: Estimate,
    pub n_queue: Estimate,
    pub n_drop: Estimate,
    pub lambda_bar: Estimate,
    pub p_drop: Estimate,
    pub throughput: Estimate,
    pub delay: Estimate,
    pub counts: SimCounts,
    pub measured_frames: u64,
}

impl SimReport {
    /// Estimates in the order of [`crate::metrics::METRIC_NAMES`].
    pub fn estimates(&self) -> [Estimate; 8] {
        [
            self.p_block,
            self.n_connections,
            self.n_queue,
            self.n_drop,
            self.lambda_bar,
            self.p_drop,
            self.throughput,
            self.delay,
        ]
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Batch {
    frames: u64,
    offered: u64,
    blocked: u64,
    connection_sum: u64,
    queue_sum: u64,
    arrived: u64,
    dropped: u64,
    served: u64,
    delay_sum: u64,
}

impl Batch {
    fn add(&mut self, o: &Batch) {
        self.frames += o.frames;
        self.offered += o.offered;
        self.blocked += o.blocked;
        self.connection_sum += o.connection_sum;
        self.queue_sum += o.queue_sum;
        self.arrived += o.arrived;
        self.dropped += o.dropped;
        self.served += o.served;
        self.delay_sum += o.delay_sum;
    }
}

const STREAM_PHASE: u64 = 0;
const STREAM_CONNECTIONS: u64 = 1;
const STREAM_ARRIVALS: u64 = 2;
const STREAM_CHANNEL: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

enum SnrSampler {
    Fixed(f64),
    Gamma(Gamma<f64>),
}

/// Runs one replication. Deterministic in `(system, sim)`.
pub fn simulate(system: &SystemConfig, sim: &SimConfig) -> Result<SimReport> {
    system.validate()?;
    sim.validate()?;
    let conn = system.connection_params();
    let threshold = conn.threshold as u64;
    let capacity = system.queue_capacity as u64;
    let cap = system.arrival_cap as u64;
    let phase_step = phase_transition_matrix(&system.mmpp, 1.0)?;
    let p_arrival = conn.arrival_probability();
    let p_departure: Vec<f64> = (0..=conn.threshold).map(|k| conn.departure_probability(k)).collect();
    let poisson = [system.mmpp.lambda0, system.mmpp.lambda1].map(|l| {
        if l > 0.0 {
            Some(Poisson::new(l).expect("validated rate"))
        } else {
            None
        }
    });
    let mean_snr = system.channel.mean_snr_linear();
    let snr = match system.channel.fading {
        Fading::Deterministic => SnrSampler::Fixed(mean_snr),
        Fading::Nakagami { m } => {
            SnrSampler::Gamma(Gamma::new(m, mean_snr / m).map_err(|e| Error::InvalidModel(e.to_string()))?)
        }
    };
    let thresholds: Vec<f64> = system.amc.thresholds_db().iter().map(|&t| db_to_linear(t)).collect();
    let packets = system.amc.packets_per_rate();

    let mut phase_rng = stream(sim.seed, STREAM_PHASE);
    let mut conn_rng = stream(sim.seed, STREAM_CONNECTIONS);
    let mut arrival_rng = stream(sim.seed, STREAM_ARRIVALS);
    let mut channel_rng = stream(sim.seed, STREAM_CHANNEL);

    let (pi0, _) = steady_state(&system.mmpp)?;
    let mut phase = usize::from(phase_rng.random::<f64>() >= pi0);
    let mut k: u64 = 0;
    let mut backlog: u64 = 0;
    // FIFO of (arrival frame, packet count).
    let mut queue: VecDeque<(u64, u64)> = VecDeque::new();

    let measured = sim.frames - sim.warmup;
    let batch_len = measured / sim.batches as u64;
    let mut batches = vec![Batch::default(); sim.batches];
    let mut counts = SimCounts::default();

    for frame in 0..sim.frames {
        let (phase0, k0) = (phase, k);

        if phase_rng.random::<f64>() < phase_step[phase0][1 - phase0] {
            phase = 1 - phase0;
        }

        let arrives = conn_rng.random::<f64>() < p_arrival;
        let departs = conn_rng.random::<f64>() < p_departure[k0 as usize];
        let blocked = arrives && k0 == threshold;
        match (arrives, departs) {
            (true, false) if k0 < threshold => k += 1,
            (false, true) => k -= 1,
            _ => {}
        }

        let mut arrivals = 0u64;
        if let Some(dist) = &poisson[phase0] {
            for _ in 0..k0 {
                let n: f64 = dist.sample(&mut arrival_rng);
                arrivals += (n as u64).min(cap);
            }
        }
        let mut tx = 0u64;
        for _ in 0..system.channel.subchannels {
            let gamma = match &snr {
                SnrSampler::Fixed(v) => *v,
                SnrSampler::Gamma(g) => g.sample(&mut channel_rng),
            };
            if let Some(r) = thresholds.iter().rposition(|&t| t <= gamma) {
                tx += u64::from(packets[r]);
            }
        }

        let served = tx.min(backlog);
        let mut to_serve = served;
        let mut delay_sum = 0u64;
        while to_serve > 0 {
            let front = queue.front_mut().expect("backlog matches queue contents");
            let take = front.1.min(to_serve);
            delay_sum += take * (frame - front.0);
            front.1 -= take;
            to_serve -= take;
            if front.1 == 0 {
                queue.pop_front();
            }
        }
        backlog -= served;
        let accepted = arrivals.min(capacity - backlog);
        let dropped = arrivals - accepted;
        if accepted > 0 {
            queue.push_back((frame, accepted));
            backlog += accepted;
        }

        counts.arrived += arrivals;
        counts.served += served;
        counts.dropped += dropped;
        if arrives {
            counts.offered += 1;
        }
        if blocked {
            counts.blocked += 1;
        }

        if frame >= sim.warmup {
            let idx = (((frame - sim.warmup) / batch_len) as usize).min(sim.batches - 1);
            let b = &mut batches[idx];
            b.frames += 1;
            b.offered += u64::from(arrives);
            b.blocked += u64::from(blocked);
            b.connection_sum += k;
            b.queue_sum += backlog;
            b.arrived += arrivals;
            b.dropped += dropped;
            b.served += served;
            b.delay_sum += delay_sum;
        }
    }
    counts.final_backlog = backlog;

    let mut total = Batch::default();
    batches.iter().for_each(|b| total.add(b));
    let t_quantile = StudentsT::new(0.0, 1.0, (sim.batches - 1) as f64)
        .expect("at least two batches")
        .inverse_cdf(0.995);
    let estimate = |f: &dyn Fn(&Batch) -> Option<f64>| -> Estimate {
        let mean = f(&total).unwrap_or(f64::NAN);
        let values: Vec<f64> = batches.iter().filter_map(f).collect();
        let std_error = if values.len() >= 2 {
            let m = values.iter().sum::<f64>() / values.len() as f64;
            let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
            (var / values.len() as f64).sqrt()
        } else {
            f64::NAN
        };
        Estimate {
            mean,
            std_error,
            half_width: t_quantile * std_error,
        }
    };
    let ratio = |num: u64, den: u64| if den > 0 { Some(num as f64 / den as f64) } else { None };
    let zero_if_none = |num: u64, den: u64| Some(if den > 0 { num as f64 / den as f64 } else { 0.0 });
    Ok(SimReport {
        p_block: estimate(&|b| zero_if_none(b.blocked, b.offered)),
        n_connections: estimate(&|b| ratio(b.connection_sum, b.frames)),
        n_queue: estimate(&|b| ratio(b.queue_sum, b.frames)),
        n_drop: estimate(&|b| ratio(b.dropped, b.frames)),
        lambda_bar: estimate(&|b| ratio(b.arrived, b.frames)),
        p_drop: estimate(&|b| zero_if_none(b.dropped, b.arrived)),
        throughput: estimate(&|b| ratio(b.served, b.frames)),
        delay: estimate(&|b| ratio(b.delay_sum, b.served)),
        counts,
        measured_frames: measured,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::AdmissionMode;

    fn small() -> SystemConfig {
        let mut c = SystemConfig::reference_defaults();
        c.queue_capacity = 10;
        c.arrival_cap = 3;
        c.cac_threshold = 3;
        c.rho = 600.0;
        c.mean_holding = 0.005;
        c.channel.subchannels = 2;
        c.channel.mean_snr_db = 12.0;
        c.mmpp.lambda0 = 0.3;
        c.mmpp.lambda1 = 0.9;
        c
    }

    fn short() -> SimConfig {
        SimConfig {
            seed: 99,
            frames: 60_000,
            warmup: 1_000,
            batches: 10,
        }
    }

    #[test]
    fn same_seed_same_report() {
        let a = simulate(&small(), &short()).unwrap();
        let b = simulate(&small(), &short()).unwrap();
        assert_eq!(a, b);
        let c = simulate(&small(), &SimConfig { seed: 100, ..short() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn packets_are_conserved() {
        for mode in [AdmissionMode::Cac, AdmissionMode::NoCac] {
            let r = simulate(&small().with_mode(mode), &short()).unwrap();
            assert!(r.counts.conserves_packets(), "{:?}", r.counts);
            assert!(r.counts.arrived > 0 && r.counts.dropped > 0);
        }
    }

    #[test]
    fn idle_without_connections() {
        let mut c = small();
        c.rho = 0.0;
        let r = simulate(&c, &short()).unwrap();
        assert_eq!(r.counts, SimCounts::default());
        assert_eq!(r.p_block.mean, 0.0);
        assert_eq!(r.n_queue.mean, 0.0);
        assert_eq!(r.lambda_bar.mean, 0.0);
        assert!(r.delay.mean.is_nan());
    }

    #[test]
    fn rejects_bad_run_lengths() {
        let bad = SimConfig {
            frames: 10,
            warmup: 10,
            ..short()
        };
        assert!(simulate(&small(), &bad).is_err());
        let one_batch = SimConfig { batches: 1, ..short() };
        assert!(simulate(&small(), &one_batch).is_err());
    }
}
