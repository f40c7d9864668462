//! Connection-level and packet-level performance measures.

use crate::chain::{StationaryDistribution, TransitionMatrix};

/// How the mean arrival rate and throughput are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricMode {
    /// Exact aggregate arrival rate from the stationary law; flow balance
    /// `lambda_bar = throughput + n_drop` holds.
    Consistent,
    /// Arrival rate `lambda_MMPP * N_k` and throughput `lambda_MMPP * (1 - p_drop)`,
    /// as in the original closed forms.
    PaperLiteral,
}

impl MetricMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricMode::Consistent => "consistent",
            MetricMode::PaperLiteral => "paper_literal",
        }
    }
}

impl std::str::FromStr for MetricMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consistent" => Ok(MetricMode::Consistent),
            "paper_literal" => Ok(MetricMode::PaperLiteral),
            other => Err(format!("expected consistent or paper_literal, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub p_block: f64,
    /// Mean number of ongoing connections.
    pub n_connections: f64,
    /// Mean queue length, packets.
    pub n_queue: f64,
    /// Mean packets dropped per frame.
    pub n_drop: f64,
    /// Mean packets arriving per frame.
    pub lambda_bar: f64,
    pub p_drop: f64,
    /// Packets transmitted per frame.
    pub throughput: f64,
    /// Mean packet delay in frames; NaN when the throughput is zero.
    pub delay: f64,
    pub mode: MetricMode,
}

impl MetricsReport {
    pub fn delay_defined(&self) -> bool {
        !self.delay.is_nan()
    }

    /// `lambda_bar - throughput - n_drop`; zero up to rounding in consistent mode.
    pub fn flow_imbalance(&self) -> f64 {
        self.lambda_bar - self.throughput - self.n_drop
    }

    /// The eight measures in report order.
    pub fn values(&self) -> [f64; 8] {
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

/// Names matching [`MetricsReport::values`].
pub const METRIC_NAMES: [&str; 8] = [
    "p_block",
    "n_connections",
    "n_queue",
    "n_drop",
    "lambda_bar",
    "p_drop",
    "throughput",
    "delay",
];

/// Probability that the station holds the maximum number of connections.
pub fn blocking_probability(pi: &StationaryDistribution) -> f64 {
    let k = pi.indexer().max_connections();
    pi.connection_marginal()[k]
}

pub fn avg_connections(pi: &StationaryDistribution) -> f64 {
    pi.connection_marginal()
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * p)
        .sum()
}

pub fn avg_queue_length(pi: &StationaryDistribution) -> f64 {
    pi.queue_marginal()
        .iter()
        .enumerate()
        .map(|(j, p)| j as f64 * p)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropMetrics {
    pub n_drop: f64,
    pub lambda_bar: f64,
    pub p_drop: f64,
}

/// Mean drops per frame, mean arrivals per frame and the drop probability.
///
/// `mmpp_rate` is the per-connection mean rate, used only in
/// [`MetricMode::PaperLiteral`].
pub fn drop_metrics(
    pi: &StationaryDistribution,
    p: &TransitionMatrix,
    mmpp_rate: f64,
    mode: MetricMode,
) -> DropMetrics {
    let probs = pi.probs();
    let n_drop: f64 = probs.iter().zip(p.expected_drops()).map(|(a, b)| a * b).sum();
    let lambda_bar = match mode {
        MetricMode::Consistent => probs.iter().zip(p.expected_arrivals()).map(|(a, b)| a * b).sum(),
        MetricMode::PaperLiteral => mmpp_rate * avg_connections(pi),
    };
    let p_drop = if lambda_bar > 0.0 { n_drop / lambda_bar } else { 0.0 };
    DropMetrics {
        n_drop,
        lambda_bar,
        p_drop,
    }
}

/// Throughput and Little's-law delay. Delay is NaN when throughput is zero.
pub fn throughput_and_delay(
    drops: &DropMetrics,
    n_queue: f64,
    mmpp_rate: f64,
    mode: MetricMode,
) -> (f64, f64) {
    let eta = match mode {
        MetricMode::Consistent => drops.lambda_bar * (1.0 - drops.p_drop),
        MetricMode::PaperLiteral => mmpp_rate * (1.0 - drops.p_drop),
    };
    let delay = if eta > 0.0 { n_queue / eta } else { f64::NAN };
    (eta, delay)
}

pub fn evaluate(
    pi: &StationaryDistribution,
    p: &TransitionMatrix,
    mmpp_rate: f64,
    mode: MetricMode,
) -> MetricsReport {
    let n_queue = avg_queue_length(pi);
    let drops = drop_metrics(pi, p, mmpp_rate, mode);
    let (throughput, delay) = throughput_and_delay(&drops, n_queue, mmpp_rate, mode);
    MetricsReport {
        p_block: blocking_probability(pi),
        n_connections: avg_connections(pi),
        n_queue,
        n_drop: drops.n_drop,
        lambda_bar: drops.lambda_bar,
        p_drop: drops.p_drop,
        throughput,
        delay,
        mode,
    }
}

/// Erlang-B blocking probability of `servers` servers offered `load` Erlangs.
pub fn erlang_b(load: f64, servers: usize) -> f64 {
    let mut b = 1.0;
    for n in 1..=servers {
        b = load * b / (n as f64 + load * b);
    }
    b
}

/// Truncated-Poisson (Erlang-loss) occupancy law on `0..=servers`.
pub fn erlang_loss_distribution(load: f64, servers: usize) -> Vec<f64> {
    let mut terms = Vec::with_capacity(servers + 1);
    let mut t = 1.0;
    terms.push(t);
    for n in 1..=servers {
        t *= load / n as f64;
        terms.push(t);
    }
    let total: f64 = terms.iter().sum();
    terms.iter().map(|t| t / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn erlang_b_examples() {
        assert_eq!(erlang_b(0.0, 3), 0.0);
        assert_eq!(erlang_b(1.0, 1), 0.5);
        assert_abs_diff_eq!(erlang_b(4.0, 10), 5.307_548_873_895_178e-3, epsilon = 1e-15);
        assert_eq!(erlang_b(2.0, 0), 1.0);
    }

    #[test]
    fn loss_distribution_tail_is_erlang_b() {
        for (load, c) in [(4.0, 10), (0.5, 3), (12.0, 25)] {
            let d = erlang_loss_distribution(load, c);
            assert_abs_diff_eq!(d[c], erlang_b(load, c), epsilon = 1e-14);
            let mean: f64 = d.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
            assert_abs_diff_eq!(mean, load * (1.0 - erlang_b(load, c)), epsilon = 1e-12);
        }
    }

    #[test]
    fn throughput_modes() {
        let drops = DropMetrics {
            n_drop: 0.0,
            lambda_bar: 3.0,
            p_drop: 0.0,
        };
        let (eta, d) = throughput_and_delay(&drops, 6.0, 1.5, MetricMode::Consistent);
        assert_eq!(eta, 3.0);
        assert_eq!(d, 2.0);
        let (eta, _) = throughput_and_delay(&drops, 6.0, 1.5, MetricMode::PaperLiteral);
        assert_eq!(eta, 1.5);
        let none = DropMetrics {
            n_drop: 0.0,
            lambda_bar: 0.0,
            p_drop: 0.0,
        };
        let (eta, d) = throughput_and_delay(&none, 0.0, 1.5, MetricMode::Consistent);
        assert_eq!(eta, 0.0);
        assert!(d.is_nan());
    }

    #[test]
    fn mode_names_parse() {
        for m in [MetricMode::Consistent, MetricMode::PaperLiteral] {
            assert_eq!(m.as_str().parse::<MetricMode>().unwrap(), m);
        }
        assert!("other".parse::<MetricMode>().is_err());
    }
}
