//! Packet arrivals per frame and connection-level dynamics under CAC.

use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::pmf::Pmf;

/// Admission policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdmissionMode {
    /// New connections are refused once `threshold` connections are active.
    Cac,
    /// No admission control; `threshold` is only a numerical truncation level.
    NoCac,
}

impl AdmissionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AdmissionMode::Cac => "cac",
            AdmissionMode::NoCac => "no_cac",
        }
    }
}

impl std::str::FromStr for AdmissionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cac" => Ok(AdmissionMode::Cac),
            "no_cac" => Ok(AdmissionMode::NoCac),
            other => Err(format!("expected `cac` or `no_cac`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionParams {
    /// Connection arrival rate, connections per minute.
    pub rho: f64,
    /// Mean connection holding time, minutes.
    pub mean_holding: f64,
    /// Frame duration, minutes.
    pub frame: f64,
    /// Maximum number of connections (C under CAC, C_tr without).
    pub threshold: usize,
    pub mode: AdmissionMode,
}

impl ConnectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidParams(format!("rho must be >= 0, got {}", self.rho)));
        }
        if !(self.mean_holding > 0.0) || !self.mean_holding.is_finite() {
            return Err(Error::InvalidParams(format!(
                "mean holding time must be > 0, got {}",
                self.mean_holding
            )));
        }
        if !(self.frame > 0.0) || !self.frame.is_finite() {
            return Err(Error::InvalidParams(format!(
                "frame duration must be > 0, got {}",
                self.frame
            )));
        }
        if self.threshold < 1 {
            return Err(Error::InvalidParams("connection threshold must be >= 1".into()));
        }
        Ok(())
    }

    /// Departure rate of a single connection, per minute.
    pub fn departure_rate(&self) -> f64 {
        1.0 / self.mean_holding
    }

    /// Offered load in Erlangs.
    pub fn offered_load(&self) -> f64 {
        self.rho * self.mean_holding
    }

    /// Probability that at least one connection request arrives in a frame.
    pub fn arrival_probability(&self) -> f64 {
        -(-self.rho * self.frame).exp_m1()
    }

    /// Probability that at least one of `k` active connections ends in a frame.
    pub fn departure_probability(&self, k: usize) -> f64 {
        -(-(k as f64) * self.departure_rate() * self.frame).exp_m1()
    }
}

/// Packets arriving in one frame from `connections` connections, each capped at `cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalPmf {
    pmf: Pmf,
    connections: usize,
    cap: usize,
}

impl ArrivalPmf {
    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    pub fn connections(&self) -> usize {
        self.connections
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn mean(&self) -> f64 {
        self.pmf.mean()
    }
}

/// Poisson(`lambda`) arrivals of one connection with the mass at or above
/// `cap` lumped onto `cap`.
pub fn per_connection_arrival_pmf(lambda: f64, cap: usize) -> Result<ArrivalPmf> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParams(format!(
            "packet rate must be finite and >= 0, got {lambda}"
        )));
    }
    if cap < 1 {
        return Err(Error::InvalidParams("per-connection arrival cap A must be >= 1".into()));
    }
    let mut probs = Vec::with_capacity(cap + 1);
    let mut term = (-lambda).exp();
    for n in 0..cap {
        probs.push(term);
        term *= lambda / (n + 1) as f64;
    }
    // Pr[X >= cap] = P(cap, lambda), the regularized lower incomplete gamma.
    let tail = if lambda == 0.0 { 0.0 } else { gamma_lr(cap as f64, lambda) };
    probs.push(tail);
    Ok(ArrivalPmf {
        pmf: Pmf::from_vec(probs),
        connections: 1,
        cap,
    })
}

/// Total arrivals from `k` i.i.d. connections.
pub fn aggregate_arrival_pmf(per_conn: &ArrivalPmf, k: usize) -> ArrivalPmf {
    assert_eq!(per_conn.connections, 1, "expected a single-connection pmf");
    ArrivalPmf {
        pmf: per_conn.pmf.convolve_power(k),
        connections: k,
        cap: per_conn.cap,
    }
}

/// One-frame connection-count transition probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionStep {
    pub up: f64,
    pub down: f64,
    pub stay: f64,
}

/// Birth-death step from `k` connections. At most one connection event is
/// resolved per frame; a simultaneous arrival and departure leaves `k` as is.
pub fn connection_transition_probs(k: usize, p: &ConnectionParams) -> Result<ConnectionStep> {
    p.validate()?;
    if k > p.threshold {
        return Err(Error::OutOfRange {
            what: "connection count",
            value: k,
            max: p.threshold,
        });
    }
    let a = p.arrival_probability();
    let d = p.departure_probability(k);
    let up = if k < p.threshold { a * (1.0 - d) } else { 0.0 };
    let down = if k > 0 { d * (1.0 - a) } else { 0.0 };
    Ok(ConnectionStep {
        up,
        down,
        stay: 1.0 - up - down,
    })
}
