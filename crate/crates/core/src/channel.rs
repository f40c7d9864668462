//! Per-frame transmission capacity of the subscriber station.
//!
//! Each of the `S` allocated subchannels independently picks the highest
//! rate ID whose SNR threshold is met by the instantaneous SNR; the rate ID
//! fixes how many 80-bit packets that subchannel carries in the frame. The
//! total over all subchannels is the number of packets the queue can send.

use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Error, Result};
use crate::pmf::Pmf;

/// Fixed packet size. Rate ID 0 (BPSK 1/2, 80 kbps) over a 1 ms frame carries
/// exactly one packet per subchannel.
pub const PACKET_BITS: u32 = 80;

/// Adaptive modulation and coding table.
#[derive(Debug, Clone, PartialEq)]
pub struct AmcTable {
    thresholds_db: Vec<f64>,
    packets_per_rate: Vec<u32>,
}

impl AmcTable {
    pub fn new(thresholds_db: Vec<f64>, packets_per_rate: Vec<u32>) -> Result<Self> {
        if thresholds_db.is_empty() {
            return Err(Error::InvalidTable("at least one rate ID is required".into()));
        }
        if thresholds_db.len() != packets_per_rate.len() {
            return Err(Error::InvalidTable(format!(
                "{} thresholds but {} packet counts",
                thresholds_db.len(),
                packets_per_rate.len()
            )));
        }
        if thresholds_db.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTable("thresholds must be finite".into()));
        }
        if thresholds_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTable(
                "thresholds must be strictly increasing".into(),
            ));
        }
        if packets_per_rate.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidTable(
                "packets per rate must be nondecreasing".into(),
            ));
        }
        Ok(AmcTable {
            thresholds_db,
            packets_per_rate,
        })
    }

    /// Seven-rate IEEE 802.16 style table: BPSK 1/2 up to 64-QAM 3/4, with
    /// packets per subchannel proportional to spectral efficiency relative to
    /// BPSK 1/2. Only rate ID 0 is anchored by the 80 kbps figure; the rest is
    /// a conventional default.
    pub fn default_802_16() -> Self {
        AmcTable::new(
            vec![6.4, 9.4, 11.2, 16.4, 18.2, 22.7, 24.4],
            vec![1, 2, 3, 4, 6, 8, 9],
        )
        .expect("built-in table is valid")
    }

    pub fn thresholds_db(&self) -> &[f64] {
        &self.thresholds_db
    }

    pub fn packets_per_rate(&self) -> &[u32] {
        &self.packets_per_rate
    }

    pub fn rates(&self) -> usize {
        self.thresholds_db.len()
    }

    pub fn max_packets(&self) -> u32 {
        *self.packets_per_rate.last().unwrap()
    }

    /// Highest rate ID whose threshold is at or below `snr_db`, if any.
    pub fn rate_for_snr_db(&self, snr_db: f64) -> Option<usize> {
        self.thresholds_db.iter().rposition(|&t| t <= snr_db)
    }

    /// Packets carried by one subchannel at instantaneous SNR `snr_db`.
    pub fn packets_at_snr_db(&self, snr_db: f64) -> u32 {
        self.rate_for_snr_db(snr_db)
            .map_or(0, |r| self.packets_per_rate[r])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    /// Instantaneous SNR always equals the mean.
    Deterministic,
    /// Nakagami-m envelope; the instantaneous SNR is Gamma(m, mean/m).
    Nakagami { m: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub mean_snr_db: f64,
    pub fading: Fading,
    pub subchannels: u32,
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if !self.mean_snr_db.is_finite() {
            return Err(Error::InvalidModel("mean SNR must be finite".into()));
        }
        if let Fading::Nakagami { m } = self.fading {
            if !(m >= 0.5) || !m.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "Nakagami shape m must be >= 0.5, got {m}"
                )));
            }
        }
        Ok(())
    }

    pub fn mean_snr_linear(&self) -> f64 {
        db_to_linear(self.mean_snr_db)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-subchannel rate outcome probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePmf {
    /// Probability that the SNR is below every threshold.
    pub no_tx: f64,
    /// `by_rate[r]` is the probability of rate ID `r`.
    pub by_rate: Vec<f64>,
}

impl RatePmf {
    pub fn total(&self) -> f64 {
        self.no_tx + self.by_rate.iter().sum::<f64>()
    }
}

/// Probability of each rate outcome on a single subchannel.
pub fn rate_pmf(model: &ChannelModel, table: &AmcTable) -> Result<RatePmf> {
    model.validate()?;
    let rates = table.rates();
    match model.fading {
        Fading::Deterministic => {
            let mut by_rate = vec![0.0; rates];
            let no_tx = match table.rate_for_snr_db(model.mean_snr_db) {
                Some(r) => {
                    by_rate[r] = 1.0;
                    0.0
                }
                None => 1.0,
            };
            Ok(RatePmf { no_tx, by_rate })
        }
        Fading::Nakagami { m } => {
            let mean = model.mean_snr_linear();
            // Pr[SNR >= threshold_r], decreasing in r, with an implicit 0 at r = R.
            let exceed: Vec<f64> = table
                .thresholds_db
                .iter()
                .map(|&t| gamma_ur(m, m * db_to_linear(t) / mean))
                .collect();
            let by_rate = (0..rates)
                .map(|r| {
                    let next = exceed.get(r + 1).copied().unwrap_or(0.0);
                    (exceed[r] - next).max(0.0)
                })
                .collect();
            let no_tx = gamma_lr(m, m * db_to_linear(table.thresholds_db[0]) / mean);
            Ok(RatePmf { no_tx, by_rate })
        }
    }
}

/// Pmf of packets carried by one subchannel.
pub fn subchannel_packet_pmf(rates: &RatePmf, table: &AmcTable) -> Result<Pmf> {
    if rates.by_rate.len() != table.rates() {
        return Err(Error::InvalidTable(format!(
            "rate pmf has {} entries, table has {} rate IDs",
            rates.by_rate.len(),
            table.rates()
        )));
    }
    let mut probs = vec![0.0; table.max_packets() as usize + 1];
    probs[0] += rates.no_tx;
    for (p, &n) in rates.by_rate.iter().zip(&table.packets_per_rate) {
        probs[n as usize] += p;
    }
    Ok(Pmf::from_vec(probs))
}

/// Pmf of the total packets the station can send in one frame over
/// `subchannels` i.i.d. subchannels.
pub fn transmission_pmf(rates: &RatePmf, table: &AmcTable, subchannels: u32) -> Result<Pmf> {
    let single = subchannel_packet_pmf(rates, table)?;
    Ok(single.convolve_power(subchannels as usize))
}
