//! Two-state Markov-modulated Poisson arrivals.
//!
//! The modulating chain switches phase 0 -> 1 at rate `q01` and 1 -> 0 at
//! rate `q10`, both per frame. While in phase `i` each connection emits
//! packets as a Poisson process of rate `lambda_i` packets per frame.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmppParams {
    pub q01: f64,
    pub q10: f64,
    pub lambda0: f64,
    pub lambda1: f64,
}

impl MmppParams {
    pub fn new(q01: f64, q10: f64, lambda0: f64, lambda1: f64) -> Result<Self> {
        let p = MmppParams {
            q01,
            q10,
            lambda0,
            lambda1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.q01, self.q10, self.lambda0, self.lambda1];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParams(format!(
                "MMPP rates must be finite and nonnegative, got {self:?}"
            )));
        }
        if self.q01 + self.q10 <= 0.0 {
            return Err(Error::InvalidParams(
                "MMPP switching rates q01 + q10 must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Packet rate of phase `i` (0 or 1).
    pub fn lambda(&self, phase: usize) -> f64 {
        match phase {
            0 => self.lambda0,
            _ => self.lambda1,
        }
    }
}

/// Stationary phase probabilities `(pi0, pi1)` of the modulating chain.
pub fn steady_state(p: &MmppParams) -> Result<(f64, f64)> {
    p.validate()?;
    let total = p.q01 + p.q10;
    Ok((p.q10 / total, p.q01 / total))
}

/// Long-run mean packet rate of a single connection, packets per frame.
pub fn mean_rate(p: &MmppParams) -> Result<f64> {
    let (pi0, pi1) = steady_state(p)?;
    Ok(pi0 * p.lambda0 + pi1 * p.lambda1)
}

/// Phase transition probabilities over `t` frames.
///
/// Uses the closed form of the two-state matrix exponential: every row
/// relaxes toward the stationary row at rate `q01 + q10`.
pub fn phase_transition_matrix(p: &MmppParams, t: f64) -> Result<[[f64; 2]; 2]> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeDuration(t));
    }
    let (pi0, pi1) = steady_state(p)?;
    let decay = (-(p.q01 + p.q10) * t).exp();
    // Off-diagonals are computed directly; diagonals as 1 - off so rows sum to 1.
    let p01 = pi1 * (1.0 - decay);
    let p10 = pi0 * (1.0 - decay);
    Ok([[1.0 - p01, p01], [p10, 1.0 - p10]])
}
