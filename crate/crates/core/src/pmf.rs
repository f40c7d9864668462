//! Probability mass functions on `0..=max` with unit-spaced support.

/// A pmf over the nonnegative integers `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf(Vec<f64>);

impl Pmf {
    /// Wraps raw probabilities. Callers are responsible for normalization.
    pub fn from_vec(probs: Vec<f64>) -> Self {
        assert!(!probs.is_empty(), "pmf needs at least one support point");
        Pmf(probs)
    }

    /// Unit mass at `n`.
    pub fn point(n: usize) -> Self {
        let mut p = vec![0.0; n + 1];
        p[n] = 1.0;
        Pmf(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, n: usize) -> f64 {
        self.0.get(n).copied().unwrap_or(0.0)
    }

    /// Largest value in the support (including zero-probability tail entries).
    pub fn support_max(&self) -> usize {
        self.0.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Distribution of the sum of two independent variables.
    pub fn convolve(&self, other: &Pmf) -> Pmf {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (a, &pa) in self.0.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for (b, &pb) in other.0.iter().enumerate() {
                out[a + b] += pa * pb;
            }
        }
        Pmf(out)
    }

    /// Distribution of the sum of `n` i.i.d. copies, by repeated squaring.
    pub fn convolve_power(&self, n: usize) -> Pmf {
        let mut result = Pmf::point(0);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.convolve(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.convolve(&base);
            }
        }
        result
    }

    /// `Pr[X >= n]` computed as a suffix sum.
    pub fn tail(&self, n: usize) -> f64 {
        self.0.iter().skip(n).sum()
    }
}
