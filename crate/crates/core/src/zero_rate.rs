//! The zero-rate extremes code: send the indices of the `k` largest samples,
//! reconstruct with `alpha` there and `−kα/(n−k)` elsewhere.

use crate::error::{Error, Result};
use crate::stats::{self, ln_binomial};
use crate::topk::{self, IndexMessage};

/// Constant `c` in the excess-distortion threshold
/// `D_n = 1 − 2R_n + √(2/n)·Q⁻¹(ε) + c·k·ln ln n / n`.
///
/// Measured by `examples/calibrate_zero_rate.rs`: the largest value needed over
/// n ∈ {2^10, 2^12, 2^14}, ε ∈ {0.05, 0.1, 0.2}, k ∈ {1, 2} with 4·10^4 trials
/// each was 2.25 (n = 2^14, k = 1, ε = 0.05), rounded up to the next half.
pub const EXCESS_SLACK_CONSTANT: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroRateCode {
    n: usize,
    k: usize,
    alpha: f64,
}

impl ZeroRateCode {
    /// Uses `alpha = p_n − q_n`.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let c = stats::zero_rate_constants(n, k)?;
        Self::with_alpha(n, k, c.alpha_n)
    }

    /// `k = ⌈(ln n)^β⌉`, at least 1.
    pub fn from_beta(n: usize, beta: f64) -> Result<Self> {
        Self::new(n, k_from_beta(n, beta)?)
    }

    /// Uses `alpha = E[X_(k)]` for i.i.d. standard normal samples.
    pub fn with_expected_order_statistic(n: usize, k: usize) -> Result<Self> {
        let alpha = stats::expected_order_statistic(n, k)?;
        Self::with_alpha(n, k, alpha)
    }

    pub fn with_alpha(n: usize, k: usize, alpha: f64) -> Result<Self> {
        if n < 2 || k == 0 || k >= n {
            return Err(Error::Config(format!("need 1 <= k < n, got k = {k}, n = {n}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { n, k, alpha })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `ln C(n, k) / n` nats per symbol.
    pub fn rate(&self) -> f64 {
        ln_binomial(self.n, self.k) / self.n as f64
    }

    pub fn encode(&self, x: &[f64]) -> Result<IndexMessage> {
        if x.len() != self.n {
            return Err(Error::Usage(format!(
                "block of length {} does not match n = {}",
                x.len(),
                self.n
            )));
        }
        topk::g_k(x, self.k)
    }

    pub fn decode(&self, m: &IndexMessage) -> Result<Vec<f64>> {
        if m.n() != self.n || m.k() != self.k {
            return Err(Error::Usage(format!(
                "message for (n = {}, k = {}) given to code (n = {}, k = {})",
                m.n(),
                m.k(),
                self.n,
                self.k
            )));
        }
        let low = -(self.k as f64) * self.alpha / (self.n - self.k) as f64;
        let mut xhat = vec![low; self.n];
        for &j in m.indices() {
            xhat[j] = self.alpha;
        }
        Ok(xhat)
    }

    /// `(1/n)‖x − x̂‖²` for one block.
    pub fn distortion(&self, x: &[f64]) -> Result<f64> {
        let xhat = self.decode(&self.encode(x)?)?;
        Ok(squared_distance(x, &xhat) / self.n as f64)
    }

    /// Threshold that the per-symbol distortion exceeds with probability at
    /// most about `eps` for i.i.d. N(0, 1) input, using [`EXCESS_SLACK_CONSTANT`].
    pub fn distortion_threshold(&self, eps: f64) -> Result<f64> {
        let nf = self.n as f64;
        Ok(1.0 - 2.0 * self.rate()
            + (2.0 / nf).sqrt() * stats::q_inv(eps)?
            + EXCESS_SLACK_CONSTANT * self.k as f64 * nf.ln().ln() / nf)
    }
}

/// `⌈(ln n)^β⌉`, at least 1.
pub fn k_from_beta(n: usize, beta: f64) -> Result<usize> {
    if n < 2 || !(beta >= 0.0) {
        return Err(Error::Config(format!("need n >= 2 and beta >= 0, got n = {n}, beta = {beta}")));
    }
    Ok(((n as f64).ln().powf(beta).ceil() as usize).max(1))
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
