//! Zero-rate position modulation over the unit-variance AWGN channel: message
//! `m` puts a single peak at coordinate `m`, the decoder picks the largest output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::trial_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCode {
    n: usize,
    eps: f64,
}

impl ChannelCode {
    /// `ε_n` from `(1 + nε_n)/(n − 1) = (ln n)^{−1/3}`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("need n >= 2 messages, got {n}")));
        }
        let nf = n as f64;
        let eps = ((nf - 1.0) * nf.ln().powf(-1.0 / 3.0) - 1.0) / nf;
        Ok(Self { n, eps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `P_n = 2(1 + ε_n)² ln n / (n − 1)`.
    pub fn power(&self) -> f64 {
        let nf = self.n as f64;
        2.0 * (1.0 + self.eps).powi(2) * nf.ln() / (nf - 1.0)
    }

    /// `R_n = ln n / n` nats per channel use.
    pub fn rate(&self) -> f64 {
        (self.n as f64).ln() / self.n as f64
    }

    /// `R_n / C(P_n)`.
    pub fn capacity_ratio(&self) -> f64 {
        self.rate() / capacity(self.power())
    }

    /// `(1 + ε_n)√(2 ln n)`.
    pub fn peak(&self) -> f64 {
        (1.0 + self.eps) * (2.0 * (self.n as f64).ln()).sqrt()
    }

    pub fn encode(&self, m: usize) -> Result<Vec<f64>> {
        if m >= self.n {
            return Err(Error::Usage(format!("message {m} out of range for n = {}", self.n)));
        }
        let peak = self.peak();
        let mut x = vec![-peak / (self.n - 1) as f64; self.n];
        x[m] = peak;
        Ok(x)
    }

    /// Index of the largest output, smallest index on ties.
    pub fn decode(&self, y: &[f64]) -> Result<usize> {
        if y.len() != self.n {
            return Err(Error::Usage(format!("output of length {} for n = {}", y.len(), self.n)));
        }
        Ok(argmax(y))
    }

    /// Fraction of `trials` uniformly drawn messages decoded wrongly after N(0, 1) noise.
    pub fn simulate(&self, trials: usize, seed: u64) -> Result<ErrorRate> {
        if trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        let peak = self.peak();
        let low = -peak / (self.n - 1) as f64;
        let errors = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t as u64));
                let m = rng.random_range(0..self.n);
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for j in 0..self.n {
                    let z: f64 = rng.sample(StandardNormal);
                    let v = if j == m { peak } else { low } + z;
                    if v > best_v {
                        best_v = v;
                        best = j;
                    }
                }
                usize::from(best != m)
            })
            .sum();
        Ok(ErrorRate { n: self.n, trials, errors })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorRate {
    pub n: usize,
    pub trials: usize,
    pub errors: usize,
}

impl ErrorRate {
    pub fn rate(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }
}

/// AWGN capacity `½ ln(1 + P)` at unit noise variance.
pub fn capacity(power: f64) -> f64 {
    0.5 * power.ln_1p()
}

/// Fraction of trials in which the maximum of `n` standard normals exceeds `√(2 ln n)`.
pub fn max_exceedance_frequency(n: usize, trials: usize, seed: u64) -> f64 {
    let threshold = (2.0 * (n as f64).ln()).sqrt();
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t as u64));
            usize::from((0..n).any(|_| rng.sample::<f64, _>(StandardNormal) > threshold))
        })
        .sum();
    hits as f64 / trials as f64
}

fn argmax(y: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in y.iter().enumerate().skip(1) {
        if v > y[best] {
            best = j;
        }
    }
    best
}
