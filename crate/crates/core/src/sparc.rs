//! Sequential sparse regression code: one Gaussian sub-codebook of `M`
//! codewords per section, greedy max-inner-product selection, subtract and
//! move to the next section.
//!
//! Codeword `j` of section `i` is drawn from its own ChaCha stream, so the
//! decoder regenerates only the codewords it needs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::transform::dot;

/// How the selected codeword is scaled before `c_i` multiplies it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SparcNormalization {
    /// `Û = U / ‖U‖`.
    #[default]
    Unit,
    /// `Û = U / √n`, which has unit norm only on average.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparcParams {
    n: usize,
    m: usize,
    sections: usize,
    rate: f64,
    seed: u64,
    sigma2: f64,
    normalization: SparcNormalization,
}

impl SparcParams {
    /// `L = ⌊nR / ln M⌋` sections of `M ≥ 2` codewords.
    pub fn from_rate(n: usize, m: usize, rate: f64, seed: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config(format!(
                "sub-codebook size must be at least 2 to carry information, got {m}"
            )));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Config(format!("rate must be positive, got {rate}")));
        }
        let exact = n as f64 * rate / (m as f64).ln();
        let sections = (exact + 1e-9).floor();
        if sections < 1.0 {
            return Err(Error::Config(format!(
                "rate {rate} buys {exact:.3} < 1 sections of ln {m} nats"
            )));
        }
        Self::with_sections(n, m, sections as usize, rate, seed)
    }

    /// Explicit section count; the step sizes still use `rate`. Allows `M = 1`.
    pub fn with_sections(n: usize, m: usize, sections: usize, rate: f64, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 || sections == 0 {
            return Err(Error::Config(format!(
                "need n, M and L positive, got n = {n}, M = {m}, L = {sections}"
            )));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Config(format!("rate must be positive, got {rate}")));
        }
        Ok(Self { n, m, sections, rate, seed, sigma2: 1.0, normalization: SparcNormalization::Unit })
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!("sigma2 must be positive, got {sigma2}")));
        }
        self.sigma2 = sigma2;
        Ok(self)
    }

    pub fn with_normalization(mut self, normalization: SparcNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sub-codebook size `M`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of sections `L`.
    pub fn sections(&self) -> usize {
        self.sections
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn normalization(&self) -> SparcNormalization {
        self.normalization
    }

    /// `c_i = √(nσ²(1 − e^{−2R/L})) e^{−(i−1)R/L}` for `i ∈ [1, L]`.
    pub fn step(&self, i: usize) -> Result<f64> {
        if i == 0 || i > self.sections {
            return Err(Error::Usage(format!("section {i} outside [1, {}]", self.sections)));
        }
        let s = self.rate / self.sections as f64;
        Ok((self.n as f64 * self.sigma2 * (1.0 - (-2.0 * s).exp())).sqrt() * (-((i - 1) as f64) * s).exp())
    }

    pub fn rate_after(&self, i: usize) -> f64 {
        i as f64 * (self.m as f64).ln() / self.n as f64
    }

    /// Largest section count whose consumed rate does not exceed `rate`.
    pub fn sections_for_rate(&self, rate: f64) -> usize {
        let per = (self.m as f64).ln();
        if per == 0.0 {
            return self.sections;
        }
        (((rate * self.n as f64 / per) + 1e-9).floor().max(0.0) as usize).min(self.sections)
    }

    fn scale(&self, u: &[f64]) -> f64 {
        match self.normalization {
            SparcNormalization::Unit => 1.0 / dot(u, u).sqrt(),
            SparcNormalization::Raw => 1.0 / (self.n as f64).sqrt(),
        }
    }
}

/// Supplies codeword `index` of section `section` (1-based section).
pub trait Codebook {
    fn codeword(&self, section: usize, index: usize, out: &mut [f64]) -> Result<()>;
}

/// Codewords with i.i.d. N(0, 1) entries derived from a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededCodebook {
    pub seed: u64,
}

impl Codebook for SeededCodebook {
    fn codeword(&self, section: usize, index: usize, out: &mut [f64]) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((section as u64) << 32) | index as u64);
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        Ok(())
    }
}

/// Explicit codebooks, indexed `[section − 1][index]`.
impl Codebook for [Vec<Vec<f64>>] {
    fn codeword(&self, section: usize, index: usize, out: &mut [f64]) -> Result<()> {
        let word = section
            .checked_sub(1)
            .and_then(|s| self.get(s))
            .and_then(|book| book.get(index))
            .ok_or_else(|| Error::Usage(format!("no codeword {index} in section {section}")))?;
        if word.len() != out.len() {
            return Err(Error::Usage(format!(
                "codeword of length {} for block length {}",
                word.len(),
                out.len()
            )));
        }
        out.copy_from_slice(word);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparcEncoding {
    pub params: SparcParams,
    pub indices: Vec<usize>,
    /// `‖X^(i)‖` for `i = 1..=L+1`.
    pub residual_norms: Vec<f64>,
}

impl SparcEncoding {
    pub fn final_residual_norm(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&0.0)
    }

    /// `(1/n)‖X^(i+1)‖²` for `i = 0..=L`.
    pub fn distortion_profile(&self) -> Vec<f64> {
        let n = self.params.n as f64;
        self.residual_norms.iter().map(|r| r * r / n).collect()
    }
}

pub fn sparc_encode(x: &[f64], p: &SparcParams) -> Result<SparcEncoding> {
    sparc_encode_with(x, p, &SeededCodebook { seed: p.seed })
}

pub fn sparc_encode_with<C: Codebook + ?Sized>(x: &[f64], p: &SparcParams, book: &C) -> Result<SparcEncoding> {
    if x.len() != p.n {
        return Err(Error::Usage(format!("block of length {} does not match n = {}", x.len(), p.n)));
    }
    let mut residual = x.to_vec();
    let mut norms = Vec::with_capacity(p.sections + 1);
    norms.push(dot(&residual, &residual).sqrt());
    let mut indices = Vec::with_capacity(p.sections);
    let mut word = vec![0.0; p.n];
    let mut best_word = vec![0.0; p.n];
    for i in 1..=p.sections {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for j in 0..p.m {
            book.codeword(i, j, &mut word)?;
            let score = dot(&word, &residual);
            if score > best_score {
                best_score = score;
                best = j;
                best_word.copy_from_slice(&word);
            }
        }
        let c = p.step(i)? * p.scale(&best_word);
        residual.iter_mut().zip(&best_word).for_each(|(r, u)| *r -= c * u);
        norms.push(dot(&residual, &residual).sqrt());
        indices.push(best);
    }
    Ok(SparcEncoding { params: *p, indices, residual_norms: norms })
}

/// `X̂ = Σ_{i ≤ len} c_i Û^(i)` over the given prefix of indices.
pub fn sparc_decode(indices: &[usize], p: &SparcParams) -> Result<Vec<f64>> {
    sparc_decode_with(indices, p, &SeededCodebook { seed: p.seed })
}

pub fn sparc_decode_with<C: Codebook + ?Sized>(indices: &[usize], p: &SparcParams, book: &C) -> Result<Vec<f64>> {
    if indices.len() > p.sections {
        return Err(Error::Usage(format!(
            "{} indices exceed the L = {} sections",
            indices.len(),
            p.sections
        )));
    }
    let mut xhat = vec![0.0; p.n];
    let mut word = vec![0.0; p.n];
    for (s, &j) in indices.iter().enumerate() {
        if j >= p.m {
            return Err(Error::Usage(format!("codeword index {j} out of range for M = {}", p.m)));
        }
        book.codeword(s + 1, j, &mut word)?;
        let c = p.step(s + 1)? * p.scale(&word);
        xhat.iter_mut().zip(&word).for_each(|(v, u)| *v += c * u);
    }
    Ok(xhat)
}
