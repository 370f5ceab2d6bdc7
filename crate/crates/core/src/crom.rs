//! Coding with random orthogonal matrices.
//!
//! Each iteration describes the `k` largest coordinates of the rotated residual,
//! subtracts `α_i U^(i)` and rotates again:
//!
//! ```text
//! X^(1)   = A_1 x
//! m^(i)   = g_k(X^(i))
//! X^(i+1) = A_{i+1} (X^(i) − α_i U^(i))
//! ```
//!
//! The decoder rebuilds `X̂^(i) = A_1ᵀ(α_1 U^(1) + A_2ᵀ(α_2 U^(2) + ⋯ + A_iᵀ α_i U^(i)))`
//! from any prefix of the messages, and `x − X̂^(i)` is `X^(i+1)` rotated back,
//! so the decoder's error after `i` messages equals the encoder's residual norm.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::stats::ln_binomial;
use crate::topk::{self, IndexMessage};
use crate::transform::{dot, OrthogonalTransform, TransformScheme, TransformSequence, Workspace};

/// Which step-size rule produces `α_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Schedule {
    /// `α_i = √(nσ²(1 − e^{−2R/L})) e^{−(i−1)R/L}`.
    Simulation,
    /// `α_i = √(nσ²(1 − e^{−2R/L})(a_i + b_i)(a_i − b_i))` with
    /// `a_i = e^{−(i−1)R/L}`, `b_i = γ e^{(i−1)R/L}`.
    Theorem,
}

impl Schedule {
    pub fn id(self) -> u8 {
        match self {
            Self::Simulation => 0,
            Self::Theorem => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Self::Simulation),
            1 => Some(Self::Theorem),
            _ => None,
        }
    }
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulation" => Ok(Self::Simulation),
            "theorem" => Ok(Self::Theorem),
            other => Err(Error::Config(format!("unknown schedule '{other}'"))),
        }
    }
}

/// Complete codec configuration. `iterations` is always `⌊nR / ln C(n, k)⌋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CromParams {
    n: usize,
    k: usize,
    rate: f64,
    iterations: usize,
    sigma2: f64,
    gamma: f64,
    schedule: Schedule,
    scheme: TransformScheme,
}

impl CromParams {
    /// Simulation schedule, unit source variance.
    pub fn new(n: usize, k: usize, rate: f64, scheme: TransformScheme) -> Result<Self> {
        Self::from_parts(n, k, rate, 1.0, 0.0, Schedule::Simulation, scheme)
    }

    pub fn from_parts(
        n: usize,
        k: usize,
        rate: f64,
        sigma2: f64,
        gamma: f64,
        schedule: Schedule,
        scheme: TransformScheme,
    ) -> Result<Self> {
        if n < 2 || k == 0 || k >= n {
            return Err(Error::Config(format!("need 1 <= k < n, got k = {k}, n = {n}")));
        }
        if scheme.n != n {
            return Err(Error::Config(format!(
                "transform scheme is for n = {}, codec for n = {n}",
                scheme.n
            )));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Config(format!("rate must be positive, got {rate}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!("sigma2 must be positive, got {sigma2}")));
        }
        let per_message = ln_binomial(n, k);
        let exact = n as f64 * rate / per_message;
        // absorb rounding when rate was itself computed as L ln C(n,k) / n
        let iterations = (exact + 1e-9).floor();
        if iterations < 1.0 {
            return Err(Error::Config(format!(
                "rate {rate} buys {exact:.3} < 1 messages of ln C({n}, {k}) = {per_message:.3} nats"
            )));
        }
        let iterations = iterations as usize;
        let params = Self { n, k, rate, iterations, sigma2, gamma, schedule, scheme };
        if schedule == Schedule::Theorem {
            if !(gamma >= 0.0 && gamma < (-rate).exp()) {
                return Err(Error::Config(format!(
                    "theorem schedule needs 0 <= gamma < e^-R = {}, got {gamma}",
                    (-rate).exp()
                )));
            }
            // every α_i must be real: e^{−2(L−1)R/L} > γ
            params.alpha(iterations)?;
        } else if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        Ok(params)
    }

    pub fn with_sigma2(self, sigma2: f64) -> Result<Self> {
        Self::from_parts(self.n, self.k, self.rate, sigma2, self.gamma, self.schedule, self.scheme)
    }

    pub fn with_theorem_schedule(self, gamma: f64) -> Result<Self> {
        Self::from_parts(self.n, self.k, self.rate, self.sigma2, gamma, Schedule::Theorem, self.scheme)
    }

    pub fn with_simulation_schedule(self) -> Result<Self> {
        Self::from_parts(self.n, self.k, self.rate, self.sigma2, 0.0, Schedule::Simulation, self.scheme)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Number of messages `L`.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    pub fn scheme(&self) -> &TransformScheme {
        &self.scheme
    }

    /// `ln C(n, k)` nats spent per message.
    pub fn nats_per_message(&self) -> f64 {
        ln_binomial(self.n, self.k)
    }

    /// Rate in nats/symbol consumed by the first `i` messages.
    pub fn rate_after(&self, i: usize) -> f64 {
        i as f64 * self.nats_per_message() / self.n as f64
    }

    /// Largest message count whose consumed rate does not exceed `rate`.
    pub fn messages_for_rate(&self, rate: f64) -> usize {
        let exact = rate * self.n as f64 / self.nats_per_message();
        ((exact + 1e-9).floor().max(0.0) as usize).min(self.iterations)
    }

    /// Step size `α_i` for iteration `i ∈ [1, L]`.
    pub fn alpha(&self, i: usize) -> Result<f64> {
        if i == 0 || i > self.iterations {
            return Err(Error::Usage(format!(
                "iteration {i} outside [1, {}]",
                self.iterations
            )));
        }
        let step = self.rate / self.iterations as f64;
        let base = self.n as f64 * self.sigma2 * (1.0 - (-2.0 * step).exp());
        let decay = (-((i - 1) as f64) * step).exp();
        match self.schedule {
            Schedule::Simulation => Ok(base.sqrt() * decay),
            Schedule::Theorem => {
                let slack = ((i - 1) as f64 * step).exp() * self.gamma;
                if decay <= slack {
                    return Err(Error::Config(format!(
                        "alpha_{i} is imaginary: need e^(-(i-1)R/L) > gamma e^((i-1)R/L), \
                         got {decay} <= {slack}"
                    )));
                }
                Ok((base * (decay + slack) * (decay - slack)).sqrt())
            }
        }
    }

    fn check_block(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Usage(format!(
                "block of length {} does not match n = {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }
}

/// `(1/n) Σ x_i²`, the pre-pass estimate of the source second moment.
pub fn estimate_sigma2(x: &[f64]) -> f64 {
    dot(x, x) / x.len().max(1) as f64
}

/// Anything that can hand out `A_i` for 1-based `i`.
pub trait TransformSource {
    fn transform(&self, index: usize) -> Result<Cow<'_, OrthogonalTransform>>;
}

impl TransformSource for TransformSequence {
    fn transform(&self, index: usize) -> Result<Cow<'_, OrthogonalTransform>> {
        self.get(index).map(Cow::Owned)
    }
}

impl TransformSource for [OrthogonalTransform] {
    fn transform(&self, index: usize) -> Result<Cow<'_, OrthogonalTransform>> {
        index
            .checked_sub(1)
            .and_then(|j| self.get(j))
            .map(Cow::Borrowed)
            .ok_or_else(|| Error::Usage(format!("no transform A_{index} among {}", self.len())))
    }
}

impl TransformSource for Vec<OrthogonalTransform> {
    fn transform(&self, index: usize) -> Result<Cow<'_, OrthogonalTransform>> {
        self.as_slice().transform(index)
    }
}

/// Output of [`crom_encode`].
#[derive(Debug, Clone, PartialEq)]
pub struct CromEncoding {
    pub params: CromParams,
    pub messages: Vec<IndexMessage>,
    /// `‖X^(i)‖` for `i = 1..=L+1`; entry 0 equals `‖x‖`.
    pub residual_norms: Vec<f64>,
    /// `⟨U^(i), X^(i)⟩` for `i = 1..=L`.
    pub correlations: Vec<f64>,
}

impl CromEncoding {
    /// `‖X^(L+1)‖`.
    pub fn final_residual_norm(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&0.0)
    }

    /// `(1/n)‖X^(i+1)‖²` for `i = 0..=L`, the decoder's distortion after `i` messages.
    pub fn distortion_profile(&self) -> Vec<f64> {
        let n = self.params.n as f64;
        self.residual_norms.iter().map(|r| r * r / n).collect()
    }
}

/// Stepwise encoder; [`crom_encode`] runs it to completion.
pub struct CromEncoder<'a, S: TransformSource + ?Sized> {
    params: CromParams,
    source: &'a S,
    residual: Vec<f64>,
    ws: Workspace,
    messages: Vec<IndexMessage>,
    residual_norms: Vec<f64>,
    correlations: Vec<f64>,
}

impl<'a, S: TransformSource + ?Sized> CromEncoder<'a, S> {
    pub fn new(x: &[f64], params: &CromParams, source: &'a S) -> Result<Self> {
        params.check_block(x)?;
        let mut residual = x.to_vec();
        let mut ws = Workspace::default();
        source.transform(1)?.apply_in_place(&mut residual, &mut ws)?;
        let norm = dot(&residual, &residual).sqrt();
        Ok(Self {
            params: *params,
            source,
            residual,
            ws,
            messages: Vec::with_capacity(params.iterations),
            residual_norms: vec![norm],
            correlations: Vec::with_capacity(params.iterations),
        })
    }

    /// Current residual `X^(i)`, where `i − 1` iterations have run.
    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    /// Runs one iteration; `None` once all `L` messages exist.
    pub fn step(&mut self) -> Result<Option<&IndexMessage>> {
        let i = self.messages.len() + 1;
        if i > self.params.iterations {
            return Ok(None);
        }
        let m = topk::g_k(&self.residual, self.params.k)?;
        let alpha = self.params.alpha(i)?;
        let (hi, lo) = topk::direction_levels(self.params.n, self.params.k);
        let total: f64 = self.residual.iter().sum();
        let top: f64 = m.indices().iter().map(|&j| self.residual[j]).sum();
        self.correlations.push(lo * total + (hi - lo) * top);
        topk::subtract_direction(&mut self.residual, &m, alpha);
        self.source
            .transform(i + 1)?
            .apply_in_place(&mut self.residual, &mut self.ws)?;
        self.residual_norms.push(dot(&self.residual, &self.residual).sqrt());
        self.messages.push(m);
        Ok(self.messages.last())
    }

    pub fn finish(mut self) -> Result<CromEncoding> {
        while self.step()?.is_some() {}
        Ok(CromEncoding {
            params: self.params,
            messages: self.messages,
            residual_norms: self.residual_norms,
            correlations: self.correlations,
        })
    }
}

/// Encodes with the transforms regenerated from `params.scheme()`.
pub fn crom_encode(x: &[f64], params: &CromParams) -> Result<CromEncoding> {
    let seq = params.scheme.sequence()?;
    encode_with(x, params, &seq)
}

/// Encodes with caller-supplied transforms `A_1, …, A_{L+1}`.
pub fn encode_with<S: TransformSource + ?Sized>(x: &[f64], params: &CromParams, source: &S) -> Result<CromEncoding> {
    CromEncoder::new(x, params, source)?.finish()
}

fn check_messages(messages: &[IndexMessage], params: &CromParams) -> Result<()> {
    if messages.len() > params.iterations {
        return Err(Error::Usage(format!(
            "{} messages exceed the L = {} the parameters allow",
            messages.len(),
            params.iterations
        )));
    }
    if let Some(m) = messages.iter().find(|m| m.n() != params.n || m.k() != params.k) {
        return Err(Error::Usage(format!(
            "message for (n = {}, k = {}) given to codec (n = {}, k = {})",
            m.n(),
            m.k(),
            params.n,
            params.k
        )));
    }
    Ok(())
}

/// `X̂^(i)` from the first `i = messages.len()` messages, evaluated in nested form.
pub fn decode_prefix(messages: &[IndexMessage], params: &CromParams) -> Result<Vec<f64>> {
    let seq = params.scheme.sequence()?;
    decode_prefix_with(messages, params, &seq)
}

pub fn decode_prefix_with<S: TransformSource + ?Sized>(
    messages: &[IndexMessage],
    params: &CromParams,
    source: &S,
) -> Result<Vec<f64>> {
    check_messages(messages, params)?;
    let mut v = vec![0.0; params.n];
    let mut ws = Workspace::default();
    for (j, m) in messages.iter().enumerate().rev() {
        let i = j + 1;
        topk::add_direction(&mut v, m, params.alpha(i)?);
        source.transform(i)?.apply_adjoint_in_place(&mut v, &mut ws)?;
    }
    Ok(v)
}

/// One row of a [`DistortionTrace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub rate: f64,
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionTrace {
    pub rows: Vec<TraceRow>,
}

/// Distortion `(1/n)‖x − X̂^(i)‖²` for `i = 0..=L`, for the messages of `enc`.
///
/// The error `x − X̂^(i)` is tracked in the rotated domain, `E_i = A_{i+1}(E_{i−1} − α_i U^(i))`
/// with `E_0 = A_1 x`, which has the same norm; `x` may be any block of length n.
pub fn distortion_trace(x: &[f64], enc: &CromEncoding) -> Result<DistortionTrace> {
    let seq = enc.params.scheme.sequence()?;
    distortion_trace_with(x, enc, &seq)
}

pub fn distortion_trace_with<S: TransformSource + ?Sized>(
    x: &[f64],
    enc: &CromEncoding,
    source: &S,
) -> Result<DistortionTrace> {
    let p = &enc.params;
    p.check_block(x)?;
    check_messages(&enc.messages, p)?;
    let n = p.n as f64;
    let mut rows = Vec::with_capacity(enc.messages.len() + 1);
    rows.push(TraceRow { iteration: 0, rate: 0.0, distortion: dot(x, x) / n });
    let mut err = x.to_vec();
    let mut ws = Workspace::default();
    source.transform(1)?.apply_in_place(&mut err, &mut ws)?;
    for (j, m) in enc.messages.iter().enumerate() {
        let i = j + 1;
        topk::subtract_direction(&mut err, m, p.alpha(i)?);
        source.transform(i + 1)?.apply_in_place(&mut err, &mut ws)?;
        rows.push(TraceRow { iteration: i, rate: p.rate_after(i), distortion: dot(&err, &err) / n });
    }
    Ok(DistortionTrace { rows })
}
