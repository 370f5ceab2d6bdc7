//! Synthetic sources and the Monte Carlo driver behind the distortion-rate curves.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::crom::{crom_encode, CromParams};
use crate::error::{Error, Result};
use crate::sparc::{sparc_encode, SparcParams};
use crate::transform::{dot, TransformScheme};
use crate::zero_rate::ZeroRateCode;

pub const CSV_SCHEMA: &str = "# crom-curve v1";
pub const CSV_COLUMNS: &str =
    "series,codec,n,k,m,scheme,source,rate_nats,rate_consumed,messages,mean_distortion,std_distortion,trials";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(seed ^ splitmix64(trial))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    GaussianIid,
    LaplacianIid,
    UniformIid,
    GaussMarkov,
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::GaussianIid => "gaussian",
            Self::LaplacianIid => "laplacian",
            Self::UniformIid => "uniform",
            Self::GaussMarkov => "gauss-markov",
        }
    }
}

impl std::str::FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::GaussianIid),
            "laplacian" => Ok(Self::LaplacianIid),
            "uniform" => Ok(Self::UniformIid),
            "gauss-markov" => Ok(Self::GaussMarkov),
            other => Err(Error::Config(format!("unknown source '{other}'"))),
        }
    }
}

/// A stationary source with marginal second moment `variance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub variance: f64,
    /// Lag-one correlation, used by [`SourceKind::GaussMarkov`] only.
    pub rho: f64,
    pub seed: u64,
}

impl SourceSpec {
    pub fn new(kind: SourceKind, variance: f64, rho: f64, seed: u64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::Config(format!("variance must be finite and >= 0, got {variance}")));
        }
        if kind == SourceKind::GaussMarkov && !(rho.abs() < 1.0) {
            return Err(Error::Config(format!("need |rho| < 1, got {rho}")));
        }
        Ok(Self { kind, variance, rho, seed })
    }

    pub fn gaussian(variance: f64, seed: u64) -> Result<Self> {
        Self::new(SourceKind::GaussianIid, variance, 0.0, seed)
    }

    pub fn gauss_markov(variance: f64, rho: f64, seed: u64) -> Result<Self> {
        Self::new(SourceKind::GaussMarkov, variance, rho, seed)
    }
}

/// Block `trial` of the source; depends only on `(spec, n, trial)`.
pub fn generate_block(s: &SourceSpec, n: usize, trial: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(s.seed, trial));
    let sd = s.variance.sqrt();
    match s.kind {
        SourceKind::GaussianIid => (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect(),
        SourceKind::LaplacianIid => {
            let b = sd / std::f64::consts::SQRT_2;
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random_range(-0.5..0.5);
                    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
                })
                .collect()
        }
        SourceKind::UniformIid => {
            let a = sd * 3f64.sqrt();
            (0..n).map(|_| if a > 0.0 { rng.random_range(-a..a) } else { 0.0 }).collect()
        }
        SourceKind::GaussMarkov => {
            let innovation = (1.0 - s.rho * s.rho).sqrt() * sd;
            let mut prev = sd * rng.sample::<f64, _>(StandardNormal);
            let mut out = Vec::with_capacity(n);
            for t in 0..n {
                if t > 0 {
                    prev = s.rho * prev + innovation * rng.sample::<f64, _>(StandardNormal);
                }
                out.push(prev);
            }
            out
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CodecSpec {
    Crom(CromParams),
    Sparc(SparcParams),
    ZeroRate(ZeroRateCode),
}

impl CodecSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Crom(_) => "crom",
            Self::Sparc(_) => "sparc",
            Self::ZeroRate(_) => "zero-rate",
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Crom(p) => p.n(),
            Self::Sparc(p) => p.n(),
            Self::ZeroRate(c) => c.n(),
        }
    }

    /// Total rate the codec spends on a block.
    pub fn rate(&self) -> f64 {
        match self {
            Self::Crom(p) => p.rate_after(p.iterations()),
            Self::Sparc(p) => p.rate_after(p.sections()),
            Self::ZeroRate(c) => c.rate(),
        }
    }

    /// Nominal rate; grid points may reach up to this value.
    fn nominal_rate(&self) -> f64 {
        match self {
            Self::Crom(p) => p.rate(),
            Self::Sparc(p) => p.rate(),
            Self::ZeroRate(c) => c.rate(),
        }
    }

    /// Messages decoded at grid rate `r`.
    fn messages_for_rate(&self, r: f64) -> usize {
        match self {
            Self::Crom(p) => p.messages_for_rate(r),
            Self::Sparc(p) => p.sections_for_rate(r),
            Self::ZeroRate(c) => usize::from(r + 1e-12 >= c.rate()),
        }
    }

    fn rate_after(&self, i: usize) -> f64 {
        match self {
            Self::Crom(p) => p.rate_after(i),
            Self::Sparc(p) => p.rate_after(i),
            Self::ZeroRate(c) => i as f64 * c.rate(),
        }
    }

    /// `(1/n)‖x − x̂^(i)‖²` for every prefix length `i`, with its own seed per trial.
    fn profile(&self, x: &[f64], trial: u64) -> Result<Vec<f64>> {
        match self {
            Self::Crom(p) => {
                let s = p.scheme();
                let scheme = TransformScheme::new(s.kind, trial_seed(s.seed, trial), s.n)?;
                let p = CromParams::from_parts(p.n(), p.k(), p.rate(), p.sigma2(), p.gamma(), p.schedule(), scheme)?;
                Ok(crom_encode(x, &p)?.distortion_profile())
            }
            Self::Sparc(p) => {
                let q = SparcParams::with_sections(p.n(), p.m(), p.sections(), p.rate(), trial_seed(p.seed(), trial))?
                    .with_sigma2(p.sigma2())?
                    .with_normalization(p.normalization());
                Ok(sparc_encode(x, &q)?.distortion_profile())
            }
            Self::ZeroRate(c) => {
                let n = x.len() as f64;
                Ok(vec![dot(x, x) / n, c.distortion(x)?])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub codec: CodecSpec,
    pub source: SourceSpec,
    pub trials: usize,
    pub rate_grid: Vec<f64>,
}

impl ExperimentSpec {
    pub fn new(codec: CodecSpec, source: SourceSpec, trials: usize, rate_grid: Vec<f64>) -> Result<Self> {
        if trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let top = codec.nominal_rate();
        if let Some(r) = rate_grid.iter().find(|&&r| !(r >= 0.0 && r <= top + 1e-12)) {
            return Err(Error::Config(format!("grid rate {r} outside [0, {top}]")));
        }
        Ok(Self { codec, source, trials, rate_grid })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    /// Requested grid rate.
    pub rate: f64,
    /// Rate actually spent by the decoded prefix.
    pub rate_consumed: f64,
    pub messages: usize,
    pub mean_distortion: f64,
    pub std_distortion: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub rows: Vec<CurveRow>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Runs every trial, then averages the distortion at each grid rate.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let n = spec.codec.n();
    let profiles: Vec<Vec<f64>> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| {
            let x = generate_block(&spec.source, n, t);
            spec.codec
                .profile(&x, t)
                .map_err(|e| Error::Trial { trial: t as usize, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let trials = spec.trials as f64;
    let rows = spec
        .rate_grid
        .iter()
        .map(|&rate| {
            let i = spec.codec.messages_for_rate(rate);
            let mut sum = Kahan::default();
            profiles.iter().for_each(|p| sum.add(p[i]));
            let mean = sum.sum / trials;
            let mut sq = Kahan::default();
            profiles.iter().for_each(|p| sq.add((p[i] - mean).powi(2)));
            let std = if spec.trials > 1 { (sq.sum / (trials - 1.0)).sqrt() } else { 0.0 };
            CurveRow {
                rate,
                rate_consumed: spec.codec.rate_after(i),
                messages: i,
                mean_distortion: mean,
                std_distortion: std,
                trials: spec.trials,
            }
        })
        .collect();
    Ok(ExperimentResult { spec: spec.clone(), rows })
}

/// `σ² e^{−2r}`.
pub fn gaussian_distortion_rate(variance: f64, rate: f64) -> f64 {
    variance * (-2.0 * rate).exp()
}

impl ExperimentResult {
    pub fn to_csv(&self) -> String {
        let spec = &self.spec;
        let (k, m, scheme) = match &spec.codec {
            CodecSpec::Crom(p) => (p.k().to_string(), String::new(), p.scheme().kind.name()),
            CodecSpec::Sparc(p) => (String::new(), p.m().to_string(), ""),
            CodecSpec::ZeroRate(c) => (c.k().to_string(), String::new(), ""),
        };
        let prefix = format!(
            "{},{},{k},{m},{scheme},{}",
            spec.codec.name(),
            spec.codec.n(),
            spec.source.kind.name()
        );
        let mut out = format!("{CSV_SCHEMA}\n{CSV_COLUMNS}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "measured,{prefix},{},{},{},{},{},{}",
                r.rate, r.rate_consumed, r.messages, r.mean_distortion, r.std_distortion, r.trials
            );
        }
        for r in &self.rows {
            let d = gaussian_distortion_rate(spec.source.variance, r.rate);
            let _ = writeln!(out, "reference,{prefix},{},{},,{d},0,", r.rate, r.rate);
        }
        out
    }
}
