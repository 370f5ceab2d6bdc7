//! Length-preserving orthogonal operators applied to the residual between
//! iterations: Haar-random rotations, sparse Givens layers, the orthonormal
//! DCT-II, explicit matrices and compositions of these.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// An explicit row-major n×n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Usage(format!(
                "a {n}x{n} matrix needs {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            data[j * n + j] = 1.0;
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn apply(&self, x: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.extend(self.data.chunks_exact(self.n).map(|row| dot(row, x)));
        x.copy_from_slice(scratch);
    }

    fn apply_adjoint(&self, x: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.resize(self.n, 0.0);
        for (row, &xi) in self.data.chunks_exact(self.n).zip(x.iter()) {
            for (s, &a) in scratch.iter_mut().zip(row) {
                *s += a * xi;
            }
        }
        x.copy_from_slice(scratch);
    }

    /// Largest entrywise deviation of `selfᵀ self` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let s: f64 = (0..n).map(|r| self.get(r, a) * self.get(r, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}

/// A Haar-distributed orthogonal matrix kept in Householder-factored form,
/// `Q = P_0 P_1 ⋯ P_{n−2} D`, where `P_j` reflects coordinates `j..n` and `D`
/// is the diagonal sign correction that makes the implied `R` factor positive.
///
/// This is the Q factor of a Householder QR of an i.i.d. Gaussian matrix: the
/// trailing block after each reflection is again i.i.d. Gaussian, so each
/// reflector is drawn from a fresh Gaussian vector of the remaining size.
#[derive(Clone, PartialEq)]
pub struct HaarMatrix {
    n: usize,
    /// Unit reflector vectors, sizes n, n−1, …, 2, concatenated.
    reflectors: Vec<f64>,
    signs: Vec<f64>,
}

impl fmt::Debug for HaarMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HaarMatrix").field("n", &self.n).finish_non_exhaustive()
    }
}

impl HaarMatrix {
    fn generate<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut reflectors = Vec::with_capacity(n * (n + 1) / 2);
        let mut signs = Vec::with_capacity(n);
        for j in 0..n.saturating_sub(1) {
            let m = n - j;
            let start = reflectors.len();
            reflectors.extend((0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let v = &mut reflectors[start..];
            let norm = dot(v, v).sqrt();
            let s = if v[0] < 0.0 { -1.0 } else { 1.0 };
            // P v = -s |v| e_0, so the R diagonal entry is -s |v|.
            v[0] += s * norm;
            let unorm = dot(v, v).sqrt();
            if unorm > 0.0 {
                v.iter_mut().for_each(|e| *e /= unorm);
            }
            signs.push(-s);
        }
        if n > 0 {
            let z: f64 = rng.sample(StandardNormal);
            signs.push(if z < 0.0 { -1.0 } else { 1.0 });
        }
        Self { n, reflectors, signs }
    }

    fn reflector_offsets(&self) -> impl DoubleEndedIterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        // reflector j starts at sum_{i<j} (n - i)
        (0..n.saturating_sub(1)).map(move |j| (j, j * n - j * j.saturating_sub(1) / 2))
    }

    fn reflect(u: &[f64], x: &mut [f64]) {
        let d = 2.0 * dot(u, x);
        for (xi, &ui) in x.iter_mut().zip(u) {
            *xi -= d * ui;
        }
    }

    fn apply(&self, x: &mut [f64]) {
        for (xi, s) in x.iter_mut().zip(&self.signs) {
            *xi *= s;
        }
        for (j, start) in self.reflector_offsets().rev() {
            let m = self.n - j;
            Self::reflect(&self.reflectors[start..start + m], &mut x[j..]);
        }
    }

    fn apply_adjoint(&self, x: &mut [f64]) {
        for (j, start) in self.reflector_offsets() {
            let m = self.n - j;
            Self::reflect(&self.reflectors[start..start + m], &mut x[j..]);
        }
        for (xi, s) in x.iter_mut().zip(&self.signs) {
            *xi *= s;
        }
    }

    /// Diagonal sign correction `D`.
    pub fn signs(&self) -> &[f64] {
        &self.signs
    }
}

/// One sparse layer of disjoint Givens rotations: the block-recursive layer
/// `r` on `n = 2^s` coordinates. Layer 1 pairs `j` with `j + n/2`; layer `r`
/// repeats layer 1 of size `n / 2^{r−1}` down the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GivensLayer {
    n: usize,
    layer: usize,
    thetas: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl GivensLayer {
    pub fn new(n: usize, layer: usize, thetas: Vec<f64>) -> Result<Self> {
        let s = log2_exact(n).ok_or_else(|| {
            Error::Config(format!("Givens layers need a power-of-two n >= 2, got {n}"))
        })?;
        if layer == 0 || layer > s {
            return Err(Error::Config(format!(
                "layer index must lie in [1, {s}] for n = {n}, got {layer}"
            )));
        }
        if thetas.len() != n / 2 {
            return Err(Error::Config(format!(
                "a Givens layer on n = {n} needs {} angles, got {}",
                n / 2,
                thetas.len()
            )));
        }
        let cos = thetas.iter().map(|t| t.cos()).collect();
        let sin = thetas.iter().map(|t| t.sin()).collect();
        Ok(Self { n, layer, thetas, cos, sin })
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// Coordinate pairs `(p, q)` in angle order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let block = self.n >> (self.layer - 1);
        let half = block / 2;
        (0..self.n / 2).map(move |a| {
            let (c, j) = (a / half, a % half);
            (c * block + j, c * block + j + half)
        })
    }

    fn apply(&self, x: &mut [f64]) {
        for (a, (p, q)) in self.pairs().enumerate() {
            let (c, s) = (self.cos[a], self.sin[a]);
            let (u, v) = (x[p], x[q]);
            x[p] = c * u - s * v;
            x[q] = s * u + c * v;
        }
    }

    fn apply_adjoint(&self, x: &mut [f64]) {
        for (a, (p, q)) in self.pairs().enumerate() {
            let (c, s) = (self.cos[a], self.sin[a]);
            let (u, v) = (x[p], x[q]);
            x[p] = c * u + s * v;
            x[q] = -s * u + c * v;
        }
    }
}

/// Orthonormal DCT-II, entry `(j, t) = c_j √(2/n) cos(π(2t+1)j / 2n)` with
/// `c_0 = 1/√2`, applied through a length-n complex FFT.
#[derive(Clone)]
pub struct Dct2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `w_k e^{−iπk/2n}` with the orthonormal weights folded in.
    twiddles: Arc<[Complex<f64>]>,
}

impl fmt::Debug for Dct2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dct2").field("n", &self.n).finish()
    }
}

impl PartialEq for Dct2 {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Dct2 {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("DCT size must be positive".into()));
        }
        let mut planner = FftPlanner::new();
        let nf = n as f64;
        let twiddles = (0..n)
            .map(|k| {
                let w = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
                Complex::from_polar(w, -PI * k as f64 / (2.0 * nf))
            })
            .collect();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            twiddles,
        })
    }

    /// Entry `(row, col)` of the DCT-II matrix, evaluated directly.
    pub fn entry(n: usize, row: usize, col: usize) -> f64 {
        let nf = n as f64;
        let c = if row == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
        c * (2.0 / nf).sqrt() * (PI * (2 * col + 1) as f64 * row as f64 / (2.0 * nf)).cos()
    }

    // Even samples go to the front, odd samples reversed to the back.
    fn position(n: usize, t: usize) -> usize {
        if t % 2 == 0 {
            t / 2
        } else {
            n - 1 - t / 2
        }
    }

    fn apply(&self, x: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        let n = self.n;
        buf.clear();
        buf.resize(n, Complex::new(0.0, 0.0));
        for (t, &v) in x.iter().enumerate() {
            buf[Self::position(n, t)] = Complex::new(v, 0.0);
        }
        self.forward.process(buf);
        for ((out, b), w) in x.iter_mut().zip(buf.iter()).zip(self.twiddles.iter()) {
            *out = (w * b).re;
        }
    }

    fn apply_adjoint(&self, x: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        let n = self.n;
        buf.clear();
        buf.extend(x.iter().zip(self.twiddles.iter()).map(|(&v, w)| w.conj() * v));
        self.inverse.process(buf);
        for (t, out) in x.iter_mut().enumerate() {
            *out = buf[Self::position(n, t)].re;
        }
    }
}

/// Identifies the concrete family of an [`OrthogonalTransform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Dense,
    DenseHaar,
    GivensLayer,
    Dct2,
    Composition,
}

/// A length-preserving linear operator with forward and adjoint application.
#[derive(Debug, Clone, PartialEq)]
pub enum OrthogonalTransform {
    Dense(DenseMatrix),
    Haar(HaarMatrix),
    Givens(GivensLayer),
    Dct2(Dct2),
    /// Matrix product in the listed order: `[a, b]` is `a·b`, so `b` acts first.
    Composition(Vec<OrthogonalTransform>),
}

/// Reusable buffers for [`OrthogonalTransform::apply_in_place`].
#[derive(Debug, Default)]
pub struct Workspace {
    real: Vec<f64>,
    complex: Vec<Complex<f64>>,
}

impl OrthogonalTransform {
    pub fn kind(&self) -> TransformKind {
        match self {
            Self::Dense(_) => TransformKind::Dense,
            Self::Haar(_) => TransformKind::DenseHaar,
            Self::Givens(_) => TransformKind::GivensLayer,
            Self::Dct2(_) => TransformKind::Dct2,
            Self::Composition(_) => TransformKind::Composition,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(m) => m.n,
            Self::Haar(h) => h.n,
            Self::Givens(g) => g.n,
            Self::Dct2(d) => d.n,
            Self::Composition(parts) => parts.first().map_or(0, |p| p.dim()),
        }
    }

    /// `compose(a, b)` acts as `a(b(x))`.
    pub fn compose(a: OrthogonalTransform, b: OrthogonalTransform) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::Usage(format!(
                "cannot compose transforms of sizes {} and {}",
                a.dim(),
                b.dim()
            )));
        }
        Ok(Self::Composition(vec![a, b]))
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Usage(format!(
                "block of length {} does not match transform size {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        self.apply_in_place(&mut y, &mut Workspace::default())?;
        Ok(y)
    }

    pub fn apply_adjoint(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        self.apply_adjoint_in_place(&mut y, &mut Workspace::default())?;
        Ok(y)
    }

    pub fn apply_in_place(&self, x: &mut [f64], ws: &mut Workspace) -> Result<()> {
        self.check(x)?;
        self.forward_unchecked(x, ws);
        Ok(())
    }

    pub fn apply_adjoint_in_place(&self, x: &mut [f64], ws: &mut Workspace) -> Result<()> {
        self.check(x)?;
        self.adjoint_unchecked(x, ws);
        Ok(())
    }

    fn forward_unchecked(&self, x: &mut [f64], ws: &mut Workspace) {
        match self {
            Self::Dense(m) => m.apply(x, &mut ws.real),
            Self::Haar(h) => h.apply(x),
            Self::Givens(g) => g.apply(x),
            Self::Dct2(d) => d.apply(x, &mut ws.complex),
            Self::Composition(parts) => {
                for p in parts.iter().rev() {
                    p.forward_unchecked(x, ws);
                }
            }
        }
    }

    fn adjoint_unchecked(&self, x: &mut [f64], ws: &mut Workspace) {
        match self {
            Self::Dense(m) => m.apply_adjoint(x, &mut ws.real),
            Self::Haar(h) => h.apply_adjoint(x),
            Self::Givens(g) => g.apply_adjoint(x),
            Self::Dct2(d) => d.apply_adjoint(x, &mut ws.complex),
            Self::Composition(parts) => {
                for p in parts {
                    p.adjoint_unchecked(x, ws);
                }
            }
        }
    }

    /// Materializes the operator as an explicit matrix (O(n) applications).
    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut data = vec![0.0; n * n];
        let mut ws = Workspace::default();
        let mut e = vec![0.0; n];
        for col in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[col] = 1.0;
            self.forward_unchecked(&mut e, &mut ws);
            for row in 0..n {
                data[row * n + col] = e[row];
            }
        }
        DenseMatrix { n, data }
    }
}

/// Haar-uniform random orthogonal matrix: the Q factor of the QR decomposition
/// of an i.i.d. standard normal matrix, with R's diagonal made positive.
pub fn make_dense_haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> OrthogonalTransform {
    OrthogonalTransform::Haar(HaarMatrix::generate(n, rng))
}

pub fn make_givens_layer(n: usize, layer: usize, thetas: Vec<f64>) -> Result<OrthogonalTransform> {
    Ok(OrthogonalTransform::Givens(GivensLayer::new(n, layer, thetas)?))
}

pub fn make_dct2(n: usize) -> Result<OrthogonalTransform> {
    Ok(OrthogonalTransform::Dct2(Dct2::new(n)?))
}

/// How the per-iteration transforms `A_1, A_2, …` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    UniformHaar,
    SparseGivens,
    SparseGivensThenDct,
}

impl SchemeKind {
    pub fn id(self) -> u8 {
        match self {
            Self::UniformHaar => 0,
            Self::SparseGivens => 1,
            Self::SparseGivensThenDct => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Self::UniformHaar),
            1 => Some(Self::SparseGivens),
            2 => Some(Self::SparseGivensThenDct),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::UniformHaar => "uniform-haar",
            Self::SparseGivens => "sparse-givens",
            Self::SparseGivensThenDct => "sparse-givens-dct",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-haar" | "haar" => Ok(Self::UniformHaar),
            "sparse-givens" | "givens" => Ok(Self::SparseGivens),
            "sparse-givens-dct" | "givens-dct" => Ok(Self::SparseGivensThenDct),
            other => Err(Error::Config(format!("unknown transform scheme '{other}'"))),
        }
    }
}

/// Scheme, seed and dimension: everything needed to regenerate `A_1, A_2, …`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransformScheme {
    pub kind: SchemeKind,
    pub seed: u64,
    pub n: usize,
}

impl TransformScheme {
    pub fn new(kind: SchemeKind, seed: u64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("transform dimension must be positive".into()));
        }
        if kind != SchemeKind::UniformHaar && log2_exact(n).is_none() {
            return Err(Error::Config(format!(
                "scheme {} needs a power-of-two n >= 2, got {n}",
                kind.name()
            )));
        }
        Ok(Self { kind, seed, n })
    }

    /// A generator for the transform sequence; caches the DCT plan.
    pub fn sequence(&self) -> Result<TransformSequence> {
        let dct = match self.kind {
            SchemeKind::SparseGivensThenDct => Some(Dct2::new(self.n)?),
            _ => None,
        };
        Ok(TransformSequence { scheme: *self, dct })
    }
}

/// Random-access source of `A_i`: each index draws from its own ChaCha stream,
/// so `A_i` depends only on `(scheme, seed, n, i)`.
#[derive(Debug, Clone)]
pub struct TransformSequence {
    scheme: TransformScheme,
    dct: Option<Dct2>,
}

impl TransformSequence {
    pub fn scheme(&self) -> &TransformScheme {
        &self.scheme
    }

    /// Givens layer used at position `index` (1-based): `((index − 1) mod s) + 1`.
    pub fn layer_for(&self, index: usize) -> usize {
        let s = log2_exact(self.scheme.n).unwrap_or(1);
        (index - 1) % s + 1
    }

    fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.scheme.seed);
        rng.set_stream(index as u64);
        rng
    }

    /// `A_index`, 1-based.
    pub fn get(&self, index: usize) -> Result<OrthogonalTransform> {
        if index == 0 {
            return Err(Error::Usage("transform indices start at 1".into()));
        }
        let n = self.scheme.n;
        let mut rng = self.rng(index);
        match self.scheme.kind {
            SchemeKind::UniformHaar => Ok(make_dense_haar(n, &mut rng)),
            SchemeKind::SparseGivens | SchemeKind::SparseGivensThenDct => {
                let thetas = (0..n / 2).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
                let givens = make_givens_layer(n, self.layer_for(index), thetas)?;
                match &self.dct {
                    Some(dct) => OrthogonalTransform::compose(OrthogonalTransform::Dct2(dct.clone()), givens),
                    None => Ok(givens),
                }
            }
        }
    }
}

/// `A_1, …, A_count` for a scheme.
pub fn build_sequence(scheme: &TransformScheme, count: usize) -> Result<Vec<OrthogonalTransform>> {
    let seq = scheme.sequence()?;
    (1..=count).map(|i| seq.get(i)).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn log2_exact(n: usize) -> Option<usize> {
    (n >= 2 && n.is_power_of_two()).then(|| n.trailing_zeros() as usize)
}
