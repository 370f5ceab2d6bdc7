//! Standard-normal distribution functions and the order-statistic constants
//! that parameterize the zero-rate extremes code.
//!
//! All logarithms are natural; rates elsewhere in the crate are in nats.

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn density(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, Φ(x).
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail Q(x) = 1 − Φ(x), computed without cancellation for large x.
pub fn q_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// ln Φ(x), accurate in both tails.
fn ln_phi(x: f64) -> f64 {
    if x > 0.0 {
        (-q_tail(x)).ln_1p()
    } else {
        phi(x).ln()
    }
}

/// ln Q(x), accurate in both tails.
fn ln_q_tail(x: f64) -> f64 {
    if x < 0.0 {
        (-phi(x)).ln_1p()
    } else {
        q_tail(x).ln()
    }
}

/// Wichura's AS241 (PPND16) rational approximation of Φ⁻¹(p).
fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
            + 67265.770_927_008_7)
            * r
            + 45921.953_931_549_87)
            * r
            + 13731.693_765_509_461)
            * r
            + 1971.590_950_306_551_4)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_6;
        let den = ((((((5226.495_278_852_546 * r + 28729.085_735_721_943) * r
            + 39307.895_800_092_71)
            * r
            + 21213.794_301_586_596)
            * r
            + 5394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_91)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_6)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_6;
        let den = ((((((1.050_750_071_644_416_8e-9 * r + 5.475_938_084_995_345e-4) * r
            + 0.015_198_666_563_616_457)
            * r
            + 0.148_103_976_427_480_08)
            * r
            + 0.689_767_334_985_100_1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 0.014_875_361_290_850_615)
            * r
            + 0.136_929_880_922_735_8)
            * r
            + 0.599_832_206_555_887_9)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Inverse upper tail: the x with Q(x) = p.
///
/// Starts from the AS241 approximation and polishes with Newton steps on Q.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "q_inv needs 0 < p < 1, got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut x = -ppnd16(p);
    for _ in 0..2 {
        let d = density(x);
        if d <= 0.0 || !d.is_finite() {
            break;
        }
        // Evaluate the residual in whichever tail keeps full relative precision.
        let step = if p < 0.5 {
            (q_tail(x) - p) / d
        } else {
            ((1.0 - p) - phi(x)) / d
        };
        x += step;
    }
    Ok(x)
}

/// Inverse CDF Φ⁻¹(p).
pub fn phi_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "phi_inv needs 0 < p < 1, got {p}"
        )));
    }
    Ok(-q_inv(p)?)
}

/// ln C(n, k).
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if k <= 64 {
        (0..k)
            .map(|j| ((n - j) as f64 / (j + 1) as f64).ln())
            .sum()
    } else {
        libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
    }
}

/// Constants of the zero-rate extremes code for block length `n` and `k` described indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroRateConstants {
    pub n: usize,
    pub k: usize,
    /// Lower quantile of the k-th largest of n standard normals.
    pub p_n: f64,
    /// Upper quantile of the sample mean.
    pub q_n: f64,
    /// Reconstruction magnitude, `p_n - q_n`.
    pub alpha_n: f64,
}

/// `p_n = Q⁻¹(k ln n / (n − k + 1))`, `q_n = Q⁻¹(1/n) / √n`, `alpha_n = p_n − q_n`.
pub fn zero_rate_constants(n: usize, k: usize) -> Result<ZeroRateConstants> {
    if n < 2 {
        return Err(Error::Config(format!("need n >= 2, got n = {n}")));
    }
    if k == 0 || k >= n {
        return Err(Error::Config(format!("need 1 <= k < n, got k = {k}, n = {n}")));
    }
    let nf = n as f64;
    let arg = k as f64 * nf.ln() / (n - k + 1) as f64;
    if arg >= 1.0 {
        return Err(Error::Config(format!(
            "need k ln(n) / (n - k + 1) < 1, got {arg} for n = {n}, k = {k}"
        )));
    }
    let p_n = q_inv(arg)?;
    let q_n = q_inv(1.0 / nf)? / nf.sqrt();
    Ok(ZeroRateConstants {
        n,
        k,
        p_n,
        q_n,
        alpha_n: p_n - q_n,
    })
}

/// Threshold t with `Pr[Z_(i) < t] <= eps` for the i-th largest of n standard normals.
///
/// `t = Φ⁻¹(1 − ln(n^{i−1}/eps) / (n − i + 1))`. A log argument of exactly 0 or 1
/// would give an infinite threshold and is rejected.
pub fn order_stat_lower_quantile(n: usize, i: usize, eps: f64) -> Result<f64> {
    if i == 0 || i > n {
        return Err(Error::Domain(format!("need 1 <= i <= n, got i = {i}, n = {n}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("need eps > 0, got {eps}")));
    }
    let a = ((i - 1) as f64 * (n as f64).ln() - eps.ln()) / (n - i + 1) as f64;
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!(
            "ln(n^(i-1)/eps)/(n-i+1) = {a} must lie strictly inside (0, 1)"
        )));
    }
    q_inv(a)
}

/// E[X_(k)], the mean of the k-th largest of n i.i.d. standard normals, by
/// composite Simpson quadrature of the order-statistic density.
pub fn expected_order_statistic(n: usize, k: usize) -> Result<f64> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::Domain(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let ln_coef = libm::lgamma(n as f64 + 1.0)
        - libm::lgamma(k as f64)
        - libm::lgamma((n - k) as f64 + 1.0);
    let upper_power = (n - k) as f64;
    let lower_power = (k - 1) as f64;
    let weighted = |x: f64| {
        let ln_f = ln_coef - 0.5 * x * x - 0.918_938_533_204_672_8
            + upper_power * ln_phi(x)
            + lower_power * ln_q_tail(x);
        x * ln_f.exp()
    };
    let (a, b) = (-14.0, 14.0);
    let steps = 28_000;
    let h = (b - a) / steps as f64;
    let mut acc = weighted(a) + weighted(b);
    for j in 1..steps {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * weighted(a + j as f64 * h);
    }
    Ok(acc * h / 3.0)
}
