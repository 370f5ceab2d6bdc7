//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use crom_core::channel_dual::{max_exceedance_frequency, ChannelCode};
use crom_core::codec_io::{prefix_len_bytes, rank_width, read_stream, subset_rank, subset_unrank, write_stream, HEADER_LEN};
use crom_core::crom::{crom_encode, decode_prefix, decode_prefix_with, encode_with, CromParams};
use crom_core::harness::{generate_block, run_experiment, trial_seed, CodecSpec, ExperimentResult, ExperimentSpec, SourceSpec};
use crom_core::sparc::SparcParams;
use crom_core::stats::{ln_binomial, order_stat_lower_quantile};
use crom_core::topk::IndexMessage;
use crom_core::transform::{build_sequence, SchemeKind, TransformScheme};
use crom_core::zero_rate::ZeroRateCode;
use crom_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const GRID: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const TRIALS: usize = 100;
const SOURCE_SEED: u64 = 0xACCE_0001;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn gaussian_source() -> SourceSpec {
    SourceSpec::gaussian(1.0, SOURCE_SEED).unwrap()
}

fn crom_curve(n: usize, k: usize, kind: SchemeKind, source: SourceSpec) -> Result<ExperimentResult> {
    let scheme = TransformScheme::new(kind, 0xC0DE_0000 + k as u64, n)?;
    let p = CromParams::new(n, k, 1.0, scheme)?;
    run_experiment(&ExperimentSpec::new(CodecSpec::Crom(p), source, TRIALS, GRID.to_vec())?)
}

fn means(r: &ExperimentResult) -> Vec<f64> {
    r.rows.iter().map(|row| row.mean_distortion).collect()
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Runs shared by criteria 2, 4 and 5.
#[derive(Default)]
struct Shared {
    haar_k1: Option<ExperimentResult>,
}

impl Shared {
    fn haar_k1(&mut self) -> Result<&ExperimentResult> {
        if self.haar_k1.is_none() {
            self.haar_k1 = Some(crom_curve(1024, 1, SchemeKind::UniformHaar, gaussian_source())?);
        }
        Ok(self.haar_k1.as_ref().unwrap())
    }
}

fn residual_identity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for c in 0..50u64 {
        let n = [64usize, 256][rng.random_range(0..2)];
        let k = [1usize, 3][rng.random_range(0..2)];
        let kind = [SchemeKind::UniformHaar, SchemeKind::SparseGivens, SchemeKind::SparseGivensThenDct][rng.random_range(0..3)];
        let rate = rng.random_range(0.5..2.0);
        let scheme = TransformScheme::new(kind, 100 + c, n)?;
        let mut p = CromParams::new(n, k, rate, scheme)?;
        if c % 2 == 1 {
            let gamma = rng.random_range(0.0..0.9) * (-2.0 * rate).exp();
            p = p.with_theorem_schedule(gamma)?;
        }
        let seq = build_sequence(p.scheme(), p.iterations() + 1)?;
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let enc = encode_with(&x, &p, &seq)?;
        for i in 0..=p.iterations() {
            let xhat = decode_prefix_with(&enc.messages[..i], &p, &seq)?;
            let lhs = x.iter().zip(&xhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
            let rhs = enc.residual_norms[i].powi(2) / n as f64;
            worst = worst.max((lhs - rhs).abs() / rhs);
            checked += 1;
        }
    }
    outcome(worst <= 1e-9, format!("50 configs, {checked} prefixes, worst relative gap {worst:.2e} (tolerance 1e-9)"))
}

fn band_check(r: &ExperimentResult, margin: f64) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for row in &r.rows {
        let floor = (-2.0 * row.rate).exp();
        let inside = row.mean_distortion >= floor && row.mean_distortion <= floor + margin;
        ok &= inside;
        parts.push(format!(
            "r={} D={:.4} (D_G={:.4}, {} msgs)",
            row.rate, row.mean_distortion, floor, row.messages
        ));
    }
    (ok, format!("{}; band [D_G, D_G+{margin}]", parts.join(", ")))
}

fn distortion_rate_band(shared: &mut Shared) -> Result<Outcome> {
    let (ok, detail) = band_check(shared.haar_k1()?, 0.15);
    outcome(ok, format!("n=1024 k=1 haar: {detail}"))
}

fn crom_vs_sparc() -> Result<Outcome> {
    let source = gaussian_source();
    let crom = crom_curve(256, 1, SchemeKind::UniformHaar, source)?;
    let sp = SparcParams::from_rate(256, 256, 1.0, 0x5BA2C)?;
    let sparc = run_experiment(&ExperimentSpec::new(CodecSpec::Sparc(sp), source, TRIALS, GRID.to_vec())?)?;
    let (a, b) = (means(&crom), means(&sparc));
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    outcome(worst <= 0.05, format!("crom {} sparc(M=256) {} max |diff| {worst:.4} (tolerance 0.05)", fmt(&a), fmt(&b)))
}

fn k_tradeoff(shared: &mut Shared) -> Result<Outcome> {
    let k1 = means(shared.haar_k1()?);
    let k3 = means(&crom_curve(1024, 3, SchemeKind::UniformHaar, gaussian_source())?);
    let k5 = means(&crom_curve(1024, 5, SchemeKind::UniformHaar, gaussian_source())?);
    let mut ok = true;
    for (j, &r) in GRID.iter().enumerate() {
        if r >= 0.5 {
            ok &= k1[j] <= k3[j] + 0.02 && k3[j] <= k5[j] + 0.02;
        }
    }
    outcome(ok, format!("k=1 {} k=3 {} k=5 {} at rates {GRID:?}, band +0.02 for r >= 0.5", fmt(&k1), fmt(&k3), fmt(&k5)))
}

fn structured_transforms(shared: &mut Shared) -> Result<Outcome> {
    let haar = means(shared.haar_k1()?);
    let dct = means(&crom_curve(1024, 1, SchemeKind::SparseGivensThenDct, gaussian_source())?);
    let givens = means(&crom_curve(1024, 1, SchemeKind::SparseGivens, gaussian_source())?);
    let close = haar.iter().zip(&dct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let last = GRID.len() - 1;
    let margin = givens[last] - haar[last].max(dct[last]);
    outcome(
        close <= 0.03 && margin > 0.0,
        format!(
            "haar {} givens+dct {} givens {}; max |haar - givens+dct| {close:.4} (tolerance 0.03), givens margin at r=1: {margin:.4} (> 0)",
            fmt(&haar),
            fmt(&dct),
            fmt(&givens)
        ),
    )
}

fn zero_rate_gain() -> Result<Outcome> {
    let n = 1 << 14;
    let source = gaussian_source();
    let code = ZeroRateCode::with_expected_order_statistic(n, 1)?;
    let proof = ZeroRateCode::new(n, 1)?;
    let (mut acc, mut acc_proof) = (0.0, 0.0);
    let trials = 200;
    for t in 0..trials {
        let x = generate_block(&source, n, t);
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        acc += norm2 - n as f64 * code.distortion(&x)?;
        acc_proof += norm2 - n as f64 * proof.distortion(&x)?;
    }
    let scale = trials as f64 * 2.0 * (n as f64).ln();
    let (ratio, ratio_proof) = (acc / scale, acc_proof / scale);
    outcome(
        (0.8..=1.1).contains(&ratio),
        format!(
            "mean(n g)/(2 ln n) = {ratio:.4} with alpha = E[max] = {:.4} (band [0.8, 1.1]); alpha = p_n - q_n = {:.4} gives {ratio_proof:.4}",
            code.alpha(),
            proof.alpha()
        ),
    )
}

fn order_statistic_oracles() -> Result<Outcome> {
    let trials = 20_000usize;
    let mut ok = true;
    let mut parts = Vec::new();
    for &(n, i, eps) in &[(1000usize, 1usize, 0.1), (1000, 3, 0.1), (10_000, 2, 0.05)] {
        let t = order_stat_lower_quantile(n, i, eps)?;
        let mut below = 0usize;
        let mut z = vec![0.0f64; n];
        for tr in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(0x1E3, (n * 10 + i) as u64 * 1_000_000 + tr as u64));
            z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            z.select_nth_unstable_by(i - 1, |a, b| b.total_cmp(a));
            below += usize::from(z[i - 1] < t);
        }
        let freq = below as f64 / trials as f64;
        let bound = eps + 3.0 * (eps / trials as f64).sqrt();
        ok &= freq <= bound;
        parts.push(format!("order stat (n={n}, i={i}, eps={eps}): {freq:.4} <= {bound:.4}"));
    }
    for (j, n) in [1000usize, 10_000].into_iter().enumerate() {
        let freq = max_exceedance_frequency(n, trials, 0x1E4 + j as u64);
        let b = 1.0 / (n as f64).ln().sqrt();
        let bound = b + 3.0 * (b / trials as f64).sqrt();
        ok &= freq <= bound;
        parts.push(format!("max exceedance (n={n}): {freq:.4} <= {bound:.4}"));
    }
    outcome(ok, parts.join("; "))
}

fn rateless_stream() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut boundaries = 0usize;
    let mut cuts = 0usize;
    let mut ok = true;
    for c in 0..24u64 {
        let n = rng.random_range(4..=512usize);
        let k = rng.random_range(1..=4usize).min(n - 1);
        let l = rng.random_range(1..=64usize);
        let kind = if n.is_power_of_two() || c % 3 == 0 {
            [SchemeKind::SparseGivens, SchemeKind::SparseGivensThenDct][(c % 2) as usize]
        } else {
            SchemeKind::UniformHaar
        };
        let n = if kind == SchemeKind::UniformHaar { n } else { n.next_power_of_two().min(512) };
        let rate = l as f64 * ln_binomial(n, k) / n as f64;
        let p = CromParams::new(n, k, rate, TransformScheme::new(kind, 500 + c, n)?)?;
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let enc = crom_encode(&x, &p)?;
        let bytes = write_stream(&enc)?;
        let full = read_stream(&bytes, None)?;
        ok &= full.messages == enc.messages && !full.truncated;
        let seq = build_sequence(p.scheme(), p.iterations())?;
        for i in 0..=p.iterations() {
            let cut = prefix_len_bytes(&p, i)?;
            let d = read_stream(&bytes[..cut], Some(i))?;
            let a = decode_prefix_with(&d.messages, &d.params, &seq)?;
            let b = decode_prefix_with(&full.messages[..i], &p, &seq)?;
            ok &= a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()) && d.messages.len() == i;
            boundaries += 1;
        }
        // every byte cut: exactly the complete messages survive, a partial one is flagged
        let width = rank_width(n, k)? as usize;
        for cut in HEADER_LEN..=bytes.len() {
            let bits = 8 * (cut - HEADER_LEN);
            let complete = (bits / width).min(p.iterations());
            let d = read_stream(&bytes[..cut], None)?;
            ok &= d.messages.len() == complete
                && d.messages[..] == full.messages[..complete]
                && d.partial_discarded == (complete < p.iterations() && bits > complete * width);
            cuts += 1;
        }
        // the untruncated decoder agrees with the regenerating one
        let direct = decode_prefix(&full.messages, &p)?;
        let via = decode_prefix_with(&full.messages, &p, &seq)?;
        ok &= direct == via;
    }
    let mut subsets = 0usize;
    for n in 2..=12usize {
        for k in 1..n {
            for mask in 0u32..1 << n {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let idx: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
                let m = IndexMessage::new(n, idx)?;
                ok &= subset_unrank(subset_rank(&m)?, n, k)? == m;
                subsets += 1;
            }
        }
    }
    outcome(ok, format!("24 streams, {boundaries} message boundaries, {cuts} byte cuts, {subsets} subsets roundtripped"))
}

fn channel_dual() -> Result<Outcome> {
    let trials = 2000;
    let mut rates = Vec::new();
    for (j, n) in [256usize, 1024, 4096].into_iter().enumerate() {
        rates.push(ChannelCode::new(n)?.simulate(trials, 0xC4A0 + j as u64)?.rate());
    }
    let decreasing = rates.windows(2).all(|w| w[1] <= w[0] + 0.03);
    let capped = rates[2] <= 0.5;
    let ratio = ChannelCode::new(1 << 16)?.capacity_ratio();
    let in_band = (0.8..=1.2).contains(&ratio);
    outcome(
        decreasing && capped && in_band,
        format!(
            "P_e at n=256,1024,4096: {} (decrease within +0.03: {decreasing}, P_e(4096) <= 0.5: {capped}); R_n/C(P_n) at n=2^16 = {ratio:.4} (band [0.8, 1.2]: {in_band})",
            fmt(&rates)
        ),
    )
}

fn ergodic_robustness() -> Result<Outcome> {
    let source = SourceSpec::gauss_markov(1.0, 0.9, SOURCE_SEED)?;
    let r = crom_curve(1024, 1, SchemeKind::UniformHaar, source)?;
    let (ok, detail) = band_check(&r, 0.2);
    outcome(ok, format!("gauss-markov rho=0.9: {detail}"))
}

fn main() {
    let mut shared = Shared::default();
    type Check<'a> = Box<dyn FnMut(&mut Shared) -> Result<Outcome> + 'a>;
    let checks: Vec<(u32, &str, Duration, Check)> = vec![
        (1, "residual identity", Duration::from_secs(30), Box::new(|_| residual_identity())),
        (2, "distortion-rate band", Duration::from_secs(600), Box::new(distortion_rate_band)),
        (3, "crom vs sparc", Duration::from_secs(600), Box::new(|_| crom_vs_sparc())),
        (4, "k tradeoff", Duration::from_secs(900), Box::new(k_tradeoff)),
        (5, "structured transforms", Duration::from_secs(600), Box::new(structured_transforms)),
        (6, "zero-rate gain", Duration::from_secs(60), Box::new(|_| zero_rate_gain())),
        (7, "order statistic oracles", Duration::from_secs(120), Box::new(|_| order_statistic_oracles())),
        (8, "rateless bitstream", Duration::from_secs(60), Box::new(|_| rateless_stream())),
        (9, "channel dual", Duration::from_secs(120), Box::new(|_| channel_dual())),
        (10, "ergodic robustness", Duration::from_secs(600), Box::new(|_| ergodic_robustness())),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, mut check) in checks {
        let start = Instant::now();
        let result = check(&mut shared);
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "criterion {id:>2} {}: {name}: {detail} [{:.1}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
