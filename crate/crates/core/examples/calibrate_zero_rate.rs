//! Measures the slack constant `c` that the excess-distortion threshold of the
//! zero-rate code needs, by Monte Carlo over i.i.d. N(0, 1) blocks.
//!
//! For each (n, k, ε) the empirical (1 − ε)-quantile `q` of the per-symbol
//! distortion gives `c = (q − 1 + 2R − √(2/n) Q⁻¹(ε)) · n / (k ln ln n)`.
//!
//! ```text
//! cargo run --release -p crom-core --example calibrate_zero_rate
//! ```

use crom_core::harness::{generate_block, SourceSpec};
use crom_core::stats::q_inv;
use crom_core::ZeroRateCode;

const TRIALS: u64 = 40_000;

fn main() -> crom_core::Result<()> {
    let source = SourceSpec::gaussian(1.0, 0x5EED_CA1B)?;
    let mut worst = f64::NEG_INFINITY;
    println!("n,k,eps,quantile,c");
    for n in [1usize << 10, 1 << 12, 1 << 14] {
        let codes = [ZeroRateCode::new(n, 1)?, ZeroRateCode::new(n, 2)?];
        let mut d: Vec<Vec<f64>> = vec![Vec::with_capacity(TRIALS as usize); codes.len()];
        for t in 0..TRIALS {
            let x = generate_block(&source, n, t);
            for (code, out) in codes.iter().zip(d.iter_mut()) {
                out.push(code.distortion(&x)?);
            }
        }
        let nf = n as f64;
        for (code, dist) in codes.iter().zip(d.iter_mut()) {
            dist.sort_by(f64::total_cmp);
            for eps in [0.05, 0.1, 0.2] {
                let q = dist[((1.0 - eps) * TRIALS as f64).ceil() as usize - 1];
                let base = 1.0 - 2.0 * code.rate() + (2.0 / nf).sqrt() * q_inv(eps)?;
                let c = (q - base) * nf / (code.k() as f64 * nf.ln().ln());
                worst = worst.max(c);
                println!("{n},{},{eps},{q:.6},{c:.4}", code.k());
            }
        }
    }
    println!("# largest c = {worst:.4}");
    Ok(())
}
