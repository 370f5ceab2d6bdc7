use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crom_core::codec_io::{prefix_len_bytes, read_stream, write_stream};
use crom_core::crom::{crom_encode, decode_prefix, estimate_sigma2, CromParams, Schedule};
use crom_core::harness::{generate_block, run_experiment, CodecSpec, ExperimentSpec, SourceKind, SourceSpec};
use crom_core::sparc::{SparcNormalization, SparcParams};
use crom_core::transform::{SchemeKind, TransformScheme};
use crom_core::{ChannelCode, Error, ZeroRateCode};

#[derive(Parser)]
#[command(name = "crom", version, about = "Rateless lossy compression with random orthogonal matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode one block of raw little-endian f64 samples into a .crom stream
    Encode(EncodeArgs),
    /// Decode a (possibly truncated) .crom stream into raw little-endian f64 samples
    Decode(DecodeArgs),
    /// Run a Monte Carlo distortion-rate experiment and write CSV
    Simulate(SimulateArgs),
    /// Measure the zero-rate extremes code on Gaussian blocks
    ZeroRate(ZeroRateArgs),
    /// Simulate the zero-rate channel code over unit-variance AWGN and write CSV
    Channel(ChannelArgs),
}

#[derive(Args)]
struct EncodeArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Total rate in nats per sample
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value = "sparse-givens-dct")]
    scheme: SchemeKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Source second moment; defaults to 1
    #[arg(long, conflicts_with = "estimate_sigma2")]
    sigma2: Option<f64>,
    /// Use the block's mean square as sigma2
    #[arg(long)]
    estimate_sigma2: bool,
    #[arg(long, default_value = "simulation")]
    schedule: Schedule,
    /// Slack for the theorem schedule
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
}

#[derive(Args)]
struct DecodeArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Decode only the first i messages
    #[arg(long, conflicts_with = "prefix_bytes")]
    prefix_messages: Option<usize>,
    /// Decode only what the first b bytes of the stream carry
    #[arg(long)]
    prefix_bytes: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Codec {
    Crom,
    Sparc,
    ZeroRate,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    codec: Codec,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Sub-codebook size for sparc
    #[arg(long, default_value_t = 256)]
    m: usize,
    /// Nominal rate; ignored for zero-rate, whose rate is fixed by n and k
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value = "gaussian")]
    source: SourceKind,
    #[arg(long, default_value_t = 1.0)]
    variance: f64,
    /// Lag-one correlation for the gauss-markov source
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
    #[arg(long, default_value = "uniform-haar")]
    scheme: SchemeKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    source_seed: u64,
    /// Reporting rates; defaults to quarters of the nominal rate
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Subtract raw rather than unit-norm codewords (sparc)
    #[arg(long)]
    raw_codewords: bool,
    /// Use alpha = E[X_(k)] instead of p_n - q_n (zero-rate)
    #[arg(long)]
    expected_alpha: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ZeroRateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    expected_alpha: bool,
}

#[derive(Args)]
struct ChannelArgs {
    #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Failure that maps onto an exit code.
enum Failure {
    Config(String),
    Format(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_format() {
            Failure::Format(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => write_file(p, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Config(format!("cannot write to stdout: {e}"))),
    }
}

fn read_samples(path: &Path) -> Result<Vec<f64>, Failure> {
    let bytes = read_file(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Failure::Config(format!(
            "{} holds {} bytes, not a whole number of f64 samples",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn encode(a: EncodeArgs) -> Result<(), Failure> {
    let x = read_samples(&a.input)?;
    if x.len() != a.n {
        return Err(Failure::Config(format!("input has {} samples, expected n = {}", x.len(), a.n)));
    }
    let sigma2 = if a.estimate_sigma2 { estimate_sigma2(&x) } else { a.sigma2.unwrap_or(1.0) };
    let scheme = TransformScheme::new(a.scheme, a.seed, a.n)?;
    let p = CromParams::from_parts(a.n, a.k, a.rate, sigma2, a.gamma, a.schedule, scheme)?;
    let enc = crom_encode(&x, &p)?;
    let bytes = write_stream(&enc)?;
    write_file(&a.output, &bytes)?;
    eprintln!(
        "{} messages, {} bytes, final distortion {:.6}",
        enc.messages.len(),
        bytes.len(),
        enc.final_residual_norm().powi(2) / a.n as f64
    );
    Ok(())
}

fn decode(a: DecodeArgs) -> Result<(), Failure> {
    let bytes = read_file(&a.input)?;
    let cut = a.prefix_bytes.map_or(bytes.len(), |b| b.min(bytes.len()));
    let stream = read_stream(&bytes[..cut], a.prefix_messages)?;
    if let Some(want) = a.prefix_messages {
        if want > stream.messages.len() {
            return Err(Failure::Format(format!(
                "asked for {want} messages but the stream holds {}",
                stream.messages.len()
            )));
        }
    }
    let xhat = decode_prefix(&stream.messages, &stream.params)?;
    let out: Vec<u8> = xhat.iter().flat_map(|v| v.to_le_bytes()).collect();
    write_file(&a.output, &out)?;
    eprintln!(
        "decoded {} of {} messages ({} bytes needed){}",
        stream.messages.len(),
        stream.params.iterations(),
        prefix_len_bytes(&stream.params, stream.messages.len())?,
        if stream.partial_discarded { ", trailing partial message dropped" } else { "" }
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let codec = match a.codec {
        Codec::Crom => {
            let scheme = TransformScheme::new(a.scheme, a.seed, a.n)?;
            CodecSpec::Crom(CromParams::new(a.n, a.k, a.rate, scheme)?.with_sigma2(a.variance)?)
        }
        Codec::Sparc => {
            let norm = if a.raw_codewords { SparcNormalization::Raw } else { SparcNormalization::Unit };
            let p = SparcParams::from_rate(a.n, a.m, a.rate, a.seed)?.with_sigma2(a.variance)?;
            CodecSpec::Sparc(p.with_normalization(norm))
        }
        Codec::ZeroRate => CodecSpec::ZeroRate(if a.expected_alpha {
            ZeroRateCode::with_expected_order_statistic(a.n, a.k)?
        } else {
            ZeroRateCode::new(a.n, a.k)?
        }),
    };
    let top = match codec {
        CodecSpec::ZeroRate(c) => c.rate(),
        _ => a.rate,
    };
    let grid = a.grid.unwrap_or_else(|| (0..=4).map(|q| top * q as f64 / 4.0).collect());
    let source = SourceSpec::new(a.source, a.variance, a.rho, a.source_seed)?;
    let result = run_experiment(&ExperimentSpec::new(codec, source, a.trials, grid)?)?;
    emit(a.output.as_deref(), &result.to_csv())
}

fn zero_rate(a: ZeroRateArgs) -> Result<(), Failure> {
    if a.trials == 0 {
        return Err(Failure::Config("trials must be at least 1".into()));
    }
    let code = if a.expected_alpha {
        ZeroRateCode::with_expected_order_statistic(a.n, a.k)?
    } else {
        ZeroRateCode::new(a.n, a.k)?
    };
    let threshold = code.distortion_threshold(a.eps)?;
    let source = SourceSpec::gaussian(1.0, a.seed)?;
    let (mut excess, mut gain, mut dist) = (0usize, 0.0, 0.0);
    for t in 0..a.trials as u64 {
        let x = generate_block(&source, a.n, t);
        let d = code.distortion(&x)?;
        excess += usize::from(d > threshold);
        gain += x.iter().map(|v| v * v).sum::<f64>() / a.n as f64 - d;
        dist += d;
    }
    let trials = a.trials as f64;
    println!("n,k,alpha,rate,mean_distortion,gain_ratio,eps,threshold,excess_frequency");
    println!(
        "{},{},{},{},{},{},{},{},{}",
        a.n,
        a.k,
        code.alpha(),
        code.rate(),
        dist / trials,
        gain / trials * a.n as f64 / (2.0 * (a.n as f64).ln()),
        a.eps,
        threshold,
        excess as f64 / trials
    );
    Ok(())
}

fn channel(a: ChannelArgs) -> Result<(), Failure> {
    let mut out = String::from("n,trials,error_rate,P_n,R_n,capacity_ratio\n");
    for (j, &n) in a.n_grid.iter().enumerate() {
        let code = ChannelCode::new(n)?;
        let e = code.simulate(a.trials, a.seed.wrapping_add(j as u64))?;
        out.push_str(&format!(
            "{n},{},{},{},{},{}\n",
            a.trials,
            e.rate(),
            code.power(),
            code.rate(),
            code.capacity_ratio()
        ));
    }
    emit(a.output.as_deref(), &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Simulate(a) => simulate(a),
        Command::ZeroRate(a) => zero_rate(a),
        Command::Channel(a) => channel(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("crom: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Format(msg)) => {
            eprintln!("crom: {msg}");
            ExitCode::from(3)
        }
    }
}
