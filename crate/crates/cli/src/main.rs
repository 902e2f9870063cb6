//! `lsrn` — encode, decode, and evaluate super-resolved point cloud streams.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lsrn_cli::ingest;
use lsrn_cli::ply;
use lsrn_core::metrics;
use lsrn_core::pipeline::{self, EncodeSettings};
use lsrn_core::srnet::TrainConfig;

#[derive(Parser)]
#[command(
    name = "lsrn",
    version,
    about = "Lossy point cloud geometry codec with learned super-resolution upsampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Voxelize a PLY file and encode it as an .lsrn stream.
    Encode(EncodeArgs),
    /// Decode an .lsrn stream back into a PLY file.
    Decode(DecodeArgs),
    /// Report D1-PSNR between two PLY files (and bpp, given the stream).
    Eval(EvalArgs),
    /// Encode one cloud at several downsampling exponents into an RD CSV.
    Sweep(SweepArgs),
    /// Compare two RD CSV curves and print the average rate difference.
    Bdrate(BdrateArgs),
}

#[derive(Args)]
struct EncodeArgs {
    /// Input point cloud (.ply, ascii or binary little-endian).
    input: PathBuf,
    /// Output stream path (.lsrn).
    output: PathBuf,
    /// Downsampling exponent: the transmitted base cloud is K halvings down.
    #[arg(long)]
    k: u8,
    /// Neighborhood radius of the occupancy features (1 or 2).
    #[arg(long, default_value_t = 1)]
    d: u8,
    /// Hidden layer width; defaults to a per-K rule when omitted.
    #[arg(long)]
    hidden: Option<u16>,
    /// Seed for parameter initialization and batch shuffling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training epochs.
    #[arg(long, default_value_t = 150)]
    epochs: usize,
    /// Training batch size in pattern rows.
    #[arg(long, default_value_t = 2048)]
    batch: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 0.001)]
    lr: f32,
    /// Store true last-step interpolation patterns instead of a network
    /// (diagnostic; lossless only for K = 1).
    #[arg(long)]
    oracle_patterns: bool,
    /// Grid bit depth for voxelization; inferred from integer coordinates
    /// when omitted.
    #[arg(long)]
    bit_depth: Option<u8>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Input stream path (.lsrn).
    input: PathBuf,
    /// Output point cloud path (.ply, binary little-endian float32).
    output: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Reference point cloud (.ply).
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Reconstructed point cloud (.ply).
    #[arg(long = "rec")]
    reconstruction: PathBuf,
    /// Grid bit depth; the PSNR peak is 2^B - 1.
    #[arg(long)]
    bit_depth: u8,
    /// Stream whose size yields bits per point of the reference cloud.
    #[arg(long)]
    stream: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Input point cloud (.ply).
    input: PathBuf,
    /// Comma-separated downsampling exponents, e.g. `1,2,3,4,5,6`.
    #[arg(long, value_delimiter = ',')]
    k_list: Vec<u8>,
    /// Neighborhood radius of the occupancy features (1 or 2).
    #[arg(long, default_value_t = 1)]
    d: u8,
    /// Output CSV path (`label,K,bpp,d1_psnr`).
    #[arg(long)]
    out: PathBuf,
    /// Seed for parameter initialization and batch shuffling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training epochs.
    #[arg(long, default_value_t = 150)]
    epochs: usize,
    /// Training batch size in pattern rows.
    #[arg(long, default_value_t = 2048)]
    batch: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 0.001)]
    lr: f32,
    /// Grid bit depth for voxelization; inferred from integer coordinates
    /// when omitted.
    #[arg(long)]
    bit_depth: Option<u8>,
}

#[derive(Args)]
struct BdrateArgs {
    /// Anchor curve CSV.
    #[arg(long)]
    anchor: PathBuf,
    /// Test curve CSV.
    #[arg(long)]
    test: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode(args) => encode(args),
        Command::Decode(args) => decode(args),
        Command::Eval(args) => eval(args),
        Command::Sweep(args) => sweep(args),
        Command::Bdrate(args) => bdrate(args),
    }
}

fn load_cloud(path: &Path, bit_depth: Option<u8>) -> Result<(lsrn_core::cloud::VoxelCloud, u8)> {
    ingest::load_voxels(path, bit_depth)
        .with_context(|| format!("cannot load `{}`", path.display()))
}

fn train_config(seed: u64, epochs: usize, batch: usize, lr: f32) -> TrainConfig {
    TrainConfig {
        learning_rate: lr,
        batch_size: batch,
        epochs,
        seed,
        ..TrainConfig::default()
    }
}

fn encode(args: EncodeArgs) -> Result<()> {
    let (cloud, _) = load_cloud(&args.input, args.bit_depth)?;
    let mut settings = EncodeSettings::new(args.k, args.d);
    settings.hidden_override = args.hidden;
    settings.oracle_patterns = args.oracle_patterns;
    settings.train = train_config(args.seed, args.epochs, args.batch, args.lr);
    let stream = pipeline::encode(&cloud, &settings)
        .with_context(|| format!("cannot encode `{}`", args.input.display()))?;
    std::fs::write(&args.output, stream)
        .with_context(|| format!("cannot write `{}`", args.output.display()))?;
    Ok(())
}

fn decode(args: DecodeArgs) -> Result<()> {
    let stream = std::fs::read(&args.input)
        .with_context(|| format!("cannot read `{}`", args.input.display()))?;
    let cloud = pipeline::decode(&stream)
        .with_context(|| format!("cannot decode `{}`", args.input.display()))?;
    ply::write_ply(&args.output, &cloud)
        .with_context(|| format!("cannot write `{}`", args.output.display()))?;
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let (reference, _) = load_cloud(&args.reference, Some(args.bit_depth))?;
    let (reconstruction, _) = load_cloud(&args.reconstruction, Some(args.bit_depth))?;
    let psnr = metrics::d1_psnr(&reference, &reconstruction, args.bit_depth)?;
    match args.stream {
        Some(stream_path) => {
            let stream = std::fs::read(&stream_path)
                .with_context(|| format!("cannot read `{}`", stream_path.display()))?;
            let bpp = metrics::bits_per_point(stream.len(), reference.len())?;
            println!("{psnr:.4},{bpp:.4}");
        }
        None => println!("{psnr:.4}"),
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    anyhow::ensure!(!args.k_list.is_empty(), "--k-list must name at least one K");
    let (cloud, _) = load_cloud(&args.input, args.bit_depth)?;
    let label = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cloud".to_string());
    let mut rows = Vec::with_capacity(args.k_list.len());
    for &k in &args.k_list {
        let mut settings = EncodeSettings::new(k, args.d);
        settings.train = train_config(args.seed, args.epochs, args.batch, args.lr);
        let stats = pipeline::encode_with_stats(&cloud, &settings)
            .with_context(|| format!("cannot encode `{}` at K={k}", args.input.display()))?;
        eprintln!("k={k} bpp={:.4} d1_psnr={:.4}", stats.bpp, stats.psnr);
        rows.push(metrics::RdRow {
            label: label.clone(),
            k,
            bpp: stats.bpp,
            psnr: stats.psnr,
        });
    }
    std::fs::write(&args.out, metrics::rd_rows_to_csv(&rows))
        .with_context(|| format!("cannot write `{}`", args.out.display()))?;
    Ok(())
}

fn bdrate(args: BdrateArgs) -> Result<()> {
    let read_curve = |path: &Path| -> Result<Vec<metrics::RdPoint>> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read `{}`", path.display()))?;
        let rows = metrics::rd_rows_from_csv(&text)
            .with_context(|| format!("cannot parse `{}`", path.display()))?;
        Ok(metrics::rd_rows_to_points(&rows))
    };
    let anchor = read_curve(&args.anchor)?;
    let test = read_curve(&args.test)?;
    let percent = metrics::bd_rate(&anchor, &test)?;
    println!("{percent:.1}");
    Ok(())
}
