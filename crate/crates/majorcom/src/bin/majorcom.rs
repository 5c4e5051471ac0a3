//! Command-line front end: enumeration stats, single-shot encode/decode and
//! the BER / rate / codebook experiments driven by a TOML spec file.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use majorcom::channel::{make_rayleigh_channel, sigma2_from_snr_db, transmit_through};
use majorcom::codebook::{design_codebook, distance_matrix, reduce_dimensions};
use majorcom::codeword::{codeword_space_size, enumerate_allocations, Codebook};
use majorcom::decode::ToneContext;
use majorcom::rate::rate_upper_bound;
use majorcom::rng::derive_seed;
use majorcom::sim::{
    run_ber, run_codebook_study, run_rate, write_ber_csv, write_rate_csv, write_scatter_csv,
    write_study_csv, DecoderKind, ExperimentSpec,
};
use majorcom::transmit::synthesize_transmit;

#[derive(Parser)]
#[command(name = "majorcom", about = "Index-modulation link simulator", version)]
struct Cli {
    /// Experiment spec (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the spec's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte-Carlo trials (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (CSV commands; stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print codeword-space statistics for the configured system.
    Enumerate,
    /// Map a hex payload to a codeword and print it.
    Encode(EncodeArgs),
    /// Encode, transmit at the given SNR, decode, and print the recovered payload.
    Decode(DecodeArgs),
    /// Monte-Carlo bit-error-rate sweep ([ber] section of the spec).
    Ber,
    /// Achievable-rate bounds with baselines ([rate] section).
    Rate,
    /// Reduced-codebook operations.
    #[command(subcommand)]
    Codebook(CodebookCommand),
}

#[derive(Args)]
struct EncodeArgs {
    /// Payload as hex, e.g. 0x2f or 2f; width = bits per symbol.
    #[arg(long)]
    bits: String,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    bits: String,
    #[arg(long)]
    snr_db: f64,
    #[arg(long, default_value = "ml")]
    decoder: String,
}

#[derive(Subcommand)]
enum CodebookCommand {
    /// Design an n_b-entry allocation codebook and write it as text.
    Design(DesignArgs),
    /// BER study across codebook sizes plus the distance scatter export.
    Study {
        /// Output file for the H-Dist/Dist scatter CSV.
        #[arg(long)]
        scatter_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    n_b: usize,
}

fn load_spec(cli: &Cli) -> anyhow::Result<ExperimentSpec> {
    let path = cli
        .config
        .as_ref()
        .context("--config <file> is required for this command")?;
    let mut spec = ExperimentSpec::from_path(path)
        .with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn parse_hex(text: &str) -> anyhow::Result<u64> {
    let trimmed = text.trim().trim_start_matches("0x").trim_start_matches("0X");
    u64::from_str_radix(trimmed, 16).with_context(|| format!("invalid hex payload '{text}'"))
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Enumerate => {
            let spec = load_spec(cli)?;
            let cfg = &spec.system;
            let cb = Codebook::full(cfg)?;
            let total = codeword_space_size(cfg)?;
            let mut text = String::new();
            text += &format!("frequency_sets: {}\n", cb.frequency_sets().len());
            text += &format!("allocations: {}\n", cb.allocations().len());
            text += &format!("codewords: {total}\n");
            text += &format!("bits_per_symbol: {}\n", cb.bits_per_symbol());
            text += &format!("addressable_codewords: {}\n", cb.used_len());
            text += &format!("upper_bound_bits: {:.9}\n", rate_upper_bound(&cb));
            emit(&cli.out, text.as_bytes())?;
        }
        Command::Encode(args) => {
            let spec = load_spec(cli)?;
            let cb = Codebook::full(&spec.system)?;
            let bits = parse_hex(&args.bits)?;
            let cw = cb.bits_to_codeword(bits, cb.bits_per_symbol())?;
            let mut text = format!("carriers: {:?}\n", cw.freq.indices());
            for (k, g) in cw.alloc.groups().iter().enumerate() {
                text += &format!("group_{k}: {g:?}\n");
            }
            emit(&cli.out, text.as_bytes())?;
        }
        Command::Decode(args) => {
            let spec = load_spec(cli)?;
            let cfg = &spec.system;
            let cb = Codebook::full(cfg)?;
            let decoder = DecoderKind::parse(&args.decoder)?;
            let bits = parse_hex(&args.bits)?;
            let cw = cb.bits_to_codeword(bits, cb.bits_per_symbol())?;
            let x = synthesize_transmit(&cw, cfg)?;
            let h = make_rayleigh_channel(cfg, derive_seed(spec.seed, &[1, 1]));
            let y = transmit_through(&x, &h, sigma2_from_snr_db(args.snr_db), derive_seed(spec.seed, &[2, 0, 0]))?;
            let ctx = ToneContext::new(cfg);
            let decoded = decoder.run(&y, &h, &cb, &ctx, 10)?;
            let got = cb.demap_lenient(&decoded);
            emit(&cli.out, format!("{got:x}\n").as_bytes())?;
        }
        Command::Ber => {
            let spec = load_spec(cli)?;
            let records = run_ber(&spec)?;
            let mut csv = Vec::new();
            write_ber_csv(&records, &mut csv)?;
            emit(&cli.out, &csv)?;
        }
        Command::Rate => {
            let spec = load_spec(cli)?;
            let baselines = spec
                .rate
                .as_ref()
                .map(|r| r.baselines.clone())
                .unwrap_or_default();
            let rows = run_rate(&spec)?;
            let mut csv = Vec::new();
            write_rate_csv(&rows, &baselines, &mut csv)?;
            emit(&cli.out, &csv)?;
        }
        Command::Codebook(CodebookCommand::Design(args)) => {
            let spec = load_spec(cli)?;
            let cfg = &spec.system;
            let allocs = enumerate_allocations(cfg)?;
            let reduced = reduce_dimensions(&allocs, cfg)?;
            let dm = distance_matrix(&allocs, cfg.l_r);
            let design = design_codebook(
                &reduced,
                &dm,
                args.n_b,
                derive_seed(spec.seed, &[10, args.n_b as u64]),
            )?;
            let selected: Vec<_> = design.selected.iter().map(|&i| allocs[i].clone()).collect();
            let cb = Codebook::with_allocations(cfg, selected)?;
            let mut text = Vec::new();
            cb.save_allocations(&mut text)?;
            eprintln!("min_distance: {}", design.min_distance);
            emit(&cli.out, &text)?;
        }
        Command::Codebook(CodebookCommand::Study { scatter_out }) => {
            let spec = load_spec(cli)?;
            let (records, scatter) = run_codebook_study(&spec)?;
            let mut csv = Vec::new();
            write_study_csv(&records, &mut csv)?;
            emit(&cli.out, &csv)?;
            if let Some(path) = scatter_out {
                let mut csv = Vec::new();
                write_scatter_csv(&scatter, &mut csv)?;
                std::fs::write(path, csv)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
