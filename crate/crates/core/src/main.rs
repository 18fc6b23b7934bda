use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use posd::demap::DemapperKind;
use posd::harness::{
    complexity_csv, dump_codebook, emit_results, render_complexity_table, run_ber_sweep,
    run_complexity_report, run_gmi_sweep, table_demappers, table_p, HarnessError, LdpcSource,
    OutputFormat, SimConfig, SnrGrid, DEFAULT_COMPLEXITY_FRAMES, DEFAULT_COMPLEXITY_SNR_DB,
    DEFAULT_GMI_FRAMES, DEFAULT_MAX_FRAMES, DEFAULT_TARGET_ERRORS,
};
use posd::FormatSpec;

/// Soft-demapper simulations for parity-equation modulation formats.
#[derive(Parser)]
#[command(name = "posd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Post-FEC BER sweep through the LDPC chain.
    Sim(SimArgs),
    /// GMI sweep, no FEC.
    Gmi(GmiArgs),
    /// Operation counts per format and demapper.
    Complexity(ComplexityArgs),
    /// Dump every symbol of a format.
    Codebook(CodebookArgs),
}

#[derive(Args)]
struct DemapArgs {
    /// Shipped format name or path to a format file.
    #[arg(long)]
    format: String,
    /// 1d, mlm, ms or posd.
    #[arg(long)]
    demapper: String,
    /// Least reliable positions for posd (default: 3 for seven info bits, else 4).
    #[arg(long)]
    p: Option<usize>,
    /// SNR grid in dB, `start:stop:step`.
    #[arg(long)]
    snr: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
    /// Write JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    common: DemapArgs,
    /// `builtin:n=..,rate=..,seed=..` or `alist:<path>`.
    #[arg(long, default_value = "builtin:n=1800,rate=0.8333,seed=1")]
    ldpc: String,
    #[arg(long, default_value_t = DEFAULT_TARGET_ERRORS)]
    target_errors: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_FRAMES)]
    max_frames: u64,
    /// Decoder iteration cap.
    #[arg(long, default_value_t = posd::fec::DEFAULT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Args)]
struct GmiArgs {
    #[command(flatten)]
    common: DemapArgs,
    /// Symbols per SNR point.
    #[arg(long, default_value_t = DEFAULT_GMI_FRAMES)]
    frames: u64,
}

#[derive(Args)]
struct ComplexityArgs {
    /// `all` or a comma-separated list of format names or files.
    #[arg(long, default_value = "all")]
    formats: String,
    /// `all` or a comma-separated list of 1d, mlm, ms, posd, posd:<p>.
    #[arg(long, default_value = "all")]
    demappers: String,
    #[arg(long, default_value_t = DEFAULT_COMPLEXITY_FRAMES)]
    frames: u64,
    #[arg(long, default_value_t = DEFAULT_COMPLEXITY_SNR_DB)]
    snr: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CodebookArgs {
    #[arg(long)]
    format: String,
    #[arg(long)]
    out: PathBuf,
}

fn demapper_kind(
    name: &str,
    p: Option<usize>,
    spec: &FormatSpec,
) -> Result<DemapperKind, HarnessError> {
    let kind = DemapperKind::parse(name, p)?;
    match kind {
        DemapperKind::Posd { .. } => Ok(DemapperKind::Posd {
            p: p.unwrap_or_else(|| table_p(spec)),
        }),
        _ if p.is_some() => Err(HarnessError::Config(format!(
            "--p only applies to posd, not {name}"
        ))),
        _ => Ok(kind),
    }
}

fn sim_config(args: &DemapArgs) -> Result<SimConfig, HarnessError> {
    let format = FormatSpec::load(&args.format)?;
    let demapper = demapper_kind(&args.demapper, args.p, &format)?;
    let snr: SnrGrid = args.snr.parse()?;
    let mut config = SimConfig::new(format, demapper, snr);
    config.seed = args.seed;
    config.workers = args.workers;
    Ok(config)
}

fn output_format(json: bool) -> OutputFormat {
    if json {
        OutputFormat::Json
    } else {
        OutputFormat::Csv
    }
}

fn complexity_pairs(
    args: &ComplexityArgs,
) -> Result<Vec<(FormatSpec, DemapperKind)>, HarnessError> {
    let formats = if args.formats.eq_ignore_ascii_case("all") {
        FormatSpec::builtin_all()
    } else {
        args.formats
            .split(',')
            .map(|f| FormatSpec::load(f.trim()))
            .collect::<Result<_, _>>()?
    };
    let mut pairs = Vec::new();
    for spec in formats {
        if args.demappers.eq_ignore_ascii_case("all") {
            pairs.extend(
                table_demappers(&spec)
                    .into_iter()
                    .map(|d| (spec.clone(), d)),
            );
            continue;
        }
        for item in args.demappers.split(',') {
            let (name, p) = match item.trim().split_once(':') {
                Some((name, p)) => {
                    let p = p
                        .parse()
                        .map_err(|_| HarnessError::Config(format!("bad depth in `{item}`")))?;
                    (name, Some(p))
                }
                None => (item.trim(), None),
            };
            pairs.push((spec.clone(), demapper_kind(name, p, &spec)?));
        }
    }
    Ok(pairs)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Sim(args) => {
            let mut config = sim_config(&args.common)?;
            config.ldpc = args.ldpc.parse::<LdpcSource>()?;
            config.target_errors = args.target_errors;
            config.max_frames = args.max_frames;
            config.max_iter = args.max_iter;
            let rows = run_ber_sweep(&config)?;
            emit_results(&rows, &args.common.out, output_format(args.common.json))
        }
        Command::Gmi(args) => {
            let mut config = sim_config(&args.common)?;
            config.max_frames = args.frames;
            let rows = run_gmi_sweep(&config)?;
            emit_results(&rows, &args.common.out, output_format(args.common.json))
        }
        Command::Complexity(args) => {
            let rows =
                run_complexity_report(&complexity_pairs(&args)?, args.frames, args.snr, args.seed)?;
            print!("{}", render_complexity_table(&rows));
            std::fs::write(&args.out, complexity_csv(&rows)).map_err(|source| HarnessError::Io {
                path: args.out.clone(),
                source,
            })
        }
        Command::Codebook(args) => {
            let spec = FormatSpec::load(&args.format)?;
            println!("{}", dump_codebook(&spec, &args.out)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
