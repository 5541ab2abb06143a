use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lcc_cli::{
    cmd_bench, cmd_convert, cmd_generate_mn_pda, cmd_generate_theorem3, cmd_info, cmd_simulate,
    cmd_verify, parse_ratio, CmdResult, ConvertMode, DemandSpec, SimulateOpts,
};

/// Construction, verification and simulation of linear coded caching schemes.
#[derive(Parser)]
#[command(name = "lcc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scheme or array file.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Validate a scheme, array or code file; exit 1 on failure.
    Verify { path: PathBuf },
    /// Run placement/broadcast/decode on a synthetic library.
    Simulate {
        path: PathBuf,
        /// all, random:N or explicit:d0,d1,...
        #[arg(long, default_value = "random:20")]
        demands: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Symbols per packet block.
        #[arg(long = "block-size", default_value_t = 64)]
        block_size: usize,
        /// Library size N (defaults to the user count K).
        #[arg(long)]
        files: Option<usize>,
    },
    /// Compare scheme families at a fixed memory ratio.
    Bench {
        /// Memory ratio M/N as z/q, for example 1/2.
        #[arg(long = "mn-ratio", alias = "MN-ratio")]
        mn_ratio: String,
        /// Comma-separated user counts.
        #[arg(long = "K", value_delimiter = ',', required = true)]
        users: Vec<u64>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Convert between representations; output is re-verified before writing.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        mode: ConvertArgs,
    },
    /// Print the parameters of a file.
    Info { path: PathBuf },
}

#[derive(Subcommand)]
enum GenerateKind {
    /// q^m-division scheme over GF(2) with K = m(q+1)h users.
    Theorem3 {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        z: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Binomial-subset array with F = C(K, t).
    MnPda {
        #[arg(long = "K")]
        users: usize,
        #[arg(long)]
        t: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ConvertArgs {
    /// Convert an array file to its scheme matrices.
    #[arg(long)]
    pda_to_linear: bool,
    /// Convert a repair-optimal storage code to a scheme.
    #[arg(long)]
    from_msr: bool,
    /// Extend a scheme to K users by grouping and concatenation.
    #[arg(long, value_name = "K")]
    extend_to: Option<usize>,
}

fn configure_threads() {
    if let Ok(value) = std::env::var("LCC_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run(cli: Cli) -> CmdResult<()> {
    match cli.command {
        Command::Generate { kind } => match kind {
            GenerateKind::Theorem3 { q, m, z, output } => cmd_generate_theorem3(q, m, z, &output),
            GenerateKind::MnPda { users, t, output } => cmd_generate_mn_pda(users, t, &output),
        },
        Command::Verify { path } => cmd_verify(&path),
        Command::Simulate {
            path,
            demands,
            seed,
            block_size,
            files,
        } => {
            let opts = SimulateOpts {
                demands: DemandSpec::parse(&demands)?,
                seed,
                block_size,
                files,
            };
            cmd_simulate(&path, &opts)
        }
        Command::Bench {
            mn_ratio,
            users,
            csv,
        } => cmd_bench(parse_ratio(&mn_ratio)?, &users, csv.as_deref()),
        Command::Convert {
            input,
            output,
            mode,
        } => {
            let mode = if mode.pda_to_linear {
                ConvertMode::PdaToLinear
            } else if mode.from_msr {
                ConvertMode::FromMsr
            } else {
                ConvertMode::ExtendTo(mode.extend_to.expect("clap group guarantees one mode"))
            };
            cmd_convert(&input, &output, &mode)
        }
        Command::Info { path } => cmd_info(&path),
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
