use clap::{Args, Parser, Subcommand};
use dct_attention::bench::{
    run_error_profile, run_scaling_bench, write_csv, BenchRecord, ErrorProfileConfig,
    ErrorRecord, KindFamily, ScalingConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Compressed-attention measurement harness.
#[derive(Parser)]
#[command(name = "dct-attention", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the runtime invariant suite and exit 0 if every property holds.
    Selftest {
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Time and measure multi-head attention across sequence lengths.
    Bench(BenchArgs),
    /// Profile compression error against the exact baseline.
    Error(ErrorArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Sequence lengths to sweep.
    #[arg(long, value_delimiter = ',', default_value = "128,512,1024,4096")]
    lengths: Vec<usize>,
    /// Fraction of cosine modes the compressed kinds retain.
    #[arg(long, default_value_t = 0.25, value_parser = parse_scale)]
    scale: f64,
    /// Attention kinds to run: vanilla, dct, ideal, naive.
    #[arg(long, value_delimiter = ',', default_value = "vanilla,dct", value_parser = parse_kind)]
    kinds: Vec<KindFamily>,
    /// Model width.
    #[arg(long, default_value_t = 512)]
    d: usize,
    /// Number of attention heads.
    #[arg(long, default_value_t = 8)]
    heads: usize,
    /// Batch elements simulated per pass.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// Timed repetitions per case (median is reported).
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Seed for inputs and weights.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ErrorArgs {
    /// Sequence length.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Model width.
    #[arg(long, default_value_t = 32)]
    d: usize,
    /// Number of heads; the profiled head has width d / heads.
    #[arg(long, default_value_t = 1)]
    heads: usize,
    /// Retained lengths to sweep.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    nbar: Vec<usize>,
    /// Seeds to average over (one row per seed).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    seeds: Vec<u64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn parse_scale(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("scale {v} must lie in (0, 1]"))
    }
}

fn parse_kind(s: &str) -> Result<KindFamily, String> {
    KindFamily::parse(s).map_err(|e| e.to_string())
}

fn print_bench_table(records: &[BenchRecord]) {
    println!(
        "{:<12} {:>8} {:>6} {:>6} {:>5} {:>14} {:>14}",
        "kind", "n", "batch", "n_bar", "reps", "time_ms_median", "peak_floats"
    );
    for r in records {
        let n_bar = r.n_bar.map_or("-".to_string(), |v| v.to_string());
        println!(
            "{:<12} {:>8} {:>6} {:>6} {:>5} {:>14.4} {:>14}",
            r.kind, r.n, r.batch, n_bar, r.reps, r.time_ms_median, r.peak_floats
        );
    }
}

fn print_error_table(records: &[ErrorRecord]) {
    println!(
        "{:>6} {:>4} {:>6} {:>6} {:>12} {:>14} {:>18} {:>12}",
        "n", "d", "n_bar", "seed", "frob_E", "out_err_ideal", "out_err_efficient", "relax_gap"
    );
    for r in records {
        println!(
            "{:>6} {:>4} {:>6} {:>6} {:>12.4e} {:>14.4e} {:>18.4e} {:>12.4e}",
            r.n, r.d, r.n_bar, r.seed, r.frob_e, r.out_err_ideal, r.out_err_efficient, r.relax_gap
        );
    }
}

fn run() -> Result<(), String> {
    match Cli::parse().command {
        Command::Selftest { seed } => {
            let failures = dct_attention::selftest::run(seed);
            if failures.is_empty() {
                println!("all properties hold");
                Ok(())
            } else {
                Err(format!("failed properties: {}", failures.join(", ")))
            }
        }
        Command::Bench(args) => {
            let config = ScalingConfig {
                lengths: args.lengths,
                scale: args.scale,
                kinds: args.kinds,
                d: args.d,
                heads: args.heads,
                batch: args.batch,
                reps: args.reps,
                seed: args.seed,
            };
            let records = run_scaling_bench(&config).map_err(|e| e.to_string())?;
            write_csv(&records, &args.out).map_err(|e| e.to_string())?;
            print_bench_table(&records);
            println!("wrote {} records to {}", records.len(), args.out.display());
            Ok(())
        }
        Command::Error(args) => {
            let config = ErrorProfileConfig {
                n: args.n,
                d: args.d,
                heads: args.heads,
                n_bars: args.nbar,
                seeds: args.seeds,
            };
            let records = run_error_profile(&config).map_err(|e| e.to_string())?;
            write_csv(&records, &args.out).map_err(|e| e.to_string())?;
            print_error_table(&records);
            println!("wrote {} records to {}", records.len(), args.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
