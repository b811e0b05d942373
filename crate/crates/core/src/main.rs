use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hdcc::driver::{self, Conformance, DataPaths, DriverError, Overrides, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use hdcc::hdc::ValueRange;

#[derive(Parser)]
#[command(name = "hdcc", version, about = "Compile .hdcc classifier descriptions to C")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Overrides .SEED
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the [-1, 1] level mapping range
    #[arg(long, global = true, num_args = 2, value_names = ["MIN", "MAX"], allow_hyphen_values = true)]
    range: Option<Vec<f64>>,
    /// Overrides .NUM_THREADS
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for `compile`
    #[arg(short = 'o', global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit C sources and a Makefile
    Compile { description: PathBuf },
    /// Train and test with the reference interpreter
    Run {
        description: PathBuf,
        #[arg(num_args = 4, value_names = ["TRAIN_DATA", "TRAIN_LABELS", "TEST_DATA", "TEST_LABELS"])]
        data: Vec<PathBuf>,
    },
    /// Parse, validate and type-check only
    Check { description: PathBuf },
    /// Print the encoding IR
    IrDump {
        description: PathBuf,
        #[arg(long)]
        unfused: bool,
    },
    /// Build the emitted program and compare it with the interpreter
    Conformance {
        description: PathBuf,
        #[arg(num_args = 4, value_names = ["TRAIN_DATA", "TRAIN_LABELS", "TEST_DATA", "TEST_LABELS"])]
        data: Vec<PathBuf>,
        /// Build the binary with this seed instead (negative control)
        #[arg(long)]
        perturb_seed: Option<u64>,
    },
}

fn overrides(g: &Global) -> Result<Overrides, DriverError> {
    let range = match g.range.as_deref() {
        Some(&[min, max]) => Some(ValueRange::new(min, max).map_err(|e| DriverError::Usage(e.to_string()))?),
        _ => None,
    };
    Ok(Overrides {
        seed: g.seed,
        range,
        threads: g.threads,
    })
}

fn paths(data: Vec<PathBuf>) -> DataPaths {
    let [a, b, c, d]: [PathBuf; 4] = data.try_into().expect("clap enforces four paths");
    DataPaths::new([a, b, c, d])
}

fn execute(cli: Cli) -> Result<i32, DriverError> {
    let ov = overrides(&cli.global)?;
    let mut out = std::io::stdout().lock();
    match cli.cmd {
        Cmd::Compile { description } => {
            let dir = cli.global.out.unwrap_or_else(|| PathBuf::from("."));
            for p in driver::cmd_compile(&description, &dir, &ov)? {
                let _ = writeln!(out, "{}", p.display());
            }
        }
        Cmd::Run { description, data } => {
            let report = driver::cmd_run(&description, &paths(data), &ov)?;
            let _ = write!(out, "{}", report.summary());
        }
        Cmd::Check { description } => {
            driver::cmd_check(&description, &ov)?;
            let _ = writeln!(out, "ok");
        }
        Cmd::IrDump { description, unfused } => {
            let _ = write!(out, "{}", driver::cmd_ir_dump(&description, unfused, &ov)?);
        }
        Cmd::Conformance {
            description,
            data,
            perturb_seed,
        } => {
            let result = driver::cmd_conformance(&description, &paths(data), &ov, perturb_seed)?;
            let _ = writeln!(out, "{}", result.line());
            if matches!(result, Conformance::Fail { .. }) {
                return Ok(EXIT_USAGE);
            }
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            match e {
                DriverError::Diagnostics { .. } => eprintln!("{e}"),
                _ => eprintln!("hdcc: {e}"),
            }
            let code = e.exit_code();
            debug_assert!(code == EXIT_USAGE || code == EXIT_DATA);
            ExitCode::from(code as u8)
        }
    }
}
