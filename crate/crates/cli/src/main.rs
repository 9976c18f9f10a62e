use clap::{Parser, Subcommand, ValueEnum};
use hermcurve::families::{family_table, FamilyId};
use hermcurve::pipeline::{parse_checks, run_dualform, run_family, run_verify, VerifyOptions, DEFAULT_SAMPLE, DEFAULT_SEED};
use hermcurve::report::{BatchReport, Status, VerificationReport};
use hermcurve::{Error, Exec};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "hermcurve", version, about = "Verify maximal curves and their Hermitian embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the check suite on a family instance.
    Verify(RunArgs),
    /// Recover the Hermitian form from sample images and canonicalize it.
    Dualform(RunArgs),
    /// Print the versioned family table.
    Table {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    q: u64,
    /// Component index; all components when omitted.
    #[arg(long)]
    i: Option<u32>,
    /// Comma-separated check names, or `all`.
    #[arg(long, default_value = "all")]
    checks: String,
    #[arg(long, default_value_t = DEFAULT_SAMPLE)]
    sample: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Series truncation; defaults to 2q + 4.
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock timings (makes reports run-dependent).
    #[arg(long)]
    timings: bool,
    /// Disable data parallelism.
    #[arg(long)]
    sequential: bool,
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Cap(_) => EXIT_CAP,
        Error::Invalid(_) | Error::NotApplicable(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), u8> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| {
            eprintln!("cannot write {}: {e}", p.display());
            EXIT_USAGE
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(args: &RunArgs, dual: bool) -> Result<Status, u8> {
    let fail = |e: Error| {
        eprintln!("error: {e}");
        error_code(&e)
    };
    let id = FamilyId::parse(&args.family).map_err(fail)?;
    id.check_q(args.q).map_err(fail)?;
    if args.truncation.is_some_and(|t| t < 2) {
        return Err(fail(Error::Invalid("truncation must be at least 2".into())));
    }
    let opts = VerifyOptions {
        checks: parse_checks(&args.checks, id).map_err(fail)?,
        sample: args.sample,
        seed: args.seed,
        truncation: args.truncation,
        exec: if args.sequential { Exec::Sequential } else { Exec::default() },
        timings: args.timings,
    };
    let render = |r: &VerificationReport| match args.format {
        Format::Json => r.to_json() + "\n",
        Format::Text => r.to_text(),
    };
    match args.i {
        Some(i) => {
            let rep = if dual { run_dualform(id, args.q, i, &opts) } else { run_verify(id, args.q, i, &opts) }.map_err(fail)?;
            emit(&render(&rep), &args.out)?;
            Ok(rep.status)
        }
        None => {
            let reps = if dual {
                id.components()
                    .into_iter()
                    .map(|i| run_dualform(id, args.q, i, &opts))
                    .collect::<hermcurve::Result<Vec<_>>>()
            } else {
                run_family(id, args.q, &opts)
            }
            .map_err(fail)?;
            let batch = BatchReport::new(reps);
            let text = match args.format {
                Format::Json => batch.to_json() + "\n",
                Format::Text => batch.to_text(),
            };
            emit(&text, &args.out)?;
            Ok(batch.status)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Verify(a) => run(a, false),
        Command::Dualform(a) => run(a, true),
        Command::Table { out } => match family_table() {
            Ok(t) => emit(&(serde_json::to_string_pretty(&t).expect("table serializes") + "\n"), out).map(|_| Status::Pass),
            Err(e) => {
                eprintln!("error: {e}");
                Err(error_code(&e))
            }
        },
    };
    match result {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(EXIT_FAIL),
        Err(code) => ExitCode::from(code),
    }
}
