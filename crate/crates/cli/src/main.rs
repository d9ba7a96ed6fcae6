//! Command-line driver for the height 2 verification checks.

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use height2::checks::{self, CheckResult, Config, Session};
use height2::Error;

/// Exit codes, one per error kind.
const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_UNKNOWN_ELEMENT: u8 = 3;
const EXIT_PRECISION: u8 = 4;
const EXIT_INVALID_ARGUMENT: u8 = 5;
const EXIT_INTERNAL: u8 = 6;

#[derive(Parser)]
#[command(name = "height2", version, about = "Verify the height 2 formal group computations")]
struct Cli {
    /// Univariate precision of the formal group.
    #[arg(long, global = true, default_value_t = 128)]
    precision: usize,
    /// Trivariate degree of cubical structures.
    #[arg(long = "trivariate-degree", global = true, default_value_t = 34)]
    trivariate_degree: usize,
    /// Witt precision n (arithmetic mod 2^n).
    #[arg(long, global = true, default_value_t = 8)]
    witt: u32,
    /// Random seed; the HEIGHT2_SEED environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Report 0 ms for every check, making JSON output reproducible byte for byte.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Formal group or stabilizer group checks.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
    /// Cannibalistic series of a named element.
    Lseries {
        /// One of alpha2, ci, cj, omega, i.
        #[arg(long)]
        element: String,
        #[arg(long, default_value_t = 8)]
        order: usize,
        /// Trivariate working degree.
        #[arg(long, default_value_t = 34)]
        degree: usize,
    },
    /// Twisted action table on the generators.
    ActionTable,
    /// Invariance, leading monomials and dimension count.
    Invariants {
        #[arg(long, default_value_t = 8)]
        max_degree: usize,
    },
    /// Pairings, detection matrix and pushforward.
    Pairings,
    /// Milnor-Moore comodule suite.
    MilnorMoore {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Every acceptance check.
    Report {
        #[arg(long)]
        all: bool,
    },
}

#[derive(Subcommand)]
enum Verify {
    /// Formal group law checks.
    Fgl,
    /// Stabilizer group checks at a quotient depth.
    Group {
        #[arg(long, default_value_t = 7)]
        depth: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(m) if m.starts_with("unknown element") => EXIT_UNKNOWN_ELEMENT,
        Error::Precision(_) | Error::PrecisionMismatch(..) => EXIT_PRECISION,
        Error::InvalidArgument(_) | Error::Parse(_) => EXIT_INVALID_ARGUMENT,
        _ => EXIT_INTERNAL,
    }
}

fn seed(cli_seed: u64) -> Result<u64, Error> {
    match std::env::var("HEIGHT2_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| Error::InvalidArgument(format!("HEIGHT2_SEED is not a u64: {v:?}"))),
        Err(_) => Ok(cli_seed),
    }
}

fn print_results(results: &mut [CheckResult], format: Format, no_timing: bool) {
    if no_timing {
        for r in results.iter_mut() {
            r.ms = 0;
        }
    }
    match format {
        Format::Text => {
            for r in results.iter() {
                println!("{}", r.to_line());
            }
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(results).expect("serializable")),
    }
}

fn run(cli: Cli) -> Result<Vec<CheckResult>, Error> {
    let mut cfg = Config {
        precision: cli.precision,
        degree: cli.trivariate_degree,
        witt: cli.witt,
        seed: seed(cli.seed)?,
        ..Config::default()
    };
    let by_criteria = |cfg: Config, ks: &[usize]| -> Result<Vec<CheckResult>, Error> {
        let s = Session::new(cfg)?;
        ks.iter().map(|&k| checks::run_criterion(&s, k)).collect()
    };
    match cli.command {
        Command::Verify { what: Verify::Fgl } => by_criteria(cfg, &[1, 2]),
        Command::Verify { what: Verify::Group { depth } } => {
            cfg.depth = depth;
            by_criteria(cfg, &[3, 4, 5, 13])
        }
        Command::Lseries { element, order, degree } => {
            cfg.degree = degree;
            let s = Session::new(cfg)?;
            let (l, res) = checks::lseries_check(&s, &element, order)?;
            match cli.format {
                Format::Text => println!("l_{element}(z) = {l}+O(z^{order})"),
                Format::Json => {
                    let v = serde_json::json!({ "element": element, "l": l, "order": order });
                    println!("{v}");
                }
            }
            Ok(vec![res])
        }
        Command::ActionTable => by_criteria(cfg, &[8]),
        Command::Invariants { max_degree } => {
            let s = Session::new(cfg)?;
            if !(1..=10).contains(&max_degree) {
                return Err(Error::InvalidArgument(format!("max degree must lie in 1..=10, got {max_degree}")));
            }
            Ok(vec![checks::timed(checks::CRITERIA[8], || checks::invariants(&s, max_degree))])
        }
        Command::Pairings => by_criteria(cfg, &[10, 11]),
        Command::MilnorMoore { trials } => {
            cfg.trials = trials;
            let s = Session::new(cfg)?;
            Ok(vec![checks::timed(checks::CRITERIA[11], || checks::milnor_moore(&s, trials))])
        }
        Command::Report { all } => {
            if !all {
                return Err(Error::InvalidArgument("report requires --all".into()));
            }
            Ok(checks::run_all(&Session::new(cfg)?))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (format, no_timing, is_lseries) = (cli.format, cli.no_timing, matches!(cli.command, Command::Lseries { .. }));
    match run(cli) {
        Ok(mut results) => {
            if !(is_lseries && format == Format::Json) {
                print_results(&mut results, format, no_timing);
            } else if let Some(r) = results.first() {
                eprintln!("{}", r.to_line());
            }
            if results.iter().all(|r| r.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED_CHECK)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
