mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use acsan_core::analysis::{self, AnalysisError, AnalysisOptions, CompatMode};
use acsan_core::fixpoint::FixpointError;
use acsan_core::scenario::{count_linear_extensions_capped, linear_extensions, ScenarioError, DEFAULT_ENUMERATION_CAP};
use acsan_core::{parse_query, parse_scenario, Scenario, ScenarioSource, DEFAULT_BUDGET};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

/// Reachability analysis for scenario-based access-control specifications.
#[derive(Debug, Parser)]
#[command(name = "acsan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether the query is reachable.
    Check(CheckArgs),
    /// Report the well-formedness and compatibility conditions.
    Validate(ValidateArgs),
    /// Count or list the linear extensions of the event order.
    Extensions(ExtensionsArgs),
    /// Print the derivation of the query after a reachable check.
    Explain(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Interleaving,
    PartialOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CompatArg {
    Strict,
    Exhaustive,
    Skip,
}

#[derive(Debug, Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "partial-order")]
    mode: ModeArg,
    /// Replace the scenario's query, e.g. 'knows(CRep, a2i(Ed, cans))'.
    #[arg(long)]
    query: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Round budget for each fixpoint computation.
    #[arg(long, env = "ACSAN_MAX_ITERS", default_value_t = DEFAULT_BUDGET)]
    max_iters: usize,
    /// Compatibility check run before a partial-order analysis.
    #[arg(long, value_enum, default_value = "strict")]
    compat: CompatArg,
    /// Keep exploring interleavings after the first witness.
    #[arg(long)]
    no_early_exit: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "strict")]
    compat: CompatArg,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, env = "ACSAN_MAX_ITERS", default_value_t = DEFAULT_BUDGET)]
    max_iters: usize,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("what").required(true).args(["count", "list"])))]
struct ExtensionsArgs {
    file: PathBuf,
    #[arg(long)]
    count: bool,
    #[arg(long)]
    list: bool,
    /// Largest number of events to enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

const EXIT_NO: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_LIMIT: u8 = 3;

/// A failure carrying its exit code and message.
struct Failure(u8, String);

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let code = match &e {
            AnalysisError::Fixpoint(FixpointError::BudgetExceeded { .. }) | AnalysisError::TooLarge { .. } => {
                EXIT_LIMIT
            }
            AnalysisError::CompatViolation { .. } => EXIT_NO,
            _ => EXIT_INPUT,
        };
        Failure(code, format!("error: {e}"))
    }
}

fn load(path: &PathBuf) -> Result<Scenario, Failure> {
    let src = ScenarioSource::from_path(path)
        .map_err(|e| Failure(EXIT_INPUT, format!("error: cannot read {}: {e}", path.display())))?;
    parse_scenario(&src).map_err(|ds| {
        let lines: Vec<String> = ds.iter().map(|d| d.render(&src.origin)).collect();
        Failure(EXIT_INPUT, lines.join("\n"))
    })
}

fn compat_mode(c: CompatArg) -> Option<CompatMode> {
    match c {
        CompatArg::Strict => Some(CompatMode::Strict),
        CompatArg::Exhaustive => Some(CompatMode::Exhaustive),
        CompatArg::Skip => None,
    }
}

fn run_check(args: &CheckArgs, explain: bool) -> Result<u8, Failure> {
    let mut sc = load(&args.file)?;
    if let Some(q) = &args.query {
        let query = parse_query(q, &sc).map_err(|ds| {
            let lines: Vec<String> = ds.iter().map(|d| d.render("--query")).collect();
            Failure(EXIT_INPUT, lines.join("\n"))
        })?;
        sc = sc.with_query(query);
    }
    let opts = AnalysisOptions {
        budget: args.max_iters,
        early_exit: !args.no_early_exit,
    };
    let verdict = match args.mode {
        ModeArg::Interleaving => analysis::analyze_interleaving(&sc, opts)?,
        ModeArg::PartialOrder => {
            if let Some(mode) = compat_mode(args.compat) {
                let report = analysis::check_compat(&sc, mode, args.max_iters)?;
                if !report.passes() {
                    let mut msg = String::from("error: the event order is not a causality relation");
                    for line in render::compat_lines(&report) {
                        msg.push_str("\n  ");
                        msg.push_str(&line);
                    }
                    msg.push_str("\n(use --mode interleaving, or --compat skip to run anyway)");
                    return Err(Failure(EXIT_NO, msg));
                }
            }
            analysis::analyze_partial_order(&sc, opts)?
        }
    };
    let out = match (args.format, explain) {
        (Format::Json, _) => serde_json::to_string_pretty(&render::verdict_json(&sc, &verdict))
            .expect("serializable"),
        (Format::Text, false) => render::verdict_text(&sc, &verdict),
        (Format::Text, true) => render::explain_text(&sc, &verdict),
    };
    emit(&out);
    Ok(if verdict.reachable { 0 } else { EXIT_NO })
}

fn run_validate(args: &ValidateArgs) -> Result<u8, Failure> {
    let sc = load(&args.file)?;
    let mode = compat_mode(args.compat).unwrap_or(CompatMode::Strict);
    let report = analysis::check_compat(&sc, mode, args.max_iters)?;
    let out = match args.format {
        Format::Json => serde_json::to_string_pretty(&render::compat_json(&sc, &report)).expect("serializable"),
        Format::Text => render::compat_text(&sc, &report),
    };
    emit(&out);
    Ok(if report.passes() { 0 } else { EXIT_NO })
}

fn run_extensions(args: &ExtensionsArgs) -> Result<u8, Failure> {
    let sc = load(&args.file)?;
    let rel = &sc.causality;
    let count = count_linear_extensions_capped(rel, args.cap).map_err(|e| match e {
        ScenarioError::TooLarge { .. } => Failure(EXIT_LIMIT, format!("error: {e}")),
        other => Failure(EXIT_INPUT, format!("error: {other}")),
    })?;
    let seqs: Vec<Vec<String>> = if args.list {
        linear_extensions(rel).map(|s| rel.names(s)).collect()
    } else {
        Vec::new()
    };
    let out = match args.format {
        Format::Json => {
            let mut v = serde_json::json!({ "scenario": sc.name, "count": count });
            if args.list {
                v["extensions"] = serde_json::json!(seqs);
            }
            serde_json::to_string_pretty(&v).expect("serializable")
        }
        Format::Text if args.list => seqs.iter().map(|s| s.join(" ")).collect::<Vec<_>>().join("\n"),
        Format::Text => count.to_string(),
    };
    emit(&out);
    Ok(0)
}

/// Writes to stdout, tolerating a closed pipe.
fn emit(out: &str) {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{out}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(a) => run_check(a, false),
        Command::Explain(a) => run_check(a, true),
        Command::Validate(a) => run_validate(a),
        Command::Extensions(a) => run_extensions(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
