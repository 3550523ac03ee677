//! `pyxflow` command-line driver.
//!
//! Exit codes: 0 secure (or no counterexample, or normal termination),
//! 1 misuse (or counterexample, or abnormal run), 2 bad input or usage,
//! 3 analyzer failure.

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pyxflow::interp::{run_with, Outcome, RunOptions, Store, Value, DEFAULT_BUDGET};
use pyxflow::oracle::{check_ni, NiOptions, NiVerdict, Observation, Observed, OracleError};
use pyxflow::{analyze_with, parse, AnalysisOptions, AnalysisReport, AnalyzeError, Label, Program, ProgramSpec};

#[derive(Parser)]
#[command(name = "pyxflow", version, about = "Information-flow analysis for PyX programs")]
struct Cli {
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
    /// Label a program and report SECURE or MISUSE.
    Analyze {
        #[arg(required = true)]
        programs: Vec<PathBuf>,
        /// Policy file; defaults to the program path with a `.json` extension.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Also print the labels after every statement.
        #[arg(long)]
        trace: bool,
    },
    /// Same as `analyze --trace`.
    Trace {
        #[arg(required = true)]
        programs: Vec<PathBuf>,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Look for a non-interference counterexample by running the program.
    Verify {
        program: PathBuf,
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Observer label: `(o,{r},{w})`, a JSON label, a file holding
        /// either, or the name of a global.
        #[arg(long)]
        observer: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 256)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Check even if the analyzer rejects the program.
        #[arg(long)]
        force: bool,
        /// Let every observer see whether a run terminates.
        #[arg(long)]
        strict_termination: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Execute a program on concrete inputs.
    Run {
        program: PathBuf,
        /// Initial binding, e.g. `x=1`, `b=True` or `s='text'`.
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Print every step.
        #[arg(long)]
        trace: bool,
    },
}

const SECURE: u8 = 0;
const MISUSE: u8 = 1;
const INPUT: u8 = 2;
const INTERNAL: u8 = 3;

struct Style {
    color: bool,
}

impl Style {
    fn detect() -> Self {
        let color = match std::env::var("PIFTHON_COLOR").as_deref() {
            Ok("0") => false,
            Ok("1") => true,
            _ => std::io::stdout().is_terminal(),
        };
        Style { color }
    }

    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let style = Style::detect();
    let code = match cli.command {
        Command::Analyze {
            programs,
            policy,
            format,
            trace,
        } => analyze_files(&programs, policy.as_deref(), format, trace, &style),
        Command::Trace {
            programs,
            policy,
            format,
        } => analyze_files(&programs, policy.as_deref(), format, true, &style),
        Command::Verify {
            program,
            policy,
            observer,
            budget,
            pairs,
            seed,
            force,
            strict_termination,
            format,
        } => {
            let options = NiOptions {
                budget,
                pairs,
                seed,
                strict_termination,
                force,
                ..NiOptions::default()
            };
            verify(&program, policy.as_deref(), &observer, &options, format, &style)
        }
        Command::Run {
            program,
            set,
            budget,
            trace,
        } => execute(&program, &set, budget, trace),
    };
    ExitCode::from(code)
}

fn fail(message: impl std::fmt::Display) -> u8 {
    eprintln!("error: {message}");
    INPUT
}

fn policy_path(program: &Path, policy: Option<&Path>) -> PathBuf {
    policy.map_or_else(|| program.with_extension("json"), Path::to_path_buf)
}

fn load(program: &Path, policy: Option<&Path>) -> Result<(Program, ProgramSpec), String> {
    let source = std::fs::read_to_string(program).map_err(|e| format!("cannot read {}: {e}", program.display()))?;
    let prog = parse(&source).map_err(|e| format!("{}:{e}", program.display()))?;
    let spec = ProgramSpec::load(&policy_path(program, policy)).map_err(|e| e.to_string())?;
    Ok((prog, spec))
}

enum FileResult {
    Report(Box<AnalysisReport>),
    Failed(String, u8),
}

fn analyze_one(program: &Path, policy: Option<&Path>, trace: bool) -> FileResult {
    let (prog, spec) = match load(program, policy) {
        Ok(loaded) => loaded,
        Err(e) => return FileResult::Failed(e, INPUT),
    };
    match analyze_with(&spec, &prog, &AnalysisOptions { trace }) {
        Ok(report) => FileResult::Report(Box::new(report)),
        Err(e) => {
            let code = if e.is_internal() { INTERNAL } else { INPUT };
            FileResult::Failed(format!("{}: {e}", program.display()), code)
        }
    }
}

fn analyze_files(programs: &[PathBuf], policy: Option<&Path>, format: Format, trace: bool, style: &Style) -> u8 {
    for path in programs.iter().map(PathBuf::as_path).chain(policy) {
        if !path.is_file() {
            return fail(format!("{} does not exist or is not a file", path.display()));
        }
    }
    let results: Vec<FileResult> = std::thread::scope(|s| {
        let handles: Vec<_> = programs
            .iter()
            .map(|p| s.spawn(move || analyze_one(p, policy, trace)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("analysis thread")).collect()
    });

    let mut code = SECURE;
    let mut json = Vec::new();
    for (path, result) in programs.iter().zip(&results) {
        match result {
            FileResult::Failed(message, c) => {
                eprintln!("error: {message}");
                code = code.max(*c);
            }
            FileResult::Report(report) => {
                if !report.is_secure() {
                    code = code.max(MISUSE);
                }
                match format {
                    Format::Json => json.push((path, report)),
                    Format::Text => print_report(path, report, trace, style),
                }
            }
        }
    }
    if format == Format::Json {
        let text = if programs.len() == 1 {
            json.first().map(|(_, r)| r.to_json())
        } else {
            let items: Vec<serde_json::Value> = json
                .iter()
                .map(|(p, r)| serde_json::json!({ "file": p.display().to_string(), "report": r }))
                .collect();
            Some(serde_json::to_string_pretty(&items).expect("reports serialize"))
        };
        if let Some(text) = text {
            println!("{text}");
        }
    }
    code
}

fn print_report(path: &Path, report: &AnalysisReport, trace: bool, style: &Style) {
    let verdict = if report.is_secure() {
        style.paint("32", "SECURE")
    } else {
        style.paint("31;1", "MISUSE")
    };
    println!("{}: {verdict}", path.display());
    if trace {
        for t in &report.trace {
            let scope = t.function.as_deref().map(|f| format!(" [{f}]")).unwrap_or_default();
            let mut line = format!("  {}{scope} {}: pc = {}", t.loc, t.construct, t.pc);
            for (n, l) in &t.changed {
                line.push_str(&format!("; {n} = {l}"));
            }
            println!("{line}");
        }
    }
    for d in &report.diagnostics {
        println!("  {}", style.paint("31", &d.to_string()));
        if let Some(cl) = &d.clearance {
            println!("    clearance = {cl}");
        }
    }
    if let Some(scope) = &report.scope {
        println!("  labels in `{scope}`:");
    }
    for (name, label) in report.locals() {
        println!("  λ({name}) = {label}");
    }
    println!("  λ(pc) = {}", report.pc);
    for call in &report.calls {
        if let Some(returned) = &call.returned {
            println!("  {} at {} returned {returned}", call.function, call.loc);
        }
    }
}

fn observer_label(spec: &ProgramSpec, text: &str) -> Result<Label, String> {
    if let Some(label) = spec.global(text) {
        return Ok(label.clone());
    }
    let path = Path::new(text);
    let text = if path.is_file() {
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?
    } else {
        text.to_string()
    };
    spec.parse_label(text.trim()).map_err(|e| format!("bad observer label: {e}"))
}

fn verify(program: &Path, policy: Option<&Path>, observer: &str, options: &NiOptions, format: Format, style: &Style) -> u8 {
    let (prog, spec) = match load(program, policy) {
        Ok(loaded) => loaded,
        Err(e) => return fail(e),
    };
    let delta = match observer_label(&spec, observer) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let verdict = match check_ni(&prog, &spec, &delta, options) {
        Ok(v) => v,
        Err(OracleError::NotAccepted(why)) => {
            eprintln!("{}: MISUSE, not checked (use --force): {why}", program.display());
            return MISUSE;
        }
        Err(OracleError::Analysis(e @ AnalyzeError::FixpointNotReached { .. })) => {
            eprintln!("error: {e}");
            return INTERNAL;
        }
        Err(e) => return fail(e),
    };
    if format == Format::Json {
        println!("{}", serde_json::to_string_pretty(&verdict).expect("verdicts serialize"));
    } else {
        match &verdict {
            NiVerdict::NoCounterexample {
                trials,
                pairs_checked,
                exhaustive,
            } => {
                let how = if *exhaustive { "exhaustive" } else { "sampled" };
                println!(
                    "{}: {} at {delta} ({pairs_checked} pairs, {trials} runs, {how})",
                    program.display(),
                    style.paint("32", "NO COUNTEREXAMPLE")
                );
            }
            NiVerdict::Counterexample(cx) => {
                println!(
                    "{}: {} at {delta} on `{}`",
                    program.display(),
                    style.paint("31;1", "COUNTEREXAMPLE"),
                    cx.variable
                );
                println!("  inputs 1: {}", show_inputs(&cx.store1));
                println!("  inputs 2: {}", show_inputs(&cx.store2));
                println!("  observed 1: {}", show_observation(&cx.first));
                println!("  observed 2: {}", show_observation(&cx.second));
            }
        }
    }
    if verdict.is_counterexample() {
        MISUSE
    } else {
        SECURE
    }
}

fn show_inputs(store: &std::collections::BTreeMap<String, Value>) -> String {
    store.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(", ")
}

fn show_observation(o: &Observation) -> String {
    let mut parts: Vec<String> = o
        .values
        .iter()
        .map(|(n, v)| match v {
            Observed::Value(v) => format!("{n}={v}"),
            Observed::Unbound => format!("{n} unbound"),
        })
        .collect();
    if let Some(t) = &o.termination {
        parts.insert(0, format!("{t:?}").to_lowercase());
    }
    if parts.is_empty() {
        "nothing".to_string()
    } else {
        parts.join(", ")
    }
}

fn parse_value(text: &str) -> Value {
    let t = text.trim();
    if let Ok(n) = t.parse::<i64>() {
        return Value::Int(n);
    }
    match t {
        "True" => return Value::Bool(true),
        "False" => return Value::Bool(false),
        _ => {}
    }
    let quoted = t.len() >= 2 && (t.starts_with('\'') && t.ends_with('\'') || t.starts_with('"') && t.ends_with('"'));
    if quoted {
        Value::Str(t[1..t.len() - 1].to_string())
    } else {
        Value::Str(t.to_string())
    }
}

fn execute(program: &Path, set: &[String], budget: u64, trace: bool) -> u8 {
    let source = match std::fs::read_to_string(program) {
        Ok(s) => s,
        Err(e) => return fail(format!("cannot read {}: {e}", program.display())),
    };
    let prog = match parse(&source) {
        Ok(p) => p,
        Err(e) => return fail(format!("{}:{e}", program.display())),
    };
    let mut store = Store::new();
    for binding in set {
        let Some((name, value)) = binding.split_once('=') else {
            return fail(format!("expected NAME=VALUE, got `{binding}`"));
        };
        store.set(name.trim(), parse_value(value));
    }
    let run = run_with(&prog, store, &RunOptions { budget, trace });
    for step in &run.trace {
        let scope = step.function.as_deref().map(|f| format!(" [{f}]")).unwrap_or_default();
        println!("{:>5} {}{scope} {}", step.step, step.loc, step.action);
    }
    let code = match &run.outcome {
        Outcome::Terminated(_) => {
            println!("terminated after {} steps", run.steps);
            SECURE
        }
        Outcome::StepBudgetExhausted(_) => {
            println!("step budget of {budget} exhausted");
            MISUSE
        }
        Outcome::RuntimeError { error, loc, .. } => {
            println!("runtime error at {loc}: {error}");
            MISUSE
        }
    };
    for (name, value) in run.outcome.store().bindings() {
        println!("  {name} = {value}");
    }
    code
}
