use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::io::{self, Write};
use std::{fs, thread};

use clap::{Parser, Subcommand};
use interposer_rot::analyze::analyze;
use interposer_rot::scenario::{parse, validate, Severity};
use interposer_rot::{render_trace, simulate};

#[derive(Parser)]
#[command(name = "interposer-rot", version, about = "Simulate and analyze monitored interposer bus scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one or more scenario files.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Trace output file; a directory when several scenarios are given.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Cycle limit, overriding the scenario's LIMIT.
        #[arg(long)]
        limit: Option<u64>,
        /// Print nothing; only the exit code reports the outcome.
        #[arg(long)]
        quiet: bool,
    },
    /// Report allowed regions, shadowed APU entries and dead DPU entries.
    Analyze { scenario: PathBuf },
}

struct FileResult {
    output: String,
    code: u8,
}

fn trace_path(trace: Option<&Path>, scenario: &Path, many: bool) -> Option<PathBuf> {
    let t = trace?;
    if !many {
        return Some(t.to_path_buf());
    }
    let stem = scenario.file_stem().unwrap_or_default();
    Some(t.join(stem).with_extension("trace"))
}

fn run_one(path: &Path, trace: Option<PathBuf>, limit: Option<u64>, quiet: bool) -> FileResult {
    let fail = |msg: String, code| FileResult {
        output: msg,
        code,
    };
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}\n", path.display()), 2),
    };
    let sc = match parse(&text) {
        Ok(sc) => sc,
        Err(e) => return fail(format!("{}: {e}\n", path.display()), 2),
    };
    let outcome = match simulate(&sc, limit) {
        Ok(o) => o,
        Err(e) => return fail(format!("{}: {e}\n", path.display()), 2),
    };
    let rendered = render_trace(&outcome.events);
    let mut output = String::new();
    if !quiet {
        output.push_str(&format!("scenario={}\n", path.display()));
        for f in validate(&sc).iter().filter(|f| f.severity == Severity::Warning) {
            output.push_str(&format!("{f}\n"));
        }
    }
    match trace {
        Some(p) => {
            if let Err(e) = fs::write(&p, &rendered) {
                return fail(format!("{}: {e}\n", p.display()), 2);
            }
        }
        None if !quiet => output.push_str(&rendered),
        None => {}
    }
    if !quiet {
        output.push_str(&outcome.report.to_string());
    }
    FileResult {
        output,
        code: if outcome.report.passed() { 0 } else { 1 },
    }
}

/// Writes to stdout; a reader that went away (`| head`) is not an error.
fn emit(text: &str) {
    let _ = io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenarios,
            trace,
            limit,
            quiet,
        } => {
            let many = scenarios.len() > 1;
            if let (true, Some(dir)) = (many, &trace) {
                if let Err(e) = fs::create_dir_all(dir) {
                    eprintln!("{}: {e}", dir.display());
                    return ExitCode::from(2);
                }
            }
            let results: Vec<FileResult> = thread::scope(|s| {
                let handles: Vec<_> = scenarios
                    .iter()
                    .map(|p| {
                        let tp = trace_path(trace.as_deref(), p, many);
                        s.spawn(move || run_one(p, tp, limit, quiet))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
            });
            let mut code = 0;
            for r in results {
                if r.code == 2 {
                    eprint!("{}", r.output);
                } else {
                    emit(&r.output);
                }
                code = code.max(r.code);
            }
            ExitCode::from(code)
        }
        Command::Analyze { scenario } => {
            let text = match fs::read_to_string(&scenario) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{}: {e}", scenario.display());
                    return ExitCode::from(2);
                }
            };
            match parse(&text) {
                Ok(sc) => {
                    emit(&analyze(&sc).to_string());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{}: {e}", scenario.display());
                    ExitCode::from(2)
                }
            }
        }
    }
}
