//! Parses a `.isea` scenario, runs it and prints the trace and report.
//!
//! ```text
//! cargo run --example run_scenario
//! cargo run --example run_scenario -- crates/core/scenarios/fig4d.isea
//! ```

use std::path::PathBuf;

use interposer_rot::scenario::validate;
use interposer_rot::{parse, render_trace, simulate};

fn main() {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/fig4b.isea"));
    let text = std::fs::read_to_string(&path).expect("read scenario");
    let sc = match parse(&text) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            std::process::exit(2);
        }
    };
    for f in validate(&sc) {
        println!("{f}");
    }
    let out = simulate(&sc, None).expect("configure");
    print!("{}", render_trace(&out.events));
    print!("{}", out.report);
}
