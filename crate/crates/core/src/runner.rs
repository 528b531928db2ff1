//! One-call simulation of a parsed scenario.

use crate::devices::Expect;
use crate::fabric::{System, TcuError};
use crate::scenario::Scenario;
use crate::trace::{RunReport, TraceEvent};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub events: Vec<TraceEvent>,
    pub report: RunReport,
    /// Final system state, for inspecting memories and logs.
    pub system: System,
}

/// Configures, starts and runs `sc` until its programs finish or the cycle
/// limit (`limit` if given, else the scenario's own) is reached.
pub fn simulate(sc: &Scenario, limit: Option<u64>) -> Result<RunOutcome, TcuError> {
    let mut system = sc.build()?;
    system.start()?;
    let events = system.run(limit.unwrap_or(sc.limit));
    let mismatches = system.masters().iter().flat_map(|m| m.mismatches().iter().copied()).collect();
    let unfinished = system
        .masters()
        .iter()
        .flat_map(|m| m.remaining_steps())
        .filter(|s| s.expect != Expect::Any)
        .count() as u64;
    let report = RunReport::new(&events, mismatches, unfinished, system.cycle().saturating_sub(1));
    Ok(RunOutcome {
        events,
        report,
        system,
    })
}
