#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;
use std::path::PathBuf;

use interposer_rot::policy::{AccessKind, Word};
use interposer_rot::transmon::{ResponseCode, SlaveId};
use interposer_rot::{parse, Scenario, System, TraceEvent};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn load(name: &str) -> Scenario {
    let text = std::fs::read_to_string(scenario_path(name)).expect("scenario file");
    parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn golden(name: &str) -> String {
    std::fs::read_to_string(golden_path(name)).expect("golden trace")
}

/// A denied write whose target slave changed while it was being served.
#[derive(Debug)]
pub struct OpacityViolation {
    pub event: TraceEvent,
    pub before: BTreeMap<Word, Word>,
    pub after: BTreeMap<Word, Word>,
}

/// Steps a started system to completion, snapshotting every slave before each
/// cycle, and checks that each denied write left its slave bit-identical
/// between its grant and its response.
///
/// A slave serves one transaction at a time, so between the grant of a denied
/// write (two cycles before an address-phase denial, three before a
/// data-phase one) and the end of its response cycle nothing else can have
/// modified that slave.
pub fn run_checking_opacity(sys: &mut System, limit: u64) -> (Vec<TraceEvent>, Vec<OpacityViolation>, usize) {
    let nslaves = sys.map().slave_count();
    let snap = |sys: &System| -> Vec<BTreeMap<Word, Word>> {
        (0..nslaves as SlaveId).map(|s| sys.slave(s).snapshot()).collect()
    };
    let mut history = vec![snap(sys)];
    let mut events = Vec::new();
    while sys.cycle() < limit && !sys.is_quiescent() {
        events.extend(sys.step());
        history.push(snap(sys));
    }
    let mut violations = Vec::new();
    let mut checked = 0;
    for e in &events {
        let (Some(slave), AccessKind::Write, ResponseCode::Error) = (e.slave, e.kind, e.resp) else {
            continue;
        };
        let latency = match e.reason {
            Some(interposer_rot::DenyReason::DpuDataBlocked) => 3,
            _ => 2,
        };
        let granted = (e.cycle - latency) as usize;
        let before = &history[granted][slave as usize];
        let after = &history[e.cycle as usize + 1][slave as usize];
        checked += 1;
        if before != after {
            violations.push(OpacityViolation {
                event: *e,
                before: before.clone(),
                after: after.clone(),
            });
        }
    }
    (events, violations, checked)
}

/// Checks that every event is attributed to the port whose program issued it:
/// per master, the events carrying its id are exactly its program's steps,
/// in order.
pub fn assert_port_attribution(sys: &System, events: &[TraceEvent]) {
    for port in sys.masters() {
        let mine: Vec<(AccessKind, Word)> = events
            .iter()
            .filter(|e| e.mid == port.id())
            .map(|e| (e.kind, e.addr))
            .collect();
        let issued: Vec<(AccessKind, Word)> = port
            .program()
            .steps
            .iter()
            .take(mine.len())
            .map(|s| (s.op, s.addr))
            .collect();
        assert_eq!(mine, issued, "events for port {} do not follow its program", port.id());
        assert_eq!(mine.len(), port.responses().len());
    }
}
