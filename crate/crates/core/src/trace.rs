//! Trace events and run summaries.
//!
//! Trace lines are fixed-format so golden files can be diffed directly:
//!
//! ```text
//! cycle=2 slave=0 mid=0x1 op=R addr=0x2000f800 data=0x00000000 resp=ERR reason=ApuNoMatch
//! ```
//!
//! Accesses to unmapped addresses have no slave and print `slave=-`.

use std::fmt::{self, Write as _};

use crate::devices::Mismatch;
use crate::policy::{AccessKind, DenyReason, MasterId, Word};
use crate::transmon::{BusResponse, ResponseCode, SlaveId, Transaction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    /// Cycle the response reached the master.
    pub cycle: u64,
    pub slave: Option<SlaveId>,
    pub mid: MasterId,
    pub kind: AccessKind,
    pub addr: Word,
    /// Write data for writes, read data for allowed reads, zero for denied reads.
    pub data: Word,
    pub resp: ResponseCode,
    pub reason: Option<DenyReason>,
}

impl TraceEvent {
    pub fn from_response(txn: &Transaction, slave: Option<SlaveId>, resp: &BusResponse) -> Self {
        TraceEvent {
            cycle: resp.cycle,
            slave,
            mid: txn.mid,
            kind: txn.kind,
            addr: txn.addr,
            data: match txn.kind {
                AccessKind::Write => txn.wdata.unwrap_or(0),
                AccessKind::Read => resp.rdata,
            },
            resp: resp.code,
            reason: resp.reason,
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cycle={} slave=", self.cycle)?;
        match self.slave {
            Some(s) => write!(f, "{s}")?,
            None => f.write_str("-")?,
        }
        write!(
            f,
            " mid={} op={} addr=0x{:08x} data=0x{:08x} resp={} reason={}",
            self.mid,
            self.kind,
            self.addr,
            self.data,
            self.resp.token(),
            self.reason.map_or("None", DenyReason::token)
        )
    }
}

/// Renders a trace, one event per line, each line newline-terminated.
pub fn render_trace(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        writeln!(out, "{e}").expect("write to string");
    }
    out
}

/// Totals for one simulation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub total: u64,
    pub allowed: u64,
    /// Indexed like [`DenyReason::ALL`].
    pub denied: [u64; 4],
    pub mismatches: Vec<Mismatch>,
    /// Checked steps (expectation other than `ANY`) that never completed.
    pub unfinished: u64,
    pub final_cycle: u64,
}

impl RunReport {
    pub fn new(events: &[TraceEvent], mismatches: Vec<Mismatch>, unfinished: u64, final_cycle: u64) -> Self {
        let mut denied = [0; 4];
        let mut allowed = 0;
        for e in events {
            match e.reason {
                None => allowed += 1,
                Some(r) => {
                    let i = DenyReason::ALL.iter().position(|x| *x == r).expect("known reason");
                    denied[i] += 1;
                }
            }
        }
        RunReport {
            total: events.len() as u64,
            allowed,
            denied,
            mismatches,
            unfinished,
            final_cycle,
        }
    }

    pub fn denied_total(&self) -> u64 {
        self.denied.iter().sum()
    }

    pub fn denied_by(&self, reason: DenyReason) -> u64 {
        self.denied[DenyReason::ALL.iter().position(|x| *x == reason).expect("known reason")]
    }

    /// Mismatches plus unfinished checked steps.
    pub fn failures(&self) -> u64 {
        self.mismatches.len() as u64 + self.unfinished
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total={}", self.total)?;
        writeln!(f, "allowed={}", self.allowed)?;
        writeln!(f, "denied={}", self.denied_total())?;
        for (r, n) in DenyReason::ALL.iter().zip(self.denied) {
            writeln!(f, "denied.{}={n}", r.token())?;
        }
        writeln!(f, "mismatches={}", self.mismatches.len())?;
        writeln!(f, "unfinished={}", self.unfinished)?;
        writeln!(f, "final_cycle={}", self.final_cycle)?;
        for m in &self.mismatches {
            write!(
                f,
                "mismatch mid={} step={} cycle={} expected={}",
                m.mid,
                m.step,
                m.cycle,
                m.expected.token()
            )?;
            if let Some(d) = m.expected_rdata {
                write!(f, " rdata=0x{d:08x}")?;
            }
            writeln!(f, " got={} data=0x{:08x}", m.got.token(), m.rdata)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format() {
        let e = TraceEvent {
            cycle: 2,
            slave: Some(0),
            mid: MasterId(1),
            kind: AccessKind::Read,
            addr: 0x2000_F800,
            data: 0,
            resp: ResponseCode::Error,
            reason: Some(DenyReason::ApuNoMatch),
        };
        assert_eq!(
            e.to_string(),
            "cycle=2 slave=0 mid=0x1 op=R addr=0x2000f800 data=0x00000000 resp=ERR reason=ApuNoMatch"
        );
        let ok = TraceEvent {
            slave: None,
            kind: AccessKind::Write,
            data: 0x0BAD_BEEF,
            resp: ResponseCode::Okay,
            reason: None,
            mid: MasterId(0x2a),
            ..e
        };
        assert_eq!(
            ok.to_string(),
            "cycle=2 slave=- mid=0x2a op=W addr=0x2000f800 data=0x0badbeef resp=OKAY reason=None"
        );
    }

    #[test]
    fn report_totals() {
        let base = TraceEvent {
            cycle: 2,
            slave: Some(0),
            mid: MasterId(1),
            kind: AccessKind::Read,
            addr: 0,
            data: 0,
            resp: ResponseCode::Okay,
            reason: None,
        };
        let denied = TraceEvent {
            resp: ResponseCode::Error,
            reason: Some(DenyReason::DpuDataBlocked),
            ..base
        };
        let r = RunReport::new(&[base, denied, denied], vec![], 0, 9);
        assert_eq!(r.allowed + r.denied_total(), r.total);
        assert_eq!(r.denied_by(DenyReason::DpuDataBlocked), 2);
        assert!(r.passed());
        assert!(r.to_string().contains("denied.DpuDataBlocked=2\n"));
    }
}
