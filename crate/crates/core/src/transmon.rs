//! Per-slave transaction monitor.
//!
//! A monitor sits between the bus matrix and one slave. Every access first
//! goes through the address phase (allow-list check). Reads that pass go
//! straight to the slave. Writes that pass are registered for one cycle so
//! the data-phase check can see the write data, which is why an allowed
//! write takes one cycle longer than an allowed read. Anything denied is
//! dropped by the slave access filter and answered with an error response
//! to the initiating master only.

use thiserror::Error;

use crate::devices::SlaveDevice;
use crate::policy::{apu_check, dpu_check, AccessKind, ApuPolicy, DenyReason, DpuPolicy, MasterId, Verdict, Word};

/// Default number of entries per policy register space, for each unit.
pub const DEFAULT_PRS_CAPACITY: usize = 16;

pub type SlaveId = u32;

/// One master-initiated read or write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub mid: MasterId,
    pub kind: AccessKind,
    pub addr: Word,
    /// `Some` exactly for writes.
    pub wdata: Option<Word>,
    pub issue_cycle: u64,
    pub complete_cycle: Option<u64>,
}

impl Transaction {
    pub fn read(mid: MasterId, addr: Word, issue_cycle: u64) -> Self {
        Transaction {
            mid,
            kind: AccessKind::Read,
            addr,
            wdata: None,
            issue_cycle,
            complete_cycle: None,
        }
    }

    pub fn write(mid: MasterId, addr: Word, wdata: Word, issue_cycle: u64) -> Self {
        Transaction {
            mid,
            kind: AccessKind::Write,
            addr,
            wdata: Some(wdata),
            issue_cycle,
            complete_cycle: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PrsError {
    #[error("APU policy register space of slave {slave} is full ({capacity} entries)")]
    ApuFull { slave: SlaveId, capacity: usize },
    #[error("DPU policy register space of slave {slave} is full ({capacity} entries)")]
    DpuFull { slave: SlaveId, capacity: usize },
}

/// Fixed-capacity policy storage of one monitor.
///
/// Only the trusted configuration path in the fabric can append entries;
/// nothing reachable from a master port refers to this storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyRegisterSpace {
    slave_id: SlaveId,
    apu_capacity: usize,
    dpu_capacity: usize,
    apu: Vec<ApuPolicy>,
    dpu: Vec<DpuPolicy>,
}

impl PolicyRegisterSpace {
    pub fn new(slave_id: SlaveId, apu_capacity: usize, dpu_capacity: usize) -> Self {
        PolicyRegisterSpace {
            slave_id,
            apu_capacity,
            dpu_capacity,
            apu: Vec::with_capacity(apu_capacity),
            dpu: Vec::with_capacity(dpu_capacity),
        }
    }

    pub fn slave_id(&self) -> SlaveId {
        self.slave_id
    }

    pub fn apu_entries(&self) -> &[ApuPolicy] {
        &self.apu
    }

    pub fn dpu_entries(&self) -> &[DpuPolicy] {
        &self.dpu
    }

    pub fn apu_capacity(&self) -> usize {
        self.apu_capacity
    }

    pub fn dpu_capacity(&self) -> usize {
        self.dpu_capacity
    }

    pub(crate) fn push_apu(&mut self, p: ApuPolicy) -> Result<(), PrsError> {
        if self.apu.len() >= self.apu_capacity {
            return Err(PrsError::ApuFull {
                slave: self.slave_id,
                capacity: self.apu_capacity,
            });
        }
        self.apu.push(p);
        Ok(())
    }

    pub(crate) fn push_dpu(&mut self, p: DpuPolicy) -> Result<(), PrsError> {
        if self.dpu.len() >= self.dpu_capacity {
            return Err(PrsError::DpuFull {
                slave: self.slave_id,
                capacity: self.dpu_capacity,
            });
        }
        self.dpu.push(p);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResponseCode {
    Okay,
    Error,
}

impl ResponseCode {
    pub const fn token(self) -> &'static str {
        match self {
            ResponseCode::Okay => "OKAY",
            ResponseCode::Error => "ERR",
        }
    }
}

/// Response delivered to the initiating master.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BusResponse {
    pub code: ResponseCode,
    /// `Some` exactly when `code` is `Error`.
    pub reason: Option<DenyReason>,
    /// Read data; zero for writes and for every denied access.
    pub rdata: Word,
    /// Cycle in which the master observes the response.
    pub cycle: u64,
}

impl BusResponse {
    pub fn error(reason: DenyReason, cycle: u64) -> Self {
        BusResponse {
            code: ResponseCode::Error,
            reason: Some(reason),
            rdata: 0,
            cycle,
        }
    }

    pub fn okay(rdata: Word, cycle: u64) -> Self {
        BusResponse {
            code: ResponseCode::Okay,
            reason: None,
            rdata,
            cycle,
        }
    }

    pub fn verdict(&self) -> Verdict {
        self.reason.map_or(Verdict::Allow, Verdict::Deny)
    }
}

/// Address/control of a write held over for its data-phase check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PendingWrite {
    pub mid: MasterId,
    pub addr: Word,
    pub registered_cycle: u64,
}

pub fn check_address_phase(prs: &PolicyRegisterSpace, txn: &Transaction) -> Verdict {
    apu_check(prs.apu_entries(), txn.mid, txn.addr, txn.kind)
}

pub fn check_data_phase(prs: &PolicyRegisterSpace, pw: &PendingWrite, wdata: Word) -> Verdict {
    dpu_check(prs.dpu_entries(), pw.mid, pw.addr, wdata)
}

/// The slave access filter.
///
/// On `Allow` the access is performed on `slave` (at offset `addr - base`)
/// during `access_cycle`. On `Deny` the slave is not touched and the
/// response carries the denial reason with all-zero data.
pub fn filter_and_respond(
    verdict: Verdict,
    txn: &Transaction,
    slave: &mut SlaveDevice,
    base: Word,
    access_cycle: u64,
    respond_at: u64,
) -> BusResponse {
    match verdict {
        Verdict::Deny(reason) => BusResponse::error(reason, respond_at),
        Verdict::Allow => {
            let local = txn.addr.wrapping_sub(base);
            let data = slave.access(access_cycle, txn.kind, local, txn.wdata.unwrap_or(0));
            let rdata = match txn.kind {
                AccessKind::Read => data,
                AccessKind::Write => 0,
            };
            BusResponse::okay(rdata, respond_at)
        }
    }
}

/// A monitor instance: its policy storage plus the one-deep write register.
#[derive(Debug, Clone)]
pub struct Transmon {
    prs: PolicyRegisterSpace,
    pending: Option<PendingWrite>,
}

impl Transmon {
    pub fn new(prs: PolicyRegisterSpace) -> Self {
        Transmon { prs, pending: None }
    }

    pub fn prs(&self) -> &PolicyRegisterSpace {
        &self.prs
    }

    pub(crate) fn prs_mut(&mut self) -> &mut PolicyRegisterSpace {
        &mut self.prs
    }

    pub fn pending(&self) -> Option<&PendingWrite> {
        self.pending.as_ref()
    }

    /// Runs the address-phase check and registers allowed writes.
    pub fn address_phase(&mut self, txn: &Transaction, cycle: u64) -> Verdict {
        let v = check_address_phase(&self.prs, txn);
        if v.is_allow() && txn.kind == AccessKind::Write {
            assert!(self.pending.is_none(), "write register already occupied");
            self.pending = Some(PendingWrite {
                mid: txn.mid,
                addr: txn.addr,
                registered_cycle: cycle,
            });
        }
        v
    }

    /// Consumes the registered write and checks its data.
    pub fn data_phase(&mut self, wdata: Word, cycle: u64) -> Verdict {
        let pw = self.pending.take().expect("data phase without a registered write");
        assert_eq!(pw.registered_cycle + 1, cycle, "registered write must be checked one cycle later");
        check_data_phase(&self.prs, &pw, wdata)
    }
}
