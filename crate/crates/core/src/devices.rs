//! Trace-driven masters and word-addressed slave models.

use std::collections::BTreeMap;

use crate::policy::{AccessKind, MasterId, Word};
use crate::transmon::{BusResponse, ResponseCode, Transaction};

/// What a program step expects back from the fabric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Expect {
    Okay,
    Error,
    Any,
}

impl Expect {
    pub fn accepts(self, code: ResponseCode) -> bool {
        match self {
            Expect::Any => true,
            Expect::Okay => code == ResponseCode::Okay,
            Expect::Error => code == ResponseCode::Error,
        }
    }

    pub const fn token(self) -> &'static str {
        match self {
            Expect::Okay => "OKAY",
            Expect::Error => "ERROR",
            Expect::Any => "ANY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProgramStep {
    pub op: AccessKind,
    pub addr: Word,
    /// Ignored for reads.
    pub wdata: Word,
    pub expect: Expect,
    /// Checked against the returned data of reads.
    pub expect_rdata: Option<Word>,
}

impl ProgramStep {
    pub fn read(addr: Word, expect: Expect) -> Self {
        ProgramStep {
            op: AccessKind::Read,
            addr,
            wdata: 0,
            expect,
            expect_rdata: None,
        }
    }

    pub fn read_data(addr: Word, rdata: Word) -> Self {
        ProgramStep {
            expect_rdata: Some(rdata),
            ..ProgramStep::read(addr, Expect::Okay)
        }
    }

    pub fn write(addr: Word, wdata: Word, expect: Expect) -> Self {
        ProgramStep {
            op: AccessKind::Write,
            addr,
            wdata,
            expect,
            expect_rdata: None,
        }
    }
}

/// Ordered list of bus accesses replayed by one master port.
///
/// Note there is no master-id field anywhere in a program: the id a step is
/// issued under is the index of the port the program is loaded on.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MasterProgram {
    pub steps: Vec<ProgramStep>,
}

impl MasterProgram {
    pub fn new(steps: Vec<ProgramStep>) -> Self {
        MasterProgram { steps }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl FromIterator<ProgramStep> for MasterProgram {
    fn from_iter<I: IntoIterator<Item = ProgramStep>>(iter: I) -> Self {
        MasterProgram {
            steps: iter.into_iter().collect(),
        }
    }
}

/// A response that did not meet its step's expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mismatch {
    pub mid: MasterId,
    pub step: usize,
    pub expected: Expect,
    pub expected_rdata: Option<Word>,
    pub got: ResponseCode,
    pub rdata: Word,
    pub cycle: u64,
}

/// Run-time state of one master port.
#[derive(Debug, Clone)]
pub struct MasterPort {
    id: MasterId,
    program: MasterProgram,
    next: usize,
    outstanding: bool,
    mismatches: Vec<Mismatch>,
    responses: Vec<BusResponse>,
}

impl MasterPort {
    pub fn new(id: MasterId) -> Self {
        MasterPort {
            id,
            program: MasterProgram::default(),
            next: 0,
            outstanding: false,
            mismatches: Vec::new(),
            responses: Vec::new(),
        }
    }

    pub fn id(&self) -> MasterId {
        self.id
    }

    pub fn load(&mut self, program: MasterProgram) {
        self.program = program;
        self.next = 0;
        self.outstanding = false;
    }

    pub fn program(&self) -> &MasterProgram {
        &self.program
    }

    /// Issues the next program step, stamped with this port's id, unless a
    /// transaction is still outstanding or the program is exhausted.
    pub fn master_next(&mut self, cycle: u64) -> Option<Transaction> {
        if self.outstanding {
            return None;
        }
        let step = self.program.steps.get(self.next)?;
        self.outstanding = true;
        Some(Transaction {
            mid: self.id,
            kind: step.op,
            addr: step.addr,
            wdata: match step.op {
                AccessKind::Write => Some(step.wdata),
                AccessKind::Read => None,
            },
            issue_cycle: cycle,
            complete_cycle: None,
        })
    }

    /// Accepts the response to the outstanding step and checks its expectation.
    pub fn deliver(&mut self, resp: BusResponse) {
        assert!(self.outstanding, "response delivered to idle master {}", self.id);
        let step = self.program.steps[self.next];
        let code_ok = step.expect.accepts(resp.code);
        let data_ok = match (step.op, step.expect_rdata) {
            (AccessKind::Read, Some(want)) => resp.rdata == want,
            _ => true,
        };
        if !(code_ok && data_ok) {
            self.mismatches.push(Mismatch {
                mid: self.id,
                step: self.next,
                expected: step.expect,
                expected_rdata: step.expect_rdata,
                got: resp.code,
                rdata: resp.rdata,
                cycle: resp.cycle,
            });
        }
        self.responses.push(resp);
        self.outstanding = false;
        self.next += 1;
    }

    pub fn is_done(&self) -> bool {
        !self.outstanding && self.next >= self.program.steps.len()
    }

    pub fn mismatches(&self) -> &[Mismatch] {
        &self.mismatches
    }

    /// Every response this port has observed, in arrival order.
    pub fn responses(&self) -> &[BusResponse] {
        &self.responses
    }

    /// Steps never issued or never answered.
    pub fn remaining_steps(&self) -> &[ProgramStep] {
        &self.program.steps[self.next.min(self.program.steps.len())..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessRecord {
    pub cycle: u64,
    pub kind: AccessKind,
    /// Offset from the slave's base address.
    pub local_addr: Word,
    pub data: Word,
}

/// Word-addressed memory with a zero background and an append-only access log.
///
/// Storage is sparse; zero words are never stored, so two models hold equal
/// contents iff their [`SramModel::snapshot`]s compare equal.
#[derive(Debug, Clone, Default)]
pub struct SramModel {
    size: u32,
    words: BTreeMap<Word, Word>,
    log: Vec<AccessRecord>,
}

impl SramModel {
    pub fn new(size: u32) -> Self {
        assert!(size > 0 && size % 4 == 0, "SRAM size must be a positive multiple of 4");
        SramModel {
            size,
            words: BTreeMap::new(),
            log: Vec::new(),
        }
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    fn check(&self, local_addr: Word) {
        assert!(local_addr % 4 == 0, "misaligned access at offset {local_addr:#x}");
        assert!(local_addr < self.size, "offset {local_addr:#x} outside slave");
    }

    pub fn peek(&self, local_addr: Word) -> Word {
        self.words.get(&local_addr).copied().unwrap_or(0)
    }

    /// Stores without logging; used by the configuration path.
    pub fn poke(&mut self, local_addr: Word, value: Word) {
        self.check(local_addr);
        if value == 0 {
            self.words.remove(&local_addr);
        } else {
            self.words.insert(local_addr, value);
        }
    }

    /// A bus access. Returns the read data, or the written word for writes.
    pub fn sram_access(&mut self, cycle: u64, kind: AccessKind, local_addr: Word, wdata: Word) -> Word {
        self.check(local_addr);
        let data = match kind {
            AccessKind::Read => self.peek(local_addr),
            AccessKind::Write => {
                self.poke(local_addr, wdata);
                wdata
            }
        };
        self.log.push(AccessRecord {
            cycle,
            kind,
            local_addr,
            data,
        });
        data
    }

    pub fn log(&self) -> &[AccessRecord] {
        &self.log
    }

    pub fn snapshot(&self) -> BTreeMap<Word, Word> {
        self.words.clone()
    }
}

/// The trusted general-purpose register block (`gpcfg0..gpcfgN`).
///
/// Registers are word-addressed at `base + 4 * n` and are reached through
/// their own transaction monitor like any SRAM slave.
#[derive(Debug, Clone)]
pub struct SharedRegisterSpace {
    regs: Vec<Word>,
    log: Vec<AccessRecord>,
}

impl SharedRegisterSpace {
    pub const DEFAULT_REGS: u32 = 64;

    pub fn new(regs: u32) -> Self {
        assert!(regs > 0, "register block needs at least one register");
        SharedRegisterSpace {
            regs: vec![0; regs as usize],
            log: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.regs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regs.is_empty()
    }

    pub fn gpcfg(&self, n: usize) -> Word {
        self.regs[n]
    }

    pub fn set_gpcfg(&mut self, n: usize, value: Word) {
        self.regs[n] = value;
    }

    pub fn access(&mut self, cycle: u64, kind: AccessKind, local_addr: Word, wdata: Word) -> Word {
        assert!(local_addr % 4 == 0, "misaligned register access at offset {local_addr:#x}");
        let n = (local_addr / 4) as usize;
        let data = match kind {
            AccessKind::Read => self.regs[n],
            AccessKind::Write => {
                self.regs[n] = wdata;
                wdata
            }
        };
        self.log.push(AccessRecord {
            cycle,
            kind,
            local_addr,
            data,
        });
        data
    }

    pub fn log(&self) -> &[AccessRecord] {
        &self.log
    }

    pub fn snapshot(&self) -> BTreeMap<Word, Word> {
        self.regs
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(n, &v)| (n as Word * 4, v))
            .collect()
    }
}

/// Anything that can sit behind a transaction monitor.
#[derive(Debug, Clone)]
pub enum SlaveDevice {
    Sram(SramModel),
    Srs(SharedRegisterSpace),
}

impl SlaveDevice {
    pub fn access(&mut self, cycle: u64, kind: AccessKind, local_addr: Word, wdata: Word) -> Word {
        match self {
            SlaveDevice::Sram(m) => m.sram_access(cycle, kind, local_addr, wdata),
            SlaveDevice::Srs(r) => r.access(cycle, kind, local_addr, wdata),
        }
    }

    pub fn peek(&self, local_addr: Word) -> Word {
        match self {
            SlaveDevice::Sram(m) => m.peek(local_addr),
            SlaveDevice::Srs(r) => r.gpcfg((local_addr / 4) as usize),
        }
    }

    pub fn poke(&mut self, local_addr: Word, value: Word) {
        match self {
            SlaveDevice::Sram(m) => m.poke(local_addr, value),
            SlaveDevice::Srs(r) => r.set_gpcfg((local_addr / 4) as usize, value),
        }
    }

    pub fn log(&self) -> &[AccessRecord] {
        match self {
            SlaveDevice::Sram(m) => m.log(),
            SlaveDevice::Srs(r) => r.log(),
        }
    }

    /// Non-zero words keyed by local offset.
    pub fn snapshot(&self) -> BTreeMap<Word, Word> {
        match self {
            SlaveDevice::Sram(m) => m.snapshot(),
            SlaveDevice::Srs(r) => r.snapshot(),
        }
    }
}
