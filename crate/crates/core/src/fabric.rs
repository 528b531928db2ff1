//! The interposer bus matrix.
//!
//! Masters are attached to fixed ports, so the id on every transaction is the
//! port index. Each slave (SRAM window or the shared register space) has its
//! own round-robin arbiter and its own transaction monitor; a slave serves one
//! transaction at a time. Configuration only happens through [`TcuCommand`]s,
//! which never travel over a master port.
//!
//! Timing, counted from the cycle a request is granted (`g`):
//!
//! | access                  | slave touched | response |
//! |-------------------------|---------------|----------|
//! | read, allowed           | `g + 1`       | `g + 2`  |
//! | read, denied            | never         | `g + 2`  |
//! | write, allowed          | `g + 2`       | `g + 3`  |
//! | write, denied by DPU    | never         | `g + 3`  |
//! | write, denied by APU    | never         | `g + 2`  |
//! | unmapped address        | never         | issue `+ 2` |

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::devices::{MasterPort, MasterProgram, SharedRegisterSpace, SlaveDevice, SramModel};
use crate::policy::{AccessKind, AddrRange, ApuPolicy, DenyReason, DpuPolicy, MasterId, Verdict, Word};
use crate::trace::TraceEvent;
use crate::transmon::{
    filter_and_respond, BusResponse, PolicyRegisterSpace, PrsError, SlaveId, Transaction, Transmon,
    DEFAULT_PRS_CAPACITY,
};

pub const DEFAULT_MASTERS: u16 = 64;
pub const DEFAULT_SRAM_SLAVES: u32 = 4;
pub const DEFAULT_SRAM_SIZE: u32 = 0x0010_0000;
pub const DEFAULT_SRAM_BASE: Word = 0x2000_0000;
pub const DEFAULT_SRS_BASE: Word = 0x5000_0000;

/// Counts that size the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Topology {
    pub num_masters: u16,
    pub apu_capacity: usize,
    pub dpu_capacity: usize,
}

impl Default for Topology {
    fn default() -> Self {
        Topology {
            num_masters: DEFAULT_MASTERS,
            apu_capacity: DEFAULT_PRS_CAPACITY,
            dpu_capacity: DEFAULT_PRS_CAPACITY,
        }
    }
}

/// An SRAM slave's slice of the address space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub slave: SlaveId,
    pub base: Word,
    pub size: u32,
}

impl Window {
    pub fn range(&self) -> AddrRange {
        AddrRange::new(self.base, self.base + (self.size - 1))
    }
}

/// Placement of the shared register space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SrsWindow {
    pub base: Word,
    pub regs: u32,
}

impl SrsWindow {
    pub fn range(&self) -> AddrRange {
        AddrRange::new(self.base, self.base + (self.regs * 4 - 1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("slave {slave}: window size {size:#x} is not a positive multiple of 4")]
    BadSize { slave: SlaveId, size: u64 },
    #[error("slave {slave}: base {base:#010x} is not word aligned")]
    Misaligned { slave: SlaveId, base: Word },
    #[error("slave {slave}: window runs past the end of the 32-bit address space")]
    Overflow { slave: SlaveId },
    #[error("slave ids must be 0..{expected} without gaps or duplicates")]
    SlaveIds { expected: usize },
    #[error("windows of slaves {a} and {b} overlap")]
    Overlap { a: SlaveId, b: SlaveId },
}

/// SRAM windows plus the register-space window.
///
/// SRAM slaves are numbered `0..n`; the register space, when present, is
/// slave `n`. Windows never overlap.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MemoryMap {
    windows: Vec<Window>,
    srs: Option<SrsWindow>,
}

/// Result of decoding an address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decoded {
    pub slave: SlaveId,
    pub base: Word,
    /// Set when the target is the register space.
    pub srs_reg: Option<u32>,
}

impl MemoryMap {
    pub fn new(mut windows: Vec<Window>, srs: Option<SrsWindow>) -> Result<Self, MapError> {
        windows.sort_by_key(|w| w.slave);
        if windows.iter().enumerate().any(|(i, w)| w.slave as usize != i) {
            return Err(MapError::SlaveIds { expected: windows.len() });
        }
        let srs_id = windows.len() as SlaveId;
        let mut spans: Vec<(SlaveId, AddrRange)> = Vec::new();
        for w in &windows {
            check_window(w.slave, w.base, w.size as u64)?;
            spans.push((w.slave, w.range()));
        }
        if let Some(s) = srs {
            check_window(srs_id, s.base, s.regs as u64 * 4)?;
            spans.push((srs_id, s.range()));
        }
        spans.sort_by_key(|(_, r)| r.lo);
        for pair in spans.windows(2) {
            if pair[0].1.hi >= pair[1].1.lo {
                let (a, b) = (pair[0].0.min(pair[1].0), pair[0].0.max(pair[1].0));
                return Err(MapError::Overlap { a, b });
            }
        }
        Ok(MemoryMap { windows, srs })
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn srs(&self) -> Option<SrsWindow> {
        self.srs
    }

    pub fn srs_slave_id(&self) -> Option<SlaveId> {
        self.srs.map(|_| self.windows.len() as SlaveId)
    }

    /// Total number of monitored slaves, register space included.
    pub fn slave_count(&self) -> usize {
        self.windows.len() + usize::from(self.srs.is_some())
    }

    /// Address range served by `slave`.
    pub fn slave_range(&self, slave: SlaveId) -> Option<AddrRange> {
        match self.windows.get(slave as usize) {
            Some(w) => Some(w.range()),
            None if Some(slave) == self.srs_slave_id() => self.srs.map(|s| s.range()),
            None => None,
        }
    }

    /// Every slave's range in slave-id order.
    pub fn slave_ranges(&self) -> Vec<(SlaveId, AddrRange)> {
        (0..self.slave_count() as SlaveId)
            .map(|s| (s, self.slave_range(s).expect("slave in range")))
            .collect()
    }

    pub fn decode(&self, addr: Word) -> Result<Decoded, DecodeError> {
        decode(self, addr)
    }

    /// The default four-slave layout with the register space above it.
    pub fn default_layout() -> Self {
        let windows = (0..DEFAULT_SRAM_SLAVES)
            .map(|i| Window {
                slave: i,
                base: DEFAULT_SRAM_BASE + i * DEFAULT_SRAM_SIZE,
                size: DEFAULT_SRAM_SIZE,
            })
            .collect();
        MemoryMap::new(
            windows,
            Some(SrsWindow {
                base: DEFAULT_SRS_BASE,
                regs: SharedRegisterSpace::DEFAULT_REGS,
            }),
        )
        .expect("default layout is valid")
    }
}

fn check_window(slave: SlaveId, base: Word, size: u64) -> Result<(), MapError> {
    if size == 0 || size % 4 != 0 {
        return Err(MapError::BadSize { slave, size });
    }
    if base % 4 != 0 {
        return Err(MapError::Misaligned { slave, base });
    }
    if base as u64 + size - 1 > u32::MAX as u64 {
        return Err(MapError::Overflow { slave });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("address {0:#010x} is not mapped to any slave")]
pub struct DecodeError(pub Word);

pub fn decode(map: &MemoryMap, addr: Word) -> Result<Decoded, DecodeError> {
    if let Some(w) = map.windows.iter().find(|w| w.range().contains(addr)) {
        return Ok(Decoded {
            slave: w.slave,
            base: w.base,
            srs_reg: None,
        });
    }
    match map.srs {
        Some(s) if s.range().contains(addr) => Ok(Decoded {
            slave: map.windows.len() as SlaveId,
            base: s.base,
            srs_reg: Some((addr - s.base) / 4),
        }),
        _ => Err(DecodeError(addr)),
    }
}

/// Round-robin pointer of one slave's arbiter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArbiterState {
    pointer: MasterId,
    num_masters: u16,
}

impl ArbiterState {
    pub fn new(num_masters: u16) -> Self {
        assert!(num_masters > 0);
        ArbiterState {
            pointer: MasterId(0),
            num_masters,
        }
    }

    pub fn with_pointer(num_masters: u16, pointer: MasterId) -> Self {
        assert!(pointer.0 < num_masters);
        ArbiterState { pointer, num_masters }
    }

    pub fn pointer(&self) -> MasterId {
        self.pointer
    }
}

/// Grants the first requester at or after the pointer in cyclic order, then
/// moves the pointer just past the winner.
pub fn arbitrate(requests: &[MasterId], st: &mut ArbiterState) -> MasterId {
    assert!(!requests.is_empty(), "arbitrate needs at least one requester");
    let n = st.num_masters as u32;
    let p = st.pointer.0 as u32;
    let granted = *requests
        .iter()
        .min_by_key(|m| (m.0 as u32 + n - p) % n)
        .expect("non-empty");
    st.pointer = MasterId(((granted.0 as u32 + 1) % n) as u16);
    granted
}

/// Privileged configuration command, issued over the secure interface.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TcuCommand {
    LoadApu { slave: SlaveId, policy: ApuPolicy },
    LoadDpu { slave: SlaveId, policy: DpuPolicy },
    LoadMem { addr: Word, words: Vec<Word> },
    SetSrs { reg: u32, value: Word },
    Start,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TcuError {
    #[error(transparent)]
    CapacityExceeded(#[from] PrsError),
    #[error("malformed policy: {0}")]
    MalformedPolicy(String),
    #[error("no slave with id {0}")]
    UnknownSlave(SlaveId),
    #[error("memory load at {0:#010x} hits unmapped space")]
    AddressUnmapped(Word),
    #[error("memory load at {0:#010x} is not word aligned")]
    Misaligned(Word),
    #[error("register gpcfg{0} does not exist")]
    NoSuchRegister(u32),
    #[error("configuration after start must be scheduled at an explicit cycle")]
    AlreadyStarted,
    #[error("master {0} has no port")]
    NoSuchMaster(MasterId),
}

#[derive(Debug, Clone, Copy)]
enum Stage {
    /// Allowed or denied read; the filter runs at `due`.
    ReadAccess(Verdict),
    /// Write registered in the address phase; data check at `due`.
    WriteData,
    /// Data-phase verdict known; the filter runs at `due`.
    WriteCommit(Verdict),
    Respond(BusResponse),
}

#[derive(Debug, Clone, Copy)]
struct InFlight {
    txn: Transaction,
    base: Word,
    stage: Stage,
    due: u64,
}

/// The whole simulated system: ports, bus matrix, monitors and slaves.
#[derive(Debug, Clone)]
pub struct System {
    topology: Topology,
    map: MemoryMap,
    monitors: Vec<Transmon>,
    slaves: Vec<SlaveDevice>,
    arbiters: Vec<ArbiterState>,
    masters: Vec<MasterPort>,
    /// Issued, decoded, waiting for a grant.
    waiting: Vec<Option<(Transaction, SlaveId)>>,
    inflight: Vec<Option<InFlight>>,
    decode_failures: Vec<(Transaction, u64)>,
    cycle: u64,
    started: bool,
    scheduled: BTreeMap<u64, Vec<TcuCommand>>,
    tcu_faults: Vec<(u64, TcuError)>,
}

impl System {
    pub fn new(topology: Topology, map: MemoryMap) -> Self {
        let mut monitors = Vec::new();
        let mut slaves = Vec::new();
        for w in map.windows() {
            monitors.push(Transmon::new(PolicyRegisterSpace::new(
                w.slave,
                topology.apu_capacity,
                topology.dpu_capacity,
            )));
            slaves.push(SlaveDevice::Sram(SramModel::new(w.size)));
        }
        if let (Some(id), Some(s)) = (map.srs_slave_id(), map.srs()) {
            monitors.push(Transmon::new(PolicyRegisterSpace::new(
                id,
                topology.apu_capacity,
                topology.dpu_capacity,
            )));
            slaves.push(SlaveDevice::Srs(SharedRegisterSpace::new(s.regs)));
        }
        let n = slaves.len();
        System {
            topology,
            masters: (0..topology.num_masters).map(|m| MasterPort::new(MasterId(m))).collect(),
            waiting: vec![None; topology.num_masters as usize],
            arbiters: vec![ArbiterState::new(topology.num_masters); n],
            inflight: vec![None; n],
            map,
            monitors,
            slaves,
            decode_failures: Vec::new(),
            cycle: 0,
            started: false,
            scheduled: BTreeMap::new(),
            tcu_faults: Vec::new(),
        }
    }

    /// Default topology: 64 masters, four 1 MB SRAMs and a 64-register SRS.
    pub fn with_defaults() -> Self {
        System::new(Topology::default(), MemoryMap::default_layout())
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn map(&self) -> &MemoryMap {
        &self.map
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn is_started(&self) -> bool {
        self.started
    }

    pub fn monitor(&self, slave: SlaveId) -> &Transmon {
        &self.monitors[slave as usize]
    }

    pub fn slave(&self, slave: SlaveId) -> &SlaveDevice {
        &self.slaves[slave as usize]
    }

    pub fn master(&self, mid: MasterId) -> &MasterPort {
        &self.masters[mid.index()]
    }

    pub fn masters(&self) -> &[MasterPort] {
        &self.masters
    }

    pub fn srs(&self) -> Option<&SharedRegisterSpace> {
        let id = self.map.srs_slave_id()?;
        match &self.slaves[id as usize] {
            SlaveDevice::Srs(r) => Some(r),
            SlaveDevice::Sram(_) => None,
        }
    }

    /// Reads a word without going through any monitor or log.
    pub fn peek(&self, addr: Word) -> Option<Word> {
        let d = decode(&self.map, addr).ok()?;
        Some(self.slaves[d.slave as usize].peek(addr - d.base))
    }

    /// Errors raised by configuration commands scheduled after start.
    pub fn tcu_faults(&self) -> &[(u64, TcuError)] {
        &self.tcu_faults
    }

    /// Places a program on a master port. Only possible before start.
    pub fn load_program(&mut self, mid: MasterId, program: MasterProgram) -> Result<(), TcuError> {
        if self.started {
            return Err(TcuError::AlreadyStarted);
        }
        let port = self.masters.get_mut(mid.index()).ok_or(TcuError::NoSuchMaster(mid))?;
        port.load(program);
        Ok(())
    }

    /// Executes a configuration command before start.
    pub fn tcu_execute(&mut self, cmd: TcuCommand) -> Result<(), TcuError> {
        if self.started {
            return Err(TcuError::AlreadyStarted);
        }
        self.apply_tcu(cmd)
    }

    /// Queues a configuration command to be applied at the start of `cycle`.
    pub fn schedule_tcu(&mut self, cycle: u64, cmd: TcuCommand) -> Result<(), TcuError> {
        if matches!(cmd, TcuCommand::Start) || cycle < self.cycle {
            return Err(TcuError::AlreadyStarted);
        }
        self.scheduled.entry(cycle).or_default().push(cmd);
        Ok(())
    }

    fn check_mid(&self, mid: MasterId) -> Result<(), TcuError> {
        if mid.0 >= self.topology.num_masters {
            return Err(TcuError::MalformedPolicy(format!(
                "master id {mid} outside 0..{}",
                self.topology.num_masters
            )));
        }
        Ok(())
    }

    fn apply_tcu(&mut self, cmd: TcuCommand) -> Result<(), TcuError> {
        match cmd {
            TcuCommand::LoadApu { slave, policy } => {
                self.check_mid(policy.mid)?;
                let tm = self.monitors.get_mut(slave as usize).ok_or(TcuError::UnknownSlave(slave))?;
                tm.prs_mut().push_apu(policy)?;
            }
            TcuCommand::LoadDpu { slave, policy } => {
                self.check_mid(policy.mid)?;
                let tm = self.monitors.get_mut(slave as usize).ok_or(TcuError::UnknownSlave(slave))?;
                tm.prs_mut().push_dpu(policy)?;
            }
            TcuCommand::LoadMem { addr, words } => {
                if addr % 4 != 0 {
                    return Err(TcuError::Misaligned(addr));
                }
                let mut targets = Vec::with_capacity(words.len());
                for (i, w) in words.iter().enumerate() {
                    let a = (i as u64 * 4 + addr as u64)
                        .try_into()
                        .map_err(|_| TcuError::AddressUnmapped(addr))?;
                    let d = decode(&self.map, a).map_err(|e| TcuError::AddressUnmapped(e.0))?;
                    targets.push((d.slave, a - d.base, *w));
                }
                for (slave, local, w) in targets {
                    self.slaves[slave as usize].poke(local, w);
                }
            }
            TcuCommand::SetSrs { reg, value } => {
                let id = self.map.srs_slave_id().ok_or(TcuError::NoSuchRegister(reg))?;
                match &mut self.slaves[id as usize] {
                    SlaveDevice::Srs(r) if (reg as usize) < r.len() => r.set_gpcfg(reg as usize, value),
                    _ => return Err(TcuError::NoSuchRegister(reg)),
                }
            }
            TcuCommand::Start => {
                if self.started {
                    return Err(TcuError::AlreadyStarted);
                }
                self.started = true;
            }
        }
        Ok(())
    }

    pub fn start(&mut self) -> Result<(), TcuError> {
        self.tcu_execute(TcuCommand::Start)
    }

    /// True once every program has finished and the bus is idle.
    pub fn is_quiescent(&self) -> bool {
        self.masters.iter().all(MasterPort::is_done)
            && self.inflight.iter().all(Option::is_none)
            && self.waiting.iter().all(Option::is_none)
            && self.decode_failures.is_empty()
    }

    /// Advances one cycle and returns the transactions completed in it,
    /// ordered by slave id then master id (unmapped accesses last).
    pub fn step(&mut self) -> Vec<TraceEvent> {
        assert!(self.started, "step before start");
        let c = self.cycle;
        let mut events = Vec::new();

        if let Some(cmds) = self.scheduled.remove(&c) {
            for cmd in cmds {
                if let Err(e) = self.apply_tcu(cmd) {
                    self.tcu_faults.push((c, e));
                }
            }
        }

        for s in 0..self.inflight.len() {
            while let Some(f) = self.inflight[s].filter(|f| f.due == c) {
                self.inflight[s] = self.advance(s, f, c);
                if let Stage::Respond(resp) = f.stage {
                    events.push(TraceEvent::from_response(&f.txn, Some(s as SlaveId), &resp));
                    self.masters[f.txn.mid.index()].deliver(resp);
                }
            }
        }

        let (due, later): (Vec<_>, Vec<_>) = self.decode_failures.drain(..).partition(|(_, at)| *at == c);
        self.decode_failures = later;
        for (txn, at) in due {
            let resp = BusResponse::error(DenyReason::DecodeError, at);
            events.push(TraceEvent::from_response(&txn, None, &resp));
            self.masters[txn.mid.index()].deliver(resp);
        }

        for m in 0..self.masters.len() {
            if self.waiting[m].is_some() {
                continue;
            }
            let Some(txn) = self.masters[m].master_next(c) else { continue };
            debug_assert_eq!(txn.mid.index(), m);
            match decode(&self.map, txn.addr) {
                Ok(d) => self.waiting[m] = Some((txn, d.slave)),
                Err(_) => self.decode_failures.push((txn, c + 2)),
            }
        }

        for s in 0..self.inflight.len() {
            if self.inflight[s].is_some() {
                continue;
            }
            let requests: Vec<MasterId> = self
                .waiting
                .iter()
                .flatten()
                .filter(|(_, slave)| *slave as usize == s)
                .map(|(t, _)| t.mid)
                .collect();
            if requests.is_empty() {
                continue;
            }
            let granted = arbitrate(&requests, &mut self.arbiters[s]);
            let (txn, _) = self.waiting[granted.index()].take().expect("granted master was waiting");
            self.inflight[s] = Some(self.address_phase(s, txn, c));
        }

        events.sort_by_key(|e| (e.slave.is_none(), e.slave, e.mid));
        self.cycle += 1;
        events
    }

    fn address_phase(&mut self, s: usize, txn: Transaction, c: u64) -> InFlight {
        let base = self.map.slave_range(s as SlaveId).expect("slave").lo;
        let verdict = self.monitors[s].address_phase(&txn, c);
        let (stage, due) = match (txn.kind, verdict) {
            (AccessKind::Read, v) => (Stage::ReadAccess(v), c + 1),
            (AccessKind::Write, Verdict::Allow) => (Stage::WriteData, c + 1),
            (AccessKind::Write, v @ Verdict::Deny(_)) => {
                let resp = filter_and_respond(v, &txn, &mut self.slaves[s], base, c, c + 2);
                (Stage::Respond(resp), c + 2)
            }
        };
        InFlight { txn, base, stage, due }
    }

    fn advance(&mut self, s: usize, mut f: InFlight, c: u64) -> Option<InFlight> {
        match f.stage {
            Stage::ReadAccess(v) | Stage::WriteCommit(v) => {
                let resp = filter_and_respond(v, &f.txn, &mut self.slaves[s], f.base, c, c + 1);
                f.stage = Stage::Respond(resp);
                f.due = c + 1;
            }
            Stage::WriteData => {
                let wdata = f.txn.wdata.expect("write carries data");
                f.stage = Stage::WriteCommit(self.monitors[s].data_phase(wdata, c));
                f.due = c + 1;
            }
            Stage::Respond(_) => return None,
        }
        Some(f)
    }

    /// Steps until every program is done or `limit` cycles have elapsed.
    pub fn run(&mut self, limit: u64) -> Vec<TraceEvent> {
        let mut trace = Vec::new();
        while self.cycle < limit && !self.is_quiescent() {
            trace.extend(self.step());
        }
        trace
    }
}

impl fmt::Display for Decoded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.srs_reg {
            Some(r) => write!(f, "slave {} (gpcfg{r})", self.slave),
            None => write!(f, "slave {}", self.slave),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{Expect, ProgramStep};
    use crate::policy::Permission;
    use crate::transmon::ResponseCode;

    const M1: MasterId = MasterId(1);

    #[test]
    fn decode_examples() {
        let map = MemoryMap::default_layout();
        assert_eq!(decode(&map, 0x2000_F800).unwrap().slave, 0);
        assert_eq!(decode(&map, 0x2030_0000).unwrap().slave, 3);
        assert_eq!(decode(&map, 0xFFFF_FFFC), Err(DecodeError(0xFFFF_FFFC)));
        let d = decode(&map, 0x5000_009C).unwrap();
        assert_eq!((d.slave, d.srs_reg), (4, Some(39)));
        assert_eq!(decode(&map, 0x5000_0100), Err(DecodeError(0x5000_0100)));
    }

    #[test]
    fn map_validation() {
        let w = |slave, base, size| Window { slave, base, size };
        assert_eq!(
            MemoryMap::new(vec![w(0, 0x1000, 0x100), w(1, 0x10FC, 0x100)], None),
            Err(MapError::Overlap { a: 0, b: 1 })
        );
        assert!(MemoryMap::new(vec![w(0, 0x1000, 0x100), w(1, 0x1100, 0x100)], None).is_ok());
        assert!(matches!(MemoryMap::new(vec![w(0, 0, 6)], None), Err(MapError::BadSize { .. })));
        assert!(matches!(MemoryMap::new(vec![w(0, 0, 0)], None), Err(MapError::BadSize { .. })));
        assert!(matches!(MemoryMap::new(vec![w(1, 0, 4)], None), Err(MapError::SlaveIds { .. })));
        assert!(matches!(
            MemoryMap::new(vec![w(0, 0xFFFF_FF00, 0x200)], None),
            Err(MapError::Overflow { .. })
        ));
        assert!(matches!(
            MemoryMap::new(vec![w(0, 0x1000, 0x100)], Some(SrsWindow { base: 0x10F0, regs: 4 })),
            Err(MapError::Overlap { .. })
        ));
    }

    #[test]
    fn arbitrate_examples() {
        let mut st = ArbiterState::with_pointer(8, MasterId(5));
        assert_eq!(arbitrate(&[MasterId(3), MasterId(7)], &mut st), MasterId(7));
        assert_eq!(st.pointer(), MasterId(0));
        assert_eq!(arbitrate(&[MasterId(3), MasterId(7)], &mut st), MasterId(3));
        for p in 0..8 {
            let mut st = ArbiterState::with_pointer(8, MasterId(p));
            assert_eq!(arbitrate(&[MasterId(3)], &mut st), MasterId(3));
        }
    }

    #[test]
    fn arbitrate_is_fair_under_contention() {
        let k = 100;
        let mut st = ArbiterState::new(64);
        let mut grants = [0; 3];
        let req = [MasterId(0), MasterId(1), MasterId(2)];
        for _ in 0..3 * k {
            grants[arbitrate(&req, &mut st).index()] += 1;
        }
        assert_eq!(grants, [k; 3]);
    }

    fn fig_a_system() -> System {
        let mut sys = System::with_defaults();
        sys.tcu_execute(TcuCommand::LoadApu {
            slave: 0,
            policy: ApuPolicy {
                mid: M1,
                addr: 0x2000_0000,
                mask: 0x7FFF,
                perm: Permission::ReadWrite,
            },
        })
        .unwrap();
        sys
    }

    #[test]
    fn tcu_capacity_and_validation() {
        let mut sys = System::with_defaults();
        let p = ApuPolicy {
            mid: M1,
            addr: 0,
            mask: 0,
            perm: Permission::ReadOnly,
        };
        for _ in 0..16 {
            sys.tcu_execute(TcuCommand::LoadApu { slave: 0, policy: p }).unwrap();
        }
        assert!(matches!(
            sys.tcu_execute(TcuCommand::LoadApu { slave: 0, policy: p }),
            Err(TcuError::CapacityExceeded(_))
        ));
        assert!(matches!(
            sys.tcu_execute(TcuCommand::LoadApu {
                slave: 0,
                policy: ApuPolicy { mid: MasterId(64), ..p }
            }),
            Err(TcuError::MalformedPolicy(_))
        ));
        assert_eq!(
            sys.tcu_execute(TcuCommand::LoadApu { slave: 9, policy: p }),
            Err(TcuError::UnknownSlave(9))
        );
        assert_eq!(
            sys.tcu_execute(TcuCommand::LoadMem { addr: 0x1000_0000, words: vec![1] }),
            Err(TcuError::AddressUnmapped(0x1000_0000))
        );
        // A load that runs off the end of a window is refused as a whole.
        assert_eq!(
            sys.tcu_execute(TcuCommand::LoadMem { addr: 0x203F_FFFC, words: vec![1, 2] }),
            Err(TcuError::AddressUnmapped(0x2040_0000))
        );
        assert_eq!(sys.peek(0x203F_FFFC), Some(0));
        assert_eq!(sys.tcu_execute(TcuCommand::SetSrs { reg: 64, value: 1 }), Err(TcuError::NoSuchRegister(64)));
        sys.start().unwrap();
        assert_eq!(sys.tcu_execute(TcuCommand::SetSrs { reg: 1, value: 1 }), Err(TcuError::AlreadyStarted));
    }

    #[test]
    fn loadmem_then_allowed_read() {
        let mut sys = fig_a_system();
        sys.tcu_execute(TcuCommand::LoadMem { addr: 0x2000_0000, words: vec![0xDEAD_0001] }).unwrap();
        sys.load_program(M1, MasterProgram::new(vec![ProgramStep::read_data(0x2000_0000, 0xDEAD_0001)]))
            .unwrap();
        sys.start().unwrap();
        let trace = sys.run(100);
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].data, 0xDEAD_0001);
        assert!(sys.master(M1).mismatches().is_empty());
    }

    #[test]
    fn pipeline_latencies() {
        let mut sys = fig_a_system();
        sys.load_program(
            M1,
            MasterProgram::new(vec![
                ProgramStep::read(0x2000_0000, Expect::Okay),
                ProgramStep::write(0x2000_0004, 9, Expect::Okay),
                ProgramStep::read(0x2000_F800, Expect::Error),
                ProgramStep::write(0x2000_F800, 9, Expect::Error),
                ProgramStep::read(0x7000_0000, Expect::Error),
            ]),
        )
        .unwrap();
        sys.start().unwrap();
        let trace = sys.run(100);
        let cycles: Vec<u64> = trace.iter().map(|e| e.cycle).collect();
        // read 0->2, write 2->5, denied read 5->7, APU-denied write 7->9, unmapped 9->11
        assert_eq!(cycles, vec![2, 5, 7, 9, 11]);
        assert_eq!(trace[4].reason, Some(DenyReason::DecodeError));
        assert_eq!(trace[4].slave, None);
        assert!(sys.master(M1).mismatches().is_empty());
        assert_eq!(sys.peek(0x2000_0004), Some(9));
    }

    #[test]
    fn idle_cycles_still_advance() {
        let mut sys = System::with_defaults();
        sys.start().unwrap();
        assert!(sys.step().is_empty());
        assert!(sys.step().is_empty());
        assert_eq!(sys.cycle(), 2);
    }

    #[test]
    fn contention_is_round_robin_and_ordered() {
        let mut sys = System::with_defaults();
        for m in 0..3 {
            sys.tcu_execute(TcuCommand::LoadApu {
                slave: 0,
                policy: ApuPolicy {
                    mid: MasterId(m),
                    addr: 0x2000_0000,
                    mask: 0xFFFF,
                    perm: Permission::ReadWrite,
                },
            })
            .unwrap();
            let prog = (0..10).map(|i| ProgramStep::read(0x2000_0000 + 4 * i, Expect::Okay)).collect();
            sys.load_program(MasterId(m), prog).unwrap();
        }
        sys.start().unwrap();
        let trace = sys.run(1000);
        assert_eq!(trace.len(), 30);
        // Grants rotate 0,1,2,0,1,2...; one read every two cycles on the shared slave.
        for (i, e) in trace.iter().enumerate() {
            assert_eq!(e.mid, MasterId((i % 3) as u16));
            assert_eq!(e.cycle, 2 * (i as u64 + 1));
            assert_eq!(e.resp, ResponseCode::Okay);
        }
        for m in sys.masters() {
            let cycles: Vec<u64> = m.responses().iter().map(|r| r.cycle).collect();
            assert!(cycles.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn scheduled_reconfiguration() {
        let mut sys = System::with_defaults();
        sys.load_program(
            M1,
            MasterProgram::new(vec![
                ProgramStep::read(0x2000_0000, Expect::Error),
                ProgramStep::read(0x2000_0000, Expect::Okay),
            ]),
        )
        .unwrap();
        sys.start().unwrap();
        sys.schedule_tcu(
            1,
            TcuCommand::LoadApu {
                slave: 0,
                policy: ApuPolicy {
                    mid: M1,
                    addr: 0x2000_0000,
                    mask: 0,
                    perm: Permission::ReadOnly,
                },
            },
        )
        .unwrap();
        sys.run(100);
        assert!(sys.master(M1).mismatches().is_empty());
        assert!(sys.tcu_faults().is_empty());
    }
}
