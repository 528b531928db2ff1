//! Scenario files.
//!
//! A scenario is a line-oriented text file describing the system topology,
//! the memory map, the trusted configuration (policies, memory and register
//! preloads) and one transaction program per master port. `#` starts a
//! comment; keywords are case-insensitive; numbers written in hex need the
//! `0x` prefix and may contain `_` separators.
//!
//! ```text
//! TOPOLOGY masters <int> slaves <int> prs_apu <int> prs_dpu <int>
//! MEMMAP slave <int> base <hex> size <hex>
//! SRS base <hex> regs <int>
//! APU slave <int|auto> mid <hex> addr <hex> mask <hex> perm RO|WO|RW
//! DPU slave <int|auto> mid <hex> addr <hex> amask <hex> data <hex> dmask <hex>
//! LOADMEM <hex-addr> <hex-word> [<hex-word> ...]
//! SETSRS <int> <hex>
//! MASTER <hex-mid> READ <hex> EXPECT OKAY|ERROR|ANY [RDATA <hex>]
//! MASTER <hex-mid> WRITE <hex> <hex> EXPECT OKAY|ERROR|ANY
//! LIMIT <int>
//! ```
//!
//! The `<hex-mid>` after `MASTER` selects the port a step is loaded on.
//! Individual steps have no way to name a different master.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::devices::{Expect, MasterProgram, ProgramStep};
use crate::fabric::{
    decode, MapError, MemoryMap, SrsWindow, System, TcuCommand, TcuError, Topology, Window, DEFAULT_SRAM_BASE,
    DEFAULT_SRAM_SIZE, DEFAULT_SRAM_SLAVES, DEFAULT_SRS_BASE,
};
use crate::policy::{AccessKind, AddrRange, ApuPolicy, DpuPolicy, MasterId, Permission, PermissionError, Word};
use crate::transmon::SlaveId;

pub const DEFAULT_LIMIT: u64 = 10_000;

/// Which monitor(s) a policy is loaded into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlaveSel {
    Id(SlaveId),
    /// Every slave whose window the policy range intersects.
    Auto,
}

impl fmt::Display for SlaveSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlaveSel::Id(s) => write!(f, "{s}"),
            SlaveSel::Auto => f.write_str("auto"),
        }
    }
}

/// One trusted configuration line, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConfigItem {
    Apu { slave: SlaveSel, policy: ApuPolicy },
    Dpu { slave: SlaveSel, policy: DpuPolicy },
    LoadMem { addr: Word, words: Vec<Word> },
    SetSrs { reg: u32, value: Word },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub topology: Topology,
    pub map: MemoryMap,
    pub config: Vec<ConfigItem>,
    pub programs: BTreeMap<MasterId, MasterProgram>,
    pub limit: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            topology: Topology::default(),
            map: MemoryMap::default_layout(),
            config: Vec::new(),
            programs: BTreeMap::new(),
            limit: DEFAULT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message} (at `{token}`)")]
pub struct ParseError {
    pub line: usize,
    pub token: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

/// The scenario element a finding is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ItemRef {
    Topology,
    Window(SlaveId),
    Srs,
    Config(usize),
    Step(MasterId, usize),
    Limit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub item: ItemRef,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}", self.message)
    }
}

/// Pieces of `range` that fall inside each slave's window, in slave order.
///
/// Their union is exactly `range` restricted to mapped space.
pub fn split_policy_range(map: &MemoryMap, range: AddrRange) -> Vec<(SlaveId, AddrRange)> {
    map.slave_ranges()
        .into_iter()
        .filter_map(|(s, w)| w.intersect(&range).map(|r| (s, r)))
        .collect()
}

impl Scenario {
    pub fn slave_count(&self) -> usize {
        self.map.slave_count()
    }

    /// Monitors (with the effective sub-range) a policy range is loaded into.
    pub fn placements(&self, slave: SlaveSel, range: AddrRange) -> Vec<(SlaveId, AddrRange)> {
        match slave {
            SlaveSel::Auto => split_policy_range(&self.map, range),
            SlaveSel::Id(s) => self
                .map
                .slave_range(s)
                .and_then(|w| w.intersect(&range))
                .map(|r| vec![(s, r)])
                .unwrap_or_default(),
        }
    }

    fn targets(&self, slave: SlaveSel, range: AddrRange) -> Vec<SlaveId> {
        match slave {
            SlaveSel::Id(s) => vec![s],
            SlaveSel::Auto => self.placements(slave, range).into_iter().map(|(s, _)| s).collect(),
        }
    }

    /// Configuration as concrete commands for the secure interface, with
    /// `auto` placements expanded. `Start` is not included.
    pub fn tcu_commands(&self) -> Vec<TcuCommand> {
        let mut out = Vec::new();
        for item in &self.config {
            match item {
                ConfigItem::Apu { slave, policy } => {
                    for s in self.targets(*slave, policy.range()) {
                        out.push(TcuCommand::LoadApu { slave: s, policy: *policy });
                    }
                }
                ConfigItem::Dpu { slave, policy } => {
                    for s in self.targets(*slave, policy.range()) {
                        out.push(TcuCommand::LoadDpu { slave: s, policy: *policy });
                    }
                }
                ConfigItem::LoadMem { addr, words } => out.push(TcuCommand::LoadMem {
                    addr: *addr,
                    words: words.clone(),
                }),
                ConfigItem::SetSrs { reg, value } => out.push(TcuCommand::SetSrs {
                    reg: *reg,
                    value: *value,
                }),
            }
        }
        out
    }

    /// A configured but not yet started system.
    pub fn build(&self) -> Result<System, TcuError> {
        let mut sys = System::new(self.topology, self.map.clone());
        for cmd in self.tcu_commands() {
            sys.tcu_execute(cmd)?;
        }
        for (mid, prog) in &self.programs {
            sys.load_program(*mid, prog.clone())?;
        }
        Ok(sys)
    }

    /// All APU policies with the monitors they end up in.
    pub fn apu_entries(&self) -> impl Iterator<Item = (usize, SlaveSel, &ApuPolicy)> {
        self.config.iter().enumerate().filter_map(|(i, c)| match c {
            ConfigItem::Apu { slave, policy } => Some((i, *slave, policy)),
            _ => None,
        })
    }

    pub fn dpu_entries(&self) -> impl Iterator<Item = (usize, SlaveSel, &DpuPolicy)> {
        self.config.iter().enumerate().filter_map(|(i, c)| match c {
            ConfigItem::Dpu { slave, policy } => Some((i, *slave, policy)),
            _ => None,
        })
    }

    /// Canonical text form; parsing it yields an equal scenario.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let t = &self.topology;
        let _ = writeln!(
            out,
            "TOPOLOGY masters {} slaves {} prs_apu {} prs_dpu {}",
            t.num_masters,
            self.map.windows().len(),
            t.apu_capacity,
            t.dpu_capacity
        );
        for w in self.map.windows() {
            let _ = writeln!(out, "MEMMAP slave {} base {} size {}", w.slave, hex(w.base), hex(w.size));
        }
        if let Some(s) = self.map.srs() {
            let _ = writeln!(out, "SRS base {} regs {}", hex(s.base), s.regs);
        }
        for item in &self.config {
            match item {
                ConfigItem::Apu { slave, policy: p } => {
                    let _ = writeln!(
                        out,
                        "APU slave {slave} mid {} addr {} mask {} perm {}",
                        p.mid,
                        hex(p.addr),
                        hex(p.mask),
                        p.perm
                    );
                }
                ConfigItem::Dpu { slave, policy: p } => {
                    let _ = writeln!(
                        out,
                        "DPU slave {slave} mid {} addr {} amask {} data {} dmask {}",
                        p.mid,
                        hex(p.addr),
                        hex(p.amask),
                        hex(p.data),
                        hex(p.dmask)
                    );
                }
                ConfigItem::LoadMem { addr, words } => {
                    let _ = write!(out, "LOADMEM {}", hex(*addr));
                    for w in words {
                        let _ = write!(out, " {}", hex(*w));
                    }
                    out.push('\n');
                }
                ConfigItem::SetSrs { reg, value } => {
                    let _ = writeln!(out, "SETSRS {reg} {}", hex(*value));
                }
            }
        }
        for (mid, prog) in &self.programs {
            for s in &prog.steps {
                match s.op {
                    AccessKind::Read => {
                        let _ = write!(out, "MASTER {mid} READ {} EXPECT {}", hex(s.addr), s.expect.token());
                        if let Some(d) = s.expect_rdata {
                            let _ = write!(out, " RDATA {}", hex(d));
                        }
                        out.push('\n');
                    }
                    AccessKind::Write => {
                        let _ = writeln!(
                            out,
                            "MASTER {mid} WRITE {} {} EXPECT {}",
                            hex(s.addr),
                            hex(s.wdata),
                            s.expect.token()
                        );
                    }
                }
            }
        }
        let _ = writeln!(out, "LIMIT {}", self.limit);
        out
    }
}

/// `0x2000_0000` style.
pub fn hex(v: Word) -> String {
    format!("0x{:04X}_{:04X}", v >> 16, v & 0xFFFF)
}

/// Semantic checks. Errors make a scenario unrunnable; warnings do not.
pub fn validate(sc: &Scenario) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut err = |item, message: String| {
        out.push(Finding {
            severity: Severity::Error,
            item,
            message,
        })
    };
    let nm = sc.topology.num_masters;
    let ns = sc.slave_count();
    let mut warnings = Vec::new();
    let mut apu_load = vec![0usize; ns];
    let mut dpu_load = vec![0usize; ns];

    if nm == 0 {
        err(ItemRef::Topology, "topology needs at least one master".into());
    }
    if sc.limit == 0 {
        err(ItemRef::Limit, "run limit must be positive".into());
    }

    for (i, item) in sc.config.iter().enumerate() {
        let at = ItemRef::Config(i);
        let (slave, mid, range, what, load) = match item {
            ConfigItem::Apu { slave, policy } => (*slave, policy.mid, policy.range(), "APU", &mut apu_load),
            ConfigItem::Dpu { slave, policy } => (*slave, policy.mid, policy.range(), "DPU", &mut dpu_load),
            ConfigItem::LoadMem { addr, words } => {
                if addr % 4 != 0 {
                    err(at, format!("LOADMEM address {:#010x} is not word aligned", addr));
                    continue;
                }
                for k in 0..words.len() as u64 {
                    let a = *addr as u64 + 4 * k;
                    if a > u32::MAX as u64 || decode(&sc.map, a as Word).is_err() {
                        err(at, format!("LOADMEM word at {a:#010x} is not mapped"));
                        break;
                    }
                }
                continue;
            }
            ConfigItem::SetSrs { reg, .. } => {
                match sc.map.srs() {
                    Some(s) if *reg < s.regs => {}
                    _ => err(at, format!("register gpcfg{reg} does not exist")),
                }
                continue;
            }
        };
        if mid.0 >= nm {
            err(at, format!("{what} policy names master {mid} but the topology has {nm} masters"));
        }
        let placements = match slave {
            SlaveSel::Id(s) if s as usize >= ns => {
                err(at, format!("{what} policy names slave {s} but the topology has {ns} slaves"));
                continue;
            }
            _ => sc.placements(slave, range),
        };
        for s in sc.targets(slave, range) {
            load[s as usize] += 1;
        }
        let covered: u64 = placements.iter().map(|(_, r)| r.span()).sum();
        match (slave, placements.len()) {
            (_, 0) => warnings.push((at, format!("{what} policy range {range} hits no slave window it is loaded into"))),
            (SlaveSel::Auto, n) if n > 1 => warnings.push((
                at,
                format!("{what} policy range {range} spans {n} slave windows and is split across their monitors"),
            )),
            _ => {}
        }
        if !placements.is_empty() && covered < range.span() {
            warnings.push((at, format!("{what} policy range {range} is clipped to mapped space")));
        }
    }

    for s in 0..ns {
        if apu_load[s] > sc.topology.apu_capacity {
            err(
                ItemRef::Window(s as SlaveId),
                format!("slave {s} receives {} APU policies, capacity is {}", apu_load[s], sc.topology.apu_capacity),
            );
        }
        if dpu_load[s] > sc.topology.dpu_capacity {
            err(
                ItemRef::Window(s as SlaveId),
                format!("slave {s} receives {} DPU policies, capacity is {}", dpu_load[s], sc.topology.dpu_capacity),
            );
        }
    }

    for (mid, prog) in &sc.programs {
        if mid.0 >= nm {
            err(ItemRef::Step(*mid, 0), format!("program for master {mid} but the topology has {nm} masters"));
        }
        for (k, step) in prog.steps.iter().enumerate() {
            if step.addr % 4 != 0 {
                err(ItemRef::Step(*mid, k), format!("address {:#010x} is not word aligned", step.addr));
            }
        }
    }

    out.extend(warnings.into_iter().map(|(item, message)| Finding {
        severity: Severity::Warning,
        item,
        message,
    }));
    out
}

struct Tokens<'a> {
    line: usize,
    toks: Vec<&'a str>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn error(&self, token: &str, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            token: token.to_string(),
            message: message.into(),
        }
    }

    fn last(&self) -> &'a str {
        self.toks.get(self.pos.saturating_sub(1)).copied().unwrap_or("")
    }

    fn next(&mut self, what: &str) -> Result<&'a str, ParseError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(self.error(self.last(), format!("expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let t = self.next(kw)?;
        if t.eq_ignore_ascii_case(kw) {
            Ok(())
        } else {
            Err(self.error(t, format!("expected keyword `{kw}`")))
        }
    }

    fn hex(&mut self, what: &str) -> Result<Word, ParseError> {
        let t = self.next(what)?;
        parse_hex(t).ok_or_else(|| self.error(t, format!("expected 0x-prefixed 32-bit hex {what}")))
    }

    fn int(&mut self, what: &str) -> Result<u64, ParseError> {
        let t = self.next(what)?;
        let digits: String = t.chars().filter(|c| *c != '_').collect();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.error(t, format!("expected decimal {what}")));
        }
        digits.parse().map_err(|_| self.error(t, format!("{what} out of range")))
    }

    fn int_max(&mut self, what: &str, max: u64) -> Result<u64, ParseError> {
        let v = self.int(what)?;
        if v > max {
            return Err(self.error(self.last(), format!("{what} must be at most {max}")));
        }
        Ok(v)
    }

    fn end(&self) -> Result<(), ParseError> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some(t) => Err(self.error(t, "unexpected trailing token")),
        }
    }
}

fn parse_hex(t: &str) -> Option<Word> {
    let body = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X"))?;
    let digits: String = body.chars().filter(|c| *c != '_').collect();
    if digits.is_empty() {
        return None;
    }
    Word::from_str_radix(&digits, 16).ok()
}

fn parse_mid(t: &mut Tokens<'_>) -> Result<MasterId, ParseError> {
    let v = t.hex("master id")?;
    u16::try_from(v)
        .map(MasterId)
        .map_err(|_| t.error(t.last(), "master id too large"))
}

fn parse_perm(t: &mut Tokens<'_>) -> Result<Permission, ParseError> {
    let tok = t.next("permission")?;
    let bits = match tok.to_ascii_uppercase().as_str() {
        "RO" => 0b01,
        "WO" => 0b10,
        "RW" => 0b11,
        "00" => 0b00,
        "01" => 0b01,
        "10" => 0b10,
        "11" => 0b11,
        _ => return Err(t.error(tok, "expected permission RO, WO or RW")),
    };
    Permission::from_bits(bits).map_err(|e| match e {
        PermissionError::Reserved => t.error(tok, "permission encoding 00 is reserved"),
        other => t.error(tok, other.to_string()),
    })
}

fn parse_slave_sel(t: &mut Tokens<'_>) -> Result<SlaveSel, ParseError> {
    t.keyword("slave")?;
    let tok = t.next("slave id")?;
    if tok.eq_ignore_ascii_case("auto") {
        return Ok(SlaveSel::Auto);
    }
    t.pos -= 1;
    Ok(SlaveSel::Id(t.int_max("slave id", u32::MAX as u64)? as SlaveId))
}

fn parse_expect(t: &mut Tokens<'_>) -> Result<Expect, ParseError> {
    t.keyword("expect")?;
    let tok = t.next("OKAY, ERROR or ANY")?;
    match tok.to_ascii_uppercase().as_str() {
        "OKAY" => Ok(Expect::Okay),
        "ERROR" => Ok(Expect::Error),
        "ANY" => Ok(Expect::Any),
        _ => Err(t.error(tok, "expected OKAY, ERROR or ANY")),
    }
}

/// Tokens that would let a step claim a master identity other than its port.
const ID_OVERRIDE_TOKENS: [&str; 6] = ["mid", "id", "hmaster", "master", "as", "src"];

fn parse_step(t: &mut Tokens<'_>) -> Result<ProgramStep, ParseError> {
    for tok in &t.toks[t.pos..] {
        if ID_OVERRIDE_TOKENS.iter().any(|k| tok.eq_ignore_ascii_case(k)) {
            return Err(t.error(
                tok,
                "a transaction cannot carry a master id; it is fixed by the port the MASTER line names",
            ));
        }
    }
    let op = t.next("READ or WRITE")?;
    let step = match op.to_ascii_uppercase().as_str() {
        "READ" => {
            let addr = t.hex("address")?;
            let expect = parse_expect(t)?;
            let expect_rdata = match t.toks.get(t.pos) {
                Some(_) => {
                    t.keyword("rdata")?;
                    Some(t.hex("read data")?)
                }
                None => None,
            };
            ProgramStep {
                op: AccessKind::Read,
                addr,
                wdata: 0,
                expect,
                expect_rdata,
            }
        }
        "WRITE" => {
            let addr = t.hex("address")?;
            let wdata = t.hex("write data")?;
            ProgramStep::write(addr, wdata, parse_expect(t)?)
        }
        _ => return Err(t.error(op, "expected READ or WRITE")),
    };
    t.end()?;
    Ok(step)
}

/// Parses and validates a scenario. The first error wins.
pub fn parse(text: &str) -> Result<Scenario, ParseError> {
    let mut sc = Scenario::default();
    let mut lines: HashMap<ItemRef, (usize, String)> = HashMap::new();
    let mut topo_slaves: Option<(u32, usize)> = None;
    let mut windows: Vec<(Window, usize)> = Vec::new();
    let mut srs: Option<(SrsWindow, usize)> = None;
    let mut seen_topology = false;
    let mut seen_limit = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let mut t = Tokens { line, toks, pos: 0 };
        let kw = t.next("keyword")?;
        let kw_upper = kw.to_ascii_uppercase();
        match kw_upper.as_str() {
            "TOPOLOGY" => {
                if seen_topology {
                    return Err(t.error(kw, "duplicate TOPOLOGY"));
                }
                seen_topology = true;
                t.keyword("masters")?;
                let masters = t.int_max("master count", u16::MAX as u64)? as u16;
                t.keyword("slaves")?;
                let slaves = t.int_max("slave count", 1 << 16)? as u32;
                t.keyword("prs_apu")?;
                let apu = t.int_max("APU capacity", 1 << 16)? as usize;
                t.keyword("prs_dpu")?;
                let dpu = t.int_max("DPU capacity", 1 << 16)? as usize;
                t.end()?;
                sc.topology = Topology {
                    num_masters: masters,
                    apu_capacity: apu,
                    dpu_capacity: dpu,
                };
                topo_slaves = Some((slaves, line));
                lines.insert(ItemRef::Topology, (line, kw.to_string()));
            }
            "MEMMAP" => {
                t.keyword("slave")?;
                let slave = t.int_max("slave id", u32::MAX as u64)? as SlaveId;
                t.keyword("base")?;
                let base = t.hex("base")?;
                t.keyword("size")?;
                let size = t.hex("size")?;
                t.end()?;
                if windows.iter().any(|(w, _)| w.slave == slave) {
                    return Err(t.error(kw, format!("slave {slave} mapped twice")));
                }
                windows.push((Window { slave, base, size }, line));
                lines.insert(ItemRef::Window(slave), (line, kw.to_string()));
            }
            "SRS" => {
                if srs.is_some() {
                    return Err(t.error(kw, "duplicate SRS"));
                }
                t.keyword("base")?;
                let base = t.hex("base")?;
                t.keyword("regs")?;
                let regs = t.int_max("register count", 1 << 20)? as u32;
                t.end()?;
                if regs == 0 {
                    return Err(t.error(t.last(), "register space needs at least one register"));
                }
                srs = Some((SrsWindow { base, regs }, line));
                lines.insert(ItemRef::Srs, (line, kw.to_string()));
            }
            "APU" => {
                let slave = parse_slave_sel(&mut t)?;
                t.keyword("mid")?;
                let mid = parse_mid(&mut t)?;
                t.keyword("addr")?;
                let addr = t.hex("address")?;
                t.keyword("mask")?;
                let mask = t.hex("mask")?;
                t.keyword("perm")?;
                let perm = parse_perm(&mut t)?;
                t.end()?;
                lines.insert(ItemRef::Config(sc.config.len()), (line, kw.to_string()));
                sc.config.push(ConfigItem::Apu {
                    slave,
                    policy: ApuPolicy { mid, addr, mask, perm },
                });
            }
            "DPU" => {
                let slave = parse_slave_sel(&mut t)?;
                t.keyword("mid")?;
                let mid = parse_mid(&mut t)?;
                t.keyword("addr")?;
                let addr = t.hex("address")?;
                t.keyword("amask")?;
                let amask = t.hex("address mask")?;
                t.keyword("data")?;
                let data = t.hex("data")?;
                t.keyword("dmask")?;
                let dmask = t.hex("data mask")?;
                t.end()?;
                lines.insert(ItemRef::Config(sc.config.len()), (line, kw.to_string()));
                sc.config.push(ConfigItem::Dpu {
                    slave,
                    policy: DpuPolicy {
                        mid,
                        addr,
                        amask,
                        data,
                        dmask,
                    },
                });
            }
            "LOADMEM" => {
                let addr = t.hex("address")?;
                let mut words = vec![t.hex("data word")?];
                while t.pos < t.toks.len() {
                    words.push(t.hex("data word")?);
                }
                lines.insert(ItemRef::Config(sc.config.len()), (line, kw.to_string()));
                sc.config.push(ConfigItem::LoadMem { addr, words });
            }
            "SETSRS" => {
                let reg = t.int_max("register index", u32::MAX as u64)? as u32;
                let value = t.hex("value")?;
                t.end()?;
                lines.insert(ItemRef::Config(sc.config.len()), (line, kw.to_string()));
                sc.config.push(ConfigItem::SetSrs { reg, value });
            }
            "MASTER" => {
                let mid = parse_mid(&mut t)?;
                let step = parse_step(&mut t)?;
                let prog = sc.programs.entry(mid).or_default();
                lines.insert(ItemRef::Step(mid, prog.steps.len()), (line, kw.to_string()));
                prog.steps.push(step);
            }
            "LIMIT" => {
                if seen_limit {
                    return Err(t.error(kw, "duplicate LIMIT"));
                }
                seen_limit = true;
                sc.limit = t.int("cycle limit")?;
                t.end()?;
                lines.insert(ItemRef::Limit, (line, kw.to_string()));
            }
            _ => return Err(t.error(kw, "unknown keyword")),
        }
    }

    sc.map = build_map(topo_slaves, windows, srs)?;

    let at = |item: &ItemRef| lines.get(item).cloned().unwrap_or((0, String::new()));
    if let Some(f) = validate(&sc).into_iter().find(|f| f.severity == Severity::Error) {
        let (line, token) = at(&f.item);
        return Err(ParseError {
            line,
            token,
            message: f.message,
        });
    }
    Ok(sc)
}

fn build_map(
    topo_slaves: Option<(u32, usize)>,
    windows: Vec<(Window, usize)>,
    srs: Option<(SrsWindow, usize)>,
) -> Result<MemoryMap, ParseError> {
    let n = topo_slaves.map_or(DEFAULT_SRAM_SLAVES, |(n, _)| n);
    let map_error = |line: usize, message: String| ParseError {
        line,
        token: "MEMMAP".into(),
        message,
    };
    let line_of = |s: SlaveId| -> usize {
        windows
            .iter()
            .find(|(w, _)| w.slave == s)
            .map(|(_, l)| *l)
            .or_else(|| srs.map(|(_, l)| l))
            .unwrap_or(0)
    };
    let ws: Vec<Window> = if windows.is_empty() {
        (0..n)
            .map(|i| Window {
                slave: i,
                base: DEFAULT_SRAM_BASE.wrapping_add(i.wrapping_mul(DEFAULT_SRAM_SIZE)),
                size: DEFAULT_SRAM_SIZE,
            })
            .collect()
    } else {
        for (w, l) in &windows {
            if w.slave >= n {
                return Err(map_error(*l, format!("slave {} outside topology of {n} slaves", w.slave)));
            }
        }
        if windows.len() as u32 != n {
            let missing = (0..n).find(|s| windows.iter().all(|(w, _)| w.slave != *s)).unwrap_or(0);
            let line = topo_slaves.map_or(0, |(_, l)| l);
            return Err(ParseError {
                line,
                token: "TOPOLOGY".into(),
                message: format!("slave {missing} has no MEMMAP window"),
            });
        }
        windows.iter().map(|(w, _)| *w).collect()
    };
    let srs_window = srs.map(|(s, _)| s).unwrap_or(SrsWindow {
        base: DEFAULT_SRS_BASE,
        regs: crate::devices::SharedRegisterSpace::DEFAULT_REGS,
    });
    MemoryMap::new(ws, Some(srs_window)).map_err(|e| {
        let line = match &e {
            MapError::BadSize { slave, .. } | MapError::Misaligned { slave, .. } | MapError::Overflow { slave } => {
                line_of(*slave)
            }
            MapError::Overlap { b, .. } => line_of(*b),
            MapError::SlaveIds { .. } => 0,
        };
        map_error(line, e.to_string())
    })
}
