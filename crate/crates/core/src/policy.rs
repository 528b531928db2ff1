//! Address- and data-protection policy matching.
//!
//! Everything in here is a pure function of its arguments. The transaction
//! monitor, the fabric and the static analyzer all funnel through these
//! helpers so that the simulator and the analyzer can never disagree about
//! what a policy means.
//!
//! An address policy (APU) is an allow-list entry: a master may touch a range
//! with a given permission. A data policy (DPU) is a deny-list entry: a master
//! may not write a (masked) value into a range. Both derive their range from an
//! `addr`/`mask` pair as `[addr & !mask, addr | mask]`, tested inclusively.

use std::fmt;

use thiserror::Error;

/// A 32-bit bus word. Address, data and mask arithmetic wraps at 2^32.
pub type Word = u32;

/// Physical port index of a master on the fabric.
///
/// The fabric stamps this on every transaction from the port the request
/// arrived on; it is never taken from transaction payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MasterId(pub u16);

impl MasterId {
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for MasterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:x}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

impl AccessKind {
    pub const ALL: [AccessKind; 2] = [AccessKind::Read, AccessKind::Write];
}

impl fmt::Display for AccessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccessKind::Read => "R",
            AccessKind::Write => "W",
        })
    }
}

/// Decoded APU permission field.
///
/// The two-bit hardware encoding is `01` read-only, `10` write-only and `11`
/// read/write. `00` is reserved and cannot be represented here; it is refused
/// by [`Permission::from_bits`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Permission {
    ReadOnly,
    WriteOnly,
    ReadWrite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PermissionError {
    #[error("permission encoding 00 is reserved")]
    Reserved,
    #[error("permission encoding {0:#b} does not fit in two bits")]
    OutOfRange(u8),
}

impl Permission {
    pub fn from_bits(bits: u8) -> Result<Self, PermissionError> {
        match bits {
            0b00 => Err(PermissionError::Reserved),
            0b01 => Ok(Permission::ReadOnly),
            0b10 => Ok(Permission::WriteOnly),
            0b11 => Ok(Permission::ReadWrite),
            other => Err(PermissionError::OutOfRange(other)),
        }
    }

    pub const fn bits(self) -> u8 {
        match self {
            Permission::ReadOnly => 0b01,
            Permission::WriteOnly => 0b10,
            Permission::ReadWrite => 0b11,
        }
    }

    pub const fn mnemonic(self) -> &'static str {
        match self {
            Permission::ReadOnly => "RO",
            Permission::WriteOnly => "WO",
            Permission::ReadWrite => "RW",
        }
    }
}

impl fmt::Display for Permission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Inclusive address range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AddrRange {
    pub lo: Word,
    pub hi: Word,
}

impl AddrRange {
    pub const fn new(lo: Word, hi: Word) -> Self {
        AddrRange { lo, hi }
    }

    pub const fn contains(&self, addr: Word) -> bool {
        self.lo <= addr && addr <= self.hi
    }

    pub fn intersect(&self, other: &AddrRange) -> Option<AddrRange> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(AddrRange { lo, hi })
    }

    /// Number of byte addresses covered; a full 32-bit range needs 33 bits.
    pub const fn span(&self) -> u64 {
        self.hi as u64 - self.lo as u64 + 1
    }
}

impl fmt::Display for AddrRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[0x{:08x}, 0x{:08x}]", self.lo, self.hi)
    }
}

/// Range selected by an address/mask pair: `addr & !mask ..= addr | mask`.
///
/// `lo <= hi` always holds because `lo` only clears bits of `addr` and `hi`
/// only sets them. Masks need not be contiguous; a sparse mask selects every
/// address between the two bounds, not just the bit-subset lattice.
pub const fn range_of(addr: Word, mask: Word) -> AddrRange {
    AddrRange {
        lo: addr & !mask,
        hi: addr | mask,
    }
}

pub const fn perm_covers(perm: Permission, kind: AccessKind) -> bool {
    matches!(
        (perm, kind),
        (Permission::ReadWrite, _)
            | (Permission::ReadOnly, AccessKind::Read)
            | (Permission::WriteOnly, AccessKind::Write)
    )
}

/// One APU policy register entry (APUMID, APUADDR, APUMASK, APUPERM).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ApuPolicy {
    pub mid: MasterId,
    pub addr: Word,
    pub mask: Word,
    pub perm: Permission,
}

impl ApuPolicy {
    pub const fn range(&self) -> AddrRange {
        range_of(self.addr, self.mask)
    }
}

/// One DPU policy register entry (DPUMID, DPUADDR, DPUDATA, DPUDMASK, DPUAMASK).
///
/// Bits set in `dmask` are don't-care on both the written value and `data`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DpuPolicy {
    pub mid: MasterId,
    pub addr: Word,
    pub amask: Word,
    pub data: Word,
    pub dmask: Word,
}

impl DpuPolicy {
    pub const fn range(&self) -> AddrRange {
        range_of(self.addr, self.amask)
    }

    /// The value pattern this entry forbids, with don't-care bits cleared.
    pub const fn restricted_value(&self) -> Word {
        self.data & !self.dmask
    }
}

/// Why a transaction was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DenyReason {
    /// No address policy names this master and address.
    ApuNoMatch,
    /// A policy names this master and address but not this access kind.
    ApuPermission,
    /// A data policy forbids the written value.
    DpuDataBlocked,
    /// The address decodes to no slave window.
    DecodeError,
}

impl DenyReason {
    pub const ALL: [DenyReason; 4] = [
        DenyReason::ApuNoMatch,
        DenyReason::ApuPermission,
        DenyReason::DpuDataBlocked,
        DenyReason::DecodeError,
    ];

    pub const fn token(self) -> &'static str {
        match self {
            DenyReason::ApuNoMatch => "ApuNoMatch",
            DenyReason::ApuPermission => "ApuPermission",
            DenyReason::DpuDataBlocked => "DpuDataBlocked",
            DenyReason::DecodeError => "DecodeError",
        }
    }
}

impl fmt::Display for DenyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Outcome of a policy check. A denial always carries its reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Allow,
    Deny(DenyReason),
}

impl Verdict {
    pub const fn is_allow(self) -> bool {
        matches!(self, Verdict::Allow)
    }

    pub const fn reason(self) -> Option<DenyReason> {
        match self {
            Verdict::Allow => None,
            Verdict::Deny(r) => Some(r),
        }
    }

    /// Reason token as it appears in traces; `None` for an allowed access.
    pub const fn reason_token(self) -> &'static str {
        match self {
            Verdict::Allow => "None",
            Verdict::Deny(r) => r.token(),
        }
    }
}

pub fn apu_match(p: &ApuPolicy, mid: MasterId, addr: Word, kind: AccessKind) -> bool {
    p.mid == mid && p.range().contains(addr) && perm_covers(p.perm, kind)
}

/// Allow-list evaluation over a policy register space.
///
/// Any matching entry allows. When nothing matches, the denial is reported as
/// [`DenyReason::ApuPermission`] if some entry covered the master and address
/// but with the wrong permission, and [`DenyReason::ApuNoMatch`] otherwise.
pub fn apu_check(prs: &[ApuPolicy], mid: MasterId, addr: Word, kind: AccessKind) -> Verdict {
    let mut range_hit = false;
    for p in prs {
        if p.mid != mid || !p.range().contains(addr) {
            continue;
        }
        if perm_covers(p.perm, kind) {
            return Verdict::Allow;
        }
        range_hit = true;
    }
    if range_hit {
        Verdict::Deny(DenyReason::ApuPermission)
    } else {
        Verdict::Deny(DenyReason::ApuNoMatch)
    }
}

pub fn dpu_match(p: &DpuPolicy, mid: MasterId, addr: Word, wdata: Word) -> bool {
    p.mid == mid && p.range().contains(addr) && (wdata & !p.dmask) == p.restricted_value()
}

/// Deny-list evaluation for a write's data phase. Reads never reach this.
pub fn dpu_check(prs: &[DpuPolicy], mid: MasterId, addr: Word, wdata: Word) -> Verdict {
    if prs.iter().any(|p| dpu_match(p, mid, addr, wdata)) {
        Verdict::Deny(DenyReason::DpuDataBlocked)
    } else {
        Verdict::Allow
    }
}
