//! Brute-force reference evaluation of policies over small address and data
//! spaces. Bounds are rebuilt bit by bit and permissions are read straight
//! from the two-bit encoding, so nothing here goes through the library's
//! matching helpers.

use interposer_rot::policy::{AccessKind, ApuPolicy, DenyReason, DpuPolicy, MasterId, Verdict};

/// Lowest and highest address selected by `addr`/`mask` within `bits` bits.
pub fn bounds(addr: u32, mask: u32, bits: u32) -> (u32, u32) {
    let (mut lo, mut hi) = (0u32, 0u32);
    for i in 0..bits {
        let a = (addr >> i) & 1;
        if (mask >> i) & 1 == 1 {
            hi |= 1 << i;
        } else {
            lo |= a << i;
            hi |= a << i;
        }
    }
    (lo, hi)
}

fn permits(perm_bits: u8, kind: AccessKind) -> bool {
    match kind {
        AccessKind::Read => perm_bits & 0b01 != 0,
        AccessKind::Write => perm_bits & 0b10 != 0,
    }
}

pub fn apu(prs: &[ApuPolicy], mid: MasterId, addr: u32, kind: AccessKind, bits: u32) -> Verdict {
    let mut in_range = false;
    let mut allowed = false;
    for p in prs {
        let (lo, hi) = bounds(p.addr, p.mask, bits);
        if p.mid == mid && lo <= addr && addr <= hi {
            in_range = true;
            allowed |= permits(p.perm.bits(), kind);
        }
    }
    match (allowed, in_range) {
        (true, _) => Verdict::Allow,
        (false, true) => Verdict::Deny(DenyReason::ApuPermission),
        (false, false) => Verdict::Deny(DenyReason::ApuNoMatch),
    }
}

pub fn dpu(prs: &[DpuPolicy], mid: MasterId, addr: u32, wdata: u32, abits: u32, dbits: u32) -> Verdict {
    for p in prs {
        let (lo, hi) = bounds(p.addr, p.amask, abits);
        if p.mid != mid || addr < lo || addr > hi {
            continue;
        }
        let same = (0..dbits).all(|i| (p.dmask >> i) & 1 == 1 || (wdata >> i) & 1 == (p.data >> i) & 1);
        if same {
            return Verdict::Deny(DenyReason::DpuDataBlocked);
        }
    }
    Verdict::Allow
}
