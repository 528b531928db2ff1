//! Static analysis of a scenario's policy set.
//!
//! Three reports, all computed per monitor on the effective (window-clipped)
//! policy ranges:
//!
//! * allowed regions: merged address intervals each master may read and write;
//! * shadowed APU entries: entries whose every permitted access is already
//!   allowed by earlier entries for the same master;
//! * dead DPU entries: deny rules for a master that is never allowed to write
//!   anywhere inside the rule's range, so the rule can never fire.

use std::collections::BTreeMap;
use std::fmt;

use crate::policy::{perm_covers, AccessKind, AddrRange, ApuPolicy, DpuPolicy, MasterId};
use crate::scenario::Scenario;
use crate::transmon::SlaveId;

/// Sorts and merges overlapping or touching intervals.
pub fn merge_intervals(mut ranges: Vec<AddrRange>) -> Vec<AddrRange> {
    ranges.sort();
    let mut out: Vec<AddrRange> = Vec::with_capacity(ranges.len());
    for r in ranges {
        match out.last_mut() {
            Some(last) if r.lo as u64 <= last.hi as u64 + 1 => last.hi = last.hi.max(r.hi),
            _ => out.push(r),
        }
    }
    out
}

/// True if `r` lies entirely inside the union of `merged` (sorted, disjoint).
pub fn covered_by(r: &AddrRange, merged: &[AddrRange]) -> bool {
    merged.iter().any(|m| m.lo <= r.lo && r.hi <= m.hi)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllowedRegions {
    pub mid: MasterId,
    pub slave: SlaveId,
    pub kind: AccessKind,
    pub regions: Vec<AddrRange>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowedApu {
    /// Ordinal among the scenario's APU lines.
    pub ordinal: usize,
    pub slave: SlaveId,
    pub policy: ApuPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeadDpu {
    /// Ordinal among the scenario's DPU lines.
    pub ordinal: usize,
    pub slave: SlaveId,
    pub policy: DpuPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Analysis {
    pub allowed: Vec<AllowedRegions>,
    pub shadowed: Vec<ShadowedApu>,
    pub dead_dpu: Vec<DeadDpu>,
}

impl Analysis {
    pub fn regions(&self, mid: MasterId, slave: SlaveId, kind: AccessKind) -> &[AddrRange] {
        self.allowed
            .iter()
            .find(|a| a.mid == mid && a.slave == slave && a.kind == kind)
            .map_or(&[], |a| &a.regions)
    }
}

struct Placed<P> {
    ordinal: usize,
    policy: P,
    range: AddrRange,
}

pub fn analyze(sc: &Scenario) -> Analysis {
    let mut apu: BTreeMap<SlaveId, Vec<Placed<ApuPolicy>>> = BTreeMap::new();
    for (ordinal, (_, sel, p)) in sc.apu_entries().enumerate() {
        for (slave, range) in sc.placements(sel, p.range()) {
            apu.entry(slave).or_default().push(Placed {
                ordinal,
                policy: *p,
                range,
            });
        }
    }
    let mut dpu: BTreeMap<SlaveId, Vec<Placed<DpuPolicy>>> = BTreeMap::new();
    for (ordinal, (_, sel, p)) in sc.dpu_entries().enumerate() {
        for (slave, range) in sc.placements(sel, p.range()) {
            dpu.entry(slave).or_default().push(Placed {
                ordinal,
                policy: *p,
                range,
            });
        }
    }

    let mut out = Analysis::default();
    let mut allowed: BTreeMap<(MasterId, SlaveId, AccessKind), Vec<AddrRange>> = BTreeMap::new();
    for (&slave, entries) in &apu {
        for (i, e) in entries.iter().enumerate() {
            let mut shadowed = true;
            for kind in AccessKind::ALL {
                if !perm_covers(e.policy.perm, kind) {
                    continue;
                }
                allowed.entry((e.policy.mid, slave, kind)).or_default().push(e.range);
                let earlier = merge_intervals(
                    entries[..i]
                        .iter()
                        .filter(|x| x.policy.mid == e.policy.mid && perm_covers(x.policy.perm, kind))
                        .map(|x| x.range)
                        .collect(),
                );
                shadowed &= covered_by(&e.range, &earlier);
            }
            if shadowed {
                out.shadowed.push(ShadowedApu {
                    ordinal: e.ordinal,
                    slave,
                    policy: e.policy,
                });
            }
        }
    }
    for ((mid, slave, kind), ranges) in allowed {
        out.allowed.push(AllowedRegions {
            mid,
            slave,
            kind,
            regions: merge_intervals(ranges),
        });
    }

    for (&slave, entries) in &dpu {
        for e in entries {
            let writable = out.regions(e.policy.mid, slave, AccessKind::Write);
            if !writable.iter().any(|w| w.intersect(&e.range).is_some()) {
                out.dead_dpu.push(DeadDpu {
                    ordinal: e.ordinal,
                    slave,
                    policy: e.policy,
                });
            }
        }
    }
    out.shadowed.sort_by_key(|s| (s.ordinal, s.slave));
    out.dead_dpu.sort_by_key(|d| (d.ordinal, d.slave));
    out
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[allowed]")?;
        for a in &self.allowed {
            write!(f, "mid={} slave={} op={}", a.mid, a.slave, a.kind)?;
            for r in &a.regions {
                write!(f, " 0x{:08x}-0x{:08x}", r.lo, r.hi)?;
            }
            writeln!(f)?;
        }
        writeln!(f, "[shadowed]")?;
        for s in &self.shadowed {
            let p = &s.policy;
            writeln!(
                f,
                "apu#{} slave={} mid={} addr=0x{:08x} mask=0x{:08x} perm={}",
                s.ordinal, s.slave, p.mid, p.addr, p.mask, p.perm
            )?;
        }
        writeln!(f, "[dead-dpu]")?;
        for d in &self.dead_dpu {
            let p = &d.policy;
            writeln!(
                f,
                "dpu#{} slave={} mid={} addr=0x{:08x} amask=0x{:08x} data=0x{:08x} dmask=0x{:08x}",
                d.ordinal, d.slave, p.mid, p.addr, p.amask, p.data, p.dmask
            )?;
        }
        Ok(())
    }
}
