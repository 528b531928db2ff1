//! Address and data policy matching on its own, without a fabric.
//!
//! ```text
//! cargo run --example policy_matching
//! ```

use interposer_rot::policy::{apu_check, dpu_check, range_of};
use interposer_rot::{AccessKind, ApuPolicy, DpuPolicy, MasterId, Permission};

fn main() {
    // A mask marks the low address bits that are free to vary.
    for (addr, mask) in [(0x2000_0000, 0x7FFF), (0x4002_0074, 0x0F8B), (0x2000_0000, 0x0FFF_FFFF)] {
        println!("addr {addr:#010x} mask {mask:#010x} -> {}", range_of(addr, mask));
    }

    let apu = [
        ApuPolicy { mid: MasterId(1), addr: 0x2000_0000, mask: 0x7FFF, perm: Permission::ReadWrite },
        ApuPolicy { mid: MasterId(2), addr: 0x2000_0000, mask: 0x00FF, perm: Permission::ReadOnly },
    ];
    println!();
    for (mid, addr, kind) in [
        (1, 0x2000_7FFF, AccessKind::Read),
        (1, 0x2000_8000, AccessKind::Read),
        (2, 0x2000_0010, AccessKind::Read),
        (2, 0x2000_0010, AccessKind::Write),
        (3, 0x2000_0010, AccessKind::Read),
    ] {
        let v = apu_check(&apu, MasterId(mid), addr, kind);
        println!("mid {mid} {kind} {addr:#010x}: {}", v.reason_token());
    }

    // Bits set in dmask are ignored when comparing the written value.
    let dpu = [DpuPolicy { mid: MasterId(1), addr: 0x2000_0000, amask: 0x0FFF_FFFF, data: 0x0BAD_BEEF, dmask: 0xF }];
    println!();
    for wdata in [0x0BAD_BEEF, 0x0BAD_BEE0, 0x0BAD_BEFF, 0x1234_5678] {
        let v = dpu_check(&dpu, MasterId(1), 0x2000_0040, wdata);
        println!("write {wdata:#010x}: {}", v.reason_token());
    }
}
