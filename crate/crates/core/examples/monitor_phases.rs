//! Drives one slave's monitor by hand: address phase, then data phase one
//! cycle later, then the filter that does or does not touch the slave.
//!
//! ```text
//! cargo run --example monitor_phases
//! ```

use interposer_rot::devices::{SlaveDevice, SramModel};
use interposer_rot::transmon::{filter_and_respond, Transaction};
use interposer_rot::{ApuPolicy, DpuPolicy, MasterId, Permission, System, TcuCommand};

fn main() {
    // Policies only get in through the configuration unit, so build them there.
    let mut sys = System::with_defaults();
    let m1 = MasterId(1);
    sys.tcu_execute(TcuCommand::LoadApu {
        slave: 0,
        policy: ApuPolicy { mid: m1, addr: 0x2000_0000, mask: 0xFFFF, perm: Permission::ReadWrite },
    })
    .unwrap();
    sys.tcu_execute(TcuCommand::LoadDpu {
        slave: 0,
        policy: DpuPolicy { mid: m1, addr: 0x2000_0000, amask: 0xFFFF, data: 0x0BAD_BEEF, dmask: 0 },
    })
    .unwrap();
    let mut mon = sys.monitor(0).clone();
    let mut sram = SlaveDevice::Sram(SramModel::new(0x10_0000));

    for (wdata, grant) in [(0x1234_5678, 10), (0x0BAD_BEEF, 20)] {
        let txn = Transaction::write(m1, 0x2000_0040, wdata, grant);
        let addr_ok = mon.address_phase(&txn, grant);
        println!("cycle {grant}: address phase {} pending={:?}", addr_ok.reason_token(), mon.pending());
        let data_ok = mon.data_phase(wdata, grant + 1);
        println!("cycle {}: data phase for {wdata:#010x} {}", grant + 1, data_ok.reason_token());
        let resp = filter_and_respond(data_ok, &txn, &mut sram, 0x2000_0000, grant + 2, grant + 3);
        println!("cycle {}: response {} reason={:?}", resp.cycle, resp.code.token(), resp.reason);
    }

    println!("slave writes seen: {:?}", sram.log());
    println!("word at 0x40: {:#010x}", sram.peek(0x40));
}
