//! The trusted configuration unit: loading policies before start, rejected
//! commands, and a policy update scheduled for a cycle in the middle of a run.
//!
//! ```text
//! cargo run --example reconfigure
//! ```

use interposer_rot::devices::{Expect, MasterProgram, ProgramStep};
use interposer_rot::{render_trace, ApuPolicy, MasterId, Permission, System, TcuCommand, Topology};
use interposer_rot::fabric::MemoryMap;

fn main() {
    let topo = Topology { apu_capacity: 1, ..Topology::default() };
    let mut sys = System::new(topo, MemoryMap::default_layout());
    let p = |mid, addr| ApuPolicy { mid: MasterId(mid), addr, mask: 0xFF, perm: Permission::ReadWrite };

    sys.tcu_execute(TcuCommand::LoadApu { slave: 0, policy: p(1, 0x2000_0000) }).unwrap();
    for cmd in [
        TcuCommand::LoadApu { slave: 0, policy: p(1, 0x2000_1000) },
        TcuCommand::LoadApu { slave: 9, policy: p(1, 0x2000_1000) },
        TcuCommand::LoadApu { slave: 1, policy: p(200, 0x2010_0000) },
        TcuCommand::LoadMem { addr: 0x6000_0000, words: vec![1] },
        TcuCommand::SetSrs { reg: 99, value: 1 },
    ] {
        println!("rejected: {}", sys.tcu_execute(cmd).unwrap_err());
    }

    // Master 2 polls slave 1; access is granted from cycle 8 on.
    let polls: MasterProgram = (0..8).map(|_| ProgramStep::read(0x2010_0000, Expect::Any)).collect();
    sys.load_program(MasterId(2), polls).unwrap();
    sys.schedule_tcu(8, TcuCommand::LoadApu { slave: 1, policy: p(2, 0x2010_0000) }).unwrap();
    sys.start().unwrap();
    println!("after start: {}", sys.tcu_execute(TcuCommand::Start).unwrap_err());
    let events = sys.run(1000);
    print!("{}", render_trace(&events));
}
