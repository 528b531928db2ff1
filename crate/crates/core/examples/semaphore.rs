//! A shared register used as a lock. A data policy refuses any write from
//! master 2 with bit 0 clear, so it cannot release the lock master 1 holds.
//!
//! ```text
//! cargo run --example semaphore
//! ```

use interposer_rot::devices::{Expect, MasterProgram, ProgramStep};
use interposer_rot::{render_trace, ApuPolicy, DpuPolicy, MasterId, Permission, System, TcuCommand};

const LOCK: u32 = 0x5000_009C;

fn main() {
    let mut sys = System::with_defaults();
    let srs = sys.map().srs_slave_id().unwrap();
    for m in [1, 2] {
        sys.tcu_execute(TcuCommand::LoadApu {
            slave: srs,
            policy: ApuPolicy { mid: MasterId(m), addr: LOCK, mask: 0, perm: Permission::ReadWrite },
        })
        .unwrap();
    }
    // Any value with bit 0 clear is refused for master 2.
    sys.tcu_execute(TcuCommand::LoadDpu {
        slave: srs,
        policy: DpuPolicy { mid: MasterId(2), addr: LOCK, amask: 0, data: 0, dmask: 0xFFFF_FFFE },
    })
    .unwrap();
    sys.load_program(
        MasterId(1),
        MasterProgram::new(vec![ProgramStep::write(LOCK, 1, Expect::Okay), ProgramStep::read_data(LOCK, 1)]),
    )
    .unwrap();
    sys.load_program(
        MasterId(2),
        MasterProgram::new(vec![ProgramStep::write(LOCK, 0, Expect::Error), ProgramStep::write(LOCK, 0x10, Expect::Error)]),
    )
    .unwrap();
    sys.start().unwrap();
    print!("{}", render_trace(&sys.run(100)));
    println!("gpcfg39 = {:#x}", sys.srs().unwrap().gpcfg(39));
}
