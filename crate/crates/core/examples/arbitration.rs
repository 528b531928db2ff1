//! Round-robin arbitration: the bare arbiter, then four masters contending
//! for one slave.
//!
//! ```text
//! cargo run --example arbitration
//! ```

use interposer_rot::devices::{Expect, MasterProgram, ProgramStep};
use interposer_rot::fabric::{arbitrate, ArbiterState};
use interposer_rot::{render_trace, ApuPolicy, MasterId, Permission, System, TcuCommand};

fn main() {
    let mut st = ArbiterState::new(8);
    let req = [MasterId(1), MasterId(3), MasterId(6)];
    let grants: Vec<String> = (0..6).map(|_| arbitrate(&req, &mut st).to_string()).collect();
    println!("grants: {}", grants.join(" "));

    let mut sys = System::with_defaults();
    for m in 0..4 {
        sys.tcu_execute(TcuCommand::LoadApu {
            slave: 2,
            policy: ApuPolicy { mid: MasterId(m), addr: 0x2020_0000, mask: 0xFFF, perm: Permission::ReadWrite },
        })
        .unwrap();
        let prog: MasterProgram = (0..3)
            .map(|i| ProgramStep::write(0x2020_0000 + 0x100 * m as u32 + 4 * i, i, Expect::Okay))
            .collect();
        sys.load_program(MasterId(m), prog).unwrap();
    }
    sys.start().unwrap();
    print!("{}", render_trace(&sys.run(1000)));
}
