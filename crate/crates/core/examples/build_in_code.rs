//! The same kind of run as a scenario file, assembled with the Rust API.
//!
//! ```text
//! cargo run --example build_in_code
//! ```

use interposer_rot::devices::{Expect, MasterProgram, ProgramStep};
use interposer_rot::scenario::{ConfigItem, SlaveSel};
use interposer_rot::{render_trace, simulate, ApuPolicy, MasterId, Permission, Scenario};

fn main() {
    let mut sc = Scenario::default();
    // Two slaves' worth of range; `auto` splits it across both monitors.
    sc.config.push(ConfigItem::Apu {
        slave: SlaveSel::Auto,
        policy: ApuPolicy { mid: MasterId(7), addr: 0x2000_0000, mask: 0x1F_FFFF, perm: Permission::ReadWrite },
    });
    sc.config.push(ConfigItem::LoadMem { addr: 0x2010_0000, words: vec![0xCAFE_F00D] });
    sc.programs.insert(
        MasterId(7),
        MasterProgram::new(vec![
            ProgramStep::write(0x2000_0000, 0xAA55_AA55, Expect::Okay),
            ProgramStep::read_data(0x2010_0000, 0xCAFE_F00D),
            ProgramStep::read(0x2020_0000, Expect::Error),
        ]),
    );
    sc.programs.insert(MasterId(8), MasterProgram::new(vec![ProgramStep::read(0x2000_0000, Expect::Error)]));

    print!("{}", sc.render());
    println!();
    let out = simulate(&sc, None).unwrap();
    print!("{}", render_trace(&out.events));
    print!("{}", out.report);
}
