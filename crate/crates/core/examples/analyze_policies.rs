//! Static analysis of a policy set: allowed regions per master, shadowed
//! address entries and data entries that can never fire.
//!
//! ```text
//! cargo run --example analyze_policies
//! ```

use interposer_rot::analyze::analyze;
use interposer_rot::parse;

const SCENARIO: &str = "\
APU slave 0 mid 0x1 addr 0x2000_0000 mask 0x0000_FFFF perm RW
APU slave 0 mid 0x1 addr 0x2000_1000 mask 0x0000_00FF perm RO   # inside the first
APU slave 0 mid 0x2 addr 0x2000_0000 mask 0x0000_0FFF perm RO
APU slave 0 mid 0x2 addr 0x2000_2000 mask 0x0000_0FFF perm WO
DPU slave 0 mid 0x1 addr 0x2000_0000 amask 0x0000_00FF data 0x0 dmask 0x0
DPU slave 0 mid 0x2 addr 0x2000_0000 amask 0x0000_00FF data 0x0 dmask 0x0   # mid 2 cannot write there
";

fn main() {
    let sc = parse(SCENARIO).unwrap();
    let a = analyze(&sc);
    print!("{a}");
}
