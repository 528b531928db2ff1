mod common;

use interposer_rot::devices::{Expect, MasterProgram, ProgramStep};
use interposer_rot::policy::{AccessKind, ApuPolicy, DenyReason, DpuPolicy, MasterId, Permission};
use interposer_rot::scenario::{parse, ConfigItem};
use interposer_rot::transmon::ResponseCode;
use interposer_rot::{render_trace, simulate, Scenario, System, TcuCommand};
use proptest::prelude::*;

fn rw(mid: u16, addr: u32, mask: u32) -> ApuPolicy {
    ApuPolicy {
        mid: MasterId(mid),
        addr,
        mask,
        perm: Permission::ReadWrite,
    }
}

fn system_with(policies: &[(u32, ApuPolicy)]) -> System {
    let mut sys = System::with_defaults();
    for (slave, p) in policies {
        sys.tcu_execute(TcuCommand::LoadApu { slave: *slave, policy: *p }).unwrap();
    }
    sys
}

#[test]
fn error_is_seen_only_by_the_initiator() {
    // Victim on slave 1, attacker hammering slave 0 with denied accesses.
    let victim: MasterProgram = (0..8)
        .map(|i| ProgramStep::write(0x2010_0000 + 4 * i, i, Expect::Okay))
        .chain((0..8).map(|i| ProgramStep::read_data(0x2010_0000 + 4 * i, i)))
        .collect();
    let attacker: MasterProgram = (0..10)
        .map(|i| ProgramStep::write(0x2000_0000 + 4 * i, 0xBAD, Expect::Error))
        .collect();

    let run = |with_attacker: bool| {
        let mut sys = system_with(&[(1, rw(3, 0x2010_0000, 0xFF))]);
        sys.load_program(MasterId(3), victim.clone()).unwrap();
        if with_attacker {
            sys.load_program(MasterId(9), attacker.clone()).unwrap();
        }
        sys.start().unwrap();
        let events = sys.run(10_000);
        common::assert_port_attribution(&sys, &events);
        (sys.master(MasterId(3)).responses().to_vec(), sys, events)
    };
    let (quiet, _, _) = run(false);
    let (noisy, sys, events) = run(true);
    assert_eq!(quiet, noisy);
    assert!(quiet.iter().all(|r| r.code == ResponseCode::Okay));
    assert_eq!(sys.master(MasterId(9)).responses().len(), 10);
    assert!(events.iter().filter(|e| e.resp == ResponseCode::Error).all(|e| e.mid == MasterId(9)));
}

#[test]
fn slaves_are_isolated() {
    let mut sys = system_with(&[(0, rw(1, 0x2000_0000, 0xFFFF)), (2, rw(2, 0x2020_0000, 0xFFFF))]);
    sys.load_program(
        MasterId(1),
        (0..20).map(|i| ProgramStep::write(0x2000_0000 + 4 * i, 0x100 + i, Expect::Okay)).collect(),
    )
    .unwrap();
    let prs_before: Vec<_> = (0..5).map(|s| sys.monitor(s).prs().clone()).collect();
    sys.start().unwrap();
    sys.run(10_000);
    for s in 1..5 {
        assert!(sys.slave(s).snapshot().is_empty(), "slave {s} touched");
        assert!(sys.slave(s).log().is_empty());
    }
    for s in 0..5 {
        assert_eq!(sys.monitor(s).prs(), &prs_before[s as usize]);
    }
}

#[test]
fn policy_storage_is_unreachable_from_masters() {
    // Whatever a master writes, wherever it writes it, the policy spaces are unchanged.
    let mut sys = System::with_defaults();
    for s in 0..5 {
        sys.tcu_execute(TcuCommand::LoadApu {
            slave: s,
            policy: rw(0, 0x0000_0000, 0xFFFF_FFFF),
        })
        .unwrap();
    }
    let before: Vec<_> = (0..5).map(|s| sys.monitor(s).prs().clone()).collect();
    let prog: MasterProgram = [0x2000_0000u32, 0x2010_0000, 0x2020_0000, 0x2030_0000, 0x5000_0000, 0x5000_00FC, 0x0, 0xFFFF_FFFC]
        .into_iter()
        .map(|a| ProgramStep::write(a, 0xFFFF_FFFF, Expect::Any))
        .collect();
    sys.load_program(MasterId(0), prog).unwrap();
    sys.start().unwrap();
    sys.run(1000);
    for s in 0..5 {
        assert_eq!(sys.monitor(s).prs(), &before[s as usize]);
    }
    assert!(sys.tcu_execute(TcuCommand::LoadApu { slave: 0, policy: rw(1, 0, 0) }).is_err());
}

#[test]
fn reads_never_consult_data_policies() {
    let text = std::fs::read_to_string(common::scenario_path("fig4b.isea")).unwrap();
    let with = parse(&text).unwrap();
    let mut without = with.clone();
    without.config.retain(|c| !matches!(c, ConfigItem::Dpu { .. }));
    let probe = |sc: &mut Scenario| {
        sc.programs.clear();
        sc.programs.insert(
            MasterId(1),
            (0..64).map(|i| ProgramStep::read(0x2000_0000 + 0x400 * i, Expect::Any)).collect(),
        );
        simulate(sc, None).unwrap().events
    };
    let mut with = with;
    assert_eq!(probe(&mut with), probe(&mut without));
}

#[test]
fn empty_policy_space_denies_everything() {
    let mut sys = System::with_defaults();
    let prog: MasterProgram = (0..50)
        .map(|i| match i % 2 {
            0 => ProgramStep::read(0x2030_0000 + 8 * i, Expect::Error),
            _ => ProgramStep::write(0x2030_0000 + 8 * i, i, Expect::Error),
        })
        .collect();
    sys.load_program(MasterId(5), prog).unwrap();
    sys.start().unwrap();
    let events = sys.run(10_000);
    assert_eq!(events.len(), 50);
    assert!(events.iter().all(|e| e.reason == Some(DenyReason::ApuNoMatch)));
    assert!(sys.master(MasterId(5)).mismatches().is_empty());
}

#[test]
fn golden_scenarios_are_deterministic() {
    for name in ["fig4a.isea", "fig4b.isea", "fig4c.isea", "fig4d.isea"] {
        let sc = common::load(name);
        let a = render_trace(&simulate(&sc, None).unwrap().events);
        let b = render_trace(&simulate(&sc, None).unwrap().events);
        assert_eq!(a, b);
    }
}

fn arb_step() -> impl Strategy<Value = ProgramStep> {
    let addr = prop_oneof![
        (0u32..64).prop_map(|w| 0x2000_0000 + 4 * w),
        (0u32..64).prop_map(|w| 0x2010_0000 + 4 * w),
        (0u32..4).prop_map(|w| 0x5000_0000 + 4 * w),
        Just(0x6000_0000u32),
    ];
    (addr, any::<bool>(), any::<u32>()).prop_map(|(a, write, d)| {
        if write {
            ProgramStep::write(a, d, Expect::Any)
        } else {
            ProgramStep::read(a, Expect::Any)
        }
    })
}

fn arb_system() -> impl Strategy<Value = (Vec<(u32, ApuPolicy)>, Vec<(u32, DpuPolicy)>, Vec<Vec<ProgramStep>>)> {
    let apu = (0u32..5, 0u16..4, 0u32..0x100, any::<bool>()).prop_map(|(s, m, mask, ro)| {
        let base = [0x2000_0000, 0x2010_0000, 0x2020_0000, 0x2030_0000, 0x5000_0000][s as usize];
        let perm = if ro { Permission::ReadOnly } else { Permission::ReadWrite };
        (s, ApuPolicy { mid: MasterId(m), addr: base, mask, perm })
    });
    let dpu = (0u32..5, 0u16..4, 0u32..4).prop_map(|(s, m, d)| {
        let base = [0x2000_0000, 0x2010_0000, 0x2020_0000, 0x2030_0000, 0x5000_0000][s as usize];
        (s, DpuPolicy { mid: MasterId(m), addr: base, amask: 0xFFF, data: d, dmask: 0xFFFF_FFFC })
    });
    (
        prop::collection::vec(apu, 0..8),
        prop::collection::vec(dpu, 0..4),
        prop::collection::vec(prop::collection::vec(arb_step(), 0..12), 4),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fabric_invariants((apus, dpus, programs) in arb_system()) {
        let mut sys = System::with_defaults();
        for (s, p) in &apus {
            sys.tcu_execute(TcuCommand::LoadApu { slave: *s, policy: *p }).unwrap();
        }
        for (s, p) in &dpus {
            sys.tcu_execute(TcuCommand::LoadDpu { slave: *s, policy: *p }).unwrap();
        }
        for (m, prog) in programs.iter().enumerate() {
            sys.load_program(MasterId(m as u16), MasterProgram::new(prog.clone())).unwrap();
        }
        sys.start().unwrap();
        let (events, violations, _) = common::run_checking_opacity(&mut sys, 100_000);
        prop_assert!(violations.is_empty(), "{:?}", violations);
        prop_assert!(sys.is_quiescent());
        common::assert_port_attribution(&sys, &events);

        // Sorted by (cycle, slave, mid), unmapped accesses last within a cycle.
        let keys: Vec<_> = events.iter().map(|e| (e.cycle, e.slave.is_none(), e.slave, e.mid)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        prop_assert_eq!(keys, sorted);

        // Per master, responses arrive in strictly increasing cycles.
        for m in sys.masters() {
            let c: Vec<u64> = m.responses().iter().map(|r| r.cycle).collect();
            prop_assert!(c.windows(2).all(|w| w[0] < w[1]));
        }

        // The slave logs hold exactly the allowed accesses.
        for s in 0..5u32 {
            let allowed: Vec<(AccessKind, u32, u32)> = events
                .iter()
                .filter(|e| e.slave == Some(s) && e.resp == ResponseCode::Okay)
                .map(|e| (e.kind, e.addr, e.data))
                .collect();
            let base = sys.map().slave_range(s).unwrap().lo;
            let logged: Vec<(AccessKind, u32, u32)> = sys
                .slave(s)
                .log()
                .iter()
                .map(|r| (r.kind, base + r.local_addr, r.data))
                .collect();
            prop_assert_eq!(allowed, logged);
        }

        // Denied reads carry no data.
        for e in &events {
            if e.kind == AccessKind::Read && e.resp == ResponseCode::Error {
                prop_assert_eq!(e.data, 0);
            }
        }
    }

    #[test]
    fn render_then_parse_is_identity((apus, dpus, programs) in arb_system(), limit in 1u64..100_000) {
        let mut sc = Scenario { limit, ..Scenario::default() };
        for (s, p) in apus {
            sc.config.push(ConfigItem::Apu { slave: interposer_rot::scenario::SlaveSel::Id(s), policy: p });
        }
        for (s, p) in dpus {
            sc.config.push(ConfigItem::Dpu { slave: interposer_rot::scenario::SlaveSel::Id(s), policy: p });
        }
        for (m, prog) in programs.into_iter().enumerate() {
            if !prog.is_empty() {
                sc.programs.insert(MasterId(m as u16), MasterProgram::new(prog));
            }
        }
        let text = sc.render();
        prop_assert_eq!(parse(&text).unwrap(), sc);
    }
}

#[test]
fn render_of_shipped_scenarios_roundtrips() {
    for name in ["fig4a.isea", "fig4b.isea", "fig4c.isea", "fig4d.isea", "empty.isea"] {
        let sc = common::load(name);
        assert_eq!(parse(&sc.render()).unwrap(), sc, "{name}");
    }
}
