//! Properties of merging and consistency checking.

use std::path::PathBuf;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use virtint_core::integrate::{
    check_consistency, classify, enumerate_matchings, merge, CheckOptions, InstanceMap, Overall,
    Policy, Status, SyncMatching, SyncPair,
};
use virtint_core::parser::{parse_architecture, parse_tcsd};
use virtint_core::tapn::{Marking, ReachOptions, Step, Verdict};
use virtint_core::translate::{translate, TranslationUnit};
use virtint_testkit::{random_tcsd_source, replay, TcsdShape};

fn unit(src: &str) -> TranslationUnit {
    let t = parse_tcsd(src, "t").unwrap().tcsd;
    translate(&t.validated().unwrap()).unwrap()
}

/// `A` tests P and `B` tests Q; their `T0` lines stand for each other and
/// `T1` for an untested component R.
fn pair_map() -> InstanceMap {
    InstanceMap::from_entries(
        [
            ("A", "S", "P"),
            ("A", "T0", "Q"),
            ("A", "T1", "R"),
            ("B", "S", "Q"),
            ("B", "T0", "P"),
            ("B", "T1", "R"),
        ],
        [("A", "P"), ("B", "Q")],
    )
}

fn random_pair(seed: u64) -> Vec<TranslationUnit> {
    let mut rng = StdRng::seed_from_u64(seed);
    let shape = TcsdShape {
        max_sut_events: 6,
        ..TcsdShape::default()
    };
    let a = random_tcsd_source(&mut rng, "A", shape);
    let b = random_tcsd_source(&mut rng, "B", shape);
    vec![unit(&a), unit(&b)]
}

fn merged_reach(units: &[TranslationUnit], m: &SyncMatching) -> Status {
    let merged = merge(units, m).unwrap();
    let tu = &merged.unit;
    classify(&tu.net, &tu.m0, &tu.target, &ReachOptions::for_net(&tu.net))
        .unwrap()
        .status
}

fn fixture(dir: &str) -> (Vec<TranslationUnit>, InstanceMap) {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(dir);
    let mut arch = None;
    let mut tcsds = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(&root).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        let text = std::fs::read_to_string(&path).unwrap();
        match path.extension().and_then(|e| e.to_str()) {
            Some("arch") => arch = Some(parse_architecture(&text, "arch").unwrap()),
            Some("tcsd") => tcsds.push(parse_tcsd(&text, "tcsd").unwrap().tcsd),
            _ => {}
        }
    }
    let refs: Vec<_> = tcsds.iter().collect();
    let map = InstanceMap::from_architecture(&arch.unwrap(), &refs).unwrap();
    let units = tcsds
        .iter()
        .map(|t| translate(&t.validated().unwrap()).unwrap())
        .collect();
    (units, map)
}

/// Steps of `trace` that involve `unit`, with the waits of dropped steps
/// added to the next kept one.
fn project(trace: &[Step], merged: &virtint_core::integrate::MergedNet, unit: usize) -> Vec<Step> {
    let mut out = Vec::new();
    let mut wait = 0;
    for s in trace {
        wait += s.delay;
        if let Some(t) = merged.project(s.transition, unit) {
            out.push(Step {
                delay: wait,
                transition: t,
            });
            wait = 0;
        }
    }
    out
}

fn assert_projections_replay(units: &[TranslationUnit], trace: &[Step], m: &SyncMatching) {
    let merged = merge(units, m).unwrap();
    replay(&merged.unit.net, &merged.unit.m0, trace, &merged.unit.target).expect("merged witness replays");
    for (i, u) in units.iter().enumerate() {
        let steps = project(trace, &merged, i);
        replay(&u.net, &u.m0, &steps, &u.target)
            .unwrap_or_else(|e| panic!("projection on {}: {e}", u.diagram));
    }
}

#[test]
fn bscu_deadlocks_on_the_five_messages() {
    let (units, map) = fixture("bscu");
    let report = check_consistency(&units, &map, &CheckOptions::default()).unwrap();
    assert_eq!(report.overall, Overall::Inconsistent);
    let v = &report.verdicts[0];
    assert_eq!(v.status, Status::OrderingDeadlock);
    let mut labels: Vec<&str> = v.blocking.iter().map(|b| b.label.as_str()).collect();
    labels.dedup();
    assert_eq!(labels, ["AntiSkid1", "AntiSkid1m", "CMD1", "CMD1m", "Status"]);
}

#[test]
fn repaired_bscu_witness_projects_onto_each_test_case() {
    let (units, map) = fixture("bscu-repaired");
    let report = check_consistency(&units, &map, &CheckOptions::default()).unwrap();
    assert_eq!(report.overall, Overall::Consistent);
    let v = report.decisive().unwrap();
    assert_projections_replay(&units, &v.trace, &v.matching);
}

#[test]
fn require_all_fails_when_one_matching_deadlocks() {
    let (units, map) = fixture("require-all");
    let any = check_consistency(&units, &map, &CheckOptions::default()).unwrap();
    assert_eq!(any.verdicts.len(), 2);
    assert_eq!(any.overall, Overall::Consistent);
    let all = CheckOptions {
        require_all: true,
        ..CheckOptions::default()
    };
    let all = check_consistency(&units, &map, &all).unwrap();
    assert_eq!(all.overall, Overall::Inconsistent);
}

#[test]
fn timing_fixture_conflicts_only_through_its_guards() {
    let (units, map) = fixture("timing");
    let report = check_consistency(&units, &map, &CheckOptions::default()).unwrap();
    assert_eq!(report.verdicts[0].status, Status::TimingConflict);
    let merged = merge(&units, &report.verdicts[0].matching).unwrap();
    let tu = &merged.unit;
    let wide = tu.net.widened();
    let r = wide.reachable(&tu.m0, &tu.target, &ReachOptions::for_net(&wide)).unwrap();
    assert_eq!(r.verdict, Verdict::Reachable);
}

#[test]
fn clock_follows_elapsed_time_in_a_sequence() {
    let tu = unit("tcsd C { sut S test A msg A -> S : a at 3 msg S -> A : b at 7 msg A -> S : c }");
    let mut rng = StdRng::seed_from_u64(7);
    use rand::seq::SliceRandom;
    use rand::Rng;
    for _ in 0..200 {
        let mut m: Marking = tu.m0.clone();
        let mut started: Option<u32> = None;
        let mut now = 0u32;
        loop {
            let d = rng.gen_range(0..=3);
            let waited = tu.net.delay(&m, d);
            let enabled = tu.net.enabled(&waited);
            let Some(b) = enabled.choose(&mut rng) else {
                break;
            };
            now += d;
            m = tu.net.fire(&waited, b).unwrap();
            if b.transition == tu.start {
                started = Some(now);
            }
            assert_eq!(m.total(), 1, "one token outside fragments and timeouts");
            if let Some(s) = started {
                let (_, ages) = m.iter().next().unwrap();
                assert_eq!(ages, [now - s]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verdicts_are_coherent_and_witnesses_project(seed in any::<u64>()) {
        let units = random_pair(seed);
        let opts = CheckOptions { max_matchings: 8, ..CheckOptions::default() };
        let report = check_consistency(&units, &pair_map(), &opts).unwrap();
        for v in &report.verdicts {
            match v.status {
                Status::TimingConflict => {
                    prop_assert!(v.untimed.is_some());
                    prop_assert!(v.timed.states > 0);
                }
                Status::OrderingDeadlock => prop_assert!(v.untimed.is_some()),
                Status::Consistent => assert_projections_replay(&units, &v.trace, &v.matching),
                Status::BoundExceeded => {}
            }
        }
        // coherence against an independent classification of the same nets
        for v in &report.verdicts {
            let merged = merge(&units, &v.matching).unwrap();
            let tu = &merged.unit;
            let untimed = tu.net.untimed_reachable(&tu.m0, &tu.target, &ReachOptions::for_net(&tu.net)).unwrap();
            match v.status {
                Status::TimingConflict => prop_assert_eq!(untimed.verdict, Verdict::Reachable),
                Status::OrderingDeadlock => prop_assert_eq!(untimed.verdict, Verdict::Unreachable),
                _ => {}
            }
        }
    }

    #[test]
    fn dropping_synchronizations_keeps_consistency(seed in any::<u64>()) {
        let units = random_pair(seed);
        let ms = enumerate_matchings(&units, &pair_map(), Policy::Maximal, 4).unwrap();
        for m in &ms.matchings {
            if m.pairs.len() > 4 || merged_reach(&units, m) != Status::Consistent {
                continue;
            }
            for mask in 0u32..(1 << m.pairs.len()) {
                let sub = SyncMatching::new(
                    m.pairs.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, p)| *p).collect(),
                );
                prop_assert!(sub.is_subset_of(m));
                prop_assert_eq!(merged_reach(&units, &sub), Status::Consistent);
            }
        }
    }

    #[test]
    fn merge_does_not_depend_on_unit_order(seed in any::<u64>()) {
        let units = random_pair(seed);
        let ms = enumerate_matchings(&units, &pair_map(), Policy::Maximal, 2).unwrap();
        let swapped = vec![units[1].clone(), units[0].clone()];
        for m in &ms.matchings {
            let mirrored = SyncMatching::new(
                m.pairs.iter().map(|p| SyncPair { a: (0, p.b.1), b: (1, p.a.1) }).collect(),
            );
            let x = merge(&units, m).unwrap().unit;
            let y = merge(&swapped, &mirrored).unwrap().unit;
            let names = |tu: &TranslationUnit| {
                let mut p: Vec<String> = tu.net.places().iter().map(|p| p.name.clone()).collect();
                let mut t: Vec<String> = tu.net.transitions().iter().map(|t| t.name.clone()).collect();
                p.sort();
                t.sort();
                (p, t, tu.net.input_arcs().len(), tu.net.output_arcs().len(), tu.net.transport_arcs().len())
            };
            prop_assert_eq!(names(&x), names(&y));
            prop_assert_eq!(merged_reach(&units, m), merged_reach(&swapped, &mirrored));
        }
    }

    #[test]
    fn opposite_orders_deadlock(
        a in "[a-z]{1,6}",
        b in "[A-Z]{1,6}",
        before in 0usize..3,
        after in 0usize..3,
    ) {
        let pad = |who: &str, n: usize, tag: &str| {
            (0..n).map(|i| format!("msg S -> T1 : {who}{tag}{i} ")).collect::<String>()
        };
        let first = format!(
            "tcsd A {{ sut S test T0 test T1 {} msg S -> T0 : {a} {} msg T0 -> S : {b} {} }}",
            pad("a", before, "x"), pad("a", after, "y"), pad("a", after, "z")
        );
        let second = format!(
            "tcsd B {{ sut S test T0 test T1 {} msg S -> T0 : {b} {} msg T0 -> S : {a} }}",
            pad("b", before, "x"), pad("b", after, "y")
        );
        let units = vec![unit(&first), unit(&second)];
        let report = check_consistency(&units, &pair_map(), &CheckOptions::default()).unwrap();
        prop_assert_eq!(report.verdicts.len(), 1);
        prop_assert_eq!(report.verdicts[0].pairs.len(), 2);
        prop_assert_eq!(report.verdicts[0].status, Status::OrderingDeadlock);
        prop_assert_eq!(report.overall, Overall::Inconsistent);
    }
}
