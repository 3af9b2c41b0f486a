//! Properties of parsing, validation and translation over random diagrams.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use virtint_core::model::validate;
use virtint_core::parser::{parse_tcsd, print_tcsd};
use virtint_core::tapn::{ReachOptions, Verdict};
use virtint_core::translate::{structural_report, translate};
use virtint_testkit::{random_tcsd_source, replay, TcsdShape};

fn source(seed: u64) -> String {
    random_tcsd_source(&mut StdRng::seed_from_u64(seed), "R", TcsdShape::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_diagrams_are_valid(seed in any::<u64>()) {
        let src = source(seed);
        let t = parse_tcsd(&src, "r").map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?.tcsd;
        let v = validate(&t);
        prop_assert!(v.is_empty(), "{:?}\n{}", v, src);
    }

    #[test]
    fn validation_is_idempotent(seed in any::<u64>(), cut in 0usize..40) {
        // dropping a line often breaks the diagram, which is the point
        let src = source(seed);
        let lines: Vec<&str> = src.lines().collect();
        let k = 3 + cut % lines.len().saturating_sub(4).max(1);
        let mutated: String = lines
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, l)| format!("{l}\n"))
            .collect();
        if let Ok(p) = parse_tcsd(&mutated, "m") {
            prop_assert_eq!(validate(&p.tcsd), validate(&p.tcsd));
        }
    }

    #[test]
    fn valid_diagrams_keep_their_invariants(seed in any::<u64>()) {
        let t = parse_tcsd(&source(seed), "r").unwrap().tcsd;
        let valid = t.validated().unwrap();
        let d = &valid.diagram;
        for m in &d.messages {
            let on_sut = [m.send, m.receive]
                .iter()
                .filter(|&&e| valid.is_sut_event(e))
                .count();
            prop_assert_eq!(on_sut, 1);
        }
        let stamps: Vec<u32> = valid.partitions.iter().map(|p| p.timestamp).collect();
        prop_assert_eq!(stamps.first(), Some(&0));
        prop_assert!(stamps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn walk_visits_each_sut_event_once(seed in any::<u64>()) {
        let valid = parse_tcsd(&source(seed), "r").unwrap().tcsd.validated().unwrap();
        let walk = valid.walk();
        let visited: BTreeSet<_> = walk.events().iter().copied().collect();
        prop_assert_eq!(visited.len(), walk.events().len());
        let expected: BTreeSet<_> = valid.sut_events().iter().copied().collect();
        prop_assert_eq!(visited, expected);
    }

    #[test]
    fn parsing_is_deterministic_and_round_trips(seed in any::<u64>()) {
        let src = source(seed);
        let a = parse_tcsd(&src, "r").unwrap().tcsd;
        let b = parse_tcsd(&src, "r").unwrap().tcsd;
        prop_assert_eq!(&a, &b);
        let printed = print_tcsd(&a).unwrap();
        let again = parse_tcsd(&printed, "p").unwrap().tcsd;
        prop_assert_eq!(print_tcsd(&again).unwrap(), printed);
        prop_assert_eq!(a.diagram.events.len(), again.diagram.events.len());
        prop_assert_eq!(a.diagram.messages.len(), again.diagram.messages.len());
        prop_assert_eq!(a.diagram.fragments.len(), again.diagram.fragments.len());
        prop_assert_eq!(a.partitions.len(), again.partitions.len());
        prop_assert_eq!(a.timeouts.len(), again.timeouts.len());
        let labels = |t: &virtint_core::model::Tcsd| {
            t.diagram.messages.iter().map(|m| m.label.clone()).collect::<Vec<_>>()
        };
        prop_assert_eq!(labels(&a), labels(&again));
    }

    #[test]
    fn parse_errors_point_inside_the_input(seed in any::<u64>(), cut in 0usize..400) {
        let src = source(seed);
        let cut = cut.min(src.len());
        let cut = (0..=cut).rev().find(|&i| src.is_char_boundary(i)).unwrap();
        let text = &src[..cut];
        if let Err(e) = parse_tcsd(text, "t") {
            let lines: Vec<&str> = text.split('\n').collect();
            prop_assert!(e.span.line >= 1 && e.span.line <= lines.len(), "{e}");
            let width = lines[e.span.line - 1].chars().count();
            prop_assert!(e.span.column >= 1 && e.span.column <= width + 1, "{e}");
        }
    }

    #[test]
    fn solo_nets_reach_their_target(seed in any::<u64>()) {
        let src = source(seed);
        let valid = parse_tcsd(&src, "r").unwrap().tcsd.validated().unwrap();
        let tu = translate(&valid).unwrap();
        let r = tu.net.reachable(&tu.m0, &tu.target, &ReachOptions::for_net(&tu.net)).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Reachable, "{}", src);
        prop_assert!(replay(&tu.net, &tu.m0, &r.trace, &tu.target).is_ok());
    }

    #[test]
    fn translation_is_deterministic(seed in any::<u64>()) {
        let valid = parse_tcsd(&source(seed), "r").unwrap().tcsd.validated().unwrap();
        prop_assert_eq!(translate(&valid).unwrap(), translate(&valid).unwrap());
    }

    #[test]
    fn fragment_joins_take_every_branch(seed in any::<u64>()) {
        let valid = parse_tcsd(&source(seed), "r").unwrap().tcsd.validated().unwrap();
        let tu = translate(&valid).unwrap();
        for f in &tu.fragments {
            if f.branches > 0 {
                prop_assert_eq!(tu.net.preset(f.end).len(), f.branches + 1, "{:?}", f);
            }
        }
        let r = structural_report(&tu);
        prop_assert_eq!(r.transitions, tu.net.transitions().len());
        prop_assert_eq!(r.labeled, tu.messages.len());
    }
}
