//! Exporter output checked with independent DOT and XML parsers.

use std::collections::BTreeMap;

use graphviz_rust::dot_structures::{Graph, Stmt};
use quick_xml::events::Event;
use quick_xml::Reader;

use virtint_core::export::{to_dot, to_report_json, to_tapaal_xml, ReportInput, FORMAT_COMMENT};
use virtint_core::integrate::{check_consistency, CheckOptions, InstanceMap};
use virtint_core::parser::parse_tcsd;
use virtint_core::tapn::{Marking, Tapn};
use virtint_core::translate::{translate, TranslationUnit};

fn unit(src: &str) -> TranslationUnit {
    let t = parse_tcsd(src, "t").unwrap().tcsd;
    translate(&t.validated().unwrap()).unwrap()
}

const SAMPLE: &str = "tcsd X { sut S test A msg A -> S : \"a b\" timeout 4 { msg S -> A : c par { op { msg A -> S : d } op { msg S -> A : e } } } at 6 }";

fn nodes(g: &Graph) -> usize {
    match g {
        Graph::DiGraph { stmts, .. } | Graph::Graph { stmts, .. } => {
            stmts.iter().filter(|s| matches!(s, Stmt::Node(_))).count()
        }
    }
}

fn edges(g: &Graph) -> usize {
    match g {
        Graph::DiGraph { stmts, .. } | Graph::Graph { stmts, .. } => {
            stmts.iter().filter(|s| matches!(s, Stmt::Edge(_))).count()
        }
    }
}

#[test]
fn dot_parses_and_has_one_node_per_element() {
    let tu = unit(SAMPLE);
    let dot = to_dot(&tu.net, Some(&tu.m0));
    let g = graphviz_rust::parse(&dot).expect("valid DOT");
    assert_eq!(nodes(&g), tu.net.places().len() + tu.net.transitions().len());
    let arcs = tu.net.input_arcs().len() + tu.net.output_arcs().len() + 2 * tu.net.transport_arcs().len();
    assert_eq!(edges(&g), arcs);
    assert_eq!(dot, to_dot(&tu.net, Some(&tu.m0)));
}

#[test]
fn dot_of_a_single_place() {
    let mut net = Tapn::new();
    let p = net.add_place("lonely").unwrap();
    let g = graphviz_rust::parse(&to_dot(&net, Some(&Marking::new().with_token(p, 2)))).unwrap();
    assert_eq!(nodes(&g), 1);
    assert_eq!(edges(&g), 0);
}

#[test]
fn dot_marks_the_start_arc_as_unbounded() {
    let tu = unit("tcsd D { sut S test A }");
    let dot = to_dot(&tu.net, None);
    let pre = tu.net.place_by_name("pre").unwrap();
    assert!(dot.contains(&format!("p{} -> t{} [label=\"[0,∞)\"]", pre.0, tu.start.0)), "{dot}");
}

/// Element name -> attributes, for every element in document order.
fn elements(xml: &str) -> Vec<(String, BTreeMap<String, String>)> {
    let mut reader = Reader::from_str(xml);
    let mut out = Vec::new();
    let mut open = 0i32;
    loop {
        let event = reader.read_event().expect("well-formed XML");
        let e = match &event {
            Event::Start(e) | Event::Empty(e) => e,
            Event::End(_) => {
                open -= 1;
                continue;
            }
            Event::Eof => break,
            _ => continue,
        };
        if matches!(event, Event::Start(_)) {
            open += 1;
        }
        let attrs = e
            .attributes()
            .map(|a| {
                let a = a.unwrap();
                (
                    String::from_utf8(a.key.as_ref().to_vec()).unwrap(),
                    a.unescape_value().unwrap().into_owned(),
                )
            })
            .collect();
        out.push((String::from_utf8(e.name().as_ref().to_vec()).unwrap(), attrs));
    }
    assert_eq!(open, 0, "unbalanced elements");
    out
}

#[test]
fn tapaal_document_structure() {
    let tu = unit(SAMPLE);
    let xml = to_tapaal_xml(&tu);
    assert!(xml.contains(FORMAT_COMMENT));
    let els = elements(&xml);
    let count = |name: &str| els.iter().filter(|(n, _)| n == name).count();
    assert_eq!(count("net"), 1);
    assert_eq!(count("place"), tu.net.places().len());
    assert_eq!(count("transition"), tu.net.transitions().len());
    assert_eq!(count("inputArc"), tu.net.input_arcs().len());
    assert_eq!(count("outputArc"), tu.net.output_arcs().len());
    assert_eq!(count("transportArc"), tu.net.transport_arcs().len());
    assert_eq!(count("query"), 1);
    let places: Vec<_> = els.iter().filter(|(n, _)| n == "place").map(|(_, a)| a).collect();
    assert!(places.iter().all(|a| a["invariant"] == "< inf"));
    let tokens: u32 = places.iter().map(|a| a["initialMarking"].parse::<u32>().unwrap()).sum();
    assert_eq!(tokens, 1);
    let inscriptions: Vec<&str> = els
        .iter()
        .filter(|(n, _)| n.ends_with("Arc") && n != "outputArc")
        .map(|(_, a)| a["inscription"].as_str())
        .collect();
    assert!(inscriptions.contains(&"[6,6]"));
    assert!(inscriptions.contains(&"[0,4]"));
    assert!(inscriptions.contains(&"[0,inf)"));
    let ids: Vec<&str> = els
        .iter()
        .filter(|(n, _)| n == "place" || n == "transition")
        .map(|(_, a)| a["id"].as_str())
        .collect();
    for arc in els.iter().filter(|(n, _)| n.ends_with("Arc")) {
        for key in ["source", "target", "transition"] {
            if let Some(v) = arc.1.get(key) {
                assert!(ids.contains(&v.as_str()), "dangling {key} {v}");
            }
        }
    }
    let query = &els.iter().find(|(n, _)| n == "query").unwrap().1["query"];
    assert!(query.starts_with("EF ("), "{query}");
    assert_eq!(query.matches(" = ").count(), tu.net.places().len());
    assert_eq!(xml, to_tapaal_xml(&tu));
}

#[test]
fn report_json_is_stable_and_ordered() {
    let units = vec![
        unit("tcsd A { sut S test T msg S -> T : x msg T -> S : y }"),
        unit("tcsd B { sut S test T msg S -> T : y msg T -> S : x }"),
    ];
    let map = InstanceMap::from_entries(
        [("A", "S", "P"), ("A", "T", "Q"), ("B", "S", "Q"), ("B", "T", "P")],
        [("A", "P"), ("B", "Q")],
    );
    let report = check_consistency(&units, &map, &CheckOptions::default()).unwrap();
    let inputs = [ReportInput {
        file: "a.tcsd".into(),
        sha256: "00".into(),
    }];
    let json = to_report_json(&report, &inputs);
    assert_eq!(json, to_report_json(&report, &inputs));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["overall"], "inconsistent");
    assert_eq!(v["verdicts"][0]["status"], "ordering-deadlock");
    let blocking: Vec<(String, String)> = v["verdicts"][0]["blocking"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| (b["label"].as_str().unwrap().into(), b["transition"].as_str().unwrap().into()))
        .collect();
    let mut sorted = blocking.clone();
    sorted.sort();
    assert_eq!(blocking, sorted);
    assert!(!blocking.is_empty());
    let keys: Vec<&str> = ["\"schema_version\"", "\"inputs\"", "\"overall\"", "\"require_all\"", "\"truncated\"", "\"verdicts\""]
        .into_iter()
        .collect();
    let positions: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
}
