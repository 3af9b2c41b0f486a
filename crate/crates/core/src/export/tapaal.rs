use std::collections::HashSet;
use std::fmt::Write;

use crate::tapn::Tapn;
use crate::translate::TranslationUnit;

/// Version marker written at the top of every exported document.
pub const FORMAT_COMMENT: &str = "<!-- TAPAAL interchange 3.x; written by virtint -->";

const NET_ID: &str = "TAPN1";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Identifiers usable as TAPAAL names: `[A-Za-z_][A-Za-z0-9_]*`, unique over
/// places and transitions together. Other characters become `_`; clashes
/// get a numeric suffix. Returns place names followed by transition names.
pub fn sanitize_names(net: &Tapn) -> (Vec<String>, Vec<String>) {
    let mut used = HashSet::new();
    let mut fresh = |raw: &str| {
        let mut base: String = raw
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
            .collect();
        if !base.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
            base.insert(0, '_');
        }
        let mut name = base.clone();
        let mut n = 2;
        while !used.insert(name.clone()) {
            name = format!("{base}_{n}");
            n += 1;
        }
        name
    };
    let places = net.places().iter().map(|p| fresh(&p.name)).collect();
    let transitions = net.transitions().iter().map(|t| fresh(&t.name)).collect();
    (places, transitions)
}

/// PNML-flavored TAPAAL document for `tu`: its net, initial marking, and a
/// reachability query for the target (listed counts, every other place
/// empty). Message labels are kept in a `label` attribute.
pub fn to_tapaal_xml(tu: &TranslationUnit) -> String {
    let net = &tu.net;
    let (pn, tn) = sanitize_names(net);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
    out.push_str(FORMAT_COMMENT);
    out.push('\n');
    out.push_str("<pnml xmlns=\"http://www.informatik.hu-berlin.de/top/pnml/ptNetb\">\n");
    writeln!(
        out,
        "  <net active=\"true\" id=\"{NET_ID}\" type=\"P/T net\" name=\"{}\">",
        escape(&tu.diagram)
    )
    .unwrap();
    for p in net.place_ids() {
        writeln!(
            out,
            "    <place id=\"{0}\" name=\"{0}\" initialMarking=\"{1}\" invariant=\"&lt; inf\"/>",
            pn[p.0 as usize],
            tu.m0.count(p)
        )
        .unwrap();
    }
    for t in net.transition_ids() {
        let label = match &net.transition(t).label {
            Some(l) => format!(" label=\"{}\"", escape(l)),
            None => String::new(),
        };
        writeln!(
            out,
            "    <transition id=\"{0}\" name=\"{0}\" urgent=\"false\"{label}/>",
            tn[t.0 as usize]
        )
        .unwrap();
    }
    for a in net.input_arcs() {
        writeln!(
            out,
            "    <inputArc source=\"{}\" target=\"{}\" inscription=\"{}\"/>",
            pn[a.place.0 as usize],
            tn[a.transition.0 as usize],
            a.guard.ascii()
        )
        .unwrap();
    }
    for a in net.output_arcs() {
        writeln!(
            out,
            "    <outputArc source=\"{}\" target=\"{}\" inscription=\"1\"/>",
            tn[a.transition.0 as usize],
            pn[a.place.0 as usize]
        )
        .unwrap();
    }
    for a in net.transport_arcs() {
        writeln!(
            out,
            "    <transportArc source=\"{}\" transition=\"{}\" target=\"{}\" inscription=\"{}\"/>",
            pn[a.source.0 as usize],
            tn[a.transition.0 as usize],
            pn[a.target.0 as usize],
            a.guard.ascii()
        )
        .unwrap();
    }
    out.push_str("  </net>\n");
    let atoms: Vec<String> = net
        .place_ids()
        .map(|p| {
            let n = tu.target.counts.get(&p).copied().unwrap_or(0);
            format!("{NET_ID}.{} = {n}", pn[p.0 as usize])
        })
        .collect();
    let formula = if atoms.is_empty() {
        "EF true".to_string()
    } else {
        format!("EF ({})", atoms.join(" and "))
    };
    writeln!(
        out,
        "  <query active=\"true\" name=\"target\" capacity=\"0\" traceOption=\"SOME\" searchOption=\"BFS\" query=\"{}\"/>",
        escape(&formula)
    )
    .unwrap();
    out.push_str("</pnml>\n");
    out
}
