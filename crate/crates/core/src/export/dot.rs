use std::fmt::Write;

use crate::tapn::{Marking, Tapn};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Graphviz rendering of `net`, optionally showing the tokens of `marking`.
///
/// Places are circles (double circles when marked, with the token count and
/// ages), transitions are boxes carrying their message label. Transport arcs
/// use diamond arrowheads on both halves and share the guard annotation.
pub fn to_dot(net: &Tapn, marking: Option<&Marking>) -> String {
    let mut out = String::from("digraph tapn {\n    rankdir=TB;\n");
    for p in net.place_ids() {
        let name = &net.place(p).name;
        let ages = marking.map(|m| m.tokens(p)).unwrap_or_default();
        if ages.is_empty() {
            writeln!(out, "    p{} [shape=circle, label={}];", p.0, quote(name)).unwrap();
        } else {
            let list: Vec<String> = ages.iter().map(u32::to_string).collect();
            let label = format!("{name}\n{} token(s): {}", ages.len(), list.join(","));
            writeln!(out, "    p{} [shape=doublecircle, label={}];", p.0, quote(&label)).unwrap();
        }
    }
    for t in net.transition_ids() {
        let tr = net.transition(t);
        let label = match &tr.label {
            Some(l) => format!("{}\n{}", tr.name, l),
            None => tr.name.clone(),
        };
        writeln!(out, "    t{} [shape=box, label={}];", t.0, quote(&label)).unwrap();
    }
    for a in net.input_arcs() {
        writeln!(
            out,
            "    p{} -> t{} [label={}];",
            a.place.0,
            a.transition.0,
            quote(&a.guard.to_string())
        )
        .unwrap();
    }
    for a in net.output_arcs() {
        writeln!(out, "    t{} -> p{};", a.transition.0, a.place.0).unwrap();
    }
    for a in net.transport_arcs() {
        let g = quote(&a.guard.to_string());
        writeln!(
            out,
            "    p{} -> t{} [arrowhead=diamond, style=dashed, label={g}];",
            a.source.0, a.transition.0
        )
        .unwrap();
        writeln!(
            out,
            "    t{} -> p{} [arrowhead=diamond, style=dashed, label={g}];",
            a.transition.0, a.target.0
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
