use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::lexer::is_bare_word;
use crate::model::{EventId, EventKind, FragmentId, Operator, Tcsd};

const RESERVED: &[&str] = &[
    "tcsd", "sut", "test", "msg", "at", "timeout", "par", "alt", "opt", "strict", "loop", "op",
];

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PrintError {
    #[error("`{0}` cannot be written as an identifier")]
    BadName(String),
    #[error("label {0:?} contains a line break")]
    BadLabel(String),
    #[error("event {0} has a kind the DSL cannot express")]
    Unrepresentable(EventId),
    #[error("event {0} is outside every operand of the enclosing fragment")]
    Unstructured(EventId),
    #[error("timeout {0} does not start and end on statement boundaries")]
    TimeoutPlacement(usize),
    #[error("dangling reference to event {0}")]
    Dangling(EventId),
}

enum Stmt {
    Msg(usize),
    At(usize),
    Frag {
        id: FragmentId,
        operands: Vec<Vec<Stmt>>,
    },
    Timeout {
        bound: u32,
        body: Vec<Stmt>,
    },
}

struct Frame {
    id: FragmentId,
    operands: Vec<Vec<Stmt>>,
}

/// Renders `tcsd` in the `.tcsd` syntax.
///
/// Statements are emitted in ascending event-id order, so diagrams whose ids
/// follow source order (parser output) print back to an equal diagram. The
/// SUT line is always declared first.
pub fn print_tcsd(tcsd: &Tcsd) -> Result<String, PrintError> {
    let d = &tcsd.diagram;
    name(&d.name)?;
    for i in &d.instances {
        name(&i.name)?;
    }

    let mut order: Vec<&crate::model::Event> = d.events.iter().collect();
    order.sort_by_key(|e| e.id);

    let mut root: Vec<Stmt> = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut done: HashSet<EventId> = HashSet::new();
    let mut opened: HashSet<FragmentId> = HashSet::new();

    for ev in order {
        if done.contains(&ev.id) {
            continue;
        }
        let stmt = match ev.kind {
            EventKind::Send | EventKind::Receive => {
                let (index, m) = d.message_of(ev.id).ok_or(PrintError::Dangling(ev.id))?;
                if m.label.contains(['\n', '\r']) {
                    return Err(PrintError::BadLabel(m.label.clone()));
                }
                done.insert(m.send);
                done.insert(m.receive);
                Stmt::Msg(index)
            }
            EventKind::Partition => {
                let index = tcsd
                    .partitions
                    .iter()
                    .position(|p| p.events.contains(&ev.id))
                    .ok_or(PrintError::Dangling(ev.id))?;
                done.extend(tcsd.partitions[index].events.iter().copied());
                Stmt::At(index)
            }
            EventKind::Enter(f) => {
                if opened.insert(f) {
                    if let Some(parent) = stack.last() {
                        operand_of(tcsd, parent.id, ev.id)?;
                    }
                    stack.push(Frame {
                        id: f,
                        operands: Vec::new(),
                    });
                }
                continue;
            }
            EventKind::Exit(f) => {
                if stack.last().map(|fr| fr.id) == Some(f) {
                    let frame = stack.pop().expect("checked above");
                    let declared = d.fragment(f).map_or(0, |fr| fr.operands.len());
                    let mut operands = frame.operands;
                    if operands.len() < declared {
                        operands.resize_with(declared, Vec::new);
                    }
                    place(tcsd, &mut root, &mut stack, ev.id, Stmt::Frag { id: f, operands })?;
                }
                continue;
            }
            EventKind::TimeoutStart | EventKind::TimeoutEnd => {
                return Err(PrintError::Unrepresentable(ev.id))
            }
        };
        place(tcsd, &mut root, &mut stack, ev.id, stmt)?;
    }
    if let Some(frame) = stack.last() {
        return Err(PrintError::Unstructured(
            enter_on(tcsd, frame.id, tcsd.sut).unwrap_or(EventId(0)),
        ));
    }

    // outer timeouts first so inner ones land inside their bodies
    let sut_pos = |e: EventId| {
        d.instances
            .get(tcsd.sut)
            .and_then(|i| i.events.iter().position(|&x| x == e))
    };
    let mut timeouts: Vec<usize> = (0..tcsd.timeouts.len()).collect();
    timeouts.sort_by_key(|&i| {
        let t = &tcsd.timeouts[i];
        let span = sut_pos(t.end).unwrap_or(0) as i64 - sut_pos(t.start).unwrap_or(0) as i64;
        (std::cmp::Reverse(span), sut_pos(t.start), i)
    });
    for i in timeouts {
        if !wrap(tcsd, &mut root, i) {
            return Err(PrintError::TimeoutPlacement(i));
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "tcsd {} {{", d.name);
    let _ = writeln!(out, "    sut {}", tcsd.sut_name());
    for (index, i) in d.instances.iter().enumerate() {
        if index != tcsd.sut {
            let _ = writeln!(out, "    test {}", i.name);
        }
    }
    emit(tcsd, &root, 1, &mut out);
    out.push_str("}\n");
    Ok(out)
}

fn name(s: &str) -> Result<(), PrintError> {
    if is_bare_word(s) && !RESERVED.contains(&s) {
        Ok(())
    } else {
        Err(PrintError::BadName(s.to_string()))
    }
}

fn operand_of(tcsd: &Tcsd, f: FragmentId, e: EventId) -> Result<usize, PrintError> {
    tcsd.diagram
        .fragment(f)
        .and_then(|fr| fr.operands.iter().position(|o| o.events.contains(&e)))
        .ok_or(PrintError::Unstructured(e))
}

fn place(
    tcsd: &Tcsd,
    root: &mut Vec<Stmt>,
    stack: &mut [Frame],
    e: EventId,
    stmt: Stmt,
) -> Result<(), PrintError> {
    match stack.last_mut() {
        None => root.push(stmt),
        Some(frame) => {
            let n = operand_of(tcsd, frame.id, e)?;
            if frame.operands.len() <= n {
                frame.operands.resize_with(n + 1, Vec::new);
            }
            frame.operands[n].push(stmt);
        }
    }
    Ok(())
}

fn enter_on(tcsd: &Tcsd, f: FragmentId, line: usize) -> Option<EventId> {
    tcsd.diagram
        .events
        .iter()
        .find(|e| e.instance == line && e.kind == EventKind::Enter(f))
        .map(|e| e.id)
}

fn exit_on(tcsd: &Tcsd, f: FragmentId, line: usize) -> Option<EventId> {
    tcsd.diagram
        .events
        .iter()
        .find(|e| e.instance == line && e.kind == EventKind::Exit(f))
        .map(|e| e.id)
}

fn on_sut(tcsd: &Tcsd, events: &[EventId]) -> Option<EventId> {
    events
        .iter()
        .copied()
        .find(|&e| tcsd.diagram.event(e).map(|ev| ev.instance) == Some(tcsd.sut))
}

fn first_sut(tcsd: &Tcsd, stmt: &Stmt) -> Option<EventId> {
    match stmt {
        Stmt::Msg(i) => {
            let m = &tcsd.diagram.messages[*i];
            on_sut(tcsd, &[m.send, m.receive])
        }
        Stmt::At(i) => on_sut(tcsd, &tcsd.partitions[*i].events),
        Stmt::Frag { id, .. } => enter_on(tcsd, *id, tcsd.sut),
        Stmt::Timeout { body, .. } => body.iter().find_map(|s| first_sut(tcsd, s)),
    }
}

fn last_sut(tcsd: &Tcsd, stmt: &Stmt) -> Option<EventId> {
    match stmt {
        Stmt::Frag { id, .. } => exit_on(tcsd, *id, tcsd.sut),
        Stmt::Timeout { body, .. } => body.iter().rev().find_map(|s| last_sut(tcsd, s)),
        _ => first_sut(tcsd, stmt),
    }
}

fn wrap(tcsd: &Tcsd, stmts: &mut Vec<Stmt>, index: usize) -> bool {
    let t = &tcsd.timeouts[index];
    let start = stmts
        .iter()
        .position(|s| first_sut(tcsd, s) == Some(t.start));
    if let Some(i) = start {
        let end = (i..stmts.len()).find(|&j| last_sut(tcsd, &stmts[j]) == Some(t.end));
        return match end {
            Some(j) => {
                let body: Vec<Stmt> = stmts.drain(i..=j).collect();
                stmts.insert(
                    i,
                    Stmt::Timeout {
                        bound: t.bound,
                        body,
                    },
                );
                true
            }
            None => false,
        };
    }
    for s in stmts.iter_mut() {
        let found = match s {
            Stmt::Frag { operands, .. } => operands.iter_mut().any(|op| wrap(tcsd, op, index)),
            Stmt::Timeout { body, .. } => wrap(tcsd, body, index),
            _ => false,
        };
        if found {
            return true;
        }
    }
    false
}

fn label(s: &str) -> String {
    if is_bare_word(s) {
        s.to_string()
    } else {
        let mut q = String::from("\"");
        for c in s.chars() {
            if c == '"' || c == '\\' {
                q.push('\\');
            }
            q.push(c);
        }
        q.push('"');
        q
    }
}

fn emit(tcsd: &Tcsd, stmts: &[Stmt], depth: usize, out: &mut String) {
    let pad = "    ".repeat(depth);
    let d = &tcsd.diagram;
    let line_name = |e: EventId| {
        d.event(e)
            .map(|ev| d.instances[ev.instance].name.as_str())
            .unwrap_or("")
    };
    for s in stmts {
        match s {
            Stmt::Msg(i) => {
                let m = &d.messages[*i];
                let _ = writeln!(
                    out,
                    "{pad}msg {} -> {} : {}",
                    line_name(m.send),
                    line_name(m.receive),
                    label(&m.label)
                );
            }
            Stmt::At(i) => {
                let _ = writeln!(out, "{pad}at {}", tcsd.partitions[*i].timestamp);
            }
            Stmt::Timeout { bound, body } => {
                let _ = writeln!(out, "{pad}timeout {bound} {{");
                emit(tcsd, body, depth + 1, out);
                let _ = writeln!(out, "{pad}}}");
            }
            Stmt::Frag { id, operands } => {
                let Some(frag) = d.fragment(*id) else { continue };
                match frag.operator {
                    Operator::Par | Operator::Alt => {
                        let _ = writeln!(out, "{pad}{} {{", frag.operator);
                        for op in operands {
                            let _ = writeln!(out, "{pad}    op {{");
                            emit(tcsd, op, depth + 2, out);
                            let _ = writeln!(out, "{pad}    }}");
                        }
                    }
                    Operator::Loop => {
                        let _ = writeln!(out, "{pad}loop {} {{", frag.loop_bound.unwrap_or(0));
                        emit_single(tcsd, operands, depth, out);
                    }
                    Operator::Opt | Operator::Strict => {
                        let _ = writeln!(out, "{pad}{} {{", frag.operator);
                        emit_single(tcsd, operands, depth, out);
                    }
                }
                let _ = writeln!(out, "{pad}}}");
            }
        }
    }
}

fn emit_single(tcsd: &Tcsd, operands: &[Vec<Stmt>], depth: usize, out: &mut String) {
    if let Some(op) = operands.first() {
        emit(tcsd, op, depth + 1, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_tcsd;

    fn round_trip(src: &str) {
        let first = parse_tcsd(src, "a.tcsd").unwrap().tcsd;
        let printed = print_tcsd(&first).unwrap();
        let second = parse_tcsd(&printed, "b.tcsd")
            .unwrap_or_else(|e| panic!("{e}\n{printed}"))
            .tcsd;
        assert_eq!(first, second, "{printed}");
        assert_eq!(printed, print_tcsd(&second).unwrap());
    }

    #[test]
    fn loop_round_trip() {
        round_trip("tcsd T { sut S test A loop 2 { msg S -> A : st } }");
    }

    #[test]
    fn nested_round_trip() {
        round_trip(
            r#"tcsd T { sut S test A test B
                msg A -> S : "go now"
                at 3
                timeout 4 {
                    msg S -> A : a
                    par { op { msg S -> B : b  opt { msg B -> S : c } } op { msg A -> S : "q\"uote" } }
                    timeout 2 { msg S -> B : d msg S -> B : e }
                }
                alt { op { strict { msg S -> A : f } } op { msg S -> A : g } }
                at 10
            }"#,
        );
    }

    #[test]
    fn reserved_words_as_labels() {
        round_trip("tcsd T { sut S test A msg S -> A : loop msg A -> S : at }");
    }

    #[test]
    fn rejects_pseudo_events() {
        let mut t = parse_tcsd("tcsd T { sut S test A msg S -> A : x }", "a")
            .unwrap()
            .tcsd;
        t.diagram.events[0].kind = EventKind::TimeoutStart;
        t.diagram.messages.clear();
        assert_eq!(print_tcsd(&t), Err(PrintError::Unrepresentable(EventId(0))));
    }
}
