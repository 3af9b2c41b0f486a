//! Compilation of a validated TCSD into a marked timed-arc Petri net.
//!
//! Only the SUT lifeline is translated. Its events form a main sequence of
//! transport-arc steps that carries one clock token from the start of the
//! diagram to the final place; fragments fork fresh tokens into branches
//! and join them again, and timeouts hang a waiting place off the main
//! sequence.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::model::{EventId, EventKind, FragmentId, Operator, ValidTcsd, WalkItem};
use crate::tapn::{Guard, Marking, PlaceId, Tapn, TapnError, TargetSpec, TransitionId};

/// Endpoint instance names and label of the message behind a labeled
/// transition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageRef {
    pub sender: String,
    pub receiver: String,
    pub label: String,
}

/// Net elements generated for one SUT-side fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentNet {
    pub fragment: FragmentId,
    pub operator: Operator,
    /// Fork and join transitions on the enclosing sequence.
    pub start: TransitionId,
    pub end: TransitionId,
    /// Number of branches forked by `start`.
    pub branches: usize,
    /// Nesting depth on the SUT line, 1 for top-level fragments.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationUnit {
    pub diagram: String,
    pub sut: String,
    pub net: Tapn,
    pub m0: Marking,
    pub target: TargetSpec,
    /// SUT event -> transitions generated for it. Loop bodies are unrolled,
    /// so an event inside a loop maps to one transition per iteration.
    pub event_map: BTreeMap<EventId, Vec<TransitionId>>,
    /// Labeled transition -> message it stands for.
    pub messages: BTreeMap<TransitionId, MessageRef>,
    pub fragments: Vec<FragmentNet>,
    pub start: TransitionId,
}

impl TranslationUnit {
    /// The message label of `t`, `None` for ε.
    pub fn label(&self, t: TransitionId) -> Option<&str> {
        self.net.transition(t).label.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("loop fragment {0} has no constant bound")]
    MissingLoopBound(FragmentId),
    #[error("timeouts {0} and {1} overlap without nesting")]
    OverlappingTimeouts(usize, usize),
    #[error("partition event {0} lies inside a fragment branch")]
    PartitionInBranch(EventId),
    #[error("event {0} cannot be translated")]
    UnsupportedEvent(EventId),
    #[error(transparent)]
    Net(#[from] TapnError),
}

pub fn translate(tcsd: &ValidTcsd) -> Result<TranslationUnit, TranslateError> {
    let walk = tcsd.walk();
    check_timeout_nesting(tcsd, &walk)?;

    let mut b = Builder {
        tcsd,
        net: Tapn::new(),
        places: 0,
        transitions: 0,
        waits: 0,
        event_map: BTreeMap::new(),
        messages: BTreeMap::new(),
        fragments: Vec::new(),
        starts: HashMap::new(),
        ends: HashMap::new(),
        open: HashMap::new(),
    };
    for (i, t) in tcsd.timeouts.iter().enumerate() {
        b.starts.entry(t.start).or_default().push(i);
        b.ends.entry(t.end).or_default().push(i);
    }

    let pre = b.net.add_place("pre")?;
    let start = b.net.add_transition("start", None)?;
    let p0 = b.place()?;
    b.net.add_input(pre, start, Guard::ANY)?;
    b.net.add_output(start, p0)?;

    let last = b.sequence(walk.items(), p0, 0)?;

    Ok(TranslationUnit {
        diagram: tcsd.name().to_string(),
        sut: tcsd.sut_name().to_string(),
        net: b.net,
        m0: Marking::new().with_token(pre, 0),
        target: TargetSpec::single(last),
        event_map: b.event_map,
        messages: b.messages,
        fragments: b.fragments,
        start,
    })
}

fn check_timeout_nesting(
    tcsd: &ValidTcsd,
    walk: &crate::model::SutWalk,
) -> Result<(), TranslateError> {
    let span = |i: usize| {
        let t = &tcsd.timeouts[i];
        (walk.position(t.start), walk.position(t.end))
    };
    for i in 0..tcsd.timeouts.len() {
        for j in i + 1..tcsd.timeouts.len() {
            let (Some(a0), Some(a1)) = span(i) else { continue };
            let (Some(b0), Some(b1)) = span(j) else { continue };
            if (a0 < b0 && b0 < a1 && a1 < b1) || (b0 < a0 && a0 < b1 && b1 < a1) {
                return Err(TranslateError::OverlappingTimeouts(i, j));
            }
        }
    }
    Ok(())
}

struct Builder<'a> {
    tcsd: &'a ValidTcsd,
    net: Tapn,
    places: u32,
    transitions: u32,
    waits: u32,
    event_map: BTreeMap<EventId, Vec<TransitionId>>,
    messages: BTreeMap<TransitionId, MessageRef>,
    fragments: Vec<FragmentNet>,
    /// event -> timeouts starting / ending there
    starts: HashMap<EventId, Vec<usize>>,
    ends: HashMap<EventId, Vec<usize>>,
    /// timeout -> waiting places not yet consumed (innermost last)
    open: HashMap<usize, Vec<PlaceId>>,
}

impl Builder<'_> {
    fn place(&mut self) -> Result<PlaceId, TranslateError> {
        let p = self.net.add_place(format!("P{}", self.places))?;
        self.places += 1;
        Ok(p)
    }

    fn transition(&mut self, label: Option<String>) -> Result<TransitionId, TranslateError> {
        let t = self.net.add_transition(format!("T{}", self.transitions), label)?;
        self.transitions += 1;
        Ok(t)
    }

    /// Attaches timeout waiting places to the transition of `e`.
    fn anchor(&mut self, e: EventId, t: TransitionId) -> Result<(), TranslateError> {
        self.event_map.entry(e).or_default().push(t);
        for i in self.ends.get(&e).cloned().unwrap_or_default() {
            if let Some(w) = self.open.get_mut(&i).and_then(Vec::pop) {
                let bound = self.tcsd.timeouts[i].bound;
                self.net.add_input(w, t, Guard::closed(0, bound))?;
            }
        }
        for i in self.starts.get(&e).cloned().unwrap_or_default() {
            let w = self.net.add_place(format!("W{}", self.waits))?;
            self.waits += 1;
            self.net.add_output(t, w)?;
            self.open.entry(i).or_default().push(w);
        }
        Ok(())
    }

    fn anchors_timeout(&self, e: EventId) -> bool {
        self.starts.contains_key(&e) || self.ends.contains_key(&e)
    }

    /// Appends `items` after `cur` and returns the last place.
    fn sequence(
        &mut self,
        items: &[WalkItem],
        mut cur: PlaceId,
        depth: usize,
    ) -> Result<PlaceId, TranslateError> {
        for item in items {
            cur = match item {
                WalkItem::Event(e) => self.event(*e, cur, depth)?,
                WalkItem::Fragment {
                    id,
                    enter,
                    exit,
                    operands,
                } => self.fragment(*id, *enter, *exit, operands, cur, depth)?,
            };
        }
        Ok(cur)
    }

    fn step(
        &mut self,
        cur: PlaceId,
        guard: Guard,
        label: Option<String>,
    ) -> Result<(TransitionId, PlaceId), TranslateError> {
        let t = self.transition(label)?;
        let next = self.place()?;
        self.net.add_transport(cur, t, next, guard)?;
        Ok((t, next))
    }

    fn event(&mut self, e: EventId, cur: PlaceId, depth: usize) -> Result<PlaceId, TranslateError> {
        let diagram = &self.tcsd.diagram;
        let kind = diagram
            .event(e)
            .map(|ev| ev.kind)
            .ok_or(TranslateError::UnsupportedEvent(e))?;
        let (t, next) = match kind {
            EventKind::Send | EventKind::Receive => {
                let (_, m) = diagram
                    .message_of(e)
                    .ok_or(TranslateError::UnsupportedEvent(e))?;
                let name = |x: EventId| {
                    diagram.instances[self.tcsd.instance_of(x)].name.clone()
                };
                let message = MessageRef {
                    sender: name(m.send),
                    receiver: name(m.receive),
                    label: m.label.clone(),
                };
                let (t, next) = self.step(cur, Guard::ANY, Some(message.label.clone()))?;
                self.messages.insert(t, message);
                (t, next)
            }
            EventKind::Partition => {
                if depth > 0 {
                    return Err(TranslateError::PartitionInBranch(e));
                }
                let delta = self
                    .tcsd
                    .partition_of(e)
                    .map(|p| p.timestamp)
                    .ok_or(TranslateError::UnsupportedEvent(e))?;
                self.step(cur, Guard::exactly(delta), None)?
            }
            EventKind::TimeoutStart | EventKind::TimeoutEnd => self.step(cur, Guard::ANY, None)?,
            // strict fragment borders: nothing to do unless a timeout is anchored here
            EventKind::Enter(_) | EventKind::Exit(_) => {
                if !self.anchors_timeout(e) {
                    return Ok(cur);
                }
                self.step(cur, Guard::ANY, None)?
            }
        };
        self.anchor(e, t)?;
        Ok(next)
    }

    fn fragment(
        &mut self,
        id: FragmentId,
        enter: EventId,
        exit: EventId,
        operands: &[Vec<WalkItem>],
        cur: PlaceId,
        depth: usize,
    ) -> Result<PlaceId, TranslateError> {
        let frag = self
            .tcsd
            .diagram
            .fragment(id)
            .ok_or(TranslateError::UnsupportedEvent(enter))?;
        let operator = frag.operator;
        if operator == Operator::Strict {
            let cur = self.event(enter, cur, depth)?;
            let cur = self.sequence(operands.first().map_or(&[][..], |o| o), cur, depth)?;
            return self.event(exit, cur, depth);
        }

        let (t_start, mid) = self.step(cur, Guard::ANY, None)?;
        self.anchor(enter, t_start)?;

        let mut branch_ends = Vec::new();
        match operator {
            Operator::Loop => {
                let bound = frag.loop_bound.ok_or(TranslateError::MissingLoopBound(id))?;
                let body = operands.first().map_or(&[][..], |o| o);
                let mut p = self.place()?;
                self.net.add_output(t_start, p)?;
                for _ in 0..bound {
                    p = self.sequence(body, p, depth + 1)?;
                }
                branch_ends.push(p);
            }
            _ => {
                for op in operands {
                    let p = self.place()?;
                    self.net.add_output(t_start, p)?;
                    branch_ends.push(self.sequence(op, p, depth + 1)?);
                }
            }
        }

        let (t_end, next) = self.step(mid, Guard::ANY, None)?;
        for &p in &branch_ends {
            self.net.add_input(p, t_end, Guard::ANY)?;
        }
        self.anchor(exit, t_end)?;
        self.fragments.push(FragmentNet {
            fragment: id,
            operator,
            start: t_start,
            end: t_end,
            branches: branch_ends.len(),
            depth: depth + 1,
        });
        Ok(next)
    }
}

/// Element counts of a translated net, for checking a translation against
/// its source diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralReport {
    pub places: usize,
    pub transitions: usize,
    /// Transitions carrying a message label.
    pub labeled: usize,
    /// Transitions whose main-sequence input arc is guarded `[δ,δ]`.
    pub partition_steps: usize,
    /// ε-labeled transitions, including the start transition.
    pub silent: usize,
    /// (fragment, operator, number of branches) per translated fragment.
    pub branches: Vec<(FragmentId, Operator, usize)>,
    /// Deepest fragment nesting on the SUT line.
    pub branch_depth: usize,
    /// Timeout waiting places.
    pub timeouts: usize,
    pub c_max: u32,
}

pub fn structural_report(tu: &TranslationUnit) -> StructuralReport {
    let net = &tu.net;
    let labeled = net.transitions().iter().filter(|t| t.label.is_some()).count();
    let partition_steps = net
        .transport_arcs()
        .iter()
        .filter(|a| matches!(a.guard.upper, crate::tapn::Upper::Closed(b) if b == a.guard.lower))
        .count();
    let mut branches: Vec<_> = tu
        .fragments
        .iter()
        .map(|f| (f.fragment, f.operator, f.branches))
        .collect();
    branches.sort_by_key(|b| b.0);
    StructuralReport {
        places: net.places().len(),
        transitions: net.transitions().len(),
        labeled,
        partition_steps,
        silent: net.transitions().len() - labeled,
        branches,
        branch_depth: tu.fragments.iter().map(|f| f.depth).max().unwrap_or(0),
        timeouts: net.places().iter().filter(|p| p.name.starts_with('W')).count(),
        c_max: net.c_max(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_tcsd;
    use crate::tapn::{ReachOptions, Upper, Verdict};

    fn unit(src: &str) -> TranslationUnit {
        let tcsd = parse_tcsd(src, "t.tcsd").unwrap().tcsd;
        translate(&tcsd.validated().unwrap()).unwrap()
    }

    fn reachable(tu: &TranslationUnit) -> bool {
        tu.net
            .reachable(&tu.m0, &tu.target, &ReachOptions::default())
            .unwrap()
            .verdict
            == Verdict::Reachable
    }

    #[test]
    fn degenerate_diagram() {
        let tu = unit("tcsd T { sut S test A }");
        assert_eq!(tu.net.places().len(), 3);
        assert_eq!(tu.net.transitions().len(), 2);
        assert_eq!(tu.m0.total(), 1);
        let tau0 = tu.net.transport_arcs()[0];
        assert_eq!(tau0.guard, Guard::exactly(0));
        assert_eq!(tu.target, TargetSpec::single(tau0.target));
        assert!(reachable(&tu));
    }

    #[test]
    fn start_uses_normal_arcs() {
        let tu = unit("tcsd T { sut S test A msg A -> S : x }");
        let start = tu.start;
        let input = tu.net.input_arcs().iter().find(|a| a.transition == start).unwrap();
        assert_eq!(input.guard, Guard::ANY);
        assert!(tu.net.output_arcs().iter().any(|a| a.transition == start));
        assert!(tu.net.transport_arcs().iter().all(|a| a.transition != start));
    }

    #[test]
    fn message_chain_with_partitions() {
        let tu = unit(
            "tcsd T { sut S test A msg A -> S : x at 3 msg S -> A : y msg A -> S : z at 7 }",
        );
        let r = structural_report(&tu);
        assert_eq!(r.labeled, 3);
        assert_eq!(r.partition_steps, 3);
        assert_eq!(r.transitions, 3 + 3 + 1);
        let labels: Vec<_> = tu.messages.values().map(|m| m.label.as_str()).collect();
        assert_eq!(labels, ["x", "y", "z"]);
        let x = tu.messages.iter().find(|(_, m)| m.label == "x").unwrap();
        assert_eq!((x.1.sender.as_str(), x.1.receiver.as_str()), ("A", "S"));
        let guards: Vec<_> = tu.net.transport_arcs().iter().map(|a| a.guard.to_string()).collect();
        assert_eq!(guards, ["[0,0]", "[0,∞)", "[3,3]", "[0,∞)", "[0,∞)", "[7,7]"]);
        assert!(reachable(&tu));
    }

    #[test]
    fn par_forks_and_joins() {
        let tu = unit(
            "tcsd T { sut S test A par { op { msg S -> A : a } op { msg S -> A : b msg A -> S : c } } }",
        );
        assert_eq!(tu.fragments.len(), 1);
        let f = &tu.fragments[0];
        assert_eq!(f.branches, 2);
        let forks = tu.net.output_arcs().iter().filter(|a| a.transition == f.start).count();
        assert_eq!(forks, 2);
        let joins = tu.net.input_arcs().iter().filter(|a| a.transition == f.end).count()
            + tu.net.transport_arcs().iter().filter(|a| a.transition == f.end).count();
        assert_eq!(joins, 3);
        assert!(reachable(&tu));
    }

    #[test]
    fn strict_adds_nothing() {
        let plain = unit("tcsd T { sut S test A msg S -> A : a }");
        let strict = unit("tcsd T { sut S test A strict { msg S -> A : a } }");
        assert_eq!(plain.net.places().len(), strict.net.places().len());
        assert_eq!(plain.net.transitions().len(), strict.net.transitions().len());
    }

    #[test]
    fn loop_unrolls_body() {
        let tu = unit("tcsd T { sut S test A loop 3 { msg S -> A : st } }");
        assert_eq!(structural_report(&tu).labeled, 3);
        let send = tu.event_map.iter().find(|(_, ts)| ts.len() == 3);
        assert!(send.is_some());
        assert!(reachable(&tu));

        let zero = unit("tcsd T { sut S test A loop 0 { msg S -> A : st } }");
        assert_eq!(structural_report(&zero).labeled, 0);
        assert_eq!(zero.fragments[0].branches, 1);
        assert!(reachable(&zero));
    }

    #[test]
    fn timeout_adds_wait_place() {
        let tu = unit("tcsd T { sut S test A timeout 5 { msg S -> A : a msg A -> S : b } }");
        let w = tu.net.place_by_name("W0").unwrap();
        let out = tu.net.output_arcs().iter().find(|a| a.place == w).unwrap();
        let inp = tu.net.input_arcs().iter().find(|a| a.place == w).unwrap();
        assert_eq!(tu.label(out.transition), Some("a"));
        assert_eq!(tu.label(inp.transition), Some("b"));
        assert_eq!(inp.guard.upper, Upper::Closed(5));
        assert!(reachable(&tu));
    }

    #[test]
    fn overlapping_timeouts_are_rejected() {
        use crate::model::Timeout;
        let mut tcsd = parse_tcsd(
            "tcsd T { sut S test A msg S -> A : a msg S -> A : b msg S -> A : c msg S -> A : d }",
            "t",
        )
        .unwrap()
        .tcsd;
        let sends: Vec<EventId> = tcsd.diagram.messages.iter().map(|m| m.send).collect();
        let timeout = |start, end| Timeout { start, end, bound: 3 };
        tcsd.timeouts = vec![timeout(sends[0], sends[2]), timeout(sends[1], sends[3])];
        let valid = tcsd.validated().unwrap();
        assert_eq!(translate(&valid), Err(TranslateError::OverlappingTimeouts(0, 1)));

        tcsd.timeouts = vec![timeout(sends[0], sends[3]), timeout(sends[1], sends[2])];
        assert!(translate(&tcsd.validated().unwrap()).is_ok());
        tcsd.timeouts = vec![timeout(sends[0], sends[1]), timeout(sends[1], sends[2])];
        assert!(translate(&tcsd.validated().unwrap()).is_ok());
    }

    #[test]
    fn deterministic() {
        let src = "tcsd T { sut S test A alt { op { msg S -> A : a } op { opt { msg A -> S : b } } } at 4 }";
        assert_eq!(unit(src), unit(src));
    }
}
