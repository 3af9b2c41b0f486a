use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use super::{EventId, EventKind, FragmentId, Operator, Tcsd};

/// A well-formedness rule for sequence diagrams and TCSDs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Clause {
    DanglingReference,
    DuplicateId,
    LifelineMembership,
    MessageEndpoints,
    MessageOrder,
    SutEndpoint,
    OperandCount,
    EmptyOperand,
    LoopBound,
    FragmentBounds,
    NoSelfNesting,
    NoSharedEvents,
    Containment,
    PartitionUniqueness,
    PartitionCompleteness,
    PartitionOrdering,
    NoFragmentCutting,
    TimeoutSutLine,
    TimeoutOrdered,
    TimeoutSameFragment,
    TimeoutBound,
    TimeoutSpansPartition,
}

impl Clause {
    pub fn name(self) -> &'static str {
        match self {
            Clause::DanglingReference => "malformed/dangling-reference",
            Clause::DuplicateId => "malformed/duplicate-id",
            Clause::LifelineMembership => "malformed/lifeline-membership",
            Clause::MessageEndpoints => "message/endpoints",
            Clause::MessageOrder => "message/order",
            Clause::SutEndpoint => "message/sut-endpoint",
            Clause::OperandCount => "fragment/operand-count",
            Clause::EmptyOperand => "fragment/empty-operand",
            Clause::LoopBound => "fragment/loop-bound",
            Clause::FragmentBounds => "fragment/bounds",
            Clause::NoSelfNesting => "diagram/no-self-nesting",
            Clause::NoSharedEvents => "diagram/no-shared-events",
            Clause::Containment => "diagram/containment",
            Clause::PartitionUniqueness => "partition/uniqueness",
            Clause::PartitionCompleteness => "partition/completeness",
            Clause::PartitionOrdering => "partition/ordering",
            Clause::NoFragmentCutting => "partition/no-fragment-cutting",
            Clause::TimeoutSutLine => "timeout/sut-line",
            Clause::TimeoutOrdered => "timeout/ordered",
            Clause::TimeoutSameFragment => "timeout/same-fragment",
            Clause::TimeoutBound => "timeout/bound",
            Clause::TimeoutSpansPartition => "timeout/spans-partition",
        }
    }

    /// Structural clauses checked before any semantic rule.
    pub fn is_malformed(self) -> bool {
        matches!(
            self,
            Clause::DanglingReference | Clause::DuplicateId | Clause::LifelineMembership
        )
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Diagram element named by a violation. Indices refer to the input TCSD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementRef {
    Instance(usize),
    Event(EventId),
    Message(usize),
    Fragment(FragmentId),
    Partition(usize),
    Timeout(usize),
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementRef::Instance(i) => write!(f, "instance#{i}"),
            ElementRef::Event(e) => write!(f, "{e}"),
            ElementRef::Message(m) => write!(f, "message#{m}"),
            ElementRef::Fragment(id) => write!(f, "{id}"),
            ElementRef::Partition(p) => write!(f, "partition#{p}"),
            ElementRef::Timeout(t) => write!(f, "timeout#{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub clause: Clause,
    pub elements: Vec<ElementRef>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.clause)?;
        for (i, e) in self.elements.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            write!(f, "{e}")?;
        }
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Report {
    seen: BTreeMap<(Clause, Vec<ElementRef>), String>,
}

impl Report {
    fn push(&mut self, clause: Clause, elements: Vec<ElementRef>, detail: impl Into<String>) {
        self.seen.entry((clause, elements)).or_insert_with(|| detail.into());
    }

    fn into_vec(self) -> Vec<Violation> {
        self.seen
            .into_iter()
            .map(|((clause, elements), detail)| Violation {
                clause,
                elements,
                detail,
            })
            .collect()
    }
}

/// Checks every well-formedness clause and returns the violations, sorted
/// and deduplicated. Malformed references are reported alone; semantic
/// clauses only run on structurally sound input.
pub fn validate(tcsd: &Tcsd) -> Vec<Violation> {
    let mut report = Report::default();
    check_references(tcsd, &mut report);
    if !report.seen.is_empty() {
        return report.into_vec();
    }
    let normalized = tcsd.with_start_line();
    let ctx = Context::new(&normalized);
    ctx.check_messages(&mut report);
    ctx.check_fragments(&mut report);
    ctx.check_partitions(&mut report);
    ctx.check_timeouts(&mut report);
    report.into_vec()
}

fn check_references(tcsd: &Tcsd, report: &mut Report) {
    let d = &tcsd.diagram;
    if tcsd.sut >= d.instances.len() {
        report.push(
            Clause::DanglingReference,
            vec![ElementRef::Instance(tcsd.sut)],
            "system under test is not an instance line",
        );
    }

    let mut events: HashMap<EventId, usize> = HashMap::new();
    for e in &d.events {
        if events.insert(e.id, e.instance).is_some() {
            report.push(
                Clause::DuplicateId,
                vec![ElementRef::Event(e.id)],
                "event id declared twice",
            );
        }
        if e.instance >= d.instances.len() {
            report.push(
                Clause::DanglingReference,
                vec![ElementRef::Event(e.id)],
                "event owned by an unknown instance line",
            );
        }
    }
    let fragments: HashSet<FragmentId> = d.fragments.iter().map(|f| f.id).collect();
    if fragments.len() != d.fragments.len() {
        let mut seen = HashSet::new();
        for f in &d.fragments {
            if !seen.insert(f.id) {
                report.push(
                    Clause::DuplicateId,
                    vec![ElementRef::Fragment(f.id)],
                    "fragment id declared twice",
                );
            }
        }
    }

    let mut listed: HashMap<EventId, usize> = HashMap::new();
    for (index, instance) in d.instances.iter().enumerate() {
        for &e in &instance.events {
            match events.get(&e) {
                None => report.push(
                    Clause::DanglingReference,
                    vec![ElementRef::Instance(index), ElementRef::Event(e)],
                    format!("lifeline {} lists an unknown event", instance.name),
                ),
                Some(&owner) if owner != index => report.push(
                    Clause::LifelineMembership,
                    vec![ElementRef::Instance(index), ElementRef::Event(e)],
                    format!("event listed on {} but owned by another line", instance.name),
                ),
                Some(_) => {}
            }
            if listed.insert(e, index).is_some() {
                report.push(
                    Clause::LifelineMembership,
                    vec![ElementRef::Event(e)],
                    "event listed more than once",
                );
            }
        }
    }
    for e in &d.events {
        if !listed.contains_key(&e.id) {
            report.push(
                Clause::LifelineMembership,
                vec![ElementRef::Event(e.id)],
                "event not placed on any lifeline",
            );
        }
        if let EventKind::Enter(f) | EventKind::Exit(f) = e.kind {
            if !fragments.contains(&f) {
                report.push(
                    Clause::DanglingReference,
                    vec![ElementRef::Event(e.id)],
                    format!("boundary event references unknown fragment {f}"),
                );
            }
        }
    }

    let known = |e: &EventId| events.contains_key(e);
    for (i, m) in d.messages.iter().enumerate() {
        if !known(&m.send) || !known(&m.receive) {
            report.push(
                Clause::DanglingReference,
                vec![ElementRef::Message(i)],
                "message endpoint is not an event",
            );
        }
    }
    for f in &d.fragments {
        for (n, op) in f.operands.iter().enumerate() {
            if op.events.iter().any(|e| !known(e)) {
                report.push(
                    Clause::DanglingReference,
                    vec![ElementRef::Fragment(f.id)],
                    format!("operand {n} lists an unknown event"),
                );
            }
            if op.children.iter().any(|c| !fragments.contains(c)) {
                report.push(
                    Clause::DanglingReference,
                    vec![ElementRef::Fragment(f.id)],
                    format!("operand {n} nests an unknown fragment"),
                );
            }
        }
    }
    for (i, p) in tcsd.partitions.iter().enumerate() {
        if p.events.iter().any(|e| !known(e)) {
            report.push(
                Clause::DanglingReference,
                vec![ElementRef::Partition(i)],
                "partition line references an unknown event",
            );
        }
    }
    for (i, t) in tcsd.timeouts.iter().enumerate() {
        if !known(&t.start) || !known(&t.end) {
            report.push(
                Clause::DanglingReference,
                vec![ElementRef::Timeout(i)],
                "timeout endpoint is not an event",
            );
        }
    }
}

struct Context<'a> {
    tcsd: &'a Tcsd,
    kinds: HashMap<EventId, EventKind>,
    /// (instance, position on that lifeline)
    place: HashMap<EventId, (usize, usize)>,
}

impl<'a> Context<'a> {
    fn new(tcsd: &'a Tcsd) -> Self {
        let kinds = tcsd.diagram.events.iter().map(|e| (e.id, e.kind)).collect();
        let mut place = HashMap::new();
        for (index, instance) in tcsd.diagram.instances.iter().enumerate() {
            for (pos, &e) in instance.events.iter().enumerate() {
                place.insert(e, (index, pos));
            }
        }
        Context { tcsd, kinds, place }
    }

    fn line(&self, e: EventId) -> usize {
        self.place[&e].0
    }

    fn pos(&self, e: EventId) -> usize {
        self.place[&e].1
    }

    fn check_messages(&self, report: &mut Report) {
        let sut = self.tcsd.sut;
        let mut owners: BTreeMap<EventId, Vec<usize>> = BTreeMap::new();
        for (i, m) in self.tcsd.diagram.messages.iter().enumerate() {
            let el = vec![ElementRef::Message(i)];
            if m.send == m.receive {
                report.push(Clause::MessageEndpoints, el.clone(), "send and receive coincide");
            }
            if self.kinds[&m.send] != EventKind::Send {
                report.push(Clause::MessageEndpoints, el.clone(), "send endpoint is not a send event");
            }
            if self.kinds[&m.receive] != EventKind::Receive {
                report.push(
                    Clause::MessageEndpoints,
                    el.clone(),
                    "receive endpoint is not a receive event",
                );
            }
            owners.entry(m.send).or_default().push(i);
            owners.entry(m.receive).or_default().push(i);

            let (sl, rl) = (self.line(m.send), self.line(m.receive));
            if sl == rl && self.pos(m.send) > self.pos(m.receive) {
                report.push(Clause::MessageOrder, el.clone(), "receive precedes send on the same lifeline");
            }
            if (sl == sut) == (rl == sut) {
                report.push(
                    Clause::SutEndpoint,
                    el,
                    format!("message '{}' needs exactly one endpoint on the SUT line", m.label),
                );
            }
        }
        for (&e, ms) in &owners {
            if ms.len() > 1 {
                let mut el = vec![ElementRef::Event(e)];
                el.extend(ms.iter().map(|&m| ElementRef::Message(m)));
                report.push(Clause::MessageEndpoints, el, "event shared by several messages");
            }
        }
        for e in &self.tcsd.diagram.events {
            if matches!(e.kind, EventKind::Send | EventKind::Receive) && !owners.contains_key(&e.id) {
                report.push(
                    Clause::MessageEndpoints,
                    vec![ElementRef::Event(e.id)],
                    "send/receive event belongs to no message",
                );
            }
        }
    }

    fn check_fragments(&self, report: &mut Report) {
        let frags = &self.tcsd.diagram.fragments;
        for f in frags {
            let el = vec![ElementRef::Fragment(f.id)];
            let n = f.operands.len();
            let count_ok = match f.operator {
                Operator::Strict | Operator::Loop | Operator::Opt => n == 1,
                Operator::Par | Operator::Alt => n >= 2,
            };
            if !count_ok {
                report.push(
                    Clause::OperandCount,
                    el.clone(),
                    format!("{} fragment with {n} operand(s)", f.operator),
                );
            }
            if matches!(f.operator, Operator::Par | Operator::Alt) {
                for (i, op) in f.operands.iter().enumerate() {
                    if op.events.is_empty() {
                        report.push(Clause::EmptyOperand, el.clone(), format!("operand {i} is empty"));
                    }
                }
            }
            if (f.operator == Operator::Loop) != f.loop_bound.is_some() {
                report.push(
                    Clause::LoopBound,
                    el.clone(),
                    "loop bound must be given exactly for loop fragments",
                );
            }
            for (i, a) in f.operands.iter().enumerate() {
                for (j, b) in f.operands.iter().enumerate().skip(i + 1) {
                    if !a.events.is_disjoint(&b.events) {
                        report.push(
                            Clause::NoSharedEvents,
                            el.clone(),
                            format!("operands {i} and {j} share events"),
                        );
                    }
                }
            }
            self.check_bounds(f, report);
        }

        // descendant sets over the nesting graph
        let children: HashMap<FragmentId, Vec<FragmentId>> = frags
            .iter()
            .map(|f| (f.id, f.operands.iter().flat_map(|o| o.children.iter().copied()).collect()))
            .collect();
        let mut descendants: HashMap<FragmentId, BTreeSet<FragmentId>> = HashMap::new();
        for f in frags {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<FragmentId> = children[&f.id].clone();
            while let Some(g) = stack.pop() {
                if seen.insert(g) {
                    stack.extend(children[&g].iter().copied());
                }
            }
            if seen.contains(&f.id) {
                report.push(
                    Clause::NoSelfNesting,
                    vec![ElementRef::Fragment(f.id)],
                    "fragment is nested inside itself",
                );
            }
            descendants.insert(f.id, seen);
        }

        for (a_idx, a) in frags.iter().enumerate() {
            for b in frags.iter().skip(a_idx + 1) {
                let related = descendants[&a.id].contains(&b.id) || descendants[&b.id].contains(&a.id);
                if related {
                    continue;
                }
                let shared = a
                    .operands
                    .iter()
                    .any(|x| b.operands.iter().any(|y| !x.events.is_disjoint(&y.events)));
                if shared {
                    report.push(
                        Clause::NoSharedEvents,
                        vec![ElementRef::Fragment(a.id), ElementRef::Fragment(b.id)],
                        "unrelated fragments share events",
                    );
                }
            }
        }

        for parent in frags {
            for (x, op) in parent.operands.iter().enumerate() {
                for child_id in &op.children {
                    let Some(child) = self.tcsd.diagram.fragment(*child_id) else {
                        continue;
                    };
                    let inside = child.operands.iter().all(|c| c.events.is_subset(&op.events));
                    if !inside {
                        report.push(
                            Clause::Containment,
                            vec![ElementRef::Fragment(parent.id), ElementRef::Fragment(child.id)],
                            format!("operand {x} does not contain all events of the nested fragment"),
                        );
                    }
                }
            }
        }
    }

    /// Enter/exit events bracket exactly the operand events on each lifeline,
    /// with operands laid out in declaration order.
    fn check_bounds(&self, f: &super::Fragment, report: &mut Report) {
        let lines = self.tcsd.diagram.instances.len();
        let mut enters: Vec<Vec<EventId>> = vec![Vec::new(); lines];
        let mut exits: Vec<Vec<EventId>> = vec![Vec::new(); lines];
        for e in &self.tcsd.diagram.events {
            match e.kind {
                EventKind::Enter(id) if id == f.id => enters[e.instance].push(e.id),
                EventKind::Exit(id) if id == f.id => exits[e.instance].push(e.id),
                _ => {}
            }
        }
        let mut operand_of: HashMap<EventId, usize> = HashMap::new();
        for (n, op) in f.operands.iter().enumerate() {
            for &e in &op.events {
                operand_of.insert(e, n);
            }
        }
        for line in 0..lines {
            let el = vec![ElementRef::Fragment(f.id), ElementRef::Instance(line)];
            let on_line: BTreeSet<EventId> = operand_of
                .keys()
                .copied()
                .filter(|&e| self.line(e) == line)
                .collect();
            match (enters[line].as_slice(), exits[line].as_slice()) {
                ([], []) => {
                    if !on_line.is_empty() {
                        report.push(
                            Clause::FragmentBounds,
                            el,
                            "operand events on a lifeline the fragment does not cover",
                        );
                    }
                }
                ([enter], [exit]) => {
                    let (a, b) = (self.pos(*enter), self.pos(*exit));
                    if a >= b {
                        report.push(Clause::FragmentBounds, el, "exit precedes enter");
                        continue;
                    }
                    let events = &self.tcsd.diagram.instances[line].events[a + 1..b];
                    let between: BTreeSet<EventId> = events.iter().copied().collect();
                    if between != on_line {
                        report.push(
                            Clause::FragmentBounds,
                            el,
                            "events between enter and exit differ from the operand events",
                        );
                        continue;
                    }
                    let ordered = events
                        .windows(2)
                        .all(|w| operand_of[&w[0]] <= operand_of[&w[1]]);
                    if !ordered {
                        report.push(Clause::FragmentBounds, el, "operands interleave on the lifeline");
                    }
                }
                _ => report.push(
                    Clause::FragmentBounds,
                    el,
                    "lifeline needs exactly one enter and one exit event",
                ),
            }
        }
    }

    fn check_partitions(&self, report: &mut Report) {
        let parts = &self.tcsd.partitions;
        let lines = self.tcsd.diagram.instances.len();

        let mut by_stamp: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, p) in parts.iter().enumerate() {
            by_stamp.entry(p.timestamp).or_default().push(i);
        }
        for (stamp, group) in &by_stamp {
            if group.len() > 1 {
                report.push(
                    Clause::PartitionUniqueness,
                    group.iter().map(|&i| ElementRef::Partition(i)).collect(),
                    format!("{} partition lines at time {stamp}", group.len()),
                );
            }
        }

        let mut complete = vec![false; parts.len()];
        let mut membership: HashMap<EventId, usize> = HashMap::new();
        for (i, p) in parts.iter().enumerate() {
            let el = vec![ElementRef::Partition(i)];
            let mut covered = vec![0usize; lines];
            for &e in &p.events {
                covered[self.line(e)] += 1;
                if self.kinds[&e] != EventKind::Partition {
                    report.push(
                        Clause::PartitionCompleteness,
                        el.clone(),
                        format!("{e} is not a partition event"),
                    );
                }
                if membership.insert(e, i).is_some() {
                    report.push(
                        Clause::PartitionCompleteness,
                        vec![ElementRef::Event(e)],
                        "event belongs to several partition lines",
                    );
                }
            }
            if covered.iter().all(|&c| c == 1) {
                complete[i] = true;
            } else {
                report.push(
                    Clause::PartitionCompleteness,
                    el,
                    "partition line needs exactly one event per lifeline",
                );
            }
        }
        for e in &self.tcsd.diagram.events {
            if e.kind == EventKind::Partition && !membership.contains_key(&e.id) {
                report.push(
                    Clause::PartitionCompleteness,
                    vec![ElementRef::Event(e.id)],
                    "partition event belongs to no partition line",
                );
            }
        }

        for (i, p) in parts.iter().enumerate() {
            for (j, q) in parts.iter().enumerate() {
                if !(complete[i] && complete[j]) || p.timestamp >= q.timestamp {
                    continue;
                }
                let consistent = p.events.iter().all(|&a| {
                    let line = self.line(a);
                    q.events
                        .iter()
                        .find(|&&b| self.line(b) == line)
                        .is_some_and(|&b| self.pos(a) < self.pos(b))
                });
                if !consistent {
                    report.push(
                        Clause::PartitionOrdering,
                        vec![ElementRef::Partition(i), ElementRef::Partition(j)],
                        format!(
                            "line at {} must precede line at {} on every lifeline",
                            p.timestamp, q.timestamp
                        ),
                    );
                }
            }
        }

        for (i, p) in parts.iter().enumerate() {
            for f in &self.tcsd.diagram.fragments {
                if f.operands.iter().any(|o| p.events.iter().any(|e| o.events.contains(e))) {
                    report.push(
                        Clause::NoFragmentCutting,
                        vec![ElementRef::Partition(i), ElementRef::Fragment(f.id)],
                        format!("partition line at {} cuts through the fragment", p.timestamp),
                    );
                }
            }
        }
    }

    fn check_timeouts(&self, report: &mut Report) {
        let sut = self.tcsd.sut;
        let sut_events = &self.tcsd.diagram.instances[sut].events;
        for (i, t) in self.tcsd.timeouts.iter().enumerate() {
            let el = vec![ElementRef::Timeout(i)];
            if t.bound == 0 {
                report.push(Clause::TimeoutBound, el.clone(), "timeout bound must be positive");
            }
            if self.line(t.start) != sut || self.line(t.end) != sut {
                report.push(Clause::TimeoutSutLine, el, "timeout endpoints must lie on the SUT line");
                continue;
            }
            let (a, b) = (self.pos(t.start), self.pos(t.end));
            if a >= b {
                report.push(Clause::TimeoutOrdered, el.clone(), "timeout start must precede its end");
            }
            for f in &self.tcsd.diagram.fragments {
                let split = f
                    .operands
                    .iter()
                    .any(|o| o.events.contains(&t.start) != o.events.contains(&t.end));
                if split {
                    report.push(
                        Clause::TimeoutSameFragment,
                        vec![ElementRef::Timeout(i), ElementRef::Fragment(f.id)],
                        "timeout endpoints lie in different operands",
                    );
                }
            }
            if a < b {
                for &e in &sut_events[a + 1..b] {
                    if let Some(p) = self.tcsd.partitions.iter().position(|p| p.events.contains(&e)) {
                        report.push(
                            Clause::TimeoutSpansPartition,
                            vec![ElementRef::Timeout(i), ElementRef::Partition(p)],
                            "timeout spans a partition line",
                        );
                    }
                }
            }
        }
    }
}
