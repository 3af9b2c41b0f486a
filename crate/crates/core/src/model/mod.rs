//! Sequence diagrams and test-case sequence diagrams (TCSDs).
//!
//! A [`Tcsd`] is built either by the DSL parser or programmatically and is
//! unchecked until it passes [`validate`]; the checked form is [`ValidTcsd`],
//! which is what translation consumes.

mod validate;
mod walk;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

pub use validate::{validate, Clause, ElementRef, Violation};
pub use walk::{SutWalk, WalkItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u32);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FragmentId(pub u32);

impl fmt::Display for FragmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Send,
    Receive,
    Enter(FragmentId),
    Exit(FragmentId),
    Partition,
    TimeoutStart,
    TimeoutEnd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub id: EventId,
    /// Index into [`SequenceDiagram::instances`].
    pub instance: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    /// Events of this lifeline in top-to-bottom order.
    pub events: Vec<EventId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub send: EventId,
    pub label: String,
    pub receive: EventId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Strict,
    Par,
    Opt,
    Alt,
    Loop,
}

impl Operator {
    pub fn keyword(self) -> &'static str {
        match self {
            Operator::Strict => "strict",
            Operator::Par => "par",
            Operator::Opt => "opt",
            Operator::Alt => "alt",
            Operator::Loop => "loop",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Operand {
    /// Every event inside the operand, including the enter/exit events and
    /// operand events of nested fragments.
    pub events: BTreeSet<EventId>,
    /// Directly nested fragments.
    pub children: Vec<FragmentId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub id: FragmentId,
    pub operator: Operator,
    pub operands: Vec<Operand>,
    /// Constant repetition count; present iff `operator` is `Loop`.
    pub loop_bound: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionLine {
    /// One event per instance line.
    pub events: Vec<EventId>,
    /// Absolute time stamp in ticks, relative to the start of the diagram.
    pub timestamp: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeout {
    pub start: EventId,
    pub end: EventId,
    pub bound: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SequenceDiagram {
    pub name: String,
    pub instances: Vec<Instance>,
    pub events: Vec<Event>,
    pub messages: Vec<Message>,
    pub fragments: Vec<Fragment>,
}

impl SequenceDiagram {
    pub fn instance_index(&self, name: &str) -> Option<usize> {
        self.instances.iter().position(|i| i.name == name)
    }

    pub fn event(&self, id: EventId) -> Option<&Event> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn fragment(&self, id: FragmentId) -> Option<&Fragment> {
        self.fragments.iter().find(|f| f.id == id)
    }

    /// Message owning `event` as an endpoint, if any.
    pub fn message_of(&self, event: EventId) -> Option<(usize, &Message)> {
        self.messages
            .iter()
            .enumerate()
            .find(|(_, m)| m.send == event || m.receive == event)
    }

    fn next_event_id(&self) -> u32 {
        self.events.iter().map(|e| e.id.0 + 1).max().unwrap_or(0)
    }
}

/// An unchecked test-case sequence diagram.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tcsd {
    pub diagram: SequenceDiagram,
    /// Index of the system-under-test lifeline.
    pub sut: usize,
    pub partitions: Vec<PartitionLine>,
    pub timeouts: Vec<Timeout>,
}

impl Tcsd {
    pub fn name(&self) -> &str {
        &self.diagram.name
    }

    pub fn sut_name(&self) -> &str {
        self.diagram
            .instances
            .get(self.sut)
            .map(|i| i.name.as_str())
            .unwrap_or("")
    }

    /// Copy with the implicit start line (δ = 0) added when none is declared.
    /// The new line's events go first on every lifeline.
    pub fn with_start_line(&self) -> Tcsd {
        let mut tcsd = self.clone();
        if tcsd.partitions.iter().any(|p| p.timestamp == 0) {
            return tcsd;
        }
        let first = tcsd.diagram.next_event_id();
        let mut events = Vec::with_capacity(tcsd.diagram.instances.len());
        for (index, instance) in tcsd.diagram.instances.iter_mut().enumerate() {
            let id = EventId(first + index as u32);
            instance.events.insert(0, id);
            tcsd.diagram.events.push(Event {
                id,
                instance: index,
                kind: EventKind::Partition,
            });
            events.push(id);
        }
        tcsd.partitions.push(PartitionLine {
            events,
            timestamp: 0,
        });
        tcsd
    }

    /// Validates and normalizes the diagram.
    pub fn validated(&self) -> Result<ValidTcsd, Vec<Violation>> {
        let violations = validate(self);
        if !violations.is_empty() {
            return Err(violations);
        }
        let mut tcsd = self.with_start_line();
        tcsd.partitions.sort_by_key(|p| p.timestamp);
        Ok(ValidTcsd::new(tcsd))
    }
}

/// A TCSD that passed validation: the start line is present, partitions are
/// sorted by time stamp, and every reference resolves.
#[derive(Debug, Clone)]
pub struct ValidTcsd {
    tcsd: Tcsd,
    positions: HashMap<EventId, usize>,
    owners: HashMap<EventId, usize>,
}

impl ValidTcsd {
    fn new(tcsd: Tcsd) -> Self {
        let mut positions = HashMap::new();
        let mut owners = HashMap::new();
        for (index, instance) in tcsd.diagram.instances.iter().enumerate() {
            for (pos, &e) in instance.events.iter().enumerate() {
                positions.insert(e, pos);
                owners.insert(e, index);
            }
        }
        ValidTcsd {
            tcsd,
            positions,
            owners,
        }
    }

    pub fn tcsd(&self) -> &Tcsd {
        &self.tcsd
    }

    pub fn into_inner(self) -> Tcsd {
        self.tcsd
    }

    /// Position of `event` on its own lifeline.
    pub fn position(&self, event: EventId) -> usize {
        self.positions[&event]
    }

    pub fn instance_of(&self, event: EventId) -> usize {
        self.owners[&event]
    }

    pub fn is_sut_event(&self, event: EventId) -> bool {
        self.owners.get(&event) == Some(&self.tcsd.sut)
    }

    pub fn sut_events(&self) -> &[EventId] {
        &self.tcsd.diagram.instances[self.tcsd.sut].events
    }

    /// The partition line `event` belongs to.
    pub fn partition_of(&self, event: EventId) -> Option<&PartitionLine> {
        self.tcsd
            .partitions
            .iter()
            .find(|p| p.events.contains(&event))
    }

    pub fn walk(&self) -> SutWalk {
        SutWalk::new(self)
    }
}

impl std::ops::Deref for ValidTcsd {
    type Target = Tcsd;

    fn deref(&self) -> &Tcsd {
        &self.tcsd
    }
}
