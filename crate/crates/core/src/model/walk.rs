use std::collections::HashMap;

use super::{EventId, EventKind, FragmentId, ValidTcsd};

/// SUT-line events arranged by fragment nesting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WalkItem {
    Event(EventId),
    Fragment {
        id: FragmentId,
        enter: EventId,
        exit: EventId,
        /// One entry per declared operand; operands without SUT events are empty.
        operands: Vec<Vec<WalkItem>>,
    },
}

impl WalkItem {
    fn flatten_into(&self, out: &mut Vec<EventId>) {
        match self {
            WalkItem::Event(e) => out.push(*e),
            WalkItem::Fragment {
                enter,
                exit,
                operands,
                ..
            } => {
                out.push(*enter);
                for op in operands {
                    for item in op {
                        item.flatten_into(out);
                    }
                }
                out.push(*exit);
            }
        }
    }
}

/// Cursor over the SUT lifeline. Operands of a fragment are visited one
/// after another in declaration order.
#[derive(Debug, Clone)]
pub struct SutWalk {
    order: Vec<EventId>,
    index: HashMap<EventId, usize>,
    items: Vec<WalkItem>,
    operands: HashMap<(FragmentId, usize), Vec<EventId>>,
}

struct Frame {
    id: FragmentId,
    enter: EventId,
    operands: Vec<Vec<WalkItem>>,
    /// Operand of the enclosing fragment that holds this one.
    slot: usize,
}

impl SutWalk {
    pub(super) fn new(tcsd: &ValidTcsd) -> Self {
        let diagram = &tcsd.diagram;
        let operand_index = |f: FragmentId, e: EventId| -> usize {
            diagram
                .fragment(f)
                .and_then(|frag| frag.operands.iter().position(|o| o.events.contains(&e)))
                .unwrap_or(0)
        };

        let mut root: Vec<WalkItem> = Vec::new();
        let mut stack: Vec<Frame> = Vec::new();
        fn push(root: &mut Vec<WalkItem>, stack: &mut [Frame], slot: usize, item: WalkItem) {
            match stack.last_mut() {
                None => root.push(item),
                Some(frame) => {
                    if frame.operands.len() <= slot {
                        frame.operands.resize_with(slot + 1, Vec::new);
                    }
                    frame.operands[slot].push(item);
                }
            }
        }

        for &e in tcsd.sut_events() {
            let kind = diagram.event(e).map(|ev| ev.kind).unwrap_or(EventKind::Send);
            let slot = stack.last().map(|f| operand_index(f.id, e)).unwrap_or(0);
            match kind {
                EventKind::Enter(id) => stack.push(Frame {
                    id,
                    enter: e,
                    operands: Vec::new(),
                    slot,
                }),
                EventKind::Exit(id) => {
                    let frame = stack.pop().expect("validated fragments are well nested");
                    debug_assert_eq!(frame.id, id);
                    let mut operands = frame.operands;
                    let declared = diagram.fragment(id).map_or(0, |f| f.operands.len());
                    if operands.len() < declared {
                        operands.resize_with(declared, Vec::new);
                    }
                    let item = WalkItem::Fragment {
                        id,
                        enter: frame.enter,
                        exit: e,
                        operands,
                    };
                    push(&mut root, &mut stack, frame.slot, item);
                }
                _ => push(&mut root, &mut stack, slot, WalkItem::Event(e)),
            }
        }

        let mut order = Vec::new();
        for item in &root {
            item.flatten_into(&mut order);
        }
        let index = order.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut operands = HashMap::new();
        collect_operands(&root, &mut operands);
        SutWalk {
            order,
            index,
            items: root,
            operands,
        }
    }

    /// SUT events in walk order.
    pub fn events(&self) -> &[EventId] {
        &self.order
    }

    pub fn items(&self) -> &[WalkItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Walk position of `e`, if it is a SUT event.
    pub fn position(&self, e: EventId) -> Option<usize> {
        self.index.get(&e).copied()
    }

    /// The immediately following SUT event; `None` at the last one.
    pub fn next(&self, e: EventId) -> Option<EventId> {
        let i = self.position(e)?;
        self.order.get(i + 1).copied()
    }

    pub fn first(&self, fragment: FragmentId, operand: usize) -> Option<EventId> {
        self.operands.get(&(fragment, operand))?.first().copied()
    }

    pub fn last(&self, fragment: FragmentId, operand: usize) -> Option<EventId> {
        self.operands.get(&(fragment, operand))?.last().copied()
    }
}

fn collect_operands(items: &[WalkItem], out: &mut HashMap<(FragmentId, usize), Vec<EventId>>) {
    for item in items {
        if let WalkItem::Fragment { id, operands, .. } = item {
            for (n, op) in operands.iter().enumerate() {
                let mut events = Vec::new();
                for it in op {
                    it.flatten_into(&mut events);
                }
                out.insert((*id, n), events);
                collect_operands(op, out);
            }
        }
    }
}
