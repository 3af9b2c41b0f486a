use std::collections::BTreeSet;

use super::lexer::Tok;
use super::{Cursor, ParseError, ParseErrorKind, ParsedTcsd, SourceSpan, SpanTable};
use crate::model::{
    ElementRef, Event, EventId, EventKind, Fragment, FragmentId, Instance, Message, Operand,
    Operator, PartitionLine, SequenceDiagram, Tcsd, Timeout,
};

const RESERVED: &[&str] = &[
    "tcsd", "sut", "test", "msg", "at", "timeout", "par", "alt", "opt", "strict", "loop", "op",
];

/// Parses one `.tcsd` document. `file` is only used in diagnostics.
///
/// Event and fragment ids are numbered in source order, so the same bytes
/// always produce the same ids.
pub fn parse_tcsd(source: &str, file: &str) -> Result<ParsedTcsd, ParseError> {
    let mut cursor = Cursor::new(source, file)?;
    let mut b = Builder::default();

    cursor.keyword("tcsd")?;
    let (name, _) = cursor.ident(RESERVED)?;
    b.diagram.name = name;
    cursor.expect(Tok::LBrace)?;

    cursor.keyword("sut")?;
    let (sut, span) = cursor.ident(RESERVED)?;
    b.declare(sut, span)?;
    if !cursor.is_keyword("test") {
        return Err(cursor.error(&["`test`"]));
    }
    while cursor.is_keyword("test") {
        cursor.advance();
        let (name, span) = cursor.ident(RESERVED)?;
        b.declare(name, span)?;
    }

    b.statements(&mut cursor)?;
    cursor.expect(Tok::RBrace)?;
    if *cursor.peek() != Tok::Eof {
        return Err(cursor.error(&["end of input"]));
    }

    Ok(ParsedTcsd {
        tcsd: Tcsd {
            diagram: b.diagram,
            sut: 0,
            partitions: b.partitions,
            timeouts: b.timeouts,
        },
        spans: b.spans,
    })
}

#[derive(Default)]
struct Builder {
    diagram: SequenceDiagram,
    partitions: Vec<PartitionLine>,
    timeouts: Vec<Timeout>,
    spans: SpanTable,
    /// Operands currently open, innermost last.
    open: Vec<(FragmentId, usize)>,
}

impl Builder {
    fn declare(&mut self, name: String, span: SourceSpan) -> Result<(), ParseError> {
        if self.diagram.instance_index(&name).is_some() {
            return Err(ParseError::new(
                ParseErrorKind::Duplicate,
                span,
                format!("duplicate instance `{name}`"),
                Vec::new(),
            ));
        }
        let index = self.diagram.instances.len();
        self.diagram.instances.push(Instance {
            name,
            events: Vec::new(),
        });
        self.spans.insert(ElementRef::Instance(index), span);
        Ok(())
    }

    fn instance(&self, name: &str, span: &SourceSpan) -> Result<usize, ParseError> {
        self.diagram.instance_index(name).ok_or_else(|| {
            ParseError::new(
                ParseErrorKind::UnknownName,
                span.clone(),
                format!("unknown instance `{name}`"),
                self.diagram
                    .instances
                    .iter()
                    .map(|i| format!("`{}`", i.name))
                    .collect(),
            )
        })
    }

    fn event(&mut self, instance: usize, kind: EventKind, span: &SourceSpan) -> EventId {
        let id = EventId(self.diagram.events.len() as u32);
        self.diagram.events.push(Event { id, instance, kind });
        self.diagram.instances[instance].events.push(id);
        for &(f, n) in &self.open {
            self.diagram.fragments[f.0 as usize].operands[n].events.insert(id);
        }
        self.spans.insert(ElementRef::Event(id), span.clone());
        id
    }

    fn statements(&mut self, cursor: &mut Cursor) -> Result<(), ParseError> {
        loop {
            let span = cursor.span();
            let Tok::Ident(word) = cursor.peek().clone() else {
                return Ok(());
            };
            match word.as_str() {
                "msg" => {
                    cursor.advance();
                    self.message(cursor, span)?;
                }
                "at" => {
                    cursor.advance();
                    let (stamp, _) = cursor.natural("at")?;
                    let lines = self.diagram.instances.len();
                    let events = (0..lines)
                        .map(|i| self.event(i, EventKind::Partition, &span))
                        .collect();
                    self.spans
                        .insert(ElementRef::Partition(self.partitions.len()), span);
                    self.partitions.push(PartitionLine {
                        events,
                        timestamp: stamp,
                    });
                }
                "timeout" => {
                    cursor.advance();
                    let (bound, _) = cursor.natural("timeout")?;
                    let before = self.diagram.instances[0].events.len();
                    cursor.expect(Tok::LBrace)?;
                    self.statements(cursor)?;
                    cursor.expect(Tok::RBrace)?;
                    let sut = &self.diagram.instances[0].events;
                    if sut.len() == before {
                        return Err(ParseError::new(
                            ParseErrorKind::EmptyTimeout,
                            span,
                            "timeout body has no event on the SUT line",
                            Vec::new(),
                        ));
                    }
                    let (start, end) = (sut[before], sut[sut.len() - 1]);
                    self.spans
                        .insert(ElementRef::Timeout(self.timeouts.len()), span);
                    self.timeouts.push(Timeout { start, end, bound });
                }
                "par" | "alt" => {
                    cursor.advance();
                    let op = if word == "par" { Operator::Par } else { Operator::Alt };
                    self.fragment(cursor, op, None, span, true)?;
                }
                "opt" | "strict" => {
                    cursor.advance();
                    let op = if word == "opt" { Operator::Opt } else { Operator::Strict };
                    self.fragment(cursor, op, None, span, false)?;
                }
                "loop" => {
                    cursor.advance();
                    let (bound, _) = cursor.natural("loop")?;
                    self.fragment(cursor, Operator::Loop, Some(bound), span, false)?;
                }
                _ => {
                    return Err(cursor.error(&[
                        "`msg`", "`at`", "`timeout`", "`par`", "`alt`", "`opt`", "`strict`",
                        "`loop`", "`}`",
                    ]))
                }
            }
        }
    }

    fn message(&mut self, cursor: &mut Cursor, span: SourceSpan) -> Result<(), ParseError> {
        let (from, from_span) = cursor.ident(RESERVED)?;
        let from = self.instance(&from, &from_span)?;
        cursor.expect(Tok::Arrow)?;
        let (to, to_span) = cursor.ident(RESERVED)?;
        let to = self.instance(&to, &to_span)?;
        cursor.expect(Tok::Colon)?;
        let label = match cursor.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) => {
                cursor.advance();
                s
            }
            _ => return Err(cursor.error(&["message label"])),
        };
        let send = self.event(from, EventKind::Send, &span);
        let receive = self.event(to, EventKind::Receive, &span);
        self.spans
            .insert(ElementRef::Message(self.diagram.messages.len()), span);
        self.diagram.messages.push(Message {
            send,
            label,
            receive,
        });
        Ok(())
    }

    fn fragment(
        &mut self,
        cursor: &mut Cursor,
        operator: Operator,
        loop_bound: Option<u32>,
        span: SourceSpan,
        multi: bool,
    ) -> Result<(), ParseError> {
        let id = FragmentId(self.diagram.fragments.len() as u32);
        self.diagram.fragments.push(Fragment {
            id,
            operator,
            operands: Vec::new(),
            loop_bound,
        });
        if let Some(&(parent, n)) = self.open.last() {
            self.diagram.fragments[parent.0 as usize].operands[n]
                .children
                .push(id);
        }
        self.spans.insert(ElementRef::Fragment(id), span.clone());

        let lines = self.diagram.instances.len();
        for i in 0..lines {
            self.event(i, EventKind::Enter(id), &span);
        }
        cursor.expect(Tok::LBrace)?;
        if multi {
            while cursor.is_keyword("op") {
                cursor.advance();
                self.operand(cursor, id)?;
            }
        } else {
            self.diagram.fragments[id.0 as usize].operands.push(Operand::default());
            self.open.push((id, 0));
            self.statements(cursor)?;
            self.open.pop();
        }
        let close = cursor.span();
        if *cursor.peek() != Tok::RBrace {
            let expected: &[&str] = if multi { &["`op`", "`}`"] } else { &["statement", "`}`"] };
            return Err(cursor.error(expected));
        }
        cursor.advance();
        for i in 0..lines {
            self.event(i, EventKind::Exit(id), &close);
        }
        Ok(())
    }

    fn operand(&mut self, cursor: &mut Cursor, id: FragmentId) -> Result<(), ParseError> {
        let frag = &mut self.diagram.fragments[id.0 as usize];
        let n = frag.operands.len();
        frag.operands.push(Operand {
            events: BTreeSet::new(),
            children: Vec::new(),
        });
        cursor.expect(Tok::LBrace)?;
        self.open.push((id, n));
        self.statements(cursor)?;
        self.open.pop();
        cursor.expect(Tok::RBrace)?;
        Ok(())
    }
}
