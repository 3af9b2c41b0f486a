use std::collections::BTreeMap;

use super::lexer::Tok;
use super::{Cursor, ParseError, ParseErrorKind, SourceSpan};

const RESERVED: &[&str] = &["architecture", "components", "bind", "sut"];

/// How the instance lines of one TCSD map onto architecture components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub sut: String,
    /// test instance name -> component name
    pub tests: BTreeMap<String, String>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub name: String,
    /// Declaration order.
    pub components: Vec<String>,
    /// TCSD name -> binding.
    pub bindings: BTreeMap<String, Binding>,
}

impl Architecture {
    pub fn has_component(&self, name: &str) -> bool {
        self.components.iter().any(|c| c == name)
    }
}

pub fn parse_architecture(source: &str, file: &str) -> Result<Architecture, ParseError> {
    let mut cursor = Cursor::new(source, file)?;
    cursor.keyword("architecture")?;
    let (name, _) = cursor.ident(RESERVED)?;
    cursor.expect(Tok::LBrace)?;

    let mut arch = Architecture {
        name,
        components: Vec::new(),
        bindings: BTreeMap::new(),
    };

    if cursor.is_keyword("components") {
        cursor.advance();
        if matches!(cursor.peek(), Tok::Ident(s) if !RESERVED.contains(&s.as_str())) {
            loop {
                let (component, span) = cursor.ident(RESERVED)?;
                if arch.has_component(&component) {
                    return Err(ParseError::new(
                        ParseErrorKind::Duplicate,
                        span,
                        format!("component `{component}` declared twice"),
                        Vec::new(),
                    ));
                }
                arch.components.push(component);
                if *cursor.peek() != Tok::Comma {
                    break;
                }
                cursor.advance();
            }
        }
    }

    while cursor.is_keyword("bind") {
        let span = cursor.advance().span;
        let (tcsd, _) = cursor.ident(RESERVED)?;
        if arch.bindings.contains_key(&tcsd) {
            return Err(ParseError::new(
                ParseErrorKind::Duplicate,
                span,
                format!("second binding for `{tcsd}`"),
                Vec::new(),
            ));
        }
        cursor.expect(Tok::LBrace)?;
        cursor.keyword("sut")?;
        cursor.expect(Tok::Equals)?;
        let (sut, sut_span) = cursor.ident(RESERVED)?;
        known_component(&arch, &sut, sut_span)?;

        let mut tests = BTreeMap::new();
        while let Tok::Ident(_) = cursor.peek() {
            let (instance, inst_span) = cursor.ident(RESERVED)?;
            cursor.expect(Tok::Arrow)?;
            let (component, comp_span) = cursor.ident(RESERVED)?;
            known_component(&arch, &component, comp_span)?;
            if tests.insert(instance.clone(), component).is_some() {
                return Err(ParseError::new(
                    ParseErrorKind::Duplicate,
                    inst_span,
                    format!("instance `{instance}` mapped twice"),
                    Vec::new(),
                ));
            }
        }
        if *cursor.peek() != Tok::RBrace {
            return Err(cursor.error(&["instance mapping", "`}`"]));
        }
        cursor.advance();
        arch.bindings.insert(tcsd, Binding { sut, tests, span });
    }

    if *cursor.peek() != Tok::RBrace {
        return Err(cursor.error(&["`bind`", "`}`"]));
    }
    cursor.advance();
    if *cursor.peek() != Tok::Eof {
        return Err(cursor.error(&["end of input"]));
    }
    Ok(arch)
}

fn known_component(arch: &Architecture, name: &str, span: SourceSpan) -> Result<(), ParseError> {
    if arch.has_component(name) {
        Ok(())
    } else {
        Err(ParseError::new(
            ParseErrorKind::UnknownName,
            span,
            format!("unknown component `{name}`"),
            arch.components.iter().map(|c| format!("`{c}`")).collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bscu_binding() {
        let arch = parse_architecture(
            "architecture BSCU { components Command1, Monitor1, Switch bind TC_Com { sut = Command1 M -> Monitor1 } }",
            "bscu.arch",
        )
        .unwrap();
        assert_eq!(arch.components, ["Command1", "Monitor1", "Switch"]);
        assert_eq!(arch.bindings.len(), 1);
        let b = &arch.bindings["TC_Com"];
        assert_eq!(b.sut, "Command1");
        assert_eq!(b.tests["M"], "Monitor1");
    }

    #[test]
    fn empty_components() {
        let arch = parse_architecture("architecture Empty { components }", "e.arch").unwrap();
        assert!(arch.components.is_empty());
        assert!(arch.bindings.is_empty());
        let arch = parse_architecture("architecture Empty { }", "e.arch").unwrap();
        assert!(arch.components.is_empty());
    }

    #[test]
    fn unknown_component() {
        let err = parse_architecture(
            "architecture A { components Switch bind T { sut = Switch V -> Valve } }",
            "a.arch",
        )
        .unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownName);
        assert!(err.message.contains("unknown component"), "{err}");
        assert_eq!((err.span.line, err.span.column), (1, 63));
    }

    #[test]
    fn duplicate_binding() {
        let err = parse_architecture(
            "architecture A { components X, Y\n bind T { sut = X }\n bind T { sut = Y } }",
            "a.arch",
        )
        .unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Duplicate);
        assert_eq!(err.span.line, 3);
    }
}
