//! Virtual integration: relate instance lines through the architecture,
//! synchronize compatible messages across translated test cases, and check
//! the merged net for reachability of the joint target.

mod check;
mod matching;
mod merge;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::Tcsd;
use crate::parser::Architecture;
use crate::tapn::{ReachError, TapnError};
use crate::translate::MessageRef;

pub use check::{
    blocking, check_consistency, classify, AnalysisReport, BlockingTransition, CheckOptions,
    Classification, Overall, PairNames, Status, Verdict, WitnessStep,
};
pub use matching::{enumerate_matchings, Matchings, Policy, SyncMatching, SyncPair};
pub use merge::{merge, MergedNet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrateError {
    #[error("no binding for test case `{0}` in the architecture")]
    Unbound(String),
    #[error("instance `{instance}` of `{tcsd}` is not mapped to a component")]
    UnboundInstance { tcsd: String, instance: String },
    #[error("binding for `{tcsd}` maps `{instance}`, which is not a test instance of that diagram")]
    UnknownInstance { tcsd: String, instance: String },
    #[error("test instance `{instance}` of `{tcsd}` is mapped to the diagram's own SUT component, making its messages SUT self-messages")]
    SelfMapped { tcsd: String, instance: String },
    #[error("test cases `{first}` and `{second}` both test component `{component}`")]
    DuplicateSut {
        component: String,
        first: String,
        second: String,
    },
    #[error("at least two test cases are needed, got {0}")]
    TooFewUnits(usize),
    #[error("unmatched message occurrences: {}", .0.join(", "))]
    Unmatched(Vec<String>),
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Net(#[from] TapnError),
}

/// Instance lines of bound test cases mapped onto architecture components.
/// Two lines are related when they map to the same component.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceMap {
    map: BTreeMap<(String, String), String>,
    suts: BTreeMap<String, String>,
}

impl InstanceMap {
    /// Builds the map for `tcsds` from their bindings in `arch`. Fails if a
    /// diagram or one of its instance lines is unbound, or if two diagrams
    /// test the same component.
    pub fn from_architecture(arch: &Architecture, tcsds: &[&Tcsd]) -> Result<Self, IntegrateError> {
        let mut out = InstanceMap::default();
        let mut tested: BTreeMap<&str, &str> = BTreeMap::new();
        for tcsd in tcsds {
            let name = tcsd.name();
            let binding = arch
                .bindings
                .get(name)
                .ok_or_else(|| IntegrateError::Unbound(name.to_string()))?;
            if let Some(first) = tested.insert(binding.sut.as_str(), name) {
                return Err(IntegrateError::DuplicateSut {
                    component: binding.sut.clone(),
                    first: first.to_string(),
                    second: name.to_string(),
                });
            }
            for instance in binding.tests.keys() {
                let is_test = tcsd
                    .diagram
                    .instance_index(instance)
                    .is_some_and(|i| i != tcsd.sut);
                if !is_test {
                    return Err(IntegrateError::UnknownInstance {
                        tcsd: name.to_string(),
                        instance: instance.clone(),
                    });
                }
            }
            for (index, instance) in tcsd.diagram.instances.iter().enumerate() {
                let component = if index == tcsd.sut {
                    binding.sut.clone()
                } else {
                    let c = binding.tests.get(&instance.name).ok_or_else(|| {
                        IntegrateError::UnboundInstance {
                            tcsd: name.to_string(),
                            instance: instance.name.clone(),
                        }
                    })?;
                    if *c == binding.sut && talks(tcsd, index) {
                        return Err(IntegrateError::SelfMapped {
                            tcsd: name.to_string(),
                            instance: instance.name.clone(),
                        });
                    }
                    c.clone()
                };
                out.map.insert((name.to_string(), instance.name.clone()), component);
            }
            out.suts.insert(name.to_string(), binding.sut.clone());
        }
        Ok(out)
    }

    /// Map with explicit entries, for callers that do not use an
    /// architecture file.
    pub fn from_entries<'a>(
        entries: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>,
        suts: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Self {
        InstanceMap {
            map: entries
                .into_iter()
                .map(|(d, i, c)| ((d.to_string(), i.to_string()), c.to_string()))
                .collect(),
            suts: suts
                .into_iter()
                .map(|(d, c)| (d.to_string(), c.to_string()))
                .collect(),
        }
    }

    pub fn component(&self, diagram: &str, instance: &str) -> Option<&str> {
        self.map
            .get(&(diagram.to_string(), instance.to_string()))
            .map(String::as_str)
    }

    /// Component tested by `diagram`.
    pub fn sut_component(&self, diagram: &str) -> Option<&str> {
        self.suts.get(diagram).map(String::as_str)
    }

    fn require(&self, diagram: &str, instance: &str) -> Result<&str, IntegrateError> {
        self.component(diagram, instance)
            .ok_or_else(|| IntegrateError::UnboundInstance {
                tcsd: diagram.to_string(),
                instance: instance.to_string(),
            })
    }

    /// (sender component, label, receiver component)
    pub(crate) fn key(
        &self,
        diagram: &str,
        m: &MessageRef,
    ) -> Result<(String, String, String), IntegrateError> {
        Ok((
            self.require(diagram, &m.sender)?.to_string(),
            m.label.clone(),
            self.require(diagram, &m.receiver)?.to_string(),
        ))
    }
}

fn talks(tcsd: &Tcsd, instance: usize) -> bool {
    let d = &tcsd.diagram;
    d.messages.iter().any(|m| {
        [m.send, m.receive]
            .iter()
            .any(|&e| d.event(e).is_some_and(|ev| ev.instance == instance))
    })
}

/// A message as it occurs in one test case.
#[derive(Debug, Clone, Copy)]
pub struct MessageOccurrence<'a> {
    pub diagram: &'a str,
    pub message: &'a MessageRef,
}

/// Senders related, labels byte-equal, receivers related.
pub fn compatible(
    m1: MessageOccurrence<'_>,
    m2: MessageOccurrence<'_>,
    map: &InstanceMap,
) -> Result<bool, IntegrateError> {
    Ok(map.key(m1.diagram, m1.message)? == map.key(m2.diagram, m2.message)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_architecture, parse_tcsd};

    fn msg(sender: &str, label: &str, receiver: &str) -> MessageRef {
        MessageRef {
            sender: sender.into(),
            receiver: receiver.into(),
            label: label.into(),
        }
    }

    fn bscu_map() -> InstanceMap {
        InstanceMap::from_entries(
            [
                ("TC_Com", "Command1", "Command1"),
                ("TC_Com", "M", "Switch"),
                ("TC_Switch", "Switch", "Switch"),
                ("TC_Switch", "C", "Command1"),
            ],
            [("TC_Com", "Command1"), ("TC_Switch", "Switch")],
        )
    }

    #[test]
    fn compatibility() {
        let map = bscu_map();
        let a = msg("Command1", "CMD1", "M");
        let b = msg("C", "CMD1", "Switch");
        let c = msg("C", "CMD2", "Switch");
        let occ = |diagram, message| MessageOccurrence { diagram, message };
        assert!(compatible(occ("TC_Com", &a), occ("TC_Switch", &b), &map).unwrap());
        assert!(compatible(occ("TC_Switch", &b), occ("TC_Com", &a), &map).unwrap());
        assert!(!compatible(occ("TC_Com", &a), occ("TC_Switch", &c), &map).unwrap());
        let wrong_sender = msg("Switch", "CMD1", "Switch");
        assert!(!compatible(occ("TC_Com", &a), occ("TC_Switch", &wrong_sender), &map).unwrap());
        let unbound = msg("X", "CMD1", "Switch");
        assert!(compatible(occ("TC_Com", &a), occ("TC_Switch", &unbound), &map).is_err());
    }

    #[test]
    fn map_from_architecture() {
        let arch = parse_architecture(
            "architecture A { components P, Q bind T1 { sut = P B -> Q } bind T2 { sut = Q A -> P } }",
            "a",
        )
        .unwrap();
        let t1 = parse_tcsd("tcsd T1 { sut S test B msg S -> B : x }", "t1").unwrap().tcsd;
        let t2 = parse_tcsd("tcsd T2 { sut S test A msg A -> S : x }", "t2").unwrap().tcsd;
        let map = InstanceMap::from_architecture(&arch, &[&t1, &t2]).unwrap();
        assert_eq!(map.component("T1", "S"), Some("P"));
        assert_eq!(map.component("T2", "A"), Some("P"));
        assert_eq!(map.sut_component("T2"), Some("Q"));

        let t3 = parse_tcsd("tcsd T3 { sut S test A }", "t3").unwrap().tcsd;
        assert_eq!(
            InstanceMap::from_architecture(&arch, &[&t1, &t3]),
            Err(IntegrateError::Unbound("T3".into()))
        );
        let twin = parse_tcsd("tcsd T2 { sut S test A msg A -> S : x }", "t").unwrap().tcsd;
        let arch2 = parse_architecture(
            "architecture A { components P, Q bind T1 { sut = P B -> Q } bind T2 { sut = P A -> Q } }",
            "a",
        )
        .unwrap();
        assert!(matches!(
            InstanceMap::from_architecture(&arch2, &[&t1, &twin]),
            Err(IntegrateError::DuplicateSut { .. })
        ));
    }

    #[test]
    fn self_mapping_is_rejected() {
        let arch = parse_architecture(
            "architecture A { components P bind T1 { sut = P B -> P } }",
            "a",
        )
        .unwrap();
        let t1 = parse_tcsd("tcsd T1 { sut S test B msg S -> B : x }", "t1").unwrap().tcsd;
        assert!(matches!(
            InstanceMap::from_architecture(&arch, &[&t1]),
            Err(IntegrateError::SelfMapped { .. })
        ));
        let silent = parse_tcsd("tcsd T1 { sut S test B }", "t1").unwrap().tcsd;
        assert!(InstanceMap::from_architecture(&arch, &[&silent]).is_ok());
    }

    #[test]
    fn incomplete_binding_is_rejected() {
        let arch = parse_architecture(
            "architecture A { components P, Q bind T1 { sut = P } }",
            "a",
        )
        .unwrap();
        let t1 = parse_tcsd("tcsd T1 { sut S test B msg S -> B : x }", "t1").unwrap().tcsd;
        assert!(matches!(
            InstanceMap::from_architecture(&arch, &[&t1]),
            Err(IntegrateError::UnboundInstance { .. })
        ));
    }
}
