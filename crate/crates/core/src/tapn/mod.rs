//! Timed-arc Petri nets with transport arcs, integer token ages, and a
//! reachability engine.

mod search;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use search::{ReachError, ReachOptions, ReachResult, SearchStats, Step, TargetSpec, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PlaceId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TransitionId(pub u32);

impl fmt::Display for PlaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Upper {
    Closed(u32),
    /// Right-open finite bound. Accepted structurally, rejected by the engine.
    Open(u32),
    Infinity,
}

/// Interval over token ages. Lives on input arcs only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Guard {
    pub lower: u32,
    pub upper: Upper,
}

impl Guard {
    /// `[0,∞)`
    pub const ANY: Guard = Guard {
        lower: 0,
        upper: Upper::Infinity,
    };

    pub fn closed(lower: u32, upper: u32) -> Guard {
        Guard {
            lower,
            upper: Upper::Closed(upper),
        }
    }

    pub fn exactly(d: u32) -> Guard {
        Guard::closed(d, d)
    }

    pub fn at_least(lower: u32) -> Guard {
        Guard {
            lower,
            upper: Upper::Infinity,
        }
    }

    pub fn right_open(lower: u32, upper: u32) -> Guard {
        Guard {
            lower,
            upper: Upper::Open(upper),
        }
    }

    pub fn is_valid(&self) -> bool {
        match self.upper {
            Upper::Closed(b) => self.lower <= b,
            Upper::Open(b) => self.lower < b,
            Upper::Infinity => true,
        }
    }

    pub fn contains(&self, age: u32) -> bool {
        age >= self.lower
            && match self.upper {
                Upper::Closed(b) => age <= b,
                Upper::Open(b) => age < b,
                Upper::Infinity => true,
            }
    }

    /// Largest finite constant of the interval.
    pub fn max_constant(&self) -> u32 {
        match self.upper {
            Upper::Closed(b) | Upper::Open(b) => b.max(self.lower),
            Upper::Infinity => self.lower,
        }
    }

    /// Interval text with infinity spelled `inf`.
    pub fn ascii(&self) -> String {
        match self.upper {
            Upper::Closed(b) => format!("[{},{}]", self.lower, b),
            Upper::Open(b) => format!("[{},{})", self.lower, b),
            Upper::Infinity => format!("[{},inf)", self.lower),
        }
    }
}

impl Default for Guard {
    fn default() -> Self {
        Guard::ANY
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.upper {
            Upper::Closed(b) => write!(f, "[{},{}]", self.lower, b),
            Upper::Open(b) => write!(f, "[{},{})", self.lower, b),
            Upper::Infinity => write!(f, "[{},∞)", self.lower),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub name: String,
    /// `None` is the silent label ε.
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputArc {
    pub place: PlaceId,
    pub transition: TransitionId,
    pub guard: Guard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputArc {
    pub transition: TransitionId,
    pub place: PlaceId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransportArc {
    pub source: PlaceId,
    pub transition: TransitionId,
    pub target: PlaceId,
    pub guard: Guard,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TapnError {
    #[error("unknown place {0}")]
    UnknownPlace(PlaceId),
    #[error("unknown transition {0}")]
    UnknownTransition(TransitionId),
    #[error("name `{0}` is already used in this net")]
    DuplicateName(String),
    #[error("empty guard interval {0}")]
    EmptyGuard(Guard),
    #[error("arc between {0} and {1} already exists")]
    DuplicateArc(PlaceId, TransitionId),
    #[error("transport arc through {1} conflicts with another arc at {0}")]
    TransportConflict(PlaceId, TransitionId),
}

/// A timed-arc Petri net. Every arc added through the builder methods is
/// checked, so a `Tapn` value always satisfies the transport-arc conditions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tapn {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    inputs: Vec<InputArc>,
    outputs: Vec<OutputArc>,
    transports: Vec<TransportArc>,
    names: HashSet<String>,
}

impl Tapn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_place(&mut self, name: impl Into<String>) -> Result<PlaceId, TapnError> {
        let name = self.claim(name.into())?;
        self.places.push(Place { name });
        Ok(PlaceId(self.places.len() as u32 - 1))
    }

    pub fn add_transition(
        &mut self,
        name: impl Into<String>,
        label: Option<String>,
    ) -> Result<TransitionId, TapnError> {
        let name = self.claim(name.into())?;
        self.transitions.push(Transition { name, label });
        Ok(TransitionId(self.transitions.len() as u32 - 1))
    }

    fn claim(&mut self, name: String) -> Result<String, TapnError> {
        if !self.names.insert(name.clone()) {
            return Err(TapnError::DuplicateName(name));
        }
        Ok(name)
    }

    fn check(&self, p: PlaceId, t: TransitionId) -> Result<(), TapnError> {
        if p.0 as usize >= self.places.len() {
            return Err(TapnError::UnknownPlace(p));
        }
        if t.0 as usize >= self.transitions.len() {
            return Err(TapnError::UnknownTransition(t));
        }
        Ok(())
    }

    fn consumes(&self, p: PlaceId, t: TransitionId) -> bool {
        self.inputs.iter().any(|a| a.place == p && a.transition == t)
            || self
                .transports
                .iter()
                .any(|a| a.source == p && a.transition == t)
    }

    fn produces(&self, t: TransitionId, p: PlaceId) -> bool {
        self.outputs.iter().any(|a| a.place == p && a.transition == t)
            || self
                .transports
                .iter()
                .any(|a| a.target == p && a.transition == t)
    }

    pub fn add_input(&mut self, p: PlaceId, t: TransitionId, guard: Guard) -> Result<(), TapnError> {
        self.check(p, t)?;
        if !guard.is_valid() {
            return Err(TapnError::EmptyGuard(guard));
        }
        if self.inputs.iter().any(|a| a.place == p && a.transition == t) {
            return Err(TapnError::DuplicateArc(p, t));
        }
        if self.transports.iter().any(|a| a.source == p && a.transition == t) {
            return Err(TapnError::TransportConflict(p, t));
        }
        self.inputs.push(InputArc {
            place: p,
            transition: t,
            guard,
        });
        Ok(())
    }

    pub fn add_output(&mut self, t: TransitionId, p: PlaceId) -> Result<(), TapnError> {
        self.check(p, t)?;
        if self.outputs.iter().any(|a| a.place == p && a.transition == t) {
            return Err(TapnError::DuplicateArc(p, t));
        }
        if self.transports.iter().any(|a| a.target == p && a.transition == t) {
            return Err(TapnError::TransportConflict(p, t));
        }
        self.outputs.push(OutputArc {
            transition: t,
            place: p,
        });
        Ok(())
    }

    pub fn add_transport(
        &mut self,
        source: PlaceId,
        t: TransitionId,
        target: PlaceId,
        guard: Guard,
    ) -> Result<(), TapnError> {
        self.check(source, t)?;
        self.check(target, t)?;
        if !guard.is_valid() {
            return Err(TapnError::EmptyGuard(guard));
        }
        if self.consumes(source, t) {
            return Err(TapnError::TransportConflict(source, t));
        }
        if self.produces(t, target) {
            return Err(TapnError::TransportConflict(target, t));
        }
        self.transports.push(TransportArc {
            source,
            transition: t,
            target,
            guard,
        });
        Ok(())
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn input_arcs(&self) -> &[InputArc] {
        &self.inputs
    }

    pub fn output_arcs(&self) -> &[OutputArc] {
        &self.outputs
    }

    pub fn transport_arcs(&self) -> &[TransportArc] {
        &self.transports
    }

    pub fn place(&self, p: PlaceId) -> &Place {
        &self.places[p.0 as usize]
    }

    pub fn transition(&self, t: TransitionId) -> &Transition {
        &self.transitions[t.0 as usize]
    }

    pub fn place_ids(&self) -> impl Iterator<Item = PlaceId> {
        (0..self.places.len() as u32).map(PlaceId)
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = TransitionId> {
        (0..self.transitions.len() as u32).map(TransitionId)
    }

    pub fn place_by_name(&self, name: &str) -> Option<PlaceId> {
        self.places
            .iter()
            .position(|p| p.name == name)
            .map(|i| PlaceId(i as u32))
    }

    pub fn transition_by_name(&self, name: &str) -> Option<TransitionId> {
        self.transitions
            .iter()
            .position(|t| t.name == name)
            .map(|i| TransitionId(i as u32))
    }

    /// Input places of `t` with their guards: normal arcs first, then
    /// transport arcs, each in insertion order.
    pub fn preset(&self, t: TransitionId) -> Vec<(PlaceId, Guard)> {
        self.inputs
            .iter()
            .filter(|a| a.transition == t)
            .map(|a| (a.place, a.guard))
            .chain(
                self.transports
                    .iter()
                    .filter(|a| a.transition == t)
                    .map(|a| (a.source, a.guard)),
            )
            .collect()
    }

    /// Largest finite constant over all guards; 0 for guard-free nets.
    pub fn c_max(&self) -> u32 {
        self.inputs
            .iter()
            .map(|a| a.guard)
            .chain(self.transports.iter().map(|a| a.guard))
            .map(|g| g.max_constant())
            .max()
            .unwrap_or(0)
    }

    /// Copy with every guard replaced by `[0,∞)`.
    pub fn widened(&self) -> Tapn {
        let mut net = self.clone();
        for a in &mut net.inputs {
            a.guard = Guard::ANY;
        }
        for a in &mut net.transports {
            a.guard = Guard::ANY;
        }
        net
    }

    /// All guard-satisfying ways to fire each transition in `m`, one age per
    /// preset place (in [`Tapn::preset`] order). Tokens of equal age in the
    /// same place are interchangeable, so each distinct age appears once.
    pub fn enabled(&self, m: &Marking) -> Vec<Binding> {
        let mut out = Vec::new();
        for t in self.transition_ids() {
            let preset = self.preset(t);
            let mut choices: Vec<Vec<u32>> = Vec::with_capacity(preset.len());
            for &(p, g) in &preset {
                let mut ages: Vec<u32> = m.tokens(p).iter().copied().filter(|&a| g.contains(a)).collect();
                ages.dedup();
                choices.push(ages);
            }
            if choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            let mut index = vec![0usize; choices.len()];
            'product: loop {
                out.push(Binding {
                    transition: t,
                    tokens: preset
                        .iter()
                        .zip(&index)
                        .zip(&choices)
                        .map(|((&(p, _), &i), c)| (p, c[i]))
                        .collect(),
                });
                let mut k = index.len();
                loop {
                    if k == 0 {
                        break 'product;
                    }
                    k -= 1;
                    index[k] += 1;
                    if index[k] < choices[k].len() {
                        continue 'product;
                    }
                    index[k] = 0;
                }
            }
        }
        out
    }

    pub fn fire(&self, m: &Marking, binding: &Binding) -> Result<Marking, FireError> {
        let t = binding.transition;
        if t.0 as usize >= self.transitions.len() {
            return Err(FireError::UnknownTransition(t));
        }
        let preset = self.preset(t);
        if preset.len() != binding.tokens.len()
            || preset.iter().zip(&binding.tokens).any(|((p, _), (q, _))| p != q)
        {
            return Err(FireError::Shape(t));
        }
        let mut next = m.clone();
        for (&(p, g), &(_, age)) in preset.iter().zip(&binding.tokens) {
            if !g.contains(age) {
                return Err(FireError::Guard { place: p, age, guard: g });
            }
            if !next.remove(p, age) {
                return Err(FireError::Missing { place: p, age });
            }
        }
        for a in self.transports.iter().filter(|a| a.transition == t) {
            let age = binding
                .tokens
                .iter()
                .find(|(p, _)| *p == a.source)
                .map(|&(_, age)| age)
                .expect("preset covers transport sources");
            next.add(a.target, age);
        }
        for a in self.outputs.iter().filter(|a| a.transition == t) {
            next.add(a.place, 0);
        }
        Ok(next)
    }

    /// Ages every token by `d`. Place invariants are all `[0,∞)`, so any
    /// delay is allowed.
    pub fn delay(&self, m: &Marking, d: u32) -> Marking {
        m.delayed(d)
    }

    /// Transitions carrying a non-silent label.
    pub fn is_labeled(&self, t: TransitionId) -> bool {
        self.transition(t).label.is_some()
    }
}

/// One way to fire a transition: the consumed token age for each preset
/// place.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Binding {
    pub transition: TransitionId,
    pub tokens: Vec<(PlaceId, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FireError {
    #[error("unknown transition {0}")]
    UnknownTransition(TransitionId),
    #[error("binding does not match the preset of {0}")]
    Shape(TransitionId),
    #[error("age {age} in {place} violates guard {guard}")]
    Guard { place: PlaceId, age: u32, guard: Guard },
    #[error("no token of age {age} in {place}")]
    Missing { place: PlaceId, age: u32 },
}

/// Finite multiset of integer token ages per place. Empty places are not
/// stored, so equal markings compare equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking {
    tokens: BTreeMap<PlaceId, Vec<u32>>,
}

impl Marking {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_token(mut self, p: PlaceId, age: u32) -> Self {
        self.add(p, age);
        self
    }

    pub fn add(&mut self, p: PlaceId, age: u32) {
        let ages = self.tokens.entry(p).or_default();
        let at = ages.partition_point(|&a| a <= age);
        ages.insert(at, age);
    }

    /// Removes one token of exactly `age`; false if none exists.
    pub fn remove(&mut self, p: PlaceId, age: u32) -> bool {
        let Some(ages) = self.tokens.get_mut(&p) else {
            return false;
        };
        let Some(i) = ages.iter().position(|&a| a == age) else {
            return false;
        };
        ages.remove(i);
        if ages.is_empty() {
            self.tokens.remove(&p);
        }
        true
    }

    /// Ages in `p`, ascending.
    pub fn tokens(&self, p: PlaceId) -> &[u32] {
        self.tokens.get(&p).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count(&self, p: PlaceId) -> usize {
        self.tokens(p).len()
    }

    pub fn total(&self) -> usize {
        self.tokens.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Non-empty places with their ages, in place order.
    pub fn iter(&self) -> impl Iterator<Item = (PlaceId, &[u32])> {
        self.tokens.iter().map(|(&p, a)| (p, a.as_slice()))
    }

    pub fn delayed(&self, d: u32) -> Marking {
        Marking {
            tokens: self
                .tokens
                .iter()
                .map(|(&p, ages)| (p, ages.iter().map(|a| a + d).collect()))
                .collect(),
        }
    }

    /// Union of two markings (token multisets added).
    pub fn union(&self, other: &Marking) -> Marking {
        let mut m = self.clone();
        for (p, ages) in other.iter() {
            for &a in ages {
                m.add(p, a);
            }
        }
        m
    }

    /// Same marking with place ids rewritten by `f`.
    pub fn map_places(&self, mut f: impl FnMut(PlaceId) -> PlaceId) -> Marking {
        let mut m = Marking::new();
        for (p, ages) in self.iter() {
            for &a in ages {
                m.add(f(p), a);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(guard: Guard) -> (Tapn, PlaceId, TransitionId, PlaceId) {
        let mut net = Tapn::new();
        let p = net.add_place("p").unwrap();
        let q = net.add_place("q").unwrap();
        let t = net.add_transition("t", None).unwrap();
        net.add_input(p, t, guard).unwrap();
        net.add_output(t, q).unwrap();
        (net, p, t, q)
    }

    #[test]
    fn guard_membership() {
        let (net, p, t, _) = chain(Guard::closed(2, 4));
        let m = Marking::new().with_token(p, 3);
        assert_eq!(
            net.enabled(&m),
            vec![Binding {
                transition: t,
                tokens: vec![(p, 3)]
            }]
        );
        assert!(net.enabled(&Marking::new().with_token(p, 5)).is_empty());
    }

    #[test]
    fn young_token_blocks_transport() {
        let mut net = Tapn::new();
        let p = net.add_place("p").unwrap();
        let p2 = net.add_place("p2").unwrap();
        let q = net.add_place("q").unwrap();
        let t = net.add_transition("t", None).unwrap();
        net.add_transport(p, t, p2, Guard::exactly(0)).unwrap();
        net.add_input(q, t, Guard::at_least(1)).unwrap();
        let m = Marking::new().with_token(p, 0).with_token(q, 0);
        assert!(net.enabled(&m).is_empty());
    }

    #[test]
    fn transport_keeps_age_and_normal_resets() {
        let mut net = Tapn::new();
        let p = net.add_place("p").unwrap();
        let p2 = net.add_place("p2").unwrap();
        let t = net.add_transition("t", None).unwrap();
        net.add_transport(p, t, p2, Guard::ANY).unwrap();
        let m = Marking::new().with_token(p, 7);
        let b = net.enabled(&m).pop().unwrap();
        let m2 = net.fire(&m, &b).unwrap();
        assert_eq!(m2.count(p), 0);
        assert_eq!(m2.tokens(p2), &[7]);

        let (net, p, _, q) = chain(Guard::ANY);
        let m = Marking::new().with_token(p, 7);
        let b = net.enabled(&m).pop().unwrap();
        assert_eq!(net.fire(&m, &b).unwrap().tokens(q), &[0]);
    }

    #[test]
    fn token_count_changes_by_arc_balance() {
        let mut net = Tapn::new();
        let a = net.add_place("a").unwrap();
        let b = net.add_place("b").unwrap();
        let c = net.add_place("c").unwrap();
        let t = net.add_transition("t", None).unwrap();
        net.add_input(a, t, Guard::ANY).unwrap();
        net.add_input(b, t, Guard::ANY).unwrap();
        net.add_output(t, c).unwrap();
        let m = Marking::new()
            .with_token(a, 0)
            .with_token(a, 0)
            .with_token(b, 0)
            .with_token(b, 0);
        let bindings = net.enabled(&m);
        assert_eq!(bindings.len(), 1);
        let m2 = net.fire(&m, &bindings[0]).unwrap();
        assert_eq!(m2.total() as i64 - m.total() as i64, 1 - 2);
    }

    #[test]
    fn delay_is_pointwise() {
        let net = Tapn::new();
        let p = PlaceId(0);
        let m = Marking::new().with_token(p, 0).with_token(p, 3);
        assert_eq!(net.delay(&m, 2).tokens(p), &[2, 5]);
        assert_eq!(net.delay(&m, 0), m);
        assert_eq!(net.delay(&net.delay(&m, 1), 4), net.delay(&m, 5));
    }

    #[test]
    fn rejects_unenabled_binding() {
        let (net, p, t, _) = chain(Guard::closed(2, 4));
        let m = Marking::new().with_token(p, 5);
        let err = net
            .fire(
                &m,
                &Binding {
                    transition: t,
                    tokens: vec![(p, 5)],
                },
            )
            .unwrap_err();
        assert!(matches!(err, FireError::Guard { .. }));
        let err = net
            .fire(
                &m,
                &Binding {
                    transition: t,
                    tokens: vec![(p, 3)],
                },
            )
            .unwrap_err();
        assert!(matches!(err, FireError::Missing { .. }));
    }

    #[test]
    fn transport_conditions() {
        let mut net = Tapn::new();
        let p = net.add_place("p").unwrap();
        let q = net.add_place("q").unwrap();
        let r = net.add_place("r").unwrap();
        let t = net.add_transition("t", None).unwrap();
        net.add_transport(p, t, q, Guard::ANY).unwrap();
        assert!(net.add_transport(p, t, r, Guard::ANY).is_err());
        assert!(net.add_transport(r, t, q, Guard::ANY).is_err());
        assert!(net.add_input(p, t, Guard::ANY).is_err());
        assert!(net.add_output(t, q).is_err());
        assert!(net.add_input(r, t, Guard::ANY).is_ok());
        assert!(net.add_input(r, t, Guard::ANY).is_err());
        assert!(net.add_place("t").is_err());
        assert!(net.add_input(q, t, Guard::closed(3, 2)).is_err());
    }

    #[test]
    fn multiple_bindings_per_distinct_age() {
        let (net, p, _, _) = chain(Guard::ANY);
        let m = Marking::new().with_token(p, 1).with_token(p, 1).with_token(p, 4);
        let ages: Vec<u32> = net.enabled(&m).iter().map(|b| b.tokens[0].1).collect();
        assert_eq!(ages, vec![1, 4]);
    }

    #[test]
    fn guard_text() {
        assert_eq!(Guard::ANY.to_string(), "[0,∞)");
        assert_eq!(Guard::ANY.ascii(), "[0,inf)");
        assert_eq!(Guard::exactly(5).ascii(), "[5,5]");
        assert_eq!(Guard::right_open(1, 3).to_string(), "[1,3)");
    }
}
