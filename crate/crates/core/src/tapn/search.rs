//! Discrete-time reachability.
//!
//! States are markings whose token ages are clamped per place to a
//! saturation value beyond which no reachable guard can tell ages apart.
//! The search is uniform-cost on accumulated delay, so the first witness
//! found uses the least total time, and among those the fewest firings.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::Serialize;
use thiserror::Error;

use super::{Guard, Marking, PlaceId, Tapn, TransitionId, Upper};

/// Exact token count per place; ages are ignored and unlisted places must
/// be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TargetSpec {
    pub counts: BTreeMap<PlaceId, usize>,
}

impl TargetSpec {
    pub fn single(p: PlaceId) -> Self {
        TargetSpec {
            counts: BTreeMap::from([(p, 1)]),
        }
    }

    pub fn matches(&self, m: &Marking) -> bool {
        m.iter().all(|(p, ages)| self.counts.get(&p) == Some(&ages.len()))
            && self.counts.iter().all(|(&p, &n)| n == 0 || m.count(p) == n)
    }

    pub fn union(&self, other: &TargetSpec) -> TargetSpec {
        let mut counts = self.counts.clone();
        for (&p, &n) in &other.counts {
            *counts.entry(p).or_insert(0) += n;
        }
        TargetSpec { counts }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReachOptions {
    /// Distinct abstract states kept before giving up.
    pub max_states: usize,
    /// Largest accumulated delay explored; `None` means unbounded.
    pub max_total_delay: Option<u64>,
}

impl ReachOptions {
    pub const DEFAULT_MAX_STATES: usize = 1_000_000;

    /// Default bounds for `net`: the total delay is capped at
    /// `(C_max + 1) * (|T| + 1)`.
    pub fn for_net(net: &Tapn) -> Self {
        ReachOptions {
            max_states: Self::DEFAULT_MAX_STATES,
            max_total_delay: Some(Self::default_delay_bound(net)),
        }
    }

    pub fn default_delay_bound(net: &Tapn) -> u64 {
        (net.c_max() as u64 + 1) * (net.transitions().len() as u64 + 1)
    }
}

impl Default for ReachOptions {
    fn default() -> Self {
        ReachOptions {
            max_states: Self::DEFAULT_MAX_STATES,
            max_total_delay: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Reachable,
    Unreachable,
    BoundExceeded,
}

/// Wait `delay` ticks, then fire `transition`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub delay: u32,
    pub transition: TransitionId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Distinct abstract states discovered.
    pub states: usize,
    /// Largest size of the priority queue.
    pub peak_frontier: usize,
    /// Successors dropped by the total-delay bound.
    pub pruned: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachResult {
    pub verdict: Verdict,
    /// Witness on `Reachable`, empty otherwise.
    pub trace: Vec<Step>,
    /// Dead markings (no transition can fire after any delay) other than the
    /// target, with ages clamped. Filled on `Unreachable` and
    /// `BoundExceeded`.
    pub frontier: Vec<Marking>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReachError {
    #[error("unsupported guard {guard} on the arc from `{place}` to `{transition}`: only closed and [a,∞) intervals can be analyzed")]
    UnsupportedGuard {
        place: String,
        transition: String,
        guard: Guard,
    },
}

impl Tapn {
    /// Whether some alternation of delays and firings leads from `m0` to a
    /// marking matching `target`.
    pub fn reachable(
        &self,
        m0: &Marking,
        target: &TargetSpec,
        opts: &ReachOptions,
    ) -> Result<ReachResult, ReachError> {
        Engine::new(self)?.run(m0, target, opts)
    }

    /// [`Tapn::reachable`] with every guard widened to `[0,∞)`.
    pub fn untimed_reachable(
        &self,
        m0: &Marking,
        target: &TargetSpec,
        opts: &ReachOptions,
    ) -> Result<ReachResult, ReachError> {
        self.widened().reachable(m0, target, opts)
    }

    /// Per-place age saturation: ages at or above it are indistinguishable
    /// for every guard the token can still meet, including after transport.
    pub fn saturation(&self) -> Result<Vec<u32>, ReachError> {
        let mut sat = vec![0u32; self.places().len()];
        let guards = self
            .input_arcs()
            .iter()
            .map(|a| (a.place, a.transition, a.guard))
            .chain(
                self.transport_arcs()
                    .iter()
                    .map(|a| (a.source, a.transition, a.guard)),
            );
        for (p, t, g) in guards {
            let local = match g.upper {
                Upper::Closed(b) => b + 1,
                Upper::Infinity => g.lower,
                Upper::Open(_) => {
                    return Err(ReachError::UnsupportedGuard {
                        place: self.place(p).name.clone(),
                        transition: self.transition(t).name.clone(),
                        guard: g,
                    })
                }
            };
            let s = &mut sat[p.0 as usize];
            *s = (*s).max(local);
        }
        loop {
            let mut changed = false;
            for a in self.transport_arcs() {
                let downstream = sat[a.target.0 as usize];
                let s = &mut sat[a.source.0 as usize];
                if downstream > *s {
                    *s = downstream;
                    changed = true;
                }
            }
            if !changed {
                return Ok(sat);
            }
        }
    }
}

/// Sorted (place, age) pairs.
type State = Box<[(u32, u32)]>;

struct Compiled {
    /// (place, guard) per preset entry
    preset: Vec<(u32, Guard)>,
    /// Transport target for preset entries that are transport arcs.
    carry: Vec<Option<u32>>,
    /// Normal output places.
    outputs: Vec<u32>,
    /// Can be fired ahead of everything else whenever its preset holds one
    /// token per place: its guards are `[0,∞)`, fresh tokens land only where
    /// age is never observed, and no other transition reads its preset. Such a firing commutes with every
    /// delay and every other firing, and any run to a target or dead marking
    /// must take it eventually.
    eager: bool,
}

struct Engine {
    sat: Vec<u32>,
    transitions: Vec<Compiled>,
}

#[derive(Debug, Clone, Copy)]
enum Edge {
    Delay,
    Fire(TransitionId),
}

struct Node {
    state: State,
    parent: Option<(usize, Edge)>,
    delay: u64,
    depth: u32,
    expanded: bool,
}

impl Engine {
    fn new(net: &Tapn) -> Result<Self, ReachError> {
        let sat = net.saturation()?;
        let mut transitions = net
            .transition_ids()
            .map(|t| {
                let mut preset = Vec::new();
                let mut carry = Vec::new();
                for a in net.input_arcs().iter().filter(|a| a.transition == t) {
                    preset.push((a.place.0, a.guard));
                    carry.push(None);
                }
                for a in net.transport_arcs().iter().filter(|a| a.transition == t) {
                    preset.push((a.source.0, a.guard));
                    carry.push(Some(a.target.0));
                }
                let outputs = net
                    .output_arcs()
                    .iter()
                    .filter(|a| a.transition == t)
                    .map(|a| a.place.0)
                    .collect();
                Compiled {
                    preset,
                    carry,
                    outputs,
                    eager: false,
                }
            })
            .collect::<Vec<_>>();
        let mut readers = vec![0usize; net.places().len()];
        for t in &transitions {
            for &(p, _) in &t.preset {
                readers[p as usize] += 1;
            }
        }
        for t in &mut transitions {
            t.eager = t.outputs.iter().all(|&p| sat[p as usize] == 0)
                && !t.preset.is_empty()
                && t.preset.iter().all(|&(p, g)| g == Guard::ANY && readers[p as usize] == 1);
        }
        Ok(Engine { sat, transitions })
    }

    fn clamp(&self, p: u32, age: u64) -> u32 {
        age.min(self.sat[p as usize] as u64) as u32
    }

    fn encode(&self, m: &Marking) -> State {
        let mut v: Vec<(u32, u32)> = m
            .iter()
            .flat_map(|(p, ages)| ages.iter().map(move |&a| (p.0, a)))
            .map(|(p, a)| (p, self.clamp(p, a as u64)))
            .collect();
        v.sort_unstable();
        v.into_boxed_slice()
    }

    fn decode(state: &State) -> Marking {
        let mut m = Marking::new();
        for &(p, a) in state.iter() {
            m.add(PlaceId(p), a);
        }
        m
    }

    fn delayed(&self, state: &State, d: u32) -> State {
        let mut v: Vec<(u32, u32)> = state
            .iter()
            .map(|&(p, a)| (p, self.clamp(p, a as u64 + d as u64)))
            .collect();
        v.sort_unstable();
        v.into_boxed_slice()
    }

    /// Tokens of place `p` in `state`.
    fn tokens(state: &[(u32, u32)], p: u32) -> &[(u32, u32)] {
        let lo = state.partition_point(|&(q, _)| q < p);
        let hi = lo + state[lo..].partition_point(|&(q, _)| q == p);
        &state[lo..hi]
    }

    /// The first eager transition whose preset places each hold exactly one
    /// token, none of them needed by `target`.
    fn eager(&self, state: &State, target: &TargetSpec, out: &mut Vec<(TransitionId, State)>) -> bool {
        for (ti, t) in self.transitions.iter().enumerate() {
            let ready = t.eager
                && t.preset.iter().all(|&(p, _)| {
                    Self::tokens(state, p).len() == 1
                        && target.counts.get(&PlaceId(p)).is_none_or(|&n| n == 0)
                });
            if !ready {
                continue;
            }
            let mut v: Vec<(u32, u32)> = state.to_vec();
            for (k, &(p, _)) in t.preset.iter().enumerate() {
                let at = v.partition_point(|&(q, _)| q < p);
                let (_, age) = v.remove(at);
                if let Some(target) = t.carry[k] {
                    v.push((target, self.clamp(target, age as u64)));
                }
                v.sort_unstable();
            }
            for &p in &t.outputs {
                v.push((p, 0));
            }
            v.sort_unstable();
            out.push((TransitionId(ti as u32), v.into_boxed_slice()));
            return true;
        }
        false
    }

    /// Every state reachable by firing one transition in `state` (no delay).
    fn fire_all(&self, state: &State, out: &mut Vec<(TransitionId, State)>) {
        for (ti, t) in self.transitions.iter().enumerate() {
            let enabled = t
                .preset
                .iter()
                .all(|&(p, g)| Self::tokens(state, p).iter().any(|&(_, a)| g.contains(a)));
            if !enabled {
                continue;
            }
            let choices: Vec<Vec<u32>> = t
                .preset
                .iter()
                .map(|&(p, g)| {
                    let mut ages: Vec<u32> = Self::tokens(state, p)
                        .iter()
                        .map(|&(_, a)| a)
                        .filter(|&a| g.contains(a))
                        .collect();
                    ages.dedup();
                    ages
                })
                .collect();
            let mut index = vec![0usize; choices.len()];
            'product: loop {
                let mut v: Vec<(u32, u32)> = state.to_vec();
                for (k, &(p, _)) in t.preset.iter().enumerate() {
                    let age = choices[k][index[k]];
                    let at = v
                        .binary_search(&(p, age))
                        .expect("chosen token is present");
                    v.remove(at);
                }
                for (k, &(_, _)) in t.preset.iter().enumerate() {
                    if let Some(target) = t.carry[k] {
                        v.push((target, self.clamp(target, choices[k][index[k]] as u64)));
                    }
                }
                for &p in &t.outputs {
                    v.push((p, 0));
                }
                v.sort_unstable();
                out.push((TransitionId(ti as u32), v.into_boxed_slice()));

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
    }

    /// Uniform-cost search in which waiting one tick is an edge of its own,
    /// so every state is expanded once rather than once per delay.
    fn run(
        &self,
        m0: &Marking,
        target: &TargetSpec,
        opts: &ReachOptions,
    ) -> Result<ReachResult, ReachError> {
        let mut nodes: Vec<Node> = Vec::new();
        let mut index: HashMap<State, usize> = HashMap::new();
        let mut heap: BinaryHeap<Reverse<(u64, u32, usize)>> = BinaryHeap::new();
        let mut stats = SearchStats::default();
        let mut dead: Vec<usize> = Vec::new();
        let mut pruned: Vec<State> = Vec::new();

        let start = self.encode(m0);
        index.insert(start.clone(), 0);
        nodes.push(Node {
            state: start,
            parent: None,
            delay: 0,
            depth: 0,
            expanded: false,
        });
        heap.push(Reverse((0, 0, 0)));
        stats.states = 1;

        let mut successors = Vec::new();
        while let Some(Reverse((delay, depth, id))) = heap.pop() {
            if nodes[id].expanded || nodes[id].delay != delay || nodes[id].depth != depth {
                continue;
            }
            nodes[id].expanded = true;
            let state = nodes[id].state.clone();
            if target.matches(&Self::decode(&state)) {
                return Ok(ReachResult {
                    verdict: Verdict::Reachable,
                    trace: Self::trace(&nodes, id),
                    frontier: Vec::new(),
                    stats,
                });
            }

            successors.clear();
            let eager = self.eager(&state, target, &mut successors);
            if !eager {
                self.fire_all(&state, &mut successors);
            }
            let fires = successors.len();
            let waited = self.delayed(&state, 1);
            let stuck = eager || waited == state;
            if fires == 0 && stuck {
                dead.push(id);
            }
            let edges = successors
                .drain(..)
                .map(|(t, next)| (Edge::Fire(t), next, delay, depth + 1))
                .chain((!stuck).then(|| (Edge::Delay, waited, delay + 1, depth)));
            for (edge, next, cost, next_depth) in edges {
                if opts.max_total_delay.is_some_and(|max| cost > max) {
                    stats.pruned += 1;
                    if !index.contains_key(&next) {
                        pruned.push(next);
                    }
                    continue;
                }
                let key = (cost, next_depth);
                match index.get(&next) {
                    Some(&n) => {
                        let node = &mut nodes[n];
                        if !node.expanded && key < (node.delay, node.depth) {
                            node.delay = cost;
                            node.depth = next_depth;
                            node.parent = Some((id, edge));
                            heap.push(Reverse((cost, next_depth, n)));
                        }
                    }
                    None => {
                        if nodes.len() >= opts.max_states {
                            return Ok(ReachResult {
                                verdict: Verdict::BoundExceeded,
                                trace: Vec::new(),
                                frontier: Self::frontier(&nodes, &dead),
                                stats,
                            });
                        }
                        let n = nodes.len();
                        index.insert(next.clone(), n);
                        nodes.push(Node {
                            state: next,
                            parent: Some((id, edge)),
                            delay: cost,
                            depth: next_depth,
                            expanded: false,
                        });
                        stats.states += 1;
                        heap.push(Reverse((cost, next_depth, n)));
                    }
                }
            }
            stats.peak_frontier = stats.peak_frontier.max(heap.len());
        }

        // a pruned successor may still have been reached by a cheaper path
        let verdict = if pruned.iter().any(|s| !index.contains_key(s)) {
            Verdict::BoundExceeded
        } else {
            Verdict::Unreachable
        };
        Ok(ReachResult {
            verdict,
            trace: Vec::new(),
            frontier: Self::frontier(&nodes, &dead),
            stats,
        })
    }

    /// Folds the tick edges on the path to `id` into the following firings.
    fn trace(nodes: &[Node], id: usize) -> Vec<Step> {
        let mut edges = Vec::new();
        let mut cur = id;
        while let Some((parent, edge)) = nodes[cur].parent {
            edges.push(edge);
            cur = parent;
        }
        let mut trace = Vec::new();
        let mut wait = 0;
        for edge in edges.into_iter().rev() {
            match edge {
                Edge::Delay => wait += 1,
                Edge::Fire(transition) => {
                    trace.push(Step {
                        delay: wait,
                        transition,
                    });
                    wait = 0;
                }
            }
        }
        trace
    }

    fn frontier(nodes: &[Node], dead: &[usize]) -> Vec<Marking> {
        let mut out: Vec<Marking> = dead.iter().map(|&i| Self::decode(&nodes[i].state)).collect();
        out.sort();
        out.dedup();
        out
    }
}
