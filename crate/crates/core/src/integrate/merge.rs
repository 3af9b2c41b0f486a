use std::collections::{BTreeMap, HashMap, HashSet};

use super::{IntegrateError, SyncMatching};
use crate::tapn::{Marking, PlaceId, Tapn, TargetSpec, TransitionId};
use crate::translate::TranslationUnit;

/// Result of fusing several translation units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedNet {
    pub unit: TranslationUnit,
    /// Merged transition -> the (unit, transition) pairs fused into it.
    pub origins: Vec<Vec<(usize, TransitionId)>>,
    /// Merged place -> (unit, place) it came from.
    pub place_origins: Vec<(usize, PlaceId)>,
}

impl MergedNet {
    /// Transition of `unit` that `t` stands for, if `t` involves that unit.
    pub fn project(&self, t: TransitionId, unit: usize) -> Option<TransitionId> {
        self.origins[t.0 as usize]
            .iter()
            .find(|(u, _)| *u == unit)
            .map(|&(_, t)| t)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Disjoint union of `units` in which every pair of `matching` is fused
/// into one transition that inherits the arcs (and guards) of both.
///
/// Element names are prefixed with the diagram name; a fused transition is
/// named `sync:` followed by its members' names in sorted order, so the
/// result does not depend on the order of `units` beyond element ids.
pub fn merge(units: &[TranslationUnit], matching: &SyncMatching) -> Result<MergedNet, IntegrateError> {
    let mut offsets = Vec::with_capacity(units.len());
    let mut total = 0usize;
    for u in units {
        offsets.push(total);
        total += u.net.transitions().len();
    }
    let global = |(unit, t): (usize, TransitionId)| -> Result<usize, IntegrateError> {
        let u = units
            .get(unit)
            .ok_or_else(|| IntegrateError::InvalidMatching(format!("no unit {unit}")))?;
        if t.0 as usize >= u.net.transitions().len() {
            return Err(IntegrateError::InvalidMatching(format!(
                "unit `{}` has no transition {t}",
                u.diagram
            )));
        }
        Ok(offsets[unit] + t.0 as usize)
    };

    let mut uf = UnionFind {
        parent: (0..total).collect(),
    };
    let mut seen = HashSet::new();
    for pair in &matching.pairs {
        let (ga, gb) = (global(pair.a)?, global(pair.b)?);
        if pair.a.0 == pair.b.0 {
            return Err(IntegrateError::InvalidMatching(format!(
                "pair within one unit `{}`",
                units[pair.a.0].diagram
            )));
        }
        for (g, side) in [(ga, pair.a), (gb, pair.b)] {
            if !seen.insert(g) {
                let u = &units[side.0];
                return Err(IntegrateError::InvalidMatching(format!(
                    "`{}.{}` is matched twice",
                    u.diagram,
                    u.net.transition(side.1).name
                )));
            }
        }
        let la = units[pair.a.0].label(pair.a.1);
        let lb = units[pair.b.0].label(pair.b.1);
        if la.is_none() || la != lb {
            return Err(IntegrateError::InvalidMatching(format!(
                "labels {la:?} and {lb:?} differ"
            )));
        }
        uf.union(ga, gb);
    }

    let roots: Vec<usize> = (0..total).map(|g| uf.find(g)).collect();
    let mut members: BTreeMap<usize, Vec<(usize, TransitionId)>> = BTreeMap::new();
    for (ui, u) in units.iter().enumerate() {
        for t in u.net.transition_ids() {
            members
                .entry(roots[offsets[ui] + t.0 as usize])
                .or_default()
                .push((ui, t));
        }
    }

    let mut net = Tapn::new();
    let mut place_map: Vec<Vec<PlaceId>> = Vec::with_capacity(units.len());
    let mut place_origins = Vec::new();
    for (ui, u) in units.iter().enumerate() {
        let mut ids = Vec::with_capacity(u.net.places().len());
        for p in u.net.place_ids() {
            ids.push(net.add_place(format!("{}.{}", u.diagram, u.net.place(p).name))?);
            place_origins.push((ui, p));
        }
        place_map.push(ids);
    }

    let mut trans_map: HashMap<usize, TransitionId> = HashMap::new();
    let mut origins = Vec::new();
    let mut messages = BTreeMap::new();
    for (ui, u) in units.iter().enumerate() {
        for t in u.net.transition_ids() {
            let root = roots[offsets[ui] + t.0 as usize];
            if trans_map.contains_key(&root) {
                continue;
            }
            let group = &members[&root];
            let qualified = |&(mu, mt): &(usize, TransitionId)| {
                format!("{}.{}", units[mu].diagram, units[mu].net.transition(mt).name)
            };
            let name = if group.len() == 1 {
                qualified(&group[0])
            } else {
                let mut names: Vec<String> = group.iter().map(qualified).collect();
                names.sort();
                format!("sync:{}", names.join("+"))
            };
            let id = net.add_transition(name, u.net.transition(t).label.clone())?;
            if let Some(m) = u.messages.get(&t) {
                messages.insert(id, m.clone());
            }
            trans_map.insert(root, id);
            origins.push(group.clone());
        }
    }

    let mut m0 = Marking::new();
    let mut target = TargetSpec::default();
    for (ui, u) in units.iter().enumerate() {
        let places = &place_map[ui];
        let tr = |t: TransitionId| trans_map[&roots[offsets[ui] + t.0 as usize]];
        for a in u.net.input_arcs() {
            net.add_input(places[a.place.0 as usize], tr(a.transition), a.guard)?;
        }
        for a in u.net.output_arcs() {
            net.add_output(tr(a.transition), places[a.place.0 as usize])?;
        }
        for a in u.net.transport_arcs() {
            net.add_transport(
                places[a.source.0 as usize],
                tr(a.transition),
                places[a.target.0 as usize],
                a.guard,
            )?;
        }
        m0 = m0.union(&u.m0.map_places(|p| places[p.0 as usize]));
        target = target.union(&TargetSpec {
            counts: u
                .target
                .counts
                .iter()
                .map(|(&p, &n)| (places[p.0 as usize], n))
                .collect(),
        });
    }

    let join = |f: fn(&TranslationUnit) -> &str| {
        units.iter().map(f).collect::<Vec<_>>().join("+")
    };
    let start = trans_map[&roots[units[0].start.0 as usize]];
    Ok(MergedNet {
        unit: TranslationUnit {
            diagram: join(|u| &u.diagram),
            sut: join(|u| &u.sut),
            net,
            m0,
            target,
            event_map: BTreeMap::new(),
            messages,
            fragments: Vec::new(),
            start,
        },
        origins,
        place_origins,
    })
}
