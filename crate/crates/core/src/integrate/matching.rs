use std::collections::BTreeMap;

use super::{IntegrateError, InstanceMap};
use crate::tapn::TransitionId;
use crate::translate::TranslationUnit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Policy {
    /// Pair as many compatible occurrences as possible; leftovers fire
    /// freely.
    #[default]
    Maximal,
    /// Every occurrence exchanged between two test cases must have a
    /// partner.
    Strict,
}

/// Two transitions to be fused, given as (unit index, transition) with the
/// smaller unit index first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SyncPair {
    pub a: (usize, TransitionId),
    pub b: (usize, TransitionId),
}

/// One way of synchronizing the units; pairs are sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SyncMatching {
    pub pairs: Vec<SyncPair>,
}

impl SyncMatching {
    pub fn new(mut pairs: Vec<SyncPair>) -> Self {
        pairs.sort();
        SyncMatching { pairs }
    }

    pub fn is_subset_of(&self, other: &SyncMatching) -> bool {
        self.pairs.iter().all(|p| other.pairs.contains(p))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matchings {
    pub matchings: Vec<SyncMatching>,
    /// More matchings exist beyond the requested limit.
    pub truncated: bool,
}

type Key = (String, String, String);

/// Lists candidate synchronizations of `units`.
///
/// Per pair of units and per compatibility class, every maximum-cardinality
/// injective pairing of the two occurrence lists is an option; a matching
/// picks one option per class. Matchings come in odometer order over the
/// classes (the last class varies fastest), at most `limit` of them.
pub fn enumerate_matchings(
    units: &[TranslationUnit],
    map: &InstanceMap,
    policy: Policy,
    limit: usize,
) -> Result<Matchings, IntegrateError> {
    if units.len() < 2 {
        return Err(IntegrateError::TooFewUnits(units.len()));
    }
    let mut classes: Vec<BTreeMap<Key, Vec<TransitionId>>> = Vec::with_capacity(units.len());
    for u in units {
        let mut by_key: BTreeMap<Key, Vec<TransitionId>> = BTreeMap::new();
        for (&t, m) in &u.messages {
            by_key.entry(map.key(&u.diagram, m)?).or_default().push(t);
        }
        classes.push(by_key);
    }

    if policy == Policy::Strict {
        let mut unmatched = Vec::new();
        for i in 0..units.len() {
            for j in i + 1..units.len() {
                let (Some(si), Some(sj)) = (
                    map.sut_component(&units[i].diagram),
                    map.sut_component(&units[j].diagram),
                ) else {
                    continue;
                };
                let between = |k: &Key| {
                    (k.0 == si && k.2 == sj) || (k.0 == sj && k.2 == si)
                };
                let keys: std::collections::BTreeSet<&Key> = classes[i]
                    .keys()
                    .chain(classes[j].keys())
                    .filter(|k| between(k))
                    .collect();
                for k in keys {
                    let ni = classes[i].get(k).map_or(0, Vec::len);
                    let nj = classes[j].get(k).map_or(0, Vec::len);
                    if ni != nj {
                        unmatched.push(format!(
                            "{} ({} -> {}): {} in `{}`, {} in `{}`",
                            k.1, k.0, k.2, ni, units[i].diagram, nj, units[j].diagram
                        ));
                    }
                }
            }
        }
        if !unmatched.is_empty() {
            return Err(IntegrateError::Unmatched(unmatched));
        }
    }

    let mut groups: Vec<Vec<Vec<SyncPair>>> = Vec::new();
    for i in 0..units.len() {
        for j in i + 1..units.len() {
            for (k, a) in &classes[i] {
                if let Some(b) = classes[j].get(k) {
                    groups.push(injections(i, a, j, b, limit.saturating_add(1)));
                }
            }
        }
    }

    let mut out = Matchings::default();
    if limit == 0 {
        out.truncated = true;
        return Ok(out);
    }
    let mut index = vec![0usize; groups.len()];
    'product: loop {
        if out.matchings.len() == limit {
            out.truncated = true;
            break;
        }
        let pairs = groups
            .iter()
            .zip(&index)
            .flat_map(|(g, &i)| g[i].iter().copied())
            .collect();
        out.matchings.push(SyncMatching::new(pairs));
        let mut k = index.len();
        loop {
            if k == 0 {
                break 'product;
            }
            k -= 1;
            index[k] += 1;
            if index[k] < groups[k].len() {
                continue 'product;
            }
            index[k] = 0;
        }
    }
    Ok(out)
}

/// All maximum injective pairings between `a` (unit `i`) and `b` (unit `j`),
/// at most `cap` of them, in lexicographic order of the chosen partners.
fn injections(i: usize, a: &[TransitionId], j: usize, b: &[TransitionId], cap: usize) -> Vec<Vec<SyncPair>> {
    let swap = a.len() > b.len();
    let (small, large) = if swap { (b, a) } else { (a, b) };
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::with_capacity(small.len());
    let mut used = vec![false; large.len()];

    fn rec(
        depth: usize,
        small: &[TransitionId],
        large: &[TransitionId],
        chosen: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        if depth == small.len() {
            out.push(chosen.clone());
            return;
        }
        for k in 0..large.len() {
            if !used[k] {
                used[k] = true;
                chosen.push(k);
                rec(depth + 1, small, large, chosen, used, out, cap);
                chosen.pop();
                used[k] = false;
            }
        }
    }

    let mut selections = Vec::new();
    rec(0, small, large, &mut chosen, &mut used, &mut selections, cap);
    for sel in selections {
        let pairs = sel
            .iter()
            .enumerate()
            .map(|(s, &l)| {
                let (ta, tb) = if swap { (large[l], small[s]) } else { (small[s], large[l]) };
                SyncPair {
                    a: (i, ta),
                    b: (j, tb),
                }
            })
            .collect();
        out.push(pairs);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_tcsd;
    use crate::translate::translate;

    fn units(srcs: &[&str]) -> Vec<TranslationUnit> {
        srcs.iter()
            .map(|s| {
                let t = parse_tcsd(s, "t").unwrap().tcsd;
                translate(&t.validated().unwrap()).unwrap()
            })
            .collect()
    }

    fn map() -> InstanceMap {
        InstanceMap::from_entries(
            [("A", "S", "P"), ("A", "T", "Q"), ("B", "S", "Q"), ("B", "T", "P")],
            [("A", "P"), ("B", "Q")],
        )
    }

    #[test]
    fn single_pair() {
        let u = units(&[
            "tcsd A { sut S test T msg S -> T : x }",
            "tcsd B { sut S test T msg T -> S : x }",
        ]);
        let m = enumerate_matchings(&u, &map(), Policy::Maximal, 64).unwrap();
        assert_eq!(m.matchings.len(), 1);
        assert_eq!(m.matchings[0].pairs.len(), 1);
        assert!(!m.truncated);
    }

    #[test]
    fn two_by_two_gives_both_bijections() {
        let u = units(&[
            "tcsd A { sut S test T msg S -> T : x msg S -> T : x }",
            "tcsd B { sut S test T msg T -> S : x msg T -> S : x }",
        ]);
        let m = enumerate_matchings(&u, &map(), Policy::Strict, 64).unwrap();
        assert_eq!(m.matchings.len(), 2);
        assert_ne!(m.matchings[0], m.matchings[1]);
        for s in &m.matchings {
            assert_eq!(s.pairs.len(), 2);
        }
    }

    #[test]
    fn unequal_counts() {
        let u = units(&[
            "tcsd A { sut S test T msg S -> T : x msg S -> T : x msg S -> T : x }",
            "tcsd B { sut S test T msg T -> S : x msg T -> S : x }",
        ]);
        let m = enumerate_matchings(&u, &map(), Policy::Maximal, 64).unwrap();
        assert_eq!(m.matchings.len(), 6);
        assert!(m.matchings.iter().all(|s| s.pairs.len() == 2));
        let err = enumerate_matchings(&u, &map(), Policy::Strict, 64).unwrap_err();
        assert!(err.to_string().contains("unmatched"), "{err}");

        let few = enumerate_matchings(&u, &map(), Policy::Maximal, 4).unwrap();
        assert_eq!(few.matchings.len(), 4);
        assert!(few.truncated);
        assert_eq!(few.matchings[..], m.matchings[..4]);
    }

    #[test]
    fn disjoint_labels_give_empty_matching() {
        let u = units(&[
            "tcsd A { sut S test T msg S -> T : x }",
            "tcsd B { sut S test T msg T -> S : y }",
        ]);
        let m = enumerate_matchings(&u, &map(), Policy::Maximal, 64).unwrap();
        assert_eq!(m.matchings, vec![SyncMatching::default()]);
    }

    #[test]
    fn direction_matters() {
        let u = units(&[
            "tcsd A { sut S test T msg S -> T : x }",
            "tcsd B { sut S test T msg S -> T : x }",
        ]);
        let m = enumerate_matchings(&u, &map(), Policy::Maximal, 64).unwrap();
        assert_eq!(m.matchings, vec![SyncMatching::default()]);
    }
}
