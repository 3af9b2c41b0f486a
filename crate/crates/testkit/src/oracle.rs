use std::collections::{BTreeMap, HashSet};

use virtint_core::tapn::{Marking, Step, Tapn, TargetSpec, Upper};

/// Place index -> sorted token ages, capped at `C_max + 1`.
type Naive = BTreeMap<u32, Vec<u32>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NaiveResult {
    pub reachable: bool,
    /// Distinct markings seen.
    pub visited: usize,
}

/// `2 * |T| * (C_max + 2)` steps, each a delay followed by one firing.
pub fn naive_step_bound(net: &Tapn) -> usize {
    2 * net.transitions().len() * (net.c_max() as usize + 2)
}

fn within(lower: u32, upper: Upper, age: u32) -> bool {
    age >= lower
        && match upper {
            Upper::Closed(b) => age <= b,
            Upper::Open(b) => age < b,
            Upper::Infinity => true,
        }
}

fn matches(target: &TargetSpec, m: &Naive) -> bool {
    let counts: BTreeMap<u32, usize> = m
        .iter()
        .filter(|(_, ages)| !ages.is_empty())
        .map(|(&p, ages)| (p, ages.len()))
        .collect();
    let wanted: BTreeMap<u32, usize> = target
        .counts
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(p, &n)| (p.0, n))
        .collect();
    counts == wanted
}

/// Sum of all finite guard bounds plus the number of transitions.
pub fn naive_delay_bound(net: &Tapn) -> u32 {
    let finite: u32 = net
        .input_arcs()
        .iter()
        .map(|a| a.guard)
        .chain(net.transport_arcs().iter().map(|a| a.guard))
        .map(|g| match g.upper {
            Upper::Closed(b) | Upper::Open(b) => b,
            Upper::Infinity => g.lower,
        })
        .sum();
    finite + net.transitions().len() as u32
}

/// Breadth-first enumeration of concrete markings without any reduction:
/// each step waits 0 to `C_max + 1` ticks and fires one transition, on at
/// most [`naive_step_bound`] steps. Firing is implemented here from the arc
/// lists rather than through [`Tapn::fire`].
pub fn naive_reachable(net: &Tapn, m0: &Marking, target: &TargetSpec) -> NaiveResult {
    let cap = net.c_max() + 1;
    enumerate(net, m0, target, cap, cap)
}

/// Like [`naive_reachable`] but with exact, uncapped ages and per-step
/// delays up to [`naive_delay_bound`].
pub fn naive_reachable_uncapped(net: &Tapn, m0: &Marking, target: &TargetSpec) -> NaiveResult {
    enumerate(net, m0, target, naive_delay_bound(net), u32::MAX)
}

fn enumerate(net: &Tapn, m0: &Marking, target: &TargetSpec, max_wait: u32, cap: u32) -> NaiveResult {
    let start: Naive = m0
        .iter()
        .map(|(p, ages)| (p.0, ages.iter().map(|&a| a.min(cap)).collect()))
        .collect();
    let mut seen: HashSet<Naive> = HashSet::from([start.clone()]);
    if matches(target, &start) {
        return NaiveResult {
            reachable: true,
            visited: 1,
        };
    }
    let mut layer = vec![start];
    for _ in 0..naive_step_bound(net) {
        let mut next_layer = Vec::new();
        for m in &layer {
            for d in 0..=max_wait {
                let waited: Naive = m
                    .iter()
                    .map(|(&p, ages)| (p, ages.iter().map(|&a| a.saturating_add(d).min(cap)).collect()))
                    .collect();
                for next in successors(net, &waited) {
                    if matches(target, &next) {
                        return NaiveResult {
                            reachable: true,
                            visited: seen.len() + 1,
                        };
                    }
                    if seen.insert(next.clone()) {
                        next_layer.push(next);
                    }
                }
            }
        }
        if next_layer.is_empty() {
            break;
        }
        layer = next_layer;
    }
    NaiveResult {
        reachable: false,
        visited: seen.len(),
    }
}

/// Every marking reachable from `m` by one firing, trying each token of
/// each preset place.
fn successors(net: &Tapn, m: &Naive) -> Vec<Naive> {
    let mut out = Vec::new();
    for (ti, _) in net.transitions().iter().enumerate() {
        // (place, lower, upper, transport target)
        let mut pre: Vec<(u32, u32, Upper, Option<u32>)> = Vec::new();
        for a in net.input_arcs() {
            if a.transition.0 as usize == ti {
                pre.push((a.place.0, a.guard.lower, a.guard.upper, None));
            }
        }
        for a in net.transport_arcs() {
            if a.transition.0 as usize == ti {
                pre.push((a.source.0, a.guard.lower, a.guard.upper, Some(a.target.0)));
            }
        }
        let outs: Vec<u32> = net
            .output_arcs()
            .iter()
            .filter(|a| a.transition.0 as usize == ti)
            .map(|a| a.place.0)
            .collect();
        let mut picks = vec![0usize; pre.len()];
        choose(m, &pre, 0, &mut picks, &mut |picks| {
            let mut next = m.clone();
            let mut moved = Vec::new();
            // remove from the highest index down so earlier picks stay valid
            let mut order: Vec<usize> = (0..pre.len()).collect();
            order.sort_by_key(|&k| std::cmp::Reverse(picks[k]));
            for k in order {
                let ages = next.get_mut(&pre[k].0).expect("chosen place is marked");
                let age = ages.remove(picks[k]);
                if let Some(t) = pre[k].3 {
                    moved.push((t, age));
                }
            }
            for (p, age) in moved {
                next.entry(p).or_default().push(age);
            }
            for &p in &outs {
                next.entry(p).or_default().push(0);
            }
            next.retain(|_, ages| !ages.is_empty());
            for ages in next.values_mut() {
                ages.sort_unstable();
            }
            out.push(next);
        });
    }
    out
}

fn choose(
    m: &Naive,
    pre: &[(u32, u32, Upper, Option<u32>)],
    k: usize,
    picks: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if k == pre.len() {
        emit(picks);
        return;
    }
    let (p, lower, upper, _) = pre[k];
    let Some(ages) = m.get(&p) else {
        return;
    };
    for (i, &age) in ages.iter().enumerate() {
        if within(lower, upper, age) {
            picks[k] = i;
            choose(m, pre, k + 1, picks, emit);
        }
    }
}

/// Replays `trace` from `m0` with [`Tapn::delay`] and [`Tapn::fire`],
/// backtracking over token choices, and returns the final marking if some
/// choice of bindings reaches `target`.
pub fn replay(net: &Tapn, m0: &Marking, trace: &[Step], target: &TargetSpec) -> Result<Marking, String> {
    fn go(net: &Tapn, m: &Marking, trace: &[Step], target: &TargetSpec) -> Option<Marking> {
        let Some((step, rest)) = trace.split_first() else {
            return target.matches(m).then(|| m.clone());
        };
        let waited = net.delay(m, step.delay);
        net.enabled(&waited)
            .into_iter()
            .filter(|b| b.transition == step.transition)
            .find_map(|b| {
                let next = net.fire(&waited, &b).ok()?;
                go(net, &next, rest, target)
            })
    }
    for (i, step) in trace.iter().enumerate() {
        if step.transition.0 as usize >= net.transitions().len() {
            return Err(format!("step {i} names unknown transition {}", step.transition));
        }
    }
    go(net, m0, trace, target).ok_or_else(|| "no choice of tokens replays the trace into the target".into())
}
