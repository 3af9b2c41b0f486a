use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use super::{enumerate_matchings, merge, IntegrateError, InstanceMap, Policy, SyncMatching};
use crate::tapn::{Marking, ReachOptions, ReachResult, SearchStats, Step, TargetSpec, Tapn, Verdict as Reach};
use crate::translate::TranslationUnit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Consistent,
    OrderingDeadlock,
    TimingConflict,
    BoundExceeded,
}

impl Status {
    pub fn describe(self) -> &'static str {
        match self {
            Status::Consistent => "consistent",
            Status::OrderingDeadlock => "ordering deadlock",
            Status::TimingConflict => "timing conflict",
            Status::BoundExceeded => "bound exceeded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overall {
    Consistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOptions {
    pub policy: Policy,
    /// Demand that every matching succeeds instead of at least one.
    pub require_all: bool,
    pub max_matchings: usize,
    pub max_states: usize,
    /// `None` uses the default bound of each merged net.
    pub max_total_delay: Option<u64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            policy: Policy::Maximal,
            require_all: false,
            max_matchings: 64,
            max_states: ReachOptions::DEFAULT_MAX_STATES,
            max_total_delay: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessStep {
    pub delay: u32,
    pub transition: String,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BlockingTransition {
    pub label: String,
    pub transition: String,
}

/// Qualified names of a synchronized pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairNames {
    pub a: String,
    pub b: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    /// Position in enumeration order.
    pub index: usize,
    pub matching: SyncMatching,
    pub pairs: Vec<PairNames>,
    pub status: Status,
    /// Witness on the merged net (transition ids of [`merge`]'s result).
    pub trace: Vec<Step>,
    pub witness: Vec<WitnessStep>,
    /// Sorted by label, then transition name.
    pub blocking: Vec<BlockingTransition>,
    pub timed: SearchStats,
    pub untimed: Option<SearchStats>,
    pub delay_bound: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisReport {
    pub verdicts: Vec<Verdict>,
    pub overall: Overall,
    /// The matching limit cut the enumeration short.
    pub truncated: bool,
    pub require_all: bool,
}

impl AnalysisReport {
    /// The verdict that decides `overall`: the first consistent one when
    /// consistent, otherwise the first conclusive failure, else the first.
    pub fn decisive(&self) -> Option<&Verdict> {
        let want = |s: Status| match self.overall {
            Overall::Consistent => s == Status::Consistent,
            Overall::Inconsistent => matches!(s, Status::OrderingDeadlock | Status::TimingConflict),
            Overall::Inconclusive => s == Status::BoundExceeded,
        };
        self.verdicts
            .iter()
            .find(|v| want(v.status))
            .or(self.verdicts.first())
    }
}

/// Decides whether the test cases in `units` can all complete together.
///
/// Every enumerated matching is merged and checked for timed reachability of
/// the joint target. Failures are split by rerunning with all guards
/// widened: still unreachable means the message orders alone deadlock,
/// otherwise the timing constraints conflict.
pub fn check_consistency(
    units: &[TranslationUnit],
    map: &InstanceMap,
    opts: &CheckOptions,
) -> Result<AnalysisReport, IntegrateError> {
    let matchings = enumerate_matchings(units, map, opts.policy, opts.max_matchings)?;
    let verdicts = matchings
        .matchings
        .par_iter()
        .enumerate()
        .map(|(index, m)| analyze(units, index, m, opts))
        .collect::<Result<Vec<_>, _>>()?;

    let any = |s: Status| verdicts.iter().any(|v| v.status == s);
    let failed = any(Status::OrderingDeadlock) || any(Status::TimingConflict);
    let overall = if opts.require_all {
        if failed {
            Overall::Inconsistent
        } else if any(Status::BoundExceeded) || verdicts.is_empty() {
            Overall::Inconclusive
        } else {
            Overall::Consistent
        }
    } else if any(Status::Consistent) {
        Overall::Consistent
    } else if any(Status::BoundExceeded) {
        Overall::Inconclusive
    } else {
        Overall::Inconsistent
    };
    Ok(AnalysisReport {
        verdicts,
        overall,
        truncated: matchings.truncated,
        require_all: opts.require_all,
    })
}

/// Classification of one marked net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub status: Status,
    pub timed: ReachResult,
    pub untimed: Option<ReachResult>,
}

/// Runs the timed search and, if it fails, the untimed one.
pub fn classify(
    net: &Tapn,
    m0: &Marking,
    target: &TargetSpec,
    opts: &ReachOptions,
) -> Result<Classification, IntegrateError> {
    let timed = net.reachable(m0, target, opts)?;
    if timed.verdict == Reach::Reachable {
        return Ok(Classification {
            status: Status::Consistent,
            timed,
            untimed: None,
        });
    }
    let untimed = net.untimed_reachable(m0, target, opts)?;
    // widening only adds behavior, so untimed failure settles the ordering
    // question even when the timed run hit a bound
    let status = match (timed.verdict, untimed.verdict) {
        (_, Reach::Unreachable) => Status::OrderingDeadlock,
        (Reach::Unreachable, Reach::Reachable) => Status::TimingConflict,
        _ => Status::BoundExceeded,
    };
    Ok(Classification {
        status,
        timed,
        untimed: Some(untimed),
    })
}

fn analyze(
    units: &[TranslationUnit],
    index: usize,
    matching: &SyncMatching,
    opts: &CheckOptions,
) -> Result<Verdict, IntegrateError> {
    let merged = merge(units, matching)?;
    let tu = &merged.unit;
    let delay_bound = opts
        .max_total_delay
        .or_else(|| Some(ReachOptions::default_delay_bound(&tu.net)));
    let reach = ReachOptions {
        max_states: opts.max_states,
        max_total_delay: delay_bound,
    };
    let c = classify(&tu.net, &tu.m0, &tu.target, &reach)?;

    let witness = c
        .timed
        .trace
        .iter()
        .map(|s| {
            let t = tu.net.transition(s.transition);
            WitnessStep {
                delay: s.delay,
                transition: t.name.clone(),
                label: t.label.clone(),
            }
        })
        .collect();
    let frontier = match c.status {
        Status::OrderingDeadlock => c.untimed.as_ref().map(|r| r.frontier.as_slice()),
        Status::TimingConflict => Some(c.timed.frontier.as_slice()),
        _ => None,
    };
    let blocking = frontier.map(|f| blocking(&tu.net, f)).unwrap_or_default();
    Ok(Verdict {
        index,
        pairs: pair_names(units, matching),
        matching: matching.clone(),
        status: c.status,
        trace: c.timed.trace.clone(),
        witness,
        blocking,
        timed: c.timed.stats.clone(),
        untimed: c.untimed.map(|r| r.stats),
        delay_bound,
    })
}

/// Labeled transitions with a marked input place in some dead marking.
pub fn blocking(net: &Tapn, frontier: &[Marking]) -> Vec<BlockingTransition> {
    let mut out = BTreeSet::new();
    for t in net.transition_ids() {
        let Some(label) = &net.transition(t).label else {
            continue;
        };
        let preset = net.preset(t);
        if frontier
            .iter()
            .any(|m| preset.iter().any(|&(p, _)| m.count(p) > 0))
        {
            out.insert(BlockingTransition {
                label: label.clone(),
                transition: net.transition(t).name.clone(),
            });
        }
    }
    out.into_iter().collect()
}

fn pair_names(units: &[TranslationUnit], m: &SyncMatching) -> Vec<PairNames> {
    let name = |(u, t): (usize, crate::tapn::TransitionId)| {
        format!("{}.{}", units[u].diagram, units[u].net.transition(t).name)
    };
    m.pairs
        .iter()
        .map(|p| PairNames {
            a: name(p.a),
            b: name(p.b),
            label: units[p.a.0].label(p.a.1).unwrap_or_default().to_string(),
        })
        .collect()
}
