use rand::seq::SliceRandom;
use rand::Rng;

use virtint_core::tapn::{Guard, Marking, PlaceId, Tapn, TargetSpec};

/// A small net with an initial marking and a target to search for.
#[derive(Debug, Clone)]
pub struct RandomNet {
    pub net: Tapn,
    pub m0: Marking,
    pub target: TargetSpec,
}

fn random_guard(rng: &mut impl Rng) -> Guard {
    match rng.gen_range(0..4) {
        0 => Guard::ANY,
        1 => Guard::at_least(rng.gen_range(0..=6)),
        _ => {
            let a = rng.gen_range(0..=6);
            Guard::closed(a, rng.gen_range(a..=6))
        }
    }
}

/// Net with at most 8 places and 6 transitions, closed or `[a,∞)` guards
/// with constants up to 6. No transition produces more tokens than it
/// consumes, so the state space is finite. Half of the targets come from a
/// random run (and are reachable), the rest are arbitrary.
pub fn random_tapn(rng: &mut impl Rng) -> RandomNet {
    let mut net = Tapn::new();
    let n_places = rng.gen_range(2..=8);
    let places: Vec<PlaceId> = (0..n_places)
        .map(|i| net.add_place(format!("p{i}")).expect("fresh name"))
        .collect();
    for i in 0..rng.gen_range(1..=6) {
        let t = net.add_transition(format!("t{i}"), None).expect("fresh name");
        let arity = rng.gen_range(1..=2.min(n_places));
        let inputs: Vec<PlaceId> = places
            .choose_multiple(rng, arity)
            .copied()
            .collect();
        let mut normal_inputs = 0;
        for &p in &inputs {
            let g = random_guard(rng);
            if rng.gen_bool(0.5) {
                let target = *places.choose(rng).expect("places exist");
                if net.add_transport(p, t, target, g).is_ok() {
                    continue;
                }
            }
            net.add_input(p, t, g).expect("distinct input places");
            normal_inputs += 1;
        }
        for _ in 0..rng.gen_range(0..=normal_inputs) {
            let p = *places.choose(rng).expect("places exist");
            // a clash with an existing arc just drops this output
            let _ = net.add_output(t, p);
        }
    }

    let mut m0 = Marking::new();
    for _ in 0..rng.gen_range(1..=3) {
        m0.add(*places.choose(rng).expect("places exist"), 0);
    }

    let target = if rng.gen_bool(0.5) {
        let mut m = m0.clone();
        for _ in 0..rng.gen_range(0..=8) {
            let waited = net.delay(&m, rng.gen_range(0..=4));
            let enabled = net.enabled(&waited);
            let Some(b) = enabled.choose(rng) else {
                break;
            };
            m = net.fire(&waited, b).expect("enabled binding fires");
        }
        TargetSpec {
            counts: m.iter().map(|(p, ages)| (p, ages.len())).collect(),
        }
    } else {
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..rng.gen_range(1..=2) {
            *counts.entry(*places.choose(rng).expect("places exist")).or_insert(0) += 1;
        }
        TargetSpec { counts }
    };
    RandomNet { net, m0, target }
}

/// Size limits for [`random_tcsd_source`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TcsdShape {
    /// Events on the SUT line: messages, fragment boundaries, partitions.
    pub max_sut_events: usize,
    /// Nesting of fragments and timeouts.
    pub max_depth: usize,
    pub max_loop: u32,
}

impl Default for TcsdShape {
    fn default() -> Self {
        TcsdShape {
            max_sut_events: 12,
            max_depth: 2,
            max_loop: 3,
        }
    }
}

struct Writer<'a, R> {
    rng: &'a mut R,
    shape: TcsdShape,
    budget: usize,
    tests: Vec<String>,
    last_at: Option<u32>,
    out: String,
}

const LABELS: [&str; 5] = ["req", "ack", "data", "poll", "\"two words\""];

impl<R: Rng> Writer<'_, R> {
    fn line(&mut self, indent: usize, text: &str) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn message(&mut self, indent: usize) {
        self.budget -= 1;
        let test = self.tests.choose(self.rng).expect("tests exist").clone();
        let label = LABELS.choose(self.rng).expect("labels exist");
        let text = if self.rng.gen_bool(0.5) {
            format!("msg S -> {test} : {label}")
        } else {
            format!("msg {test} -> S : {label}")
        };
        self.line(indent, &text);
    }

    /// A non-empty statement list of at most `limit` SUT events. Partition
    /// lines only appear at the top level.
    fn block(&mut self, indent: usize, depth: usize, limit: usize, top: bool) {
        let stop = self.budget.saturating_sub(limit);
        self.message(indent);
        while self.budget > stop && self.rng.gen_bool(if top { 0.85 } else { 0.5 }) {
            self.statement(indent, depth, self.budget - stop, top);
        }
    }

    fn statement(&mut self, indent: usize, depth: usize, room: usize, top: bool) {
        let nest = depth < self.shape.max_depth;
        match self.rng.gen_range(0..10) {
            0 | 1 if top && room >= 1 => {
                let at = match self.last_at {
                    Some(prev) => prev + self.rng.gen_range(1..=4),
                    None => self.rng.gen_range(1..=4),
                };
                self.last_at = Some(at);
                self.budget -= 1;
                self.line(indent, &format!("at {at}"));
            }
            2 | 3 if nest && room >= 4 => {
                // timeout bodies open and close with a message
                let bound = self.rng.gen_range(1..=8);
                self.line(indent, &format!("timeout {bound} {{"));
                let inner = room - 1;
                self.block(indent + 1, depth + 1, inner, false);
                self.message(indent + 1);
                self.line(indent, "}");
            }
            4 | 5 if nest && room >= 5 => {
                let op = if self.rng.gen_bool(0.5) { "par" } else { "alt" };
                self.budget -= 2;
                self.line(indent, &format!("{op} {{"));
                let operands = self.rng.gen_range(2..=3).min(room - 2);
                let mut avail = room - 2;
                for k in 0..operands {
                    let reserve = operands - k - 1;
                    let limit = (avail - reserve).min(2);
                    let before = self.budget;
                    self.line(indent + 1, "op {");
                    self.block(indent + 2, depth + 1, limit, false);
                    self.line(indent + 1, "}");
                    avail -= before - self.budget;
                }
                self.line(indent, "}");
            }
            6 | 7 if nest && room >= 3 => {
                let head = match self.rng.gen_range(0..3) {
                    0 => "opt".to_string(),
                    1 => "strict".to_string(),
                    _ => format!("loop {}", self.rng.gen_range(0..=self.shape.max_loop)),
                };
                self.budget -= 2;
                self.line(indent, &format!("{head} {{"));
                let inner = (room - 2).min(3);
                self.block(indent + 1, depth + 1, inner, false);
                self.line(indent, "}");
            }
            _ if room >= 1 => self.message(indent),
            _ => {}
        }
    }
}

/// Source text of a random valid diagram named `name`: SUT `S`, one or two
/// test instances, partition lines in ascending order at the top level, and
/// timeouts that nest properly.
pub fn random_tcsd_source(rng: &mut impl Rng, name: &str, shape: TcsdShape) -> String {
    let tests: Vec<String> = (0..rng.gen_range(1..=2)).map(|i| format!("T{i}")).collect();
    let mut w = Writer {
        rng,
        shape,
        budget: shape.max_sut_events,
        tests: tests.clone(),
        last_at: None,
        out: String::new(),
    };
    w.line(0, &format!("tcsd {name} {{"));
    w.line(1, "sut S");
    for t in &tests {
        w.line(1, &format!("test {t}"));
    }
    let room = w.budget;
    w.block(1, 0, room, true);
    w.line(0, "}");
    w.out
}
