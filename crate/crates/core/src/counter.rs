//! The counter abstraction, construction recipes, and orbit walking.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::cells::{Cells, StepStats, Tape};
use crate::dat::{materialize, DecisionAssignmentTree};
use crate::error::Result;
use crate::word::{Domain, Word};

/// Domains up to this size get a visited-word bitset during walks.
pub const VISIT_LIMIT: u64 = 1 << 27;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Next,
    Prev,
}

/// A cyclic counter: a step function in both directions plus the claims
/// made about it by its construction.
pub trait Counter: Send + Sync {
    fn domain(&self) -> &Domain;

    /// Moves the word held in `cells` one position along the cycle. Every
    /// coordinate is accessed through `cells`, so an instrumented tape sees
    /// the true read and write sets.
    fn step(&self, cells: &mut dyn Cells, dir: Direction);

    fn claimed_length(&self) -> u128;

    fn claimed_reads(&self) -> Option<usize>;

    fn claimed_writes(&self) -> Option<usize>;

    /// A word on the claimed cycle.
    fn start(&self) -> Word;

    fn recipe(&self) -> Recipe;

    fn is_space_optimal(&self) -> bool {
        self.domain().size() == Some(self.claimed_length())
    }
}

/// Convenience stepping on owned words.
pub trait CounterExt: Counter {
    fn next(&self, w: &Word) -> Word {
        let mut cells = w.digits().to_vec();
        self.step(&mut cells, Direction::Next);
        Word(cells)
    }

    fn prev(&self, w: &Word) -> Word {
        let mut cells = w.digits().to_vec();
        self.step(&mut cells, Direction::Prev);
        Word(cells)
    }

    fn step_word(&self, w: &Word, dir: Direction) -> (Word, StepStats) {
        let mut tape = Tape::new(w.digits().to_vec());
        tape.begin();
        self.step(&mut tape, dir);
        let stats = tape.stats();
        (Word(tape.into_contents()), stats)
    }

    fn to_dat(&self, dir: Direction, node_limit: usize) -> Result<DecisionAssignmentTree> {
        materialize(self.domain(), |c: &mut dyn Cells| self.step(c, dir), node_limit)
    }
}

impl<C: Counter + ?Sized> CounterExt for C {}

/// How a counter was built, enough to rebuild it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recipe {
    Odometer { radices: Vec<u32> },
    Base { m: u32, r: usize },
    Linear { q: u64, n: usize, r: usize, poly: Vec<u64>, elementaries: usize },
    Odd { m: u32, n: usize, inner_width: usize, pointer_width: usize, two_functions: usize },
    Cycle { pointer_m: u32, pointer_r: usize, steps: usize, inner: Vec<u32>, inner_cycle: u128 },
    Crt { components: Vec<Recipe>, lengths: Vec<u128> },
    Stitch { block: usize, inner: Box<Recipe> },
    General {
        m: u32,
        n: usize,
        clock_width: usize,
        binary_data: usize,
        binary_pointer: usize,
        clock_length: u128,
        binary_length: u128,
        odd_length: u128,
        components: Box<Recipe>,
    },
    Custom { name: String },
}

/// Mixed-radix +1 with the last coordinate least significant. Reads and
/// writes the carry chain, so it is a counter with n reads in the worst case.
#[derive(Clone, Debug)]
pub struct Odometer {
    domain: Domain,
}

impl Odometer {
    pub fn new(domain: Domain) -> Self {
        Odometer { domain }
    }
}

impl Counter for Odometer {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn step(&self, cells: &mut dyn Cells, dir: Direction) {
        for c in (0..self.domain.width()).rev() {
            let m = self.domain.radix(c);
            let v = cells.read(c);
            match dir {
                Direction::Next if v + 1 < m => return cells.write(c, v + 1),
                Direction::Next => cells.write(c, 0),
                Direction::Prev if v > 0 => return cells.write(c, v - 1),
                Direction::Prev => cells.write(c, m - 1),
            }
        }
    }

    fn claimed_length(&self) -> u128 {
        self.domain.size().unwrap_or(u128::MAX)
    }

    fn claimed_reads(&self) -> Option<usize> {
        Some(self.domain.width())
    }

    fn claimed_writes(&self) -> Option<usize> {
        Some(self.domain.width())
    }

    fn start(&self) -> Word {
        self.domain.zero()
    }

    fn recipe(&self) -> Recipe {
        Recipe::Odometer { radices: self.domain.radices().to_vec() }
    }
}

/// Fixed-size bitset over word ranks.
#[derive(Clone, Debug)]
pub struct VisitSet {
    bits: Vec<u64>,
    len: u64,
    count: u64,
}

impl VisitSet {
    pub fn new(len: u64) -> Self {
        VisitSet { bits: vec![0; len.div_ceil(64) as usize], len, count: 0 }
    }

    /// Returns false if `rank` was already present.
    pub fn insert(&mut self, rank: u64) -> bool {
        let (w, b) = ((rank / 64) as usize, rank % 64);
        let fresh = self.bits[w] & (1 << b) == 0;
        if fresh {
            self.bits[w] |= 1 << b;
            self.count += 1;
        }
        fresh
    }

    pub fn contains(&self, rank: u64) -> bool {
        self.bits[(rank / 64) as usize] & (1 << (rank % 64)) != 0
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn capacity(&self) -> u64 {
        self.len
    }

    /// Ranks not present, ascending.
    pub fn missing(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).filter(move |&r| !self.contains(r))
    }
}

/// Result of walking a counter's orbit from its start word.
#[derive(Clone, Debug)]
pub struct WalkReport {
    /// Steps until the start word reappeared, if it did.
    pub observed_length: Option<u128>,
    pub steps: u128,
    pub max_reads: usize,
    pub max_writes: usize,
    /// Largest number of coordinates whose value actually changed in one step.
    pub max_changed: usize,
    pub distinct: bool,
    pub truncated: bool,
    /// Step index and word of the first revisit of a non-start word.
    pub repeat: Option<(u128, Word)>,
    pub roundtrip_checked: u128,
    pub roundtrip_failures: u128,
    pub first_roundtrip_failure: Option<Word>,
    pub visited: Option<VisitSet>,
}

impl WalkReport {
    pub fn roundtrip_ok(&self) -> bool {
        self.roundtrip_failures == 0
    }
}

/// Orbit walk configuration.
pub struct Walk<'a> {
    counter: &'a dyn Counter,
    dir: Direction,
    max_steps: u128,
    roundtrip: bool,
    track_visits: bool,
}

impl<'a> Walk<'a> {
    pub fn new(counter: &'a dyn Counter) -> Self {
        let track = counter.domain().size().is_some_and(|s| s <= VISIT_LIMIT as u128);
        Walk {
            counter,
            dir: Direction::Next,
            max_steps: counter.claimed_length().saturating_add(1),
            roundtrip: false,
            track_visits: track,
        }
    }

    pub fn direction(mut self, dir: Direction) -> Self {
        self.dir = dir;
        self
    }

    pub fn max_steps(mut self, max_steps: u128) -> Self {
        self.max_steps = max_steps;
        self
    }

    /// Also check that stepping back undoes every step, on a separate thread.
    pub fn roundtrip(mut self, on: bool) -> Self {
        self.roundtrip = on;
        self
    }

    /// Visit tracking is only honored for domains within [`VISIT_LIMIT`].
    pub fn track_visits(mut self, on: bool) -> Self {
        self.track_visits = on && self.counter.domain().size().is_some_and(|s| s <= VISIT_LIMIT as u128);
        self
    }

    pub fn run(self) -> WalkReport {
        let stop = AtomicBool::new(false);
        std::thread::scope(|s| {
            let rt = self.roundtrip.then(|| s.spawn(|| self.roundtrip_walk(&stop)));
            let mut report = self.main_walk();
            if report.repeat.is_some() {
                stop.store(true, Ordering::Relaxed);
            }
            if let Some(h) = rt {
                let (checked, failures, first) = h.join().expect("roundtrip walker panicked");
                report.roundtrip_checked = checked;
                report.roundtrip_failures = failures;
                report.first_roundtrip_failure = first;
            }
            report
        })
    }

    fn main_walk(&self) -> WalkReport {
        let domain = self.counter.domain();
        let start = self.counter.start();
        let mut tape = Tape::new(start.digits().to_vec());
        let mut visited = self.track_visits.then(|| {
            let mut v = VisitSet::new(domain.size_u64().expect("checked in Walk::new"));
            v.insert(domain.rank_u64(start.digits()));
            v
        });
        let mut report = WalkReport {
            observed_length: None,
            steps: 0,
            max_reads: 0,
            max_writes: 0,
            max_changed: 0,
            distinct: true,
            truncated: false,
            repeat: None,
            roundtrip_checked: 0,
            roundtrip_failures: 0,
            first_roundtrip_failure: None,
            visited: None,
        };
        while report.steps < self.max_steps {
            tape.begin();
            self.counter.step(&mut tape, self.dir);
            report.steps += 1;
            let stats = tape.stats();
            report.max_reads = report.max_reads.max(stats.reads);
            report.max_writes = report.max_writes.max(stats.writes);
            report.max_changed = report.max_changed.max(tape.changed());
            if tape.contents() == start.digits() {
                report.observed_length = Some(report.steps);
                break;
            }
            if let Some(v) = visited.as_mut() {
                if !v.insert(domain.rank_u64(tape.contents())) {
                    report.distinct = false;
                    report.repeat = Some((report.steps, Word(tape.contents().to_vec())));
                    break;
                }
            }
        }
        report.truncated = report.observed_length.is_none() && report.repeat.is_none();
        report.visited = visited;
        report
    }

    fn roundtrip_walk(&self, stop: &AtomicBool) -> (u128, u128, Option<Word>) {
        let back = match self.dir {
            Direction::Next => Direction::Prev,
            Direction::Prev => Direction::Next,
        };
        let start = self.counter.start().into_digits();
        let mut cur = start.clone();
        let mut probe = start.clone();
        let (mut checked, mut failures, mut first) = (0u128, 0u128, None);
        while checked < self.max_steps {
            if checked % 4096 == 0 && stop.load(Ordering::Relaxed) {
                break;
            }
            probe.copy_from_slice(&cur);
            self.counter.step(&mut probe, self.dir);
            let after = probe.clone();
            self.counter.step(&mut probe, back);
            checked += 1;
            if probe != cur {
                failures += 1;
                first.get_or_insert_with(|| Word(cur.clone()));
            }
            cur = after;
            if cur == start {
                break;
            }
        }
        (checked, failures, first)
    }
}

/// Walks the orbit from the start word for at most `max_steps` steps.
pub fn measure_counter(counter: &dyn Counter, max_steps: u128) -> WalkReport {
    Walk::new(counter).max_steps(max_steps).run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_increment_on_two_bits() {
        let c = Odometer::new(Domain::uniform(2, 2).unwrap());
        let r = measure_counter(&c, 100);
        assert_eq!(r.observed_length, Some(4));
        assert_eq!((r.max_reads, r.max_writes), (2, 2));
        assert!(r.distinct && !r.truncated);
    }

    #[test]
    fn prev_undoes_next() {
        let c = Odometer::new(Domain::new(vec![2, 3, 2]).unwrap());
        let r = Walk::new(&c).roundtrip(true).run();
        assert_eq!(r.observed_length, Some(12));
        assert_eq!(r.roundtrip_checked, 12);
        assert!(r.roundtrip_ok());
        assert_eq!(r.visited.unwrap().count(), 12);
    }

    #[test]
    fn truncation_is_flagged() {
        let c = Odometer::new(Domain::uniform(2, 4).unwrap());
        let r = measure_counter(&c, 5);
        assert_eq!(r.observed_length, None);
        assert!(r.truncated);
        assert_eq!(r.steps, 5);
    }

    #[test]
    fn to_dat_matches_step() {
        let c = Odometer::new(Domain::uniform(3, 2).unwrap());
        let t = c.to_dat(Direction::Next, 1000).unwrap();
        t.validate(c.domain()).unwrap();
        for r in 0..9 {
            let w = c.domain().unrank(r);
            assert_eq!(crate::dat::dat_eval(&t, &w).0, c.next(&w));
        }
    }

    #[test]
    fn visit_set_census() {
        let mut v = VisitSet::new(130);
        assert!(v.insert(0));
        assert!(v.insert(129));
        assert!(!v.insert(129));
        assert_eq!(v.count(), 2);
        assert_eq!(v.missing().count(), 128);
        assert_eq!(v.missing().next(), Some(1));
    }

    #[test]
    fn recipe_json_is_tagged() {
        let j = serde_json::to_value(Recipe::Base { m: 3, r: 2 }).unwrap();
        assert_eq!(j, serde_json::json!({"kind": "base", "m": 3, "r": 2}));
    }
}
