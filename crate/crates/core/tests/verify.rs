use std::collections::BTreeMap;

use qgc::cells::{Cells, StepStats};
use qgc::counter::Odometer;
use qgc::graycode::GrayCode;
use qgc::verify::{
    audit, count_hierarchical, densify, densify_counter, hierarchical_space_size, search_hierarchical,
    DensePermutation,
};
use qgc::{
    dat_eval, measure_counter, Counter, Direction, DecisionAssignmentTree as Dat, Domain, Recipe, Walk, Word,
};

/// Independent count of single-cycle hierarchical trees: every branch choice
/// and every leaf assignment, bijective or not.
fn brute_hierarchical(m: [u32; 3]) -> u64 {
    let [m1, m2, m3] = m;
    let size = (m1 * m2 * m3) as usize;
    let idx = |a: u32, b: u32, c: u32| ((a * m2 + b) * m3 + c) as usize;
    let mut total = 0;
    for mask in 1..(1u32 << m1) - 1 {
        let on_x2: Vec<bool> = (0..m1).map(|a| mask >> a & 1 == 1).collect();
        // one leaf per (x1 value, queried value); choice count per leaf
        let leaves: Vec<(u32, u32, u32)> = (0..m1)
            .flat_map(|a| {
                let radix = if on_x2[a as usize] { m2 } else { m3 };
                (0..radix).map(move |v| (a, v, m1 * radix))
            })
            .collect();
        let combos: u64 = leaves.iter().map(|l| l.2 as u64).product();
        for mut code in 0..combos {
            let mut choice = vec![(0u32, 0u32); leaves.len()];
            for (k, &(a, _, n)) in leaves.iter().enumerate() {
                let c = (code % n as u64) as u32;
                code /= n as u64;
                let radix = if on_x2[a as usize] { m2 } else { m3 };
                choice[k] = (c / radix, c % radix);
            }
            let mut next = vec![0usize; size];
            let mut k = 0;
            for a in 0..m1 {
                let radix = if on_x2[a as usize] { m2 } else { m3 };
                for v in 0..radix {
                    let (y1, y) = choice[k];
                    k += 1;
                    for w in 0..if on_x2[a as usize] { m3 } else { m2 } {
                        let (from, to) = if on_x2[a as usize] {
                            (idx(a, v, w), idx(y1, y, w))
                        } else {
                            (idx(a, w, v), idx(y1, w, y))
                        };
                        next[from] = to;
                    }
                }
            }
            let mut x = next[0];
            let mut steps = 1;
            while x != 0 && steps <= size {
                x = next[x];
                steps += 1;
            }
            total += (x == 0 && steps == size) as u64;
        }
    }
    total
}

fn orbit_len(t: &Dat, domain: &Domain) -> Option<usize> {
    let start = domain.zero();
    let mut w = start.clone();
    for i in 1..=domain.size().unwrap() as usize {
        w = dat_eval(t, &w).0;
        if w == start {
            return Some(i);
        }
    }
    None
}

#[test]
fn search_finds_trees_exactly_for_coprime_trailing_radices() {
    for (m, expect) in [([2, 2, 2], false), ([2, 2, 3], true), ([2, 3, 3], false), ([3, 2, 2], false)] {
        let found = search_hierarchical(&m).unwrap();
        assert_eq!(found.is_some(), expect, "{m:?}");
        if let Some(t) = found {
            let d = Domain::new(m.to_vec()).unwrap();
            t.validate(&d).unwrap();
            assert_eq!(orbit_len(&t, &d), Some(12));
            assert_eq!(t.read_complexity(), 2);
            assert_eq!(t.write_complexity(), 2);
        }
    }
}

#[test]
fn solution_counts_match_brute_force() {
    for m in [[2, 2, 2], [2, 2, 3], [2, 3, 2], [3, 2, 2], [2, 3, 3]] {
        let got = count_hierarchical(&m).unwrap();
        assert_eq!(got, count_hierarchical(&m).unwrap());
        assert_eq!(got, brute_hierarchical(m), "{m:?}");
    }
}

#[test]
fn search_space_sizes() {
    // s = 1: C(2,1)^2 * 2! * 3! = 48
    assert_eq!(hierarchical_space_size([2, 2, 3]), 48);
    assert_eq!(hierarchical_space_size([3, 4, 4]), 2 * 9 * 24 * 40320);
    assert!(search_hierarchical(&[5, 5, 5]).is_err());
    assert!(search_hierarchical(&[2, 2]).is_err());
}

#[test]
fn search_is_deterministic() {
    let a = search_hierarchical(&[3, 2, 3]).unwrap().unwrap();
    let b = search_hierarchical(&[3, 2, 3]).unwrap().unwrap();
    assert_eq!(a, b);
    let json = serde_json::to_string(&a).unwrap();
    let back: Dat = serde_json::from_str(&json).unwrap();
    assert_eq!(back, a);
}

#[test]
fn dat_evaluation_counts_the_path_and_the_leaf() {
    // Z_2 x Z_3: if x1 = 0 then x2 += 1 (x1 := 1 when x2 wraps), else x1 := 0.
    let t = Dat::query(
        0,
        vec![
            Dat::query(1, vec![Dat::leaf(vec![(1, 1)]), Dat::leaf(vec![(1, 2)]), Dat::leaf(vec![(0, 1), (1, 0)])]),
            Dat::leaf(vec![(0, 0)]),
        ],
    );
    let d = Domain::new(vec![2, 3]).unwrap();
    t.validate(&d).unwrap();
    assert_eq!(dat_eval(&t, &Word(vec![0, 2])), (Word(vec![1, 0]), StepStats { reads: 2, writes: 2 }));
    assert_eq!(dat_eval(&t, &Word(vec![1, 1])), (Word(vec![0, 1]), StepStats { reads: 1, writes: 1 }));
    assert_eq!((t.read_complexity(), t.write_complexity(), t.node_count(), t.leaf_count()), (2, 2, 6, 4));
    assert_eq!(
        t.to_json(),
        serde_json::json!({"query": 1, "children": [
            {"query": 2, "children": [{"assign": [[2, 1]]}, {"assign": [[2, 2]]}, {"assign": [[1, 1], [2, 0]]}]},
            {"assign": [[1, 0]]}
        ]})
    );
    let bad = Dat::query(0, vec![Dat::leaf(vec![])]);
    assert!(bad.validate(&d).is_err());
}

/// Wraps a counter and misreports one aspect of it.
struct Liar<C> {
    inner: C,
    length: Option<u128>,
    writes: Option<usize>,
    break_prev: bool,
}

impl<C: Counter> Counter for Liar<C> {
    fn domain(&self) -> &Domain {
        self.inner.domain()
    }

    fn step(&self, cells: &mut dyn Cells, dir: Direction) {
        if self.break_prev && dir == Direction::Prev {
            return;
        }
        self.inner.step(cells, dir)
    }

    fn claimed_length(&self) -> u128 {
        self.length.unwrap_or(self.inner.claimed_length())
    }

    fn claimed_reads(&self) -> Option<usize> {
        self.inner.claimed_reads()
    }

    fn claimed_writes(&self) -> Option<usize> {
        self.writes.or(self.inner.claimed_writes())
    }

    fn start(&self) -> Word {
        self.inner.start()
    }

    fn recipe(&self) -> Recipe {
        Recipe::Custom { name: "liar".into() }
    }
}

fn liar(length: Option<u128>, writes: Option<usize>, break_prev: bool) -> Liar<Odometer> {
    Liar { inner: Odometer::new(Domain::uniform(2, 2).unwrap()), length, writes, break_prev }
}

#[test]
fn audits_catch_misreported_counters() {
    let honest = audit(&liar(None, None, false));
    assert!(honest.passed, "{:?}", honest.failures);
    assert_eq!(honest.missing_count, Some(0));

    let long = liar(Some(8), None, false);
    let m = measure_counter(&long, 100);
    assert_eq!(m.observed_length, Some(4));
    let rep = audit(&long);
    assert!(!rep.passed);
    assert_eq!(rep.observed_length, Some(4));
    assert_eq!(rep.claimed_length, 8);

    let rep = audit(&liar(None, Some(1), false));
    assert!(!rep.passed);
    assert_eq!(rep.max_writes, 2);

    let rep = audit(&liar(None, None, true));
    assert!(!rep.passed);
    assert!(rep.roundtrip_failures > 0);
}

/// 0 -> 1 -> 2 -> 1: a tail leading into a 2-cycle.
struct Funnel {
    domain: Domain,
}

impl Counter for Funnel {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn step(&self, cells: &mut dyn Cells, _: Direction) {
        let x = cells.read(0);
        cells.write(0, if x == 1 { 2 } else { 1 });
    }

    fn claimed_length(&self) -> u128 {
        3
    }

    fn claimed_reads(&self) -> Option<usize> {
        Some(1)
    }

    fn claimed_writes(&self) -> Option<usize> {
        Some(1)
    }

    fn start(&self) -> Word {
        Word(vec![0])
    }

    fn recipe(&self) -> Recipe {
        Recipe::Custom { name: "funnel".into() }
    }
}

#[test]
fn walks_detect_a_tail_into_a_cycle() {
    let f = Funnel { domain: Domain::uniform(3, 1).unwrap() };
    let rep = Walk::new(&f).run();
    assert_eq!(rep.observed_length, None);
    assert!(!rep.distinct);
    assert_eq!(rep.repeat.map(|(_, w)| w), Some(Word(vec![1])));
    assert!(!audit(&f).passed);
}

#[test]
fn dense_permutations() {
    let a = DensePermutation::from_cycles(5, &[&[0, 1, 2], &[3, 4]]).unwrap();
    let mut census = BTreeMap::new();
    census.insert(2, 1);
    census.insert(3, 1);
    assert_eq!(a.cycle_census(), census);
    assert!(!a.is_single_cycle());
    assert!(a.pow(6).is_identity());
    assert_eq!(a.compose(&a.inverse()), DensePermutation::identity(5));

    // a∘b applies b first: b sends 0 to 3, then a sends 3 to 4.
    let b = DensePermutation::from_cycles(5, &[&[0, 3]]).unwrap();
    assert_eq!(a.compose(&b).get(0), 4);
    assert_eq!(b.compose(&a).get(0), 1);

    assert!(DensePermutation::from_image(vec![0, 0, 1]).is_err());
}

#[test]
fn densified_counters() {
    let d = Domain::uniform(2, 3).unwrap();
    let p = densify_counter(&Odometer::new(d.clone()), Direction::Next).unwrap();
    assert!(p.is_single_cycle());
    assert!((0..8).all(|i| p.get(i) == (i + 1) % 8));
    let g = GrayCode::new(3, 3).unwrap();
    let next = densify_counter(&g, Direction::Next).unwrap();
    let prev = densify_counter(&g, Direction::Prev).unwrap();
    assert!(next.is_single_cycle());
    assert!(next.compose(&prev).is_identity());
    assert!(densify(&d, |c| c[0] = 0).is_err());
}
