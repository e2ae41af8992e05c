use qgc::cells::Cells;
use qgc::compose::{
    crt_compose, cycle_compose, general_counter, multiplicative_order, stitch_radix, ComponentCounter, Step,
};
use qgc::field::{FieldSpec, Poly};
use qgc::graycode::{gray_unrank, GrayCode};
use qgc::linear::{companion_matrix, MatrixFq};
use qgc::verify::audit;
use qgc::{Counter, CounterExt, Direction, Domain, Error, Recipe, Walk, Word};

/// Adds 1 mod m to one cell: a single m-cycle on Z_m.
struct Shift {
    m: u32,
}

impl Step for Shift {
    fn apply(&self, cells: &mut dyn Cells) {
        let x = cells.read(0);
        cells.write(0, (x + 1) % self.m);
    }

    fn apply_inverse(&self, cells: &mut dyn Cells) {
        let x = cells.read(0);
        cells.write(0, (x + self.m - 1) % self.m);
    }

    fn reads(&self) -> usize {
        1
    }

    fn writes(&self) -> usize {
        1
    }
}

/// Multiplies F_2^n by a whole matrix per step; cycles the nonzero vectors.
struct MatrixCounter {
    a: MatrixFq,
    a_inv: MatrixFq,
    domain: Domain,
}

impl MatrixCounter {
    fn new(lower: &[u32]) -> Self {
        let f2 = FieldSpec::new(2).unwrap();
        let a = companion_matrix(&Poly::monic(lower), f2).unwrap();
        let a_inv = a.inverse().unwrap();
        MatrixCounter { domain: Domain::uniform(2, lower.len()).unwrap(), a, a_inv }
    }
}

impl Counter for MatrixCounter {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn step(&self, cells: &mut dyn Cells, dir: Direction) {
        let n = self.domain.width();
        let x: Vec<u32> = (0..n).map(|i| cells.read(i)).collect();
        let a = if dir == Direction::Next { &self.a } else { &self.a_inv };
        for (i, v) in a.apply(&x).into_iter().enumerate() {
            cells.write(i, v);
        }
    }

    fn claimed_length(&self) -> u128 {
        (1 << self.domain.width()) - 1
    }

    fn claimed_reads(&self) -> Option<usize> {
        Some(self.domain.width())
    }

    fn claimed_writes(&self) -> Option<usize> {
        Some(self.domain.width())
    }

    fn start(&self) -> Word {
        let mut w = vec![0; self.domain.width()];
        w[0] = 1;
        Word(w)
    }

    fn recipe(&self) -> Recipe {
        Recipe::Custom { name: "matrix".into() }
    }
}

#[test]
fn three_cycle_on_z3_with_one_pointer_digit() {
    let c = cycle_compose(vec![Shift { m: 3 }], Domain::uniform(3, 1).unwrap(), Word(vec![0]), 3, 3, 1).unwrap();
    let rep = Walk::new(&c).roundtrip(true).run();
    assert_eq!(rep.observed_length, Some(9));
    assert!(rep.distinct && rep.roundtrip_ok());
    assert!(c.is_space_optimal());
}

#[test]
fn identity_padding_past_the_step_list() {
    // Two steps, pointer capacity 4: ranks 2 and 3 leave the inner word alone.
    let steps = vec![Shift { m: 5 }, Shift { m: 5 }];
    let c = cycle_compose(steps, Domain::uniform(5, 1).unwrap(), Word(vec![0]), 5, 2, 2).unwrap();
    let mut w = c.start();
    let mut inner = 0u32;
    for i in 0..20u128 {
        let rank = i % 4;
        assert_eq!(&w.digits()[..2], gray_unrank(rank, 2, 2).unwrap().digits());
        assert_eq!(w.digits()[2], inner);
        if rank < 2 {
            inner = (inner + 1) % 5;
        }
        w = c.next(&w);
    }
    assert_eq!(w, c.start());
    assert_eq!(audit(&c).observed_length, Some(20));
}

#[test]
fn companion_elementaries_under_a_pointer_give_24() {
    let f2 = FieldSpec::new(2).unwrap();
    let a = companion_matrix(&Poly::monic(&[1, 1]), f2).unwrap();
    let ops = qgc::linear::decompose_elementary(&a).unwrap();
    assert!(ops.len() <= 8);
    let steps: Vec<_> = ops.into_iter().map(|op| qgc::linear::FieldStep { field: f2, op }).collect();
    let c = cycle_compose(steps, Domain::uniform(2, 2).unwrap(), Word(vec![0, 1]), 3, 2, 3).unwrap();
    let rep = audit(&c);
    assert_eq!(rep.observed_length, Some(24));
    assert!(rep.passed, "{:?}", rep.failures);
}

#[test]
fn pointer_too_small_is_refused() {
    let steps: Vec<Shift> = (0..5).map(|_| Shift { m: 3 }).collect();
    let r = cycle_compose(steps, Domain::uniform(3, 1).unwrap(), Word(vec![0]), 3, 2, 2);
    assert!(matches!(r, Err(Error::PointerTooSmall { .. })));
}

fn gray(m: u32, r: usize) -> ComponentCounter {
    ComponentCounter::new(Box::new(GrayCode::new(m, r).unwrap()))
}

#[test]
fn two_by_three_product() {
    let c = crt_compose(vec![gray(2, 1), gray(3, 1)]).unwrap();
    let rep = Walk::new(&c).roundtrip(true).run();
    assert_eq!(rep.observed_length, Some(6));
    assert!(rep.distinct && rep.roundtrip_ok());
}

#[test]
fn four_three_seven_product_with_a_matrix_component() {
    let c = crt_compose(vec![
        gray(4, 1),
        gray(3, 1),
        ComponentCounter::new(Box::new(MatrixCounter::new(&[1, 1, 0]))),
    ])
    .unwrap();
    assert_eq!(c.claimed_length(), 84);
    let rep = Walk::new(&c).roundtrip(true).run();
    assert_eq!(rep.observed_length, Some(84));
    assert!(rep.distinct && rep.roundtrip_ok());
    // Projections: every (clock, a, b) pairing with b nonzero appears once.
    let mut seen = std::collections::HashSet::new();
    let mut w = c.start();
    for _ in 0..84 {
        assert!(seen.insert(w.clone()));
        assert!(w.digits()[2..].iter().any(|&x| x != 0));
        w = c.next(&w);
    }
    assert_eq!(seen.len(), 84);
}

#[test]
fn shared_factors_and_short_clocks_are_refused() {
    let ok = crt_compose(vec![gray(2, 1), gray(2, 2), gray(3, 2)]).unwrap();
    assert_eq!(Walk::new(&ok).run().observed_length, Some(72));
    let r = crt_compose(vec![gray(5, 1), gray(2, 2), gray(2, 1)]);
    assert!(matches!(r, Err(Error::NotCoprime { a: 4, b: 2 })));
    let r = crt_compose(vec![gray(2, 1), gray(3, 1), gray(5, 1), gray(7, 1)]);
    assert!(matches!(r, Err(Error::ClockTooShort { len: 2, needed: 3 })));
}

#[test]
fn stitched_gray_code_over_z4() {
    let s = stitch_radix(2, Box::new(GrayCode::new(2, 4).unwrap())).unwrap();
    assert_eq!(s.domain().radices(), &[4, 4]);
    let rep = Walk::new(&s).roundtrip(true).run();
    assert_eq!(rep.observed_length, Some(16));
    assert!(rep.distinct && rep.roundtrip_ok());
    assert!(s.is_space_optimal());
    let mut w = s.start();
    for i in 0..16u128 {
        let bits = gray_unrank(i, 2, 4).unwrap().into_digits();
        let blocks: Vec<u32> = bits.chunks(2).map(|b| 2 * b[0] + b[1]).collect();
        assert_eq!(w.digits(), blocks.as_slice());
        w = s.next(&w);
    }
    assert!(stitch_radix(3, Box::new(GrayCode::new(2, 4).unwrap())).is_err());
}

#[test]
fn multiplicative_order_matches_brute_force() {
    for o in (1u64..200).step_by(2) {
        let mut x = 1u64;
        let brute = (1u64..=o)
            .find(|_| {
                x = x * 2 % o;
                x == 1 % o
            })
            .unwrap();
        assert_eq!(multiplicative_order(o).unwrap(), brute, "o={o}");
    }
    assert!(multiplicative_order(6).is_err());
}

#[test]
fn small_power_of_two_radices() {
    for (m, n) in [(4u32, 2usize), (4, 3), (4, 4), (8, 2), (8, 3), (16, 2)] {
        let c = general_counter(m, n).unwrap();
        assert_eq!(c.domain().radices(), vec![m; n].as_slice());
        let rep = audit(c.as_ref());
        assert!(rep.passed, "m={m} n={n}: {:?}", rep.failures);
        assert!(rep.max_writes <= 2, "m={m} n={n}");
        let Recipe::Stitch { inner, .. } = c.recipe() else { panic!("unexpected recipe") };
        let Recipe::Linear { n: d, r, .. } = *inner else { panic!("unexpected inner recipe") };
        let w = (m.trailing_zeros() as usize) * n;
        assert_eq!(d + r, w);
        assert_eq!(rep.observed_length, Some((1u128 << w) - (1 << r)));
    }
}

#[test]
fn general_counter_routes_odd_radices() {
    let c = general_counter(3, 11).unwrap();
    assert!(c.is_space_optimal());
    assert!(matches!(c.recipe(), Recipe::Odd { .. }));
    assert!(general_counter(6, 11).is_err());
}

#[test]
fn general_counter_for_radix_six_is_a_clocked_product() {
    let c = general_counter(6, 12).unwrap();
    let Recipe::General { clock_width, binary_data, binary_pointer, clock_length, binary_length, odd_length, .. } =
        c.recipe()
    else {
        panic!("unexpected recipe");
    };
    assert_eq!(clock_width, 1);
    assert_eq!(binary_data + binary_pointer, 11);
    assert_eq!(clock_length, 6);
    assert_eq!(binary_length, (1 << 11) - (1 << binary_pointer));
    assert_eq!(odd_length, 3u128.pow(11));
    assert_eq!(c.claimed_length(), clock_length * binary_length * odd_length);
    // Walk a prefix in both directions; full orbit is covered by the acceptance target.
    let mut w = c.start();
    let mut seen = std::collections::HashSet::new();
    for _ in 0..200_000 {
        assert!(seen.insert(w.clone()));
        let (next, stats) = c.step_word(&w, Direction::Next);
        assert!(stats.writes <= 3);
        assert_eq!(c.prev(&next), w);
        w = next;
    }
}
