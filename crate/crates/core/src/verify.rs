//! Brute-force oracles: dense permutations, orbit audits, and exhaustive
//! search over hierarchical decision assignment trees on three variables.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compose::Step;
use crate::counter::{Counter, Direction, Recipe, Walk};
use crate::dat::DecisionAssignmentTree;
use crate::error::{Error, Result};
use crate::word::Domain;

/// Largest domain [`densify`] will tabulate.
pub const DENSE_LIMIT: u64 = 1 << 24;

/// Search spaces beyond this many candidates are refused.
pub const SEARCH_LIMIT: u128 = 1_000_000_000;

/// A permutation of `0..len` as an image table. `a.compose(b)` is `a∘b`,
/// which applies `b` first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensePermutation {
    image: Vec<u32>,
}

impl DensePermutation {
    pub fn identity(len: usize) -> Self {
        DensePermutation { image: (0..len as u32).collect() }
    }

    pub fn from_image(image: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; image.len()];
        for &x in &image {
            let x = x as usize;
            if x >= image.len() || seen[x] {
                return Err(Error::Precondition("image table is not a bijection".into()));
            }
            seen[x] = true;
        }
        Ok(DensePermutation { image })
    }

    /// From disjoint cycles on `0..len`.
    pub fn from_cycles(len: usize, cycles: &[&[u32]]) -> Result<Self> {
        let mut image: Vec<u32> = (0..len as u32).collect();
        for cyc in cycles {
            for (i, &x) in cyc.iter().enumerate() {
                image[x as usize] = cyc[(i + 1) % cyc.len()];
            }
        }
        DensePermutation::from_image(image)
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn get(&self, x: usize) -> usize {
        self.image[x] as usize
    }

    pub fn image(&self) -> &[u32] {
        &self.image
    }

    pub fn compose(&self, other: &DensePermutation) -> DensePermutation {
        DensePermutation { image: other.image.iter().map(|&x| self.image[x as usize]).collect() }
    }

    pub fn inverse(&self) -> DensePermutation {
        let mut inv = vec![0u32; self.image.len()];
        for (x, &y) in self.image.iter().enumerate() {
            inv[y as usize] = x as u32;
        }
        DensePermutation { image: inv }
    }

    pub fn pow(&self, mut e: u64) -> DensePermutation {
        let mut acc = DensePermutation::identity(self.len());
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    /// Cycle length → number of cycles of that length (fixed points included).
    pub fn cycle_census(&self) -> BTreeMap<usize, usize> {
        let mut seen = vec![false; self.len()];
        let mut census = BTreeMap::new();
        for s in 0..self.len() {
            if seen[s] {
                continue;
            }
            let mut len = 0;
            let mut x = s;
            while !seen[x] {
                seen[x] = true;
                x = self.get(x);
                len += 1;
            }
            *census.entry(len).or_insert(0) += 1;
        }
        census
    }

    pub fn is_single_cycle(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return false;
        }
        let mut x = self.get(0);
        let mut steps = 1;
        while x != 0 {
            x = self.get(x);
            steps += 1;
        }
        steps == n
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &x)| i == x as usize)
    }
}

/// Tabulates a map on a domain of at most [`DENSE_LIMIT`] words, ranked with
/// coordinate 1 most significant. Fails if the map is not a bijection.
pub fn densify<F>(domain: &Domain, f: F) -> Result<DensePermutation>
where
    F: Fn(&mut Vec<u32>) + Sync,
{
    let size = domain
        .size_u64()
        .filter(|&s| s <= DENSE_LIMIT)
        .ok_or_else(|| Error::ResourceBound(format!("domain larger than {DENSE_LIMIT} words")))?;
    let image: Vec<u32> = (0..size)
        .into_par_iter()
        .map_init(
            || vec![0u32; domain.width()],
            |cells, r| {
                cells.copy_from_slice(domain.unrank(r as u128).digits());
                f(cells);
                domain.rank_u64(cells) as u32
            },
        )
        .collect();
    DensePermutation::from_image(image)
}

/// The composition of `steps` applied in list order.
pub fn densify_steps<S: Step>(domain: &Domain, steps: &[S]) -> Result<DensePermutation> {
    densify(domain, |c| {
        for s in steps {
            s.apply(c);
        }
    })
}

pub fn densify_counter(counter: &dyn Counter, dir: Direction) -> Result<DensePermutation> {
    densify(counter.domain(), |c| counter.step(c, dir))
}

pub fn perm_equal(a: &DensePermutation, b: &DensePermutation) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Precondition(format!("domain sizes differ: {} vs {}", a.len(), b.len())));
    }
    Ok(a == b)
}

/// Outcome of an orbit audit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditReport {
    pub observed_length: Option<u128>,
    pub claimed_length: u128,
    pub max_reads: usize,
    pub claimed_reads: Option<usize>,
    pub max_writes: usize,
    pub claimed_writes: Option<usize>,
    pub max_changed: usize,
    pub distinct: bool,
    pub truncated: bool,
    pub space_optimal: bool,
    pub missing_count: Option<u64>,
    pub missing_sample: Vec<String>,
    pub roundtrip_checked: u128,
    pub roundtrip_failures: u128,
    pub passed: bool,
    pub failures: Vec<String>,
    pub recipe: Recipe,
}

const MISSING_SAMPLE: usize = 16;

/// Walks the whole claimed orbit (plus one step) and compares against the
/// counter's claims.
pub fn audit(counter: &dyn Counter) -> AuditReport {
    audit_with_limit(counter, counter.claimed_length().saturating_add(1))
}

pub fn audit_with_limit(counter: &dyn Counter, max_steps: u128) -> AuditReport {
    let walk = Walk::new(counter).max_steps(max_steps).roundtrip(true).run();
    let domain = counter.domain();
    let mut failures = Vec::new();
    if walk.observed_length != Some(counter.claimed_length()) {
        failures.push(match walk.observed_length {
            Some(l) => format!("observed length {l}, claimed {}", counter.claimed_length()),
            None => format!("start word not revisited within {} steps", walk.steps),
        });
    }
    if let Some((at, w)) = &walk.repeat {
        failures.push(format!("word {} revisited at step {at}", domain.format_word(w)));
    }
    if let Some(c) = counter.claimed_reads().filter(|&c| walk.max_reads > c) {
        failures.push(format!("read {} cells in one step, claimed {c}", walk.max_reads));
    }
    if let Some(c) = counter.claimed_writes().filter(|&c| walk.max_writes > c) {
        failures.push(format!("wrote {} cells in one step, claimed {c}", walk.max_writes));
    }
    if walk.roundtrip_failures > 0 {
        failures.push(format!("{} steps not undone by the reverse step", walk.roundtrip_failures));
    }
    let (missing_count, missing_sample) = match &walk.visited {
        Some(v) if walk.distinct && !walk.truncated => (
            Some(v.capacity() - v.count()),
            v.missing()
                .take(MISSING_SAMPLE)
                .map(|r| domain.format_word(&domain.unrank(r as u128)))
                .collect(),
        ),
        _ => (None, Vec::new()),
    };
    AuditReport {
        observed_length: walk.observed_length,
        claimed_length: counter.claimed_length(),
        max_reads: walk.max_reads,
        claimed_reads: counter.claimed_reads(),
        max_writes: walk.max_writes,
        claimed_writes: counter.claimed_writes(),
        max_changed: walk.max_changed,
        distinct: walk.distinct,
        truncated: walk.truncated,
        space_optimal: counter.is_space_optimal(),
        missing_count,
        missing_sample,
        roundtrip_checked: walk.roundtrip_checked,
        roundtrip_failures: walk.roundtrip_failures,
        passed: failures.is_empty(),
        failures,
        recipe: counter.recipe(),
    }
}

/// Candidate count of the hierarchical search space for `(m1, m2, m3)`.
///
/// The root queries x1; branch `a` queries x2 (for `a ∈ A2`) or x3 (for
/// `a ∈ A3`), and the leaf rewrites x1 and the queried variable. The induced
/// map is a bijection exactly when, for some `T2 ⊂ Z_{m1}` with
/// `|T2| = |A2|`, the leaves on x2-branches biject `A2 × Z_{m2}` onto
/// `T2 × Z_{m2}` and the x3-branches biject `A3 × Z_{m3}` onto the
/// complement. Assignments with `A2` or `A3` empty leave a variable
/// untouched and are skipped.
pub fn hierarchical_space_size(radices: [u32; 3]) -> u128 {
    let [m1, m2, m3] = radices.map(u128::from);
    (1..m1)
        .map(|s| {
            let c = binomial(m1, s);
            c.saturating_mul(c)
                .saturating_mul(factorial(s * m2))
                .saturating_mul(factorial((m1 - s) * m3))
        })
        .fold(0u128, u128::saturating_add)
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn factorial(n: u128) -> u128 {
    (1..=n).fold(1u128, |acc, x| acc.saturating_mul(x))
}

fn check_search_bounds(radices: &[u32]) -> Result<[u32; 3]> {
    let r: [u32; 3] = radices
        .try_into()
        .map_err(|_| Error::Precondition(format!("expected 3 radices, got {}", radices.len())))?;
    if r.iter().any(|&m| m < 2) {
        return Err(Error::InvalidDomain("radices must be at least 2".into()));
    }
    if r.iter().map(|&m| m as u64).product::<u64>() > 200 {
        return Err(Error::ResourceBound("m1*m2*m3 exceeds 200".into()));
    }
    let size = hierarchical_space_size(r);
    if size > SEARCH_LIMIT {
        return Err(Error::ResourceBound(format!("search space of {size} candidates exceeds {SEARCH_LIMIT}")));
    }
    Ok(r)
}

/// One fully specified hierarchical tree: the branch choice per x1 value and
/// the leaf images, indexed `(position in A, queried value)`.
struct Candidate {
    on_x2: Vec<bool>,
    a2: Vec<u32>,
    a3: Vec<u32>,
    /// leaf image on x2 branches: (new x1, new x2)
    img2: Vec<(u32, u32)>,
    /// leaf image on x3 branches: (new x1, new x3)
    img3: Vec<(u32, u32)>,
}

impl Candidate {
    fn to_dat(&self, [m1, m2, m3]: [u32; 3]) -> DecisionAssignmentTree {
        let children = (0..m1)
            .map(|a| {
                let (coord, radix, set, img) = if self.on_x2[a as usize] {
                    (1, m2, &self.a2, &self.img2)
                } else {
                    (2, m3, &self.a3, &self.img3)
                };
                let pos = set.iter().position(|&x| x == a).expect("branch in its set");
                let leaves = (0..radix)
                    .map(|v| {
                        let (x1, y) = img[pos * radix as usize + v as usize];
                        DecisionAssignmentTree::leaf(vec![(0, x1), (coord, y)])
                    })
                    .collect();
                DecisionAssignmentTree::query(coord, leaves)
            })
            .collect();
        DecisionAssignmentTree::query(0, children)
    }
}

/// Visits every candidate for one branch assignment in lexicographic order
/// (T2, then x2 leaf bijection, then x3 leaf bijection) until `visit`
/// returns true. Returns whether it stopped early.
fn for_each_candidate<F>(radices: [u32; 3], mask: u32, mut visit: F) -> bool
where
    F: FnMut(&[u32], &Candidate) -> bool,
{
    let [m1, m2, m3] = radices;
    let n = (m1 * m2 * m3) as usize;
    let on_x2: Vec<bool> = (0..m1).map(|a| mask >> (m1 - 1 - a) & 1 == 0).collect();
    let a2: Vec<u32> = (0..m1).filter(|&a| on_x2[a as usize]).collect();
    let a3: Vec<u32> = (0..m1).filter(|&a| !on_x2[a as usize]).collect();
    let (n2, n3) = (a2.len() * m2 as usize, a3.len() * m3 as usize);
    let mut next = vec![0u32; n];
    let mut cand = Candidate {
        on_x2: on_x2.clone(),
        a2: a2.clone(),
        a3: a3.clone(),
        img2: vec![(0, 0); n2],
        img3: vec![(0, 0); n3],
    };
    let idx = |x1: u32, x2: u32, x3: u32| ((x1 * m2 + x2) * m3 + x3) as usize;
    for t2 in (0..m1).combinations(a2.len()) {
        let t3: Vec<u32> = (0..m1).filter(|x| !t2.contains(x)).collect();
        for p2 in (0..n2).permutations(n2) {
            for (src, &dst) in p2.iter().enumerate() {
                cand.img2[src] = (t2[dst / m2 as usize], dst as u32 % m2);
            }
            for (pos, &a) in a2.iter().enumerate() {
                for x2 in 0..m2 {
                    let (y1, y2) = cand.img2[pos * m2 as usize + x2 as usize];
                    for x3 in 0..m3 {
                        next[idx(a, x2, x3)] = idx(y1, y2, x3) as u32;
                    }
                }
            }
            for p3 in (0..n3).permutations(n3) {
                for (src, &dst) in p3.iter().enumerate() {
                    cand.img3[src] = (t3[dst / m3 as usize], dst as u32 % m3);
                }
                for (pos, &a) in a3.iter().enumerate() {
                    for x3 in 0..m3 {
                        let (y1, y3) = cand.img3[pos * m3 as usize + x3 as usize];
                        for x2 in 0..m2 {
                            next[idx(a, x2, x3)] = idx(y1, x2, y3) as u32;
                        }
                    }
                }
                if visit(&next, &cand) {
                    return true;
                }
            }
        }
    }
    false
}

/// Whether the functional graph `next` on `0..len` is one full cycle.
fn single_cycle(next: &[u32]) -> bool {
    let mut x = next[0] as usize;
    let mut steps = 1;
    while x != 0 {
        if steps == next.len() {
            return false;
        }
        x = next[x] as usize;
        steps += 1;
    }
    steps == next.len()
}

fn branch_masks(m1: u32) -> impl Iterator<Item = u32> + Clone {
    1..(1u32 << m1) - 1
}

/// Searches for a hierarchical tree over `Z_{m1} × Z_{m2} × Z_{m3}` whose
/// step map is a single cycle through all `m1 m2 m3` words. The first
/// solution in enumeration order is returned.
pub fn search_hierarchical(radices: &[u32]) -> Result<Option<DecisionAssignmentTree>> {
    let r = check_search_bounds(radices)?;
    let masks: Vec<u32> = branch_masks(r[0]).collect();
    Ok(masks.par_iter().find_map_first(|&mask| {
        let mut found = None;
        for_each_candidate(r, mask, |next, cand| {
            if single_cycle(next) {
                found = Some(cand.to_dat(r));
                true
            } else {
                false
            }
        });
        found
    }))
}

/// Number of hierarchical trees in the search space that are single cycles.
pub fn count_hierarchical(radices: &[u32]) -> Result<u64> {
    let r = check_search_bounds(radices)?;
    let masks: Vec<u32> = branch_masks(r[0]).collect();
    Ok(masks
        .par_iter()
        .map(|&mask| {
            let mut count = 0u64;
            for_each_candidate(r, mask, |next, _| {
                count += single_cycle(next) as u64;
                false
            });
            count
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_algebra() {
        let p = DensePermutation::from_cycles(5, &[&[0, 1, 2]]).unwrap();
        assert_eq!(p.pow(3), DensePermutation::identity(5));
        assert_eq!(p.compose(&p.inverse()), DensePermutation::identity(5));
        assert_eq!(p.cycle_census(), BTreeMap::from([(1, 2), (3, 1)]));
        assert!(!p.is_single_cycle());
        assert!(DensePermutation::from_cycles(3, &[&[0, 2, 1]]).unwrap().is_single_cycle());
    }

    #[test]
    fn composition_applies_right_operand_first() {
        let a = DensePermutation::from_image(vec![1, 0, 2]).unwrap();
        let b = DensePermutation::from_image(vec![0, 2, 1]).unwrap();
        // b sends 1 to 2, then a leaves 2 alone.
        assert_eq!(a.compose(&b).get(1), 2);
    }

    #[test]
    fn non_bijections_rejected() {
        assert!(DensePermutation::from_image(vec![0, 0]).is_err());
        let d = Domain::uniform(2, 2).unwrap();
        assert!(densify(&d, |c| c[0] = 0).is_err());
    }

    #[test]
    fn perm_equal_checks_domain() {
        let a = DensePermutation::identity(3);
        assert!(perm_equal(&a, &a).unwrap());
        assert!(perm_equal(&a, &DensePermutation::identity(4)).is_err());
    }

    #[test]
    fn space_size_for_smallest_triples() {
        // (2,2,2): A2 = one of 2 values, T2 one of 2, 2! leaf maps per side.
        assert_eq!(hierarchical_space_size([2, 2, 2]), 2 * 2 * 2 * 2);
        assert!(hierarchical_space_size([3, 4, 4]) < SEARCH_LIMIT);
    }

    #[test]
    fn search_bounds_enforced() {
        assert!(matches!(search_hierarchical(&[5, 5, 5]), Err(Error::ResourceBound(_))));
        assert!(search_hierarchical(&[2, 2]).is_err());
    }
}
