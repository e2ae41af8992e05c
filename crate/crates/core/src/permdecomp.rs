//! r-functions and the decomposition of the α_i cycle family into
//! 2-functions, assembled into a space-optimal counter for odd radices.
//!
//! An r-function adds `f(x_{i1}, ..., x_{ir})` to one target coordinate
//! modulo m. `α_i` adds 1 to coordinate i when coordinates 1..i-1 are all
//! zero; applying α_1, ..., α_n in order is a single cycle through Z_m^n.
//! Large α_i are rewritten as sequences of 2-functions by commutator tricks.

use serde::{Deserialize, Serialize};

use crate::cells::Cells;
use crate::compose::{cycle_compose, CycleCounter, Step};
use crate::counter::{Counter, Direction, Recipe};
use crate::dat::{materialize, DecisionAssignmentTree};
use crate::error::{Error, Result};
use crate::graycode::gray_len;
use crate::verify::DensePermutation;
use crate::word::{Domain, Word};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Table {
    /// One value per source tuple, tuples ranked with the first source most significant.
    Dense(Vec<u32>),
    /// `value` at `point`, 0 elsewhere. An empty point matches unconditionally.
    Indicator { point: Vec<u32>, value: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RFunction {
    m: u32,
    n: usize,
    sources: Vec<usize>,
    target: usize,
    table: Table,
}

impl RFunction {
    pub fn new(m: u32, n: usize, sources: Vec<usize>, target: usize, table: Table) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidRFunction(msg));
        if m < 2 {
            return bad(format!("radix {m} below 2"));
        }
        if target >= n || sources.iter().any(|&s| s >= n) {
            return bad(format!("index beyond width {n}"));
        }
        if sources.contains(&target) {
            return bad(format!("target {} is also a source", target + 1));
        }
        let mut sorted = sources.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sources.len() {
            return bad("repeated source".into());
        }
        match &table {
            Table::Dense(t) => {
                let want = gray_len(m, sources.len()).unwrap_or(u128::MAX);
                if t.len() as u128 != want {
                    return bad(format!("dense table has {} entries, expected {want}", t.len()));
                }
                if t.iter().any(|&v| v >= m) {
                    return bad("table value out of range".into());
                }
            }
            Table::Indicator { point, value } => {
                if point.len() != sources.len() || point.iter().any(|&v| v >= m) || *value >= m {
                    return bad("indicator point or value out of range".into());
                }
            }
        }
        Ok(RFunction { m, n, sources, target, table })
    }

    pub fn indicator(m: u32, n: usize, sources: Vec<usize>, target: usize, point: Vec<u32>, value: u32) -> Result<Self> {
        RFunction::new(m, n, sources, target, Table::Indicator { point, value })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    /// Number of sources.
    pub fn arity(&self) -> usize {
        self.sources.len()
    }

    /// Table value at a source tuple.
    pub fn eval(&self, args: &[u32]) -> u32 {
        match &self.table {
            Table::Dense(t) => {
                let idx = args.iter().fold(0usize, |acc, &a| acc * self.m as usize + a as usize);
                t[idx]
            }
            Table::Indicator { point, value } => {
                if point.as_slice() == args {
                    *value
                } else {
                    0
                }
            }
        }
    }

    /// The inverse r-function: same sources and target, negated table.
    pub fn invert(&self) -> RFunction {
        let m = self.m;
        let table = match &self.table {
            Table::Dense(t) => Table::Dense(t.iter().map(|&v| (m - v) % m).collect()),
            Table::Indicator { point, value } => Table::Indicator { point: point.clone(), value: (m - value) % m },
        };
        RFunction { table, ..self.clone() }
    }

    /// Full table as dense values, for display.
    pub fn dense_values(&self) -> Vec<u32> {
        let len = gray_len(self.m, self.arity()).unwrap_or(0) as usize;
        (0..len)
            .map(|mut idx| {
                let mut args = vec![0u32; self.arity()];
                for a in args.iter_mut().rev() {
                    *a = (idx % self.m as usize) as u32;
                    idx /= self.m as usize;
                }
                self.eval(&args)
            })
            .collect()
    }

    fn run(&self, cells: &mut dyn Cells, negate: bool) {
        let mut args = [0u32; 8];
        let f = if self.sources.len() <= args.len() {
            for (a, &s) in args.iter_mut().zip(&self.sources) {
                *a = cells.read(s);
            }
            self.eval(&args[..self.sources.len()])
        } else {
            let args: Vec<u32> = self.sources.iter().map(|&s| cells.read(s)).collect();
            self.eval(&args)
        };
        let f = if negate { (self.m - f) % self.m } else { f };
        let x = cells.read(self.target);
        cells.write(self.target, (x + f) % self.m);
    }

    pub fn apply_word(&self, w: &Word) -> Word {
        let mut c = w.digits().to_vec();
        self.run(&mut c, false);
        Word(c)
    }
}

impl Step for RFunction {
    fn apply(&self, cells: &mut dyn Cells) {
        self.run(cells, false)
    }

    fn apply_inverse(&self, cells: &mut dyn Cells) {
        self.run(cells, true)
    }

    fn reads(&self) -> usize {
        self.sources.len() + 1
    }

    fn writes(&self) -> usize {
        1
    }
}

/// α_i over Z_m^{n'} (i is 1-based): add 1 to coordinate i when coordinates
/// 1..i-1 are all zero.
pub fn make_alpha(i: usize, m: u32, n_inner: usize) -> Result<RFunction> {
    if i == 0 || i > n_inner {
        return Err(Error::Precondition(format!("α index {i} outside 1..={n_inner}")));
    }
    RFunction::indicator(m, n_inner, (0..i - 1).collect(), i - 1, vec![0; i - 1], 1)
}

/// The DAT of an r-function: sources, then target, one assignment per leaf.
pub fn rfunction_to_dat(f: &RFunction, node_limit: usize) -> Result<DecisionAssignmentTree> {
    let domain = Domain::uniform(f.m, f.n)?;
    materialize(&domain, |c: &mut dyn Cells| f.run(c, false), node_limit)
}

/// Reverses a step list and inverts each entry.
pub fn invert_list(list: &[RFunction]) -> Vec<RFunction> {
    list.iter().rev().map(RFunction::invert).collect()
}

/// The 2-function adding `x_{j1} * x_{j2}` to `target`.
fn product_gate(m: u32, n: usize, j1: usize, j2: usize, target: usize) -> Result<RFunction> {
    let table = (0..m).flat_map(|a| (0..m).map(move |b| a * b % m)).collect();
    RFunction::new(m, n, vec![j1, j2], target, Table::Dense(table))
}

/// Rewrites a point-indicator r-function as 2-functions whose left-to-right
/// application equals it.
///
/// With sources split into halves A and B and two spare coordinates j1, j2,
/// the sequence γ, τ_A, γ⁻¹, τ_B, γ, τ_A⁻¹, γ⁻¹, τ_B⁻¹ adds the product of
/// the two half-indicators to the target, where γ adds `x_{j1} x_{j2}` and
/// τ_A, τ_B add the half-indicators to j1 and j2.
pub fn decompose_indicator(f: &RFunction) -> Result<Vec<RFunction>> {
    let (point, value) = match &f.table {
        Table::Indicator { point, value } => (point.clone(), *value),
        Table::Dense(_) => {
            if f.arity() <= 2 {
                return Ok(vec![f.clone()]);
            }
            return Err(Error::Precondition("only point-indicator tables can be decomposed".into()));
        }
    };
    let r = f.arity();
    if r <= 2 {
        return Ok(vec![f.clone()]);
    }
    let spare: Vec<usize> = (0..f.n).filter(|i| !f.sources.contains(i) && *i != f.target).take(2).collect();
    if spare.len() < 2 {
        return Err(Error::NoSpareIndices { needed: r + 3, width: f.n });
    }
    let (j1, j2) = (spare[0], spare[1]);
    let h = r / 2;
    let tau_a = RFunction::indicator(f.m, f.n, f.sources[..h].to_vec(), j1, point[..h].to_vec(), value)?;
    let tau_b = RFunction::indicator(f.m, f.n, f.sources[h..].to_vec(), j2, point[h..].to_vec(), 1)?;
    let gamma = product_gate(f.m, f.n, j1, j2, f.target)?;
    let gamma_inv = gamma.invert();
    let a = decompose_indicator(&tau_a)?;
    let b = decompose_indicator(&tau_b)?;
    let mut out = Vec::with_capacity(2 * a.len() + 2 * b.len() + 4);
    out.push(gamma.clone());
    out.extend(a.iter().cloned());
    out.push(gamma_inv.clone());
    out.extend(b.iter().cloned());
    out.push(gamma);
    out.extend(invert_list(&a));
    out.push(gamma_inv);
    out.extend(invert_list(&b));
    Ok(out)
}

/// Length of [`decompose_indicator`]'s output for arity r.
pub fn indicator_len(r: usize) -> usize {
    if r <= 2 {
        1
    } else {
        2 * indicator_len(r / 2) + 2 * indicator_len(r - r / 2) + 4
    }
}

/// Checks `(σ∘τ)^ℓ ∘ (τ∘σ)^ℓ = σ²` for two ℓ-cycles sharing exactly one
/// moved point. Composition `a∘b` applies b first.
pub fn cycle_isolation_check(sigma: &DensePermutation, tau: &DensePermutation, ell: usize) -> Result<bool> {
    if sigma.len() != tau.len() {
        return Err(Error::Precondition("permutations on different domains".into()));
    }
    for (name, p) in [("σ", sigma), ("τ", tau)] {
        let census = p.cycle_census();
        let nontrivial: Vec<_> = census.iter().filter(|(&len, _)| len > 1).collect();
        if nontrivial != vec![(&ell, &1)] {
            return Err(Error::Precondition(format!("{name} is not a single {ell}-cycle")));
        }
    }
    let shared = (0..sigma.len()).filter(|&x| sigma.get(x) != x && tau.get(x) != x).count();
    if shared != 1 {
        return Err(Error::Precondition(format!("cycles share {shared} moved points, expected 1")));
    }
    let st = sigma.compose(tau).pow(ell as u64);
    let ts = tau.compose(sigma).pow(ell as u64);
    Ok(st.compose(&ts) == sigma.compose(sigma))
}

/// Rewrites α_i for i ∈ {n'-1, n'} (odd m) as 2-functions using two
/// r-functions σ', τ' whose relevant cycles meet in single points:
/// `(σ'∘τ')^m ∘ (τ'∘σ')^m` equals σ'² on those cycles and the identity
/// elsewhere, and σ'² is α_i because the indicator value is (m+1)/2.
pub fn decompose_boundary(i: usize, m: u32, n_inner: usize) -> Result<Vec<RFunction>> {
    if m % 2 == 0 {
        return Err(Error::EvenRadix(m));
    }
    if n_inner < 6 {
        return Err(Error::TooSmall(format!("inner width {n_inner} below 6")));
    }
    let t = m.div_ceil(2);
    let low: Vec<usize> = (0..n_inner - 3).collect();
    let (sigma, tau) = if i == n_inner {
        (
            RFunction::indicator(m, n_inner, low.clone(), n_inner - 1, vec![0; low.len()], t)?,
            RFunction::indicator(m, n_inner, vec![n_inner - 3, n_inner - 2, n_inner - 1], 0, vec![0; 3], t)?,
        )
    } else if i + 1 == n_inner {
        (
            RFunction::indicator(m, n_inner, low.clone(), n_inner - 2, vec![0; low.len()], t)?,
            RFunction::indicator(m, n_inner, vec![n_inner - 3, n_inner - 2], 0, vec![0; 2], t)?,
        )
    } else {
        return Err(Error::Precondition(format!("boundary index {i} is not n'-1 or n'")));
    };
    let s = decompose_indicator(&sigma)?;
    let tl = decompose_indicator(&tau)?;
    let mut out = Vec::with_capacity(2 * m as usize * (s.len() + tl.len()));
    // In application order: (τ'∘σ')^m applies σ' then τ', m times; then (σ'∘τ')^m.
    for _ in 0..m {
        out.extend(s.iter().cloned());
        out.extend(tl.iter().cloned());
    }
    for _ in 0..m {
        out.extend(tl.iter().cloned());
        out.extend(s.iter().cloned());
    }
    Ok(out)
}

/// The 2-function sequence for α_1, ..., α_{n'}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionPlan {
    pub m: u32,
    pub n_inner: usize,
    /// Entry i-1 realizes α_i.
    pub per_alpha: Vec<Vec<RFunction>>,
}

impl DecompositionPlan {
    pub fn new(m: u32, n_inner: usize) -> Result<Self> {
        if m % 2 == 0 {
            return Err(Error::EvenRadix(m));
        }
        if n_inner < 6 {
            return Err(Error::TooSmall(format!("inner width {n_inner} below 6")));
        }
        let mut per_alpha = Vec::with_capacity(n_inner);
        for i in 1..=n_inner {
            let alpha = make_alpha(i, m, n_inner)?;
            per_alpha.push(if i <= 3 {
                vec![alpha]
            } else if i + 2 <= n_inner {
                decompose_indicator(&alpha)?
            } else {
                decompose_boundary(i, m, n_inner)?
            });
        }
        Ok(DecompositionPlan { m, n_inner, per_alpha })
    }

    /// k_i for i = 1..=n'.
    pub fn counts(&self) -> Vec<usize> {
        self.per_alpha.iter().map(Vec::len).collect()
    }

    /// Total k.
    pub fn len(&self) -> usize {
        self.per_alpha.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self) -> Vec<RFunction> {
        self.per_alpha.iter().flatten().cloned().collect()
    }
}

/// Plan sizes for the smallest pointer width: returns `(n', r')` with
/// `m^{r'} ≥ k(n')` and `n' + r' = n`.
pub fn odd_split(m: u32, n: usize) -> Result<(usize, usize, DecompositionPlan)> {
    if m % 2 == 0 {
        return Err(Error::EvenRadix(m));
    }
    if m < 3 {
        return Err(Error::Precondition(format!("radix {m} must be at least 3")));
    }
    for r in 1..n {
        let n_inner = n - r;
        if n_inner < 6 {
            break;
        }
        let plan = DecompositionPlan::new(m, n_inner)?;
        if gray_len(m, r).is_some_and(|cap| cap >= plan.len() as u128) {
            return Ok((n_inner, r, plan));
        }
    }
    Err(Error::TooSmall(format!("width {n} cannot hold a plan for radix {m}; need n' ≥ 6 plus a pointer")))
}

/// Smallest width accepted by [`odd_counter`] for radix m.
pub fn odd_min_width(m: u32) -> Result<usize> {
    (7..64)
        .find(|&n| odd_split(m, n).is_ok())
        .ok_or_else(|| Error::TooSmall(format!("no width below 64 works for radix {m}")))
}

/// Space-optimal counter on Z_m^n for odd m, writing 2 cells per step.
pub struct OddCounter {
    inner: CycleCounter<RFunction>,
    m: u32,
    n: usize,
    n_inner: usize,
    r: usize,
    counts: Vec<usize>,
}

impl OddCounter {
    pub fn pointer_width(&self) -> usize {
        self.r
    }

    pub fn inner_width(&self) -> usize {
        self.n_inner
    }

    /// k_i for i = 1..=n'.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn steps(&self) -> &[RFunction] {
        self.inner.steps()
    }
}

pub fn odd_counter(m: u32, n: usize) -> Result<OddCounter> {
    let (n_inner, r, plan) = odd_split(m, n)?;
    let counts = plan.counts();
    let inner_domain = Domain::uniform(m, n_inner)?;
    let cycle = gray_len(m, n_inner).ok_or_else(|| Error::ResourceBound(format!("{m}^{n_inner} overflows")))?;
    let start = inner_domain.zero();
    let inner = cycle_compose(plan.flatten(), inner_domain, start, cycle, m, r)?;
    Ok(OddCounter { inner, m, n, n_inner, r, counts })
}

impl Counter for OddCounter {
    fn domain(&self) -> &Domain {
        self.inner.domain()
    }

    fn step(&self, cells: &mut dyn Cells, dir: Direction) {
        self.inner.step(cells, dir)
    }

    fn claimed_length(&self) -> u128 {
        self.inner.claimed_length()
    }

    fn claimed_reads(&self) -> Option<usize> {
        Some(self.r + 3)
    }

    fn claimed_writes(&self) -> Option<usize> {
        Some(2)
    }

    fn start(&self) -> Word {
        self.inner.start()
    }

    fn recipe(&self) -> Recipe {
        Recipe::Odd {
            m: self.m,
            n: self.n,
            inner_width: self.n_inner,
            pointer_width: self.r,
            two_functions: self.counts.iter().sum(),
        }
    }
}
