//! Composition engines.
//!
//! [`cycle_compose`] drives a list of step permutations with a Gray-code
//! instruction pointer. [`crt_compose`] runs counters with co-prime lengths
//! side by side, advancing one of them whenever the first passes a trigger
//! word. [`stitch_radix`] and [`general_counter`] re-encode cells so these
//! pieces cover any radix.

use num_integer::Integer;

use crate::cells::{Cells, Window};
use crate::counter::{Counter, CounterExt, Direction, Recipe};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::graycode::{self, gray_len, GrayCode};
use crate::field::find_primitive;
use crate::linear::{companion_matrix, decompose_elementary, linear_counter};
use crate::permdecomp::{odd_counter, odd_min_width};
use crate::word::{Domain, Word};

/// A bijection on an inner domain that can be applied through [`Cells`].
pub trait Step: Send + Sync {
    fn apply(&self, cells: &mut dyn Cells);
    fn apply_inverse(&self, cells: &mut dyn Cells);
    fn reads(&self) -> usize;
    fn writes(&self) -> usize;
}

/// Pointer cells first, then the inner domain. Each step applies the step
/// selected by the pointer's rank (identity past the end of the list) and
/// advances the pointer.
pub struct CycleCounter<S> {
    steps: Vec<S>,
    pointer_m: u32,
    pointer_r: usize,
    inner: Domain,
    domain: Domain,
    start: Word,
    inner_cycle: u128,
    pointer_len: u128,
    len: u128,
}

/// Builds the counter; `inner_cycle` is the cycle length of the composed
/// steps through `start_inner`, and the result has length `m^r * inner_cycle`.
pub fn cycle_compose<S: Step>(
    steps: Vec<S>,
    inner: Domain,
    start_inner: Word,
    inner_cycle: u128,
    pointer_m: u32,
    pointer_r: usize,
) -> Result<CycleCounter<S>> {
    if pointer_r == 0 {
        return Err(Error::PointerTooSmall { capacity: 1, steps: steps.len() });
    }
    let cap = gray_len(pointer_m, pointer_r).ok_or_else(|| Error::ResourceBound("pointer overflows".into()))?;
    if cap < steps.len() as u128 {
        return Err(Error::PointerTooSmall { capacity: cap, steps: steps.len() });
    }
    inner.check(start_inner.digits())?;
    let len = cap
        .checked_mul(inner_cycle)
        .ok_or_else(|| Error::ResourceBound("counter length overflows".into()))?;
    let domain = Domain::uniform(pointer_m, pointer_r)?.concat(&inner);
    let mut start = vec![0; pointer_r];
    start.extend_from_slice(start_inner.digits());
    Ok(CycleCounter {
        steps,
        pointer_m,
        pointer_r,
        inner,
        domain,
        start: Word(start),
        inner_cycle,
        pointer_len: cap,
        len,
    })
}

impl<S: Step> CycleCounter<S> {
    pub fn steps(&self) -> &[S] {
        &self.steps
    }

    pub fn inner_domain(&self) -> &Domain {
        &self.inner
    }

    pub fn pointer_width(&self) -> usize {
        self.pointer_r
    }
}

impl<S: Step> Counter for CycleCounter<S> {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn step(&self, cells: &mut dyn Cells, dir: Direction) {
        let (m, r) = (self.pointer_m, self.pointer_r);
        let rank = graycode::read_rank(cells, m, r);
        let width = self.inner.width();
        match dir {
            Direction::Next => {
                if rank < self.steps.len() as u128 {
                    self.steps[rank as usize].apply(&mut Window::new(cells, r, width));
                }
                graycode::advance(cells, m, r, rank, dir);
            }
            Direction::Prev => {
                graycode::advance(cells, m, r, rank, dir);
                let before = if rank == 0 { self.pointer_len - 1 } else { rank - 1 };
                if before < self.steps.len() as u128 {
                    self.steps[before as usize].apply_inverse(&mut Window::new(cells, r, width));
                }
            }
        }
    }

    fn claimed_length(&self) -> u128 {
        self.len
    }

    fn claimed_reads(&self) -> Option<usize> {
        Some(self.pointer_r + self.steps.iter().map(Step::reads).max().unwrap_or(0))
    }

    fn claimed_writes(&self) -> Option<usize> {
        Some(1 + self.steps.iter().map(Step::writes).max().unwrap_or(0))
    }

    fn start(&self) -> Word {
        self.start.clone()
    }

    fn recipe(&self) -> Recipe {
        Recipe::Cycle {
            pointer_m: self.pointer_m,
            pointer_r: self.pointer_r,
            steps: self.steps.len(),
            inner: self.inner.radices().to_vec(),
            inner_cycle: self.inner_cycle,
        }
    }
}

/// A component for [`crt_compose`] with its declared cycle length.
pub struct ComponentCounter {
    pub counter: Box<dyn Counter>,
    pub length: u128,
}

impl ComponentCounter {
    pub fn new(counter: Box<dyn Counter>) -> Self {
        let length = counter.claimed_length();
        ComponentCounter { counter, length }
    }
}

pub struct CrtCounter {
    components: Vec<ComponentCounter>,
    offsets: Vec<usize>,
    /// First `r - 1` words of the first component's orbit, concatenated.
    triggers: Vec<u32>,
    domain: Domain,
    len: u128,
}

/// Product counter of length `ℓ_1 ℓ_2 ⋯ ℓ_r`. Requires `ℓ_1 ≥ r - 1` and
/// `ℓ_2, ..., ℓ_r` pairwise co-prime.
pub fn crt_compose(components: Vec<ComponentCounter>) -> Result<CrtCounter> {
    let r = components.len();
    if r == 0 {
        return Err(Error::Precondition("no components".into()));
    }
    let l1 = components[0].length;
    if l1 < (r - 1) as u128 {
        return Err(Error::ClockTooShort { len: l1, needed: r - 1 });
    }
    for a in 1..r {
        for b in a + 1..r {
            let (la, lb) = (components[a].length, components[b].length);
            if la.gcd(&lb) != 1 {
                return Err(Error::NotCoprime { a: la, b: lb });
            }
        }
    }
    let len = components
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.length))
        .ok_or_else(|| Error::ResourceBound("product length overflows".into()))?;
    let first = &components[0].counter;
    let mut triggers = Vec::with_capacity(r - 1);
    let mut w = first.start();
    for _ in 1..r {
        triggers.extend_from_slice(w.digits());
        w = first.next(&w);
    }
    let mut offsets = Vec::with_capacity(r);
    let mut domain: Option<Domain> = None;
    for c in &components {
        offsets.push(domain.as_ref().map_or(0, Domain::width));
        domain = Some(match domain {
            None => c.counter.domain().clone(),
            Some(d) => d.concat(c.counter.domain()),
        });
    }
    Ok(CrtCounter { components, offsets, triggers, domain: domain.expect("non-empty"), len })
}

impl CrtCounter {
    pub fn components(&self) -> &[ComponentCounter] {
        &self.components
    }

    fn step_component(&self, idx: usize, cells: &mut dyn Cells, dir: Direction) {
        let c = &self.components[idx].counter;
        c.step(&mut Window::new(cells, self.offsets[idx], c.domain().width()), dir);
    }

    fn trigger(&self, cells: &mut dyn Cells) -> Option<usize> {
        let n1 = self.components[0].counter.domain().width();
        let mut buf = [0u32; 16];
        let mut heap = Vec::new();
        let x: &mut [u32] = if n1 <= buf.len() {
            &mut buf[..n1]
        } else {
            heap.resize(n1, 0);
            &mut heap
        };
        for (c, v) in x.iter_mut().enumerate() {
            *v = cells.read(c);
        }
        self.triggers.chunks_exact(n1).position(|t| t == x)
    }
}

impl Counter for CrtCounter {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn step(&self, cells: &mut dyn Cells, dir: Direction) {
        match dir {
            Direction::Next => {
                if let Some(i) = self.trigger(cells) {
                    self.step_component(i + 1, cells, dir);
                }
                self.step_component(0, cells, dir);
            }
            Direction::Prev => {
                self.step_component(0, cells, dir);
                if let Some(i) = self.trigger(cells) {
                    self.step_component(i + 1, cells, dir);
                }
            }
        }
    }

    fn claimed_length(&self) -> u128 {
        self.len
    }

    fn claimed_reads(&self) -> Option<usize> {
        let rest = self.components[1..].iter().map(|c| c.counter.claimed_reads()).try_fold(0, |acc, r| r.map(|r| acc.max(r)))?;
        Some(self.components[0].counter.domain().width() + rest)
    }

    fn claimed_writes(&self) -> Option<usize> {
        let rest = self.components[1..].iter().map(|c| c.counter.claimed_writes()).try_fold(0, |acc, w| w.map(|w| acc.max(w)))?;
        Some(self.components[0].counter.claimed_writes()? + rest)
    }

    fn start(&self) -> Word {
        Word(self.components.iter().flat_map(|c| c.counter.start().into_digits()).collect())
    }

    fn recipe(&self) -> Recipe {
        Recipe::Crt {
            components: self.components.iter().map(|c| c.counter.recipe()).collect(),
            lengths: self.components.iter().map(|c| c.length).collect(),
        }
    }
}

/// Presents blocks of `k` bits as cells of radix `2^k`, big-endian within a
/// block: inner bit coordinate `c` is bit `k-1-(c mod k)` of block `c / k`.
struct BitView<'a> {
    base: &'a mut dyn Cells,
    k: usize,
}

impl Cells for BitView<'_> {
    fn width(&self) -> usize {
        self.base.width() * self.k
    }

    fn read(&mut self, coord: usize) -> u32 {
        let shift = self.k - 1 - coord % self.k;
        (self.base.read(coord / self.k) >> shift) & 1
    }

    fn write(&mut self, coord: usize, value: u32) {
        let block = coord / self.k;
        let shift = self.k - 1 - coord % self.k;
        let x = self.base.read(block);
        self.base.write(block, (x & !(1 << shift)) | ((value & 1) << shift));
    }
}

/// A binary counter re-read as a counter over `(Z_{2^k})^{w/k}`.
pub struct Stitched {
    inner: Box<dyn Counter>,
    k: usize,
    domain: Domain,
}

pub fn stitch_radix(k: usize, inner: Box<dyn Counter>) -> Result<Stitched> {
    if k == 0 || k > 16 {
        return Err(Error::Precondition(format!("block size {k} outside 1..=16")));
    }
    if inner.domain().radices().iter().any(|&r| r != 2) {
        return Err(Error::Precondition("stitching needs a binary inner counter".into()));
    }
    let width = inner.domain().width();
    if width % k != 0 {
        return Err(Error::NotDivisible { width, block: k });
    }
    let domain = Domain::uniform(1 << k, width / k)?;
    Ok(Stitched { inner, k, domain })
}

impl Stitched {
    pub fn inner(&self) -> &dyn Counter {
        self.inner.as_ref()
    }

    /// Packs a binary word into blocks.
    pub fn pack(&self, bits: &[u32]) -> Word {
        Word(bits.chunks(self.k).map(|b| b.iter().fold(0, |acc, &x| acc << 1 | x)).collect())
    }
}

impl Counter for Stitched {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn step(&self, cells: &mut dyn Cells, dir: Direction) {
        if self.k == 1 {
            return self.inner.step(cells, dir);
        }
        self.inner.step(&mut BitView { base: cells, k: self.k }, dir)
    }

    fn claimed_length(&self) -> u128 {
        self.inner.claimed_length()
    }

    fn claimed_reads(&self) -> Option<usize> {
        self.inner.claimed_reads()
    }

    fn claimed_writes(&self) -> Option<usize> {
        self.inner.claimed_writes()
    }

    fn start(&self) -> Word {
        self.pack(self.inner.start().digits())
    }

    fn recipe(&self) -> Recipe {
        Recipe::Stitch { block: self.k, inner: Box::new(self.inner.recipe()) }
    }
}

/// Least `e ≥ 1` with `2^e ≡ 1 (mod o)`, for odd `o`.
pub fn multiplicative_order(o: u64) -> Result<u64> {
    if o == 0 || o % 2 == 0 {
        return Err(Error::Precondition(format!("modulus {o} must be odd")));
    }
    if o == 1 {
        return Ok(1);
    }
    let mut x = 2 % o;
    let mut e = 1;
    while x != 1 {
        x = x * 2 % o;
        e += 1;
    }
    Ok(e)
}

/// Elementary factor count of the F_2 companion matrix of degree `n`.
fn binary_factor_count(n: usize) -> Result<usize> {
    let f2 = FieldSpec::Prime { p: 2 };
    Ok(decompose_elementary(&companion_matrix(&find_primitive(f2, n)?, f2)?)?.len())
}

/// Largest data width `d ≥ 2` for a binary linear counter on `w` cells whose
/// pointer `w - d` can address its factors, optionally also requiring
/// `gcd(2^d - 1, o) = 1`.
fn binary_split(w: usize, o: u64, coprime: bool) -> Result<Option<usize>> {
    for d in (2..w).rev() {
        if coprime && ((1u128 << d) - 1).gcd(&(o as u128)) != 1 {
            continue;
        }
        if d > 48 {
            continue;
        }
        let k = binary_factor_count(d)?;
        if gray_len(2, w - d).is_none_or(|cap| cap >= k as u128) {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// Splits cell values of `Z_m`, `m = 2^ℓ o`, into `(z mod 2^ℓ, z mod o)`.
/// Virtual layout: `clock` cells as-is, then `d` cells of residues mod `2^ℓ`,
/// then `d` cells of residues mod `o`, both views over the same physical
/// data cells.
struct SplitView<'a, 't> {
    base: &'a mut dyn Cells,
    t: &'t SplitTable,
}

struct SplitTable {
    clock: usize,
    d: usize,
    o: u32,
    /// combine[a * o + b] = z with z ≡ a (mod 2^ℓ), z ≡ b (mod o)
    combine: Vec<u32>,
    low: Vec<u32>,
    odd: Vec<u32>,
}

impl SplitTable {
    fn new(clock: usize, d: usize, pow2: u32, o: u32) -> Self {
        let m = pow2 * o;
        let mut combine = vec![0; m as usize];
        for z in 0..m {
            combine[((z % pow2) * o + z % o) as usize] = z;
        }
        let low = (0..m).map(|z| z % pow2).collect();
        let odd = (0..m).map(|z| z % o).collect();
        SplitTable { clock, d, o, combine, low, odd }
    }

    fn join(&self, a: u32, b: u32) -> u32 {
        self.combine[(a * self.o + b) as usize]
    }
}

impl Cells for SplitView<'_, '_> {
    fn width(&self) -> usize {
        self.t.clock + 2 * self.t.d
    }

    fn read(&mut self, v: usize) -> u32 {
        let t = self.t;
        if v < t.clock {
            self.base.read(v)
        } else if v < t.clock + t.d {
            t.low[self.base.read(v) as usize]
        } else {
            t.odd[self.base.read(v - t.d) as usize]
        }
    }

    fn write(&mut self, v: usize, value: u32) {
        let t = self.t;
        if v < t.clock {
            self.base.write(v, value)
        } else if v < t.clock + t.d {
            let z = self.base.read(v);
            self.base.write(v, t.join(value, t.odd[z as usize]));
        } else {
            let z = self.base.read(v - t.d);
            self.base.write(v - t.d, t.join(t.low[z as usize], value));
        }
    }
}

/// Counter over Z_m^n for even m with at most 3 writes per step.
pub struct GeneralCounter {
    m: u32,
    n: usize,
    domain: Domain,
    table: Option<SplitTable>,
    inner: Box<dyn Counter>,
    recipe: Recipe,
}

impl GeneralCounter {
    pub fn new(m: u32, n: usize) -> Result<Self> {
        if m % 2 == 1 {
            return Err(Error::OddRadix(m));
        }
        let ell = m.trailing_zeros() as usize;
        let o = m >> ell;
        let domain = Domain::uniform(m, n)?;
        if o == 1 {
            let w = ell * n;
            let d = binary_split(w, 1, false)?
                .ok_or_else(|| Error::TooSmall(format!("{n} cells of radix {m} cannot hold a linear counter")))?;
            let lin = linear_counter(FieldSpec::Prime { p: 2 }, d, Some(w - d))?;
            let inner: Box<dyn Counter> = Box::new(stitch_radix(ell, Box::new(lin))?);
            let recipe = inner.recipe();
            return Ok(GeneralCounter { m, n, domain, table: None, inner, recipe });
        }
        let odd_min = odd_min_width(o)?;
        let ord = multiplicative_order(o as u64)? as usize;
        let valid: Vec<usize> = (1..=ord).filter(|&i| i < n && n - i >= odd_min && ell * (n - i) >= 3).collect();
        let first = *valid.first().ok_or_else(|| {
            Error::TooSmall(format!(
                "width {n} too small: the odd part needs {odd_min} cells after a clock of at least 1"
            ))
        })?;
        let mut choice = None;
        for &i in &valid {
            let w = ell * (n - i);
            let best = binary_split(w, o as u64, false)?;
            if let Some(d) = best {
                if ((1u128 << d) - 1).gcd(&(o as u128)) == 1 {
                    choice = Some((i, d));
                    break;
                }
            }
        }
        let (i, d) = match choice {
            Some(c) => c,
            None => {
                let w = ell * (n - first);
                let d = binary_split(w, o as u64, true)?.ok_or_else(|| {
                    Error::Internal(format!("no binary width co-prime to {o} fits in {w} bits"))
                })?;
                (first, d)
            }
        };
        let data = n - i;
        let w = ell * data;
        let clock = GrayCode::new(m, i)?;
        let lin = linear_counter(FieldSpec::Prime { p: 2 }, d, Some(w - d))?;
        let bin = stitch_radix(ell, Box::new(lin))?;
        let odd = odd_counter(o, data)?;
        let (lc, lb, lo) = (clock.claimed_length(), bin.claimed_length(), odd.claimed_length());
        let crt = crt_compose(vec![
            ComponentCounter::new(Box::new(clock)),
            ComponentCounter::new(Box::new(bin)),
            ComponentCounter::new(Box::new(odd)),
        ])?;
        let recipe = Recipe::General {
            m,
            n,
            clock_width: i,
            binary_data: d,
            binary_pointer: w - d,
            clock_length: lc,
            binary_length: lb,
            odd_length: lo,
            components: Box::new(crt.recipe()),
        };
        let table = SplitTable::new(i, data, 1 << ell, o);
        Ok(GeneralCounter { m, n, domain, table: Some(table), inner: Box::new(crt), recipe })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn width(&self) -> usize {
        self.n
    }
}

impl Counter for GeneralCounter {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn step(&self, cells: &mut dyn Cells, dir: Direction) {
        match &self.table {
            None => self.inner.step(cells, dir),
            Some(t) => self.inner.step(&mut SplitView { base: cells, t }, dir),
        }
    }

    fn claimed_length(&self) -> u128 {
        self.inner.claimed_length()
    }

    fn claimed_reads(&self) -> Option<usize> {
        self.inner.claimed_reads()
    }

    fn claimed_writes(&self) -> Option<usize> {
        self.inner.claimed_writes()
    }

    fn start(&self) -> Word {
        let v = self.inner.start().into_digits();
        match &self.table {
            None => Word(v),
            Some(t) => {
                let mut w = v[..t.clock].to_vec();
                w.extend((0..t.d).map(|c| t.join(v[t.clock + c], v[t.clock + t.d + c])));
                Word(w)
            }
        }
    }

    fn recipe(&self) -> Recipe {
        self.recipe.clone()
    }
}

/// Counter over Z_m^n for any m ≥ 3: odd m uses the 2-write space-optimal
/// construction, even m the clocked product of a binary and an odd part.
pub fn general_counter(m: u32, n: usize) -> Result<Box<dyn Counter>> {
    if m % 2 == 1 {
        Ok(Box::new(odd_counter(m, n)?))
    } else {
        Ok(Box::new(GeneralCounter::new(m, n)?))
    }
}
