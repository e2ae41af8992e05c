//! The modular m-ary cyclic Gray code.
//!
//! Rank `i` has base-m digits `b_1..b_r` with `b_1` least significant, and
//! maps to the word `g_j = (b_j - b_{j+1}) mod m` (with `b_{r+1} = 0`), `g_j`
//! stored at coordinate j. Consecutive ranks differ in exactly one digit of
//! `g`: incrementing the rank changes only `g_j` at the first `j` whose `b_j`
//! is not `m - 1`, by +1.

use crate::cells::Cells;
use crate::counter::{Counter, Direction, Recipe};
use crate::error::{Error, Result};
use crate::word::{Domain, Word};

/// `m^r`, or `None` on overflow.
pub fn gray_len(m: u32, r: usize) -> Option<u128> {
    (0..r).try_fold(1u128, |acc, _| acc.checked_mul(m as u128))
}

pub fn gray_unrank(i: u128, m: u32, r: usize) -> Result<Word> {
    let len = gray_len(m, r).ok_or_else(|| Error::ResourceBound(format!("{m}^{r} overflows")))?;
    if i >= len {
        return Err(Error::RankOutOfRange { rank: i, len });
    }
    let mut b = Vec::with_capacity(r + 1);
    let mut x = i;
    for _ in 0..r {
        b.push((x % m as u128) as u32);
        x /= m as u128;
    }
    b.push(0);
    Ok(Word((0..r).map(|j| (b[j] + m - b[j + 1]) % m).collect()))
}

pub fn gray_rank(w: &Word, m: u32) -> u128 {
    let mut suffix = 0u32;
    let mut rank = 0u128;
    for &g in w.digits().iter().rev() {
        suffix = (suffix + g) % m;
        rank = rank * m as u128 + suffix as u128;
    }
    rank
}

/// Reads the `r` pointer coordinates of `cells` and returns the rank.
#[inline]
pub fn read_rank(cells: &mut dyn Cells, m: u32, r: usize) -> u128 {
    if r as u32 * (32 - m.leading_zeros()) <= 64 {
        let mut suffix = 0u32;
        let mut rank = 0u64;
        for j in (0..r).rev() {
            suffix = (suffix + cells.read(j)) % m;
            rank = rank * m as u64 + suffix as u64;
        }
        return rank as u128;
    }
    let mut suffix = 0u32;
    let mut rank = 0u128;
    for j in (0..r).rev() {
        suffix = (suffix + cells.read(j)) % m;
        rank = rank * m as u128 + suffix as u128;
    }
    rank
}

/// Moves the pointer held in `cells[0..r]`, currently at `rank`, one step.
/// Writes exactly one coordinate; reads only coordinates already read by
/// [`read_rank`].
#[inline]
pub fn advance(cells: &mut dyn Cells, m: u32, r: usize, rank: u128, dir: Direction) {
    let edge = match dir {
        Direction::Next => m - 1,
        Direction::Prev => 0,
    };
    let mut j = 0;
    if let Ok(mut x) = u64::try_from(rank) {
        while j + 1 < r && (x % m as u64) as u32 == edge {
            x /= m as u64;
            j += 1;
        }
    } else {
        let mut x = rank;
        while j + 1 < r && (x % m as u128) as u32 == edge {
            x /= m as u128;
            j += 1;
        }
    }
    let g = cells.read(j);
    let g = match dir {
        Direction::Next => (g + 1) % m,
        Direction::Prev => (g + m - 1) % m,
    };
    cells.write(j, g);
}

/// Steps a Gray pointer and returns the rank it held before the step.
#[inline]
pub fn step_pointer(cells: &mut dyn Cells, m: u32, r: usize, dir: Direction) -> u128 {
    let rank = read_rank(cells, m, r);
    advance(cells, m, r, rank, dir);
    rank
}

pub fn gray_next(w: &Word, m: u32) -> Word {
    let mut cells = w.digits().to_vec();
    step_pointer(&mut cells, m, w.len(), Direction::Next);
    Word(cells)
}

pub fn gray_prev(w: &Word, m: u32) -> Word {
    let mut cells = w.digits().to_vec();
    step_pointer(&mut cells, m, w.len(), Direction::Prev);
    Word(cells)
}

/// The modular Gray code on `Z_m^r` as a space-optimal counter.
#[derive(Clone, Debug)]
pub struct GrayCode {
    m: u32,
    r: usize,
    domain: Domain,
    len: u128,
}

impl GrayCode {
    pub fn new(m: u32, r: usize) -> Result<Self> {
        let domain = Domain::uniform(m, r)?;
        let len = gray_len(m, r).ok_or_else(|| Error::ResourceBound(format!("{m}^{r} overflows")))?;
        Ok(GrayCode { m, r, domain, len })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }
}

impl Counter for GrayCode {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn step(&self, cells: &mut dyn Cells, dir: Direction) {
        step_pointer(cells, self.m, self.r, dir);
    }

    fn claimed_length(&self) -> u128 {
        self.len
    }

    fn claimed_reads(&self) -> Option<usize> {
        Some(self.r)
    }

    fn claimed_writes(&self) -> Option<usize> {
        Some(1)
    }

    fn start(&self) -> Word {
        self.domain.zero()
    }

    fn recipe(&self) -> Recipe {
        Recipe::Base { m: self.m, r: self.r }
    }
}
