//! Cell access for step functions.
//!
//! Every step function in this crate reads and writes coordinates only
//! through [`Cells`]. That gives one place to count reads and writes
//! ([`Tape`]), to remap coordinates for composed counters ([`Window`]),
//! and to discover the decision tree of a step ([`PartialTape`]).

use serde::{Deserialize, Serialize};

pub trait Cells {
    fn width(&self) -> usize;
    fn read(&mut self, coord: usize) -> u32;
    fn write(&mut self, coord: usize, value: u32);
}

/// Uninstrumented access.
impl Cells for Vec<u32> {
    fn width(&self) -> usize {
        self.len()
    }

    #[inline]
    fn read(&mut self, coord: usize) -> u32 {
        self[coord]
    }

    #[inline]
    fn write(&mut self, coord: usize, value: u32) {
        self[coord] = value;
    }
}

/// Per-step accounting: distinct coordinates read, distinct coordinates assigned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub reads: usize,
    pub writes: usize,
}

/// Instrumented cells. Reads are cached per step, so a coordinate read twice
/// within one step counts once. Every assigned coordinate counts as a write,
/// including re-writes of the value already present.
#[derive(Clone, Debug)]
pub struct Tape {
    cells: Vec<u32>,
    read_mark: Vec<bool>,
    write_mark: Vec<bool>,
    touched: Vec<usize>,
    originals: Vec<(usize, u32)>,
    reads: usize,
    writes: usize,
}

impl Tape {
    pub fn new(cells: Vec<u32>) -> Self {
        let n = cells.len();
        Tape {
            cells,
            read_mark: vec![false; n],
            write_mark: vec![false; n],
            touched: Vec::with_capacity(16),
            originals: Vec::with_capacity(8),
            reads: 0,
            writes: 0,
        }
    }

    /// Clears the per-step accounting without touching the contents.
    pub fn begin(&mut self) {
        for &c in &self.touched {
            self.read_mark[c] = false;
            self.write_mark[c] = false;
        }
        self.touched.clear();
        self.originals.clear();
        self.reads = 0;
        self.writes = 0;
    }

    pub fn stats(&self) -> StepStats {
        StepStats { reads: self.reads, writes: self.writes }
    }

    /// Coordinates whose value differs from the start of the step.
    pub fn changed(&self) -> usize {
        self.originals.iter().filter(|&&(c, old)| self.cells[c] != old).count()
    }

    pub fn contents(&self) -> &[u32] {
        &self.cells
    }

    pub fn set_contents(&mut self, digits: &[u32]) {
        self.cells.copy_from_slice(digits);
    }

    pub fn into_contents(self) -> Vec<u32> {
        self.cells
    }
}

impl Cells for Tape {
    fn width(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    fn read(&mut self, coord: usize) -> u32 {
        if !self.read_mark[coord] {
            self.read_mark[coord] = true;
            self.reads += 1;
            self.touched.push(coord);
        }
        self.cells[coord]
    }

    #[inline]
    fn write(&mut self, coord: usize, value: u32) {
        if !self.write_mark[coord] {
            self.write_mark[coord] = true;
            self.writes += 1;
            self.touched.push(coord);
            self.originals.push((coord, self.cells[coord]));
        }
        self.cells[coord] = value;
    }
}

/// A contiguous block of another [`Cells`], re-indexed from zero.
pub struct Window<'a> {
    base: &'a mut dyn Cells,
    offset: usize,
    width: usize,
}

impl<'a> Window<'a> {
    pub fn new(base: &'a mut dyn Cells, offset: usize, width: usize) -> Self {
        debug_assert!(offset + width <= base.width());
        Window { base, offset, width }
    }
}

impl Cells for Window<'_> {
    fn width(&self) -> usize {
        self.width
    }

    #[inline]
    fn read(&mut self, coord: usize) -> u32 {
        debug_assert!(coord < self.width);
        self.base.read(self.offset + coord)
    }

    #[inline]
    fn write(&mut self, coord: usize, value: u32) {
        debug_assert!(coord < self.width);
        self.base.write(self.offset + coord, value)
    }
}

/// Cells where only some coordinates are known. Reading an unknown
/// coordinate yields 0 and records it as pending; the caller then branches
/// on that coordinate and re-runs the step. Used to materialize decision
/// assignment trees from step functions.
#[derive(Clone, Debug)]
pub struct PartialTape {
    cells: Vec<u32>,
    base: Vec<u32>,
    known: Vec<bool>,
    read_mark: Vec<bool>,
    reads: Vec<usize>,
    written: Vec<usize>,
    pending: Option<usize>,
}

impl PartialTape {
    pub fn new(width: usize) -> Self {
        PartialTape {
            cells: vec![0; width],
            base: vec![0; width],
            known: vec![false; width],
            read_mark: vec![false; width],
            reads: Vec::new(),
            written: Vec::new(),
            pending: None,
        }
    }

    /// Fixes the value of `coord` for subsequent runs.
    pub fn assume(&mut self, coord: usize, value: u32) {
        self.known[coord] = true;
        self.base[coord] = value;
    }

    pub fn forget(&mut self, coord: usize) {
        self.known[coord] = false;
        self.base[coord] = 0;
    }

    /// Restores the known values and clears per-run state.
    pub fn reset(&mut self) {
        self.cells.copy_from_slice(&self.base);
        for &c in &self.reads {
            self.read_mark[c] = false;
        }
        self.reads.clear();
        self.written.clear();
        self.pending = None;
    }

    pub fn pending(&self) -> Option<usize> {
        self.pending
    }

    /// Distinct coordinates read, in first-read order.
    pub fn reads(&self) -> &[usize] {
        &self.reads
    }

    /// Final `(coord, value)` for each assigned coordinate, in first-write order.
    pub fn assignments(&self) -> Vec<(usize, u32)> {
        self.written.iter().map(|&c| (c, self.cells[c])).collect()
    }

    pub fn contents(&self) -> &[u32] {
        &self.cells
    }
}

impl Cells for PartialTape {
    fn width(&self) -> usize {
        self.cells.len()
    }

    fn read(&mut self, coord: usize) -> u32 {
        if !self.read_mark[coord] {
            self.read_mark[coord] = true;
            self.reads.push(coord);
        }
        if !self.known[coord] && self.pending.is_none() {
            self.pending = Some(coord);
        }
        self.cells[coord]
    }

    fn write(&mut self, coord: usize, value: u32) {
        if !self.written.contains(&coord) {
            self.written.push(coord);
        }
        self.cells[coord] = value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tape_counts_distinct_reads_and_writes() {
        let mut t = Tape::new(vec![0, 1, 2]);
        t.begin();
        t.read(0);
        t.read(0);
        t.read(2);
        t.write(2, 2);
        t.write(2, 0);
        assert_eq!(t.stats(), StepStats { reads: 2, writes: 1 });
        assert_eq!(t.changed(), 1);
        t.begin();
        t.write(1, 1);
        assert_eq!(t.stats(), StepStats { reads: 0, writes: 1 });
        assert_eq!(t.changed(), 0);
    }

    #[test]
    fn windows_remap_and_share_accounting() {
        let mut t = Tape::new(vec![5, 6, 7, 8]);
        t.begin();
        {
            let mut w = Window::new(&mut t, 1, 3);
            let mut inner = Window::new(&mut w, 1, 2);
            assert_eq!(inner.read(0), 7);
            inner.write(1, 9);
        }
        assert_eq!(t.contents(), &[5, 6, 7, 9]);
        assert_eq!(t.stats(), StepStats { reads: 1, writes: 1 });
    }

    #[test]
    fn partial_tape_reports_first_unknown_read() {
        let mut p = PartialTape::new(3);
        p.assume(1, 2);
        p.reset();
        assert_eq!(p.read(1), 2);
        assert_eq!(p.pending(), None);
        p.read(2);
        p.read(0);
        assert_eq!(p.pending(), Some(2));
        assert_eq!(p.reads(), &[1, 2, 0]);
    }
}
