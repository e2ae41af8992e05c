//! Counters from invertible linear maps over F_q.
//!
//! The companion matrix of a primitive polynomial cycles through all nonzero
//! vectors of F_q^n. Factoring it into elementary matrices and applying one
//! factor per step, selected by a Gray-code pointer, gives a counter that
//! touches at most two data cells per step.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cells::Cells;
use crate::compose::{cycle_compose, CycleCounter, Step};
use crate::counter::{Counter, Direction, Recipe};
use crate::error::{Error, Result};
use crate::field::{find_primitive, FieldSpec, Poly};
use crate::graycode::gray_len;
use crate::word::{Domain, Word};

/// Square matrix over F_q, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixFq {
    field: FieldSpec,
    n: usize,
    data: Vec<u32>,
}

impl MatrixFq {
    pub fn zero(field: FieldSpec, n: usize) -> Self {
        MatrixFq { field, n, data: vec![0; n * n] }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = MatrixFq::zero(field, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(field: FieldSpec, rows: &[Vec<u32>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Precondition("matrix rows must form a square".into()));
        }
        if rows.iter().flatten().any(|&v| v >= field.q()) {
            return Err(Error::Precondition("matrix entry outside the field".into()));
        }
        Ok(MatrixFq { field, n, data: rows.concat() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.data.chunks(self.n.max(1)).map(<[u32]>::to_vec).collect()
    }

    pub fn mul(&self, other: &MatrixFq) -> MatrixFq {
        let f = self.field;
        let mut out = MatrixFq::zero(f, self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..self.n {
                    let v = f.add(out.get(i, j), f.mul(a, other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn apply(&self, x: &[u32]) -> Vec<u32> {
        let f = self.field;
        (0..self.n)
            .map(|i| (0..self.n).fold(0, |acc, j| f.add(acc, f.mul(self.get(i, j), x[j]))))
            .collect()
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<MatrixFq> {
        let f = self.field;
        let n = self.n;
        let mut a = self.clone();
        let mut inv = MatrixFq::identity(f, n);
        for c in 0..n {
            let p = (c..n).find(|&r| a.get(r, c) != 0).ok_or(Error::Singular)?;
            a.swap_rows(p, c);
            inv.swap_rows(p, c);
            let s = f.inv(a.get(c, c));
            a.scale_row(c, s);
            inv.scale_row(c, s);
            for r in 0..n {
                let factor = a.get(r, c);
                if r != c && factor != 0 {
                    let neg = f.neg(factor);
                    a.add_row(r, c, neg);
                    inv.add_row(r, c, neg);
                }
            }
        }
        Ok(inv)
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse().is_ok()
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            for c in 0..self.n {
                self.data.swap(i * self.n + c, j * self.n + c);
            }
        }
    }

    fn scale_row(&mut self, i: usize, s: u32) {
        for c in 0..self.n {
            let v = self.field.mul(s, self.get(i, c));
            self.set(i, c, v);
        }
    }

    /// row_i += c * row_j
    fn add_row(&mut self, i: usize, j: usize, c: u32) {
        for col in 0..self.n {
            let v = self.field.add(self.get(i, col), self.field.mul(c, self.get(j, col)));
            self.set(i, col, v);
        }
    }
}

/// Companion matrix of a monic polynomial: first column
/// `(-c_{n-1}, ..., -c_0)`, ones on the superdiagonal.
pub fn companion_matrix(p: &Poly, field: FieldSpec) -> Result<MatrixFq> {
    let n = match p.degree() {
        Some(n) if n >= 1 && p.is_monic() => n,
        _ => return Err(Error::Precondition(format!("{p} is not monic of degree ≥ 1"))),
    };
    let mut a = MatrixFq::zero(field, n);
    for i in 0..n {
        a.set(i, 0, field.neg(p.coeff(n - 1 - i)));
        if i + 1 < n {
            a.set(i, i + 1, 1);
        }
    }
    Ok(a)
}

/// Row-scale or row-add matrix; indices are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ElementaryMatrix {
    /// row_i *= c
    Scale { i: usize, c: u32 },
    /// row_i += c * row_j
    AddRow { i: usize, j: usize, c: u32 },
}

impl ElementaryMatrix {
    pub fn to_matrix(&self, field: FieldSpec, n: usize) -> MatrixFq {
        let mut m = MatrixFq::identity(field, n);
        match *self {
            ElementaryMatrix::Scale { i, c } => m.set(i, i, c),
            ElementaryMatrix::AddRow { i, j, c } => m.set(i, j, c),
        }
        m
    }

    pub fn inverse(&self, field: FieldSpec) -> ElementaryMatrix {
        match *self {
            ElementaryMatrix::Scale { i, c } => ElementaryMatrix::Scale { i, c: field.inv(c) },
            ElementaryMatrix::AddRow { i, j, c } => ElementaryMatrix::AddRow { i, j, c: field.neg(c) },
        }
    }

    fn apply_rows(&self, m: &mut MatrixFq) {
        match *self {
            ElementaryMatrix::Scale { i, c } => m.scale_row(i, c),
            ElementaryMatrix::AddRow { i, j, c } => m.add_row(i, j, c),
        }
    }
}

impl fmt::Display for ElementaryMatrix {
    /// 1-based, as printed by the CLI.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ElementaryMatrix::Scale { i, c } => write!(f, "scale {} {c}", i + 1),
            ElementaryMatrix::AddRow { i, j, c } => write!(f, "addrow {} {} {c}", i + 1, j + 1),
        }
    }
}

/// Factors an invertible matrix into elementary matrices `E_1, ..., E_k`
/// with `E_k ⋯ E_1 = A`.
///
/// Row-reduces `A⁻¹` to the identity; the row operations used, in order,
/// multiply to `A`. Row swaps cost three row additions and one scaling by
/// -1, the scaling being unnecessary in characteristic 2.
pub fn decompose_elementary(a: &MatrixFq) -> Result<Vec<ElementaryMatrix>> {
    let f = a.field;
    let n = a.n;
    let mut b = a.inverse()?;
    let mut ops = Vec::new();
    let mut emit = |op: ElementaryMatrix, b: &mut MatrixFq| {
        op.apply_rows(b);
        ops.push(op);
    };
    let mut used = vec![false; n];
    // pivot_row[c] = row holding the pivot of column c
    let mut pivot_row = vec![0usize; n];
    for c in 0..n {
        let p = (0..n).find(|&r| !used[r] && b.get(r, c) != 0).ok_or(Error::Singular)?;
        used[p] = true;
        pivot_row[c] = p;
        let v = b.get(p, c);
        if v != 1 {
            emit(ElementaryMatrix::Scale { i: p, c: f.inv(v) }, &mut b);
        }
        for r in 0..n {
            let v = b.get(r, c);
            if r != p && v != 0 {
                emit(ElementaryMatrix::AddRow { i: r, j: p, c: f.neg(v) }, &mut b);
            }
        }
    }
    // b is now a permutation matrix; sort its rows.
    let minus_one = f.neg(1);
    for c in 0..n {
        let p = pivot_row[c];
        if p == c {
            continue;
        }
        emit(ElementaryMatrix::AddRow { i: c, j: p, c: 1 }, &mut b);
        emit(ElementaryMatrix::AddRow { i: p, j: c, c: minus_one }, &mut b);
        emit(ElementaryMatrix::AddRow { i: c, j: p, c: 1 }, &mut b);
        if minus_one != 1 {
            emit(ElementaryMatrix::Scale { i: p, c: minus_one }, &mut b);
        }
        if let Some(other) = pivot_row.iter().position(|&r| r == c) {
            pivot_row[other] = p;
        }
        pivot_row[c] = c;
    }
    debug_assert_eq!(b, MatrixFq::identity(f, n));
    Ok(ops)
}

/// Product `E_k ⋯ E_1` of an application-ordered list.
pub fn product(ops: &[ElementaryMatrix], field: FieldSpec, n: usize) -> MatrixFq {
    let mut m = MatrixFq::identity(field, n);
    for op in ops {
        op.apply_rows(&mut m);
    }
    m
}

/// An elementary matrix acting on a data vector held in cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldStep {
    pub field: FieldSpec,
    pub op: ElementaryMatrix,
}

impl FieldStep {
    fn run(&self, cells: &mut dyn Cells, op: ElementaryMatrix) {
        let f = self.field;
        match op {
            ElementaryMatrix::Scale { i, c } => {
                let x = cells.read(i);
                cells.write(i, f.mul(c, x));
            }
            ElementaryMatrix::AddRow { i, j, c } => {
                let y = cells.read(j);
                let x = cells.read(i);
                cells.write(i, f.add(x, f.mul(c, y)));
            }
        }
    }
}

impl Step for FieldStep {
    fn apply(&self, cells: &mut dyn Cells) {
        self.run(cells, self.op)
    }

    fn apply_inverse(&self, cells: &mut dyn Cells) {
        self.run(cells, self.op.inverse(self.field))
    }

    fn reads(&self) -> usize {
        match self.op {
            ElementaryMatrix::Scale { .. } => 1,
            ElementaryMatrix::AddRow { .. } => 2,
        }
    }

    fn writes(&self) -> usize {
        1
    }
}

/// Counter over F_q^{r+n}: r Gray-pointer cells followed by n data cells.
pub struct LinearCounter {
    inner: CycleCounter<FieldStep>,
    field: FieldSpec,
    n: usize,
    r: usize,
    poly: Poly,
    ops: Vec<ElementaryMatrix>,
}

impl LinearCounter {
    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn ops(&self) -> &[ElementaryMatrix] {
        &self.ops
    }

    pub fn pointer_width(&self) -> usize {
        self.r
    }

    pub fn data_width(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }
}

/// Smallest r ≥ 1 with `q^r ≥ k`.
pub fn min_pointer_width(q: u32, k: usize) -> usize {
    (1..).find(|&r| gray_len(q, r).is_none_or(|cap| cap >= k as u128)).unwrap_or(1)
}

pub fn linear_counter(field: FieldSpec, n: usize, r: Option<usize>) -> Result<LinearCounter> {
    let poly = find_primitive(field, n)?;
    let a = companion_matrix(&poly, field)?;
    let ops = decompose_elementary(&a)?;
    let q = field.q();
    let r = match r {
        Some(0) => return Err(Error::PointerTooSmall { capacity: 1, steps: ops.len() }),
        Some(r) => {
            let cap = gray_len(q, r).ok_or_else(|| Error::ResourceBound(format!("{q}^{r} overflows")))?;
            if cap < ops.len() as u128 {
                return Err(Error::PointerTooSmall { capacity: cap, steps: ops.len() });
            }
            r
        }
        None => min_pointer_width(q, ops.len()),
    };
    let inner = Domain::uniform(q, n)?;
    let cycle = gray_len(q, n).ok_or_else(|| Error::ResourceBound(format!("{q}^{n} overflows")))? - 1;
    let mut start = vec![0; n];
    start[n - 1] = 1;
    let steps = ops.iter().map(|&op| FieldStep { field, op }).collect();
    let inner = cycle_compose(steps, inner, Word(start), cycle, q, r)?;
    Ok(LinearCounter { inner, field, n, r, poly, ops })
}

impl Counter for LinearCounter {
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
        Some(self.r + 2)
    }

    fn claimed_writes(&self) -> Option<usize> {
        Some(2)
    }

    fn start(&self) -> Word {
        self.inner.start()
    }

    fn recipe(&self) -> Recipe {
        Recipe::Linear {
            q: self.field.q() as u64,
            n: self.n,
            r: self.r,
            poly: self.poly.coeffs().iter().map(|&c| c as u64).collect(),
            elementaries: self.ops.len(),
        }
    }
}
