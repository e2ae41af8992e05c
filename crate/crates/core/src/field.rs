//! Finite fields F_p and F_{2^k}, polynomials over them, and primitive
//! polynomial search.
//!
//! Field elements are `u32` cell values in `0..q`. For F_{2^k} the value's
//! bits are the coefficients of a polynomial over F_2 reduced modulo a fixed
//! irreducible of degree k.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Irreducible moduli over F_2 for k = 2..=16, low bit = constant term.
const BINARY_MODULI: [u32; 15] = [
    0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11B, 0x211, 0x409, 0x805, 0x1009, 0x201B, 0x4021, 0x8003, 0x1002B,
];

/// Largest `q^n` whose multiplicative group order we are willing to factor.
pub const FACTOR_BOUND: u128 = 1 << 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldSpec {
    Prime { p: u32 },
    Binary { k: u32, modulus: u32 },
}

impl FieldSpec {
    /// F_q for q prime (below 2^31) or q = 2^k with 2 ≤ k ≤ 16.
    pub fn new(q: u64) -> Result<Self> {
        if q >= 2 && q < (1 << 31) && is_prime(q) {
            return Ok(FieldSpec::Prime { p: q as u32 });
        }
        if q.is_power_of_two() {
            let k = q.trailing_zeros();
            if (2..=16).contains(&k) {
                return Ok(FieldSpec::Binary { k, modulus: BINARY_MODULI[k as usize - 2] });
            }
        }
        Err(Error::InvalidField(q))
    }

    pub fn q(&self) -> u32 {
        match *self {
            FieldSpec::Prime { p } => p,
            FieldSpec::Binary { k, .. } => 1 << k,
        }
    }

    pub fn characteristic(&self) -> u32 {
        match *self {
            FieldSpec::Prime { p } => p,
            FieldSpec::Binary { .. } => 2,
        }
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        match *self {
            FieldSpec::Prime { p } => ((a as u64 + b as u64) % p as u64) as u32,
            FieldSpec::Binary { .. } => a ^ b,
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        match *self {
            FieldSpec::Prime { p } => (p - a) % p,
            FieldSpec::Binary { .. } => a,
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        match *self {
            FieldSpec::Prime { p } => ((a as u64 * b as u64) % p as u64) as u32,
            FieldSpec::Binary { k, modulus } => {
                let mut prod = 0u64;
                for bit in 0..k {
                    if b >> bit & 1 == 1 {
                        prod ^= (a as u64) << bit;
                    }
                }
                for bit in (k..2 * k).rev() {
                    if prod >> bit & 1 == 1 {
                        prod ^= (modulus as u64) << (bit - k);
                    }
                }
                prod as u32
            }
        }
    }

    pub fn pow(&self, mut a: u32, mut e: u64) -> u32 {
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `a` must be nonzero.
    pub fn inv(&self, a: u32) -> u32 {
        debug_assert!(a != 0);
        self.pow(a, self.q() as u64 - 2)
    }
}

/// Polynomial over a field, coefficients low degree first, no trailing zeros
/// except for the zero polynomial `[]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<u32>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<u32>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    /// Monic polynomial of degree `lower.len()` with the given lower coefficients.
    pub fn monic(lower: &[u32]) -> Self {
        let mut c = lower.to_vec();
        c.push(1);
        Poly { coeffs: c }
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last() == Some(&1)
    }

    pub fn coeff(&self, i: usize) -> u32 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut terms = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let mono = match i {
                0 => String::new(),
                1 => "z".to_string(),
                _ => format!("z^{i}"),
            };
            terms.push(match (c, i) {
                (_, 0) => c.to_string(),
                (1, _) => mono,
                _ => format!("{c}{mono}"),
            });
        }
        write!(f, "{}", terms.join("+"))
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factorization by trial division. Complete for `n ≤ 2^48` since the
/// divisor loop runs to `√n ≤ 2^24`.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Residues modulo a monic polynomial of degree n, as length-n vectors.
struct Quotient<'a> {
    field: FieldSpec,
    modulus: &'a Poly,
    n: usize,
}

impl Quotient<'_> {
    fn mul(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        let f = &self.field;
        let mut prod = vec![0u32; 2 * self.n];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = f.add(prod[i + j], f.mul(x, y));
            }
        }
        for d in (self.n..2 * self.n).rev() {
            let c = prod[d];
            if c == 0 {
                continue;
            }
            prod[d] = 0;
            for i in 0..self.n {
                let t = f.mul(c, self.modulus.coeff(i));
                prod[d - self.n + i] = f.sub(prod[d - self.n + i], t);
            }
        }
        prod.truncate(self.n);
        prod
    }

    fn pow(&self, base: &[u32], mut e: u64) -> Vec<u32> {
        let mut acc = self.one();
        let mut b = base.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    fn one(&self) -> Vec<u32> {
        let mut v = vec![0; self.n];
        v[0] = 1;
        v
    }

    /// The residue of `z`.
    fn z(&self) -> Vec<u32> {
        if self.n == 1 {
            vec![self.field.neg(self.modulus.coeff(0))]
        } else {
            let mut v = vec![0; self.n];
            v[1] = 1;
            v
        }
    }
}

/// Whether `p` is primitive over `field`: the residue of `z` modulo `p` has
/// multiplicative order exactly `q^n - 1`. That order is only attainable
/// when the quotient ring is a field, so irreducibility follows.
pub fn is_primitive(p: &Poly, field: FieldSpec) -> Result<bool> {
    let n = match p.degree() {
        Some(n) if n >= 1 && p.is_monic() => n,
        _ => return Err(Error::Precondition(format!("{p} is not monic of degree ≥ 1"))),
    };
    let order = group_order(field, n)?;
    if p.coeff(0) == 0 {
        return Ok(false);
    }
    let quot = Quotient { field, modulus: p, n };
    let z = quot.z();
    let one = quot.one();
    if quot.pow(&z, order) != one {
        return Ok(false);
    }
    Ok(factor(order).iter().all(|&(rho, _)| quot.pow(&z, order / rho) != one))
}

/// `q^n - 1`, refusing beyond the factoring bound.
pub fn group_order(field: FieldSpec, n: usize) -> Result<u64> {
    let q = field.q() as u128;
    let mut size = 1u128;
    for _ in 0..n {
        size = size.saturating_mul(q);
        if size > FACTOR_BOUND {
            return Err(Error::FactorBound { value: size.saturating_sub(1) });
        }
    }
    Ok((size - 1) as u64)
}

/// The least monic primitive polynomial of degree `n`, comparing coefficient
/// tuples `(c_{n-1}, ..., c_1, c_0)` lexicographically.
pub fn find_primitive(field: FieldSpec, n: usize) -> Result<Poly> {
    if n == 0 {
        return Err(Error::Precondition("degree must be at least 1".into()));
    }
    group_order(field, n)?;
    let q = field.q();
    // lower[0] = c_0 is the least significant position of the odometer.
    let mut lower = vec![0u32; n];
    loop {
        let p = Poly::monic(&lower);
        if is_primitive(&p, field)? {
            return Ok(p);
        }
        let mut i = 0;
        loop {
            if i == n {
                return Err(Error::Internal(format!("no primitive polynomial of degree {n} over F_{q}")));
            }
            lower[i] += 1;
            if lower[i] < q {
                break;
            }
            lower[i] = 0;
            i += 1;
        }
    }
}
