//! Sparse polynomials over the rationals, the monomial bases of graded
//! differential forms, and the expression parser.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binomial coefficient, zero outside `0 <= k <= n`.
pub fn binom(n: i64, k: i64) -> u64 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Number of monomials of degree `m` in `n` variables.
pub fn monomial_count(n: usize, m: i64) -> usize {
    if m < 0 {
        return 0;
    }
    binom(m + n as i64 - 1, n as i64 - 1) as usize
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial {
    pub exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial { exps }
    }

    pub fn one(n: usize) -> Self {
        Monomial { exps: vec![0; n] }
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut exps = vec![0; n];
        exps[i] = 1;
        Monomial { exps }
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Position of a monomial among the monomials of its degree, listed with the
/// highest power of the first variable first.
pub fn monomial_rank(exps: &[u32]) -> usize {
    let n = exps.len();
    let mut rem: i64 = exps.iter().map(|&e| e as i64).sum();
    let mut rank = 0usize;
    for (i, &a) in exps.iter().enumerate().take(n - 1) {
        let a = a as i64;
        // monomials agreeing on the prefix with a strictly larger exponent here
        rank += monomial_count(n - i, rem - a - 1);
        rem -= a;
    }
    rank
}

/// All monomials of degree `m` in `n` variables in canonical order.
pub fn monomials(n: usize, m: i64) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(monomial_count(n, m));
    if m < 0 {
        return out;
    }
    let mut cur = vec![0u32; n];
    fn rec(i: usize, rem: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let n = cur.len();
        if i == n - 1 {
            cur[i] = rem;
            out.push(cur.clone());
            return;
        }
        for e in (0..=rem).rev() {
            cur[i] = e;
            rec(i + 1, rem - e, cur, out);
        }
    }
    rec(0, m as u32, &mut cur, &mut out);
    out
}

/// Subsets of `{0..n}` of size `p` as bitmasks, lexicographically ordered.
pub fn subsets(n: usize, p: usize) -> Vec<u8> {
    use itertools::Itertools;
    (0..n)
        .combinations(p)
        .map(|c| c.iter().fold(0u8, |m, &i| m | (1 << i)))
        .collect()
}

/// Sign and result of `dx_j ∧ dx_I`; `None` if `j ∈ I`.
pub fn wedge_sign(j: usize, mask: u8) -> Option<(i64, u8)> {
    if mask & (1 << j) != 0 {
        return None;
    }
    let below = (mask & ((1u8 << j) - 1)).count_ones();
    let s = if below % 2 == 0 { 1 } else { -1 };
    Some((s, mask | (1 << j)))
}

/// Basis element `x^a dx_I` of a graded piece of forms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormIndex {
    pub subset: Vec<usize>,
    pub monomial: Monomial,
}

/// The graded piece Ω^p_k with its canonical basis: coefficient monomials of
/// degree `k - p` in canonical order, and for each one the subsets in
/// lexicographic order. Keeping the monomial outermost makes the Koszul
/// matrices nearly banded, which keeps elimination fill low.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormSpace {
    pub n: usize,
    pub p: usize,
    pub k: i64,
    subsets: Vec<u8>,
    subset_pos: [usize; 16],
    n_mono: usize,
}

impl FormSpace {
    pub fn new(n: usize, p: usize, k: i64) -> Self {
        assert!(n <= 4 && p <= n);
        let subsets = if k >= p as i64 { subsets(n, p) } else { Vec::new() };
        let mut subset_pos = [usize::MAX; 16];
        for (i, &m) in subsets.iter().enumerate() {
            subset_pos[m as usize] = i;
        }
        let n_mono = monomial_count(n, k - p as i64);
        FormSpace { n, p, k, subsets, subset_pos, n_mono }
    }

    pub fn dim(&self) -> usize {
        self.subsets.len() * self.n_mono
    }

    pub fn mono_degree(&self) -> i64 {
        self.k - self.p as i64
    }

    pub fn subset_masks(&self) -> &[u8] {
        &self.subsets
    }

    pub fn block_len(&self) -> usize {
        self.n_mono
    }

    /// Index of `x^exps dx_mask`.
    pub fn index(&self, mask: u8, exps: &[u32]) -> usize {
        let s = self.subset_pos[mask as usize];
        debug_assert!(s != usize::MAX);
        monomial_rank(exps) * self.subsets.len() + s
    }

    pub fn basis(&self) -> Vec<FormIndex> {
        let monos = monomials(self.n, self.mono_degree());
        let mut out = Vec::with_capacity(self.dim());
        for a in &monos {
            for &m in &self.subsets {
                let subset: Vec<usize> = (0..self.n).filter(|i| m & (1 << i) != 0).collect();
                out.push(FormIndex { subset, monomial: Monomial::new(a.clone()) });
            }
        }
        out
    }
}

/// Closed formula for dim Ω^p_k.
pub fn form_dim(n: usize, p: usize, k: i64) -> usize {
    if k < p as i64 {
        return 0;
    }
    binom(n as i64, p as i64) as usize * monomial_count(n, k - p as i64)
}

pub fn form_basis(n: usize, p: usize, k: i64) -> FormSpace {
    FormSpace::new(n, p, k)
}

/// Sparse polynomial with rational coefficients, not necessarily homogeneous.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    pub n: usize,
    pub terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: BigRational) -> Self {
        let mut p = Poly::zero(n);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(n), c);
        }
        p
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut p = Poly::zero(n);
        p.terms.insert(Monomial::var(n, i), BigRational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        let e = self.terms.entry(m.clone()).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self) -> Poly {
        Poly { n: self.n, terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::zero(self.n);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                r.add_term(m1.mul(m2), c1 * c2);
            }
        }
        r
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut r = Poly::constant(self.n, BigRational::one());
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }
}

const VAR_NAMES: [&str; 4] = ["x", "y", "z", "w"];

fn fmt_terms(terms: &BTreeMap<Monomial, BigRational>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    // highest monomial first, matching the canonical order
    for (i, (m, c)) in terms.iter().rev().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if i == 0 {
            if neg {
                write!(f, "-")?;
            }
        } else {
            write!(f, "{}", if neg { "-" } else { "+" })?;
        }
        let mut parts: Vec<String> = Vec::new();
        if !a.is_one() || m.degree() == 0 {
            if a.is_integer() {
                parts.push(a.to_integer().to_string());
            } else {
                parts.push(format!("({}/{})", a.numer(), a.denom()));
            }
        }
        for (v, &e) in m.exps.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(VAR_NAMES[v].to_string()),
                _ => parts.push(format!("{}^{}", VAR_NAMES[v], e)),
            }
        }
        write!(f, "{}", parts.join("*"))?;
    }
    Ok(())
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(&self.terms, f)
    }
}

/// A nonzero homogeneous polynomial in 3 or 4 variables of degree at least 3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomogPoly {
    pub n: usize,
    pub d: u32,
    pub terms: BTreeMap<Monomial, BigRational>,
}

impl fmt::Display for HomogPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(&self.terms, f)
    }
}

impl HomogPoly {
    pub fn from_poly(p: Poly) -> Result<Self> {
        if p.n != 3 && p.n != 4 {
            return Err(Error::Unsupported(format!("n = {} (only 3 or 4 variables)", p.n)));
        }
        let mut degs = p.terms.keys().map(|m| m.degree());
        let d = degs.next().ok_or(Error::ZeroPolynomial)?;
        for e in degs {
            if e != d {
                return Err(Error::NonHomogeneous(d.min(e), d.max(e)));
            }
        }
        if d < 3 {
            return Err(Error::Unsupported(format!("degree {d} (need d >= 3)")));
        }
        Ok(HomogPoly { n: p.n, d, terms: p.terms })
    }

    pub fn as_poly(&self) -> Poly {
        Poly { n: self.n, terms: self.terms.clone() }
    }

    /// Coefficients scaled to coprime integers. Page dimensions are unchanged
    /// by a nonzero scalar, so this is the form fed to every matrix builder.
    pub fn integer_terms(&self) -> Result<Vec<(Vec<u32>, i64)>> {
        let mut l = BigInt::one();
        for c in self.terms.values() {
            l = l.lcm(c.denom());
        }
        let ints: Vec<BigInt> = self.terms.values().map(|c| (c * &l).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
        self.terms
            .keys()
            .zip(ints)
            .map(|(m, c)| {
                let v = (c / &g).to_i64().ok_or(Error::Overflow("clearing denominators"))?;
                Ok((m.exps.clone(), v))
            })
            .collect()
    }

    /// Partial derivatives of the integer form, as (exponents, coefficient) lists.
    pub fn gradient(&self) -> Result<Vec<Vec<(Vec<u32>, i64)>>> {
        let t = self.integer_terms()?;
        let mut out = vec![Vec::new(); self.n];
        for (i, g) in out.iter_mut().enumerate() {
            for (e, c) in &t {
                if e[i] > 0 {
                    let mut e2 = e.clone();
                    e2[i] -= 1;
                    let v = c.checked_mul(e[i] as i64).ok_or(Error::Overflow("differentiating"))?;
                    g.push((e2, v));
                }
            }
        }
        Ok(out)
    }
}

pub fn parse_polynomial(text: &str, n: usize) -> Result<HomogPoly> {
    let p = parse_expression(text, n)?;
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    HomogPoly::from_poly(p)
}

/// Parse an arbitrary polynomial expression (used for ideal generators too).
pub fn parse_expression(text: &str, n: usize) -> Result<Poly> {
    if !(1..=4).contains(&n) {
        return Err(Error::Unsupported(format!("n = {n}")));
    }
    let mut p = Parser { s: text.as_bytes(), pos: 0, n };
    let r = p.expr()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(r)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                b'-' => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc.mul(&self.unary()?);
        }
        // implicit multiplication is rejected explicitly for a clearer message
        if let Some(c) = self.peek() {
            if c == b'(' || c.is_ascii_alphanumeric() {
                return Err(self.err("implicit multiplication is not allowed"));
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            let e = self.integer()?;
            let e: u32 = e.to_u32().ok_or(Error::Syntax { pos: start, msg: "exponent too large".into() })?;
            if e > 200 {
                return Err(Error::Syntax { pos: start, msg: "exponent too large".into() });
            }
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let t = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits");
        Ok(t.parse::<BigInt>().expect("digits parse"))
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let v = self.integer()?;
                Ok(Poly::constant(self.n, BigRational::from_integer(v)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let v = match c {
                    b'x' | b'y' | b'z' | b'w' => {
                        self.pos += 1;
                        if c == b'x' && self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                            let d = (self.s[self.pos] - b'0') as usize;
                            self.pos += 1;
                            if !(1..=4).contains(&d) {
                                return Err(Error::Syntax { pos: start, msg: "unknown variable".into() });
                            }
                            d - 1
                        } else {
                            match c {
                                b'x' => 0,
                                b'y' => 1,
                                b'z' => 2,
                                _ => 3,
                            }
                        }
                    }
                    _ => return Err(self.err("unknown variable")),
                };
                if self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                    return Err(Error::Syntax { pos: start, msg: "unknown identifier".into() });
                }
                if v >= self.n {
                    return Err(Error::Syntax { pos: start, msg: format!("variable index {} exceeds n = {}", v + 1, self.n) });
                }
                Ok(Poly::var(self.n, v))
            }
            Some(_) => Err(self.err("unexpected character")),
        }
    }
}
