//! Exact rank computation for sparse integer matrices, over the rationals by
//! fraction-free elimination and over word-sized prime fields.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse integer matrix stored by columns. Each column is sorted by row
/// index and holds no zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    cols: Vec<Vec<(u32, i64)>>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, cols: vec![Vec::new(); ncols] }
    }

    /// Duplicate positions are summed; zero results are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, i64)]) -> Result<Self> {
        let mut cols: Vec<Vec<(u32, i64)>> = vec![Vec::new(); ncols];
        for &(r, c, v) in trips {
            assert!(r < nrows && c < ncols, "triplet out of range");
            cols[c].push((r as u32, v));
        }
        let mut m = SparseMatrix { nrows, ncols, cols };
        for c in 0..ncols {
            m.normalize_col(c)?;
        }
        Ok(m)
    }

    /// Build from column lists that may contain duplicates and zeros.
    pub fn from_columns(nrows: usize, cols: Vec<Vec<(u32, i64)>>) -> Result<Self> {
        let ncols = cols.len();
        let mut m = SparseMatrix { nrows, ncols, cols };
        for c in 0..ncols {
            m.normalize_col(c)?;
        }
        Ok(m)
    }

    fn normalize_col(&mut self, c: usize) -> Result<()> {
        let col = &mut self.cols[c];
        col.sort_unstable_by_key(|e| e.0);
        let mut out: Vec<(u32, i64)> = Vec::with_capacity(col.len());
        for &(r, v) in col.iter() {
            match out.last_mut() {
                Some(last) if last.0 == r => {
                    last.1 = last.1.checked_add(v).ok_or(Error::Overflow("assembling a matrix"))?;
                }
                _ => out.push((r, v)),
            }
        }
        out.retain(|e| e.1 != 0);
        *col = out;
        Ok(())
    }

    pub fn col(&self, c: usize) -> &[(u32, i64)] {
        &self.cols[c]
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, i64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                t.push((r as usize, c, v));
            }
        }
        t
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        match self.cols[c].binary_search_by_key(&(r as u32), |e| e.0) {
            Ok(i) => self.cols[c][i].1,
            Err(_) => 0,
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut cols: Vec<Vec<(u32, i64)>> = vec![Vec::new(); self.nrows];
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                cols[r as usize].push((c as u32, v));
            }
        }
        SparseMatrix { nrows: self.ncols, ncols: self.nrows, cols }
    }

    /// `[self; other]`, rows of `other` placed below.
    pub fn stack_rows(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.ncols);
        let off = self.nrows as u32;
        let cols = self
            .cols
            .iter()
            .zip(&other.cols)
            .map(|(a, b)| a.iter().copied().chain(b.iter().map(|&(r, v)| (r + off, v))).collect())
            .collect();
        SparseMatrix { nrows: self.nrows + other.nrows, ncols: self.ncols, cols }
    }

    /// Keep only rows `< nrows`.
    pub fn top_rows(&self, nrows: usize) -> SparseMatrix {
        let cols = self
            .cols
            .iter()
            .map(|c| c.iter().copied().filter(|e| (e.0 as usize) < nrows).collect())
            .collect();
        SparseMatrix { nrows, ncols: self.ncols, cols }
    }

    pub fn max_abs(&self) -> u64 {
        self.cols.iter().flatten().map(|e| e.1.unsigned_abs()).max().unwrap_or(0)
    }

    /// Matrix product, used in tests of the complex.
    pub fn mul(&self, rhs: &SparseMatrix) -> Result<SparseMatrix> {
        assert_eq!(self.ncols, rhs.nrows);
        let mut out = Vec::with_capacity(rhs.ncols);
        for c in 0..rhs.ncols {
            let mut acc: Vec<(u32, i64)> = Vec::new();
            for &(k, v) in &rhs.cols[c] {
                for &(r, w) in &self.cols[k as usize] {
                    let p = v.checked_mul(w).ok_or(Error::Overflow("multiplying matrices"))?;
                    acc.push((r, p));
                }
            }
            out.push(acc);
        }
        SparseMatrix::from_columns(self.nrows, out)
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(|c| c.is_empty())
    }

    pub fn scale(&self, s: i64) -> Result<SparseMatrix> {
        let mut out = self.clone();
        for col in &mut out.cols {
            for e in col.iter_mut() {
                e.1 = e.1.checked_mul(s).ok_or(Error::Overflow("scaling"))?;
            }
            col.retain(|e| e.1 != 0);
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    Exact,
    Modular,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPolicy {
    pub mode: RankMode,
    pub primes: usize,
    pub seed: u64,
    /// Primes used before any drawn from the seed; meant for tests.
    #[serde(default)]
    pub forced: Vec<u64>,
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy { mode: RankMode::Modular, primes: 2, seed: 0x5eed, forced: Vec::new() }
    }
}

impl RankPolicy {
    pub fn exact() -> Self {
        RankPolicy { mode: RankMode::Exact, primes: 0, seed: 0, forced: Vec::new() }
    }

    pub fn modular(primes: usize, seed: u64) -> Self {
        RankPolicy { mode: RankMode::Modular, primes, seed, forced: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord, Hash)]
#[serde(rename_all = "kebab-case")]
pub enum Certification {
    /// Rank over the rationals, or agreed on by every prime consulted.
    Certified,
    /// Only a lower bound for the rank over the rationals is known.
    LowerBound,
}

impl Certification {
    pub fn and(self, o: Certification) -> Certification {
        self.max(o)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankMethod {
    Bareiss,
    Modular,
    /// Primes disagreed; a third prime settled the majority.
    ModularMajority,
    /// Primes disagreed; settled by exact elimination.
    ModularThenExact,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankResult {
    pub rank: usize,
    pub tag: Certification,
    pub method: RankMethod,
    /// Rank observed over each prime consulted, in order.
    pub prime_ranks: Vec<(u64, usize)>,
}

/// Ranks of a matrix and of its leading block of rows, from one elimination.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRank {
    pub total: usize,
    pub prefix: usize,
    pub tag: Certification,
    pub method: RankMethod,
    pub prime_ranks: Vec<(u64, usize, usize)>,
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

pub fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    pow_mod(a, p - 2, p)
}

/// Deterministic Miller-Rabin, exact for every 64-bit input.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for sp in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % sp == 0 {
            return n == sp;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

const PRIME_LO: u64 = 1 << 30;
const PRIME_HI: u64 = 1 << 31;

/// The first `count` primes for a policy: forced ones first, then primes in
/// (2^30, 2^31) drawn deterministically from the seed.
pub fn select_primes(policy: &RankPolicy, count: usize) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(count);
    for &p in &policy.forced {
        if !is_prime(p) {
            return Err(Error::PrimeGeneration(format!("forced modulus {p} is not prime")));
        }
        if p >= PRIME_HI {
            return Err(Error::PrimeGeneration(format!("forced modulus {p} exceeds 2^31")));
        }
        if !out.contains(&p) {
            out.push(p);
        }
        if out.len() == count {
            return Ok(out);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let mut draws = 0;
    while out.len() < count {
        draws += 1;
        if draws > 10_000 {
            return Err(Error::PrimeGeneration(format!("seed {} exhausted", policy.seed)));
        }
        let mut c = rng.gen_range(PRIME_LO + 1..PRIME_HI) | 1;
        while c < PRIME_HI && !is_prime(c) {
            c += 2;
        }
        if c >= PRIME_HI || out.contains(&c) {
            continue;
        }
        out.push(c);
    }
    Ok(out)
}

/// Primes for one matrix. Drawn primes dividing an entry are skipped;
/// entries below 2^30 in absolute value never are. Forced primes are kept
/// as given so that comparison with the other primes exposes a bad one.
fn primes_for(m: &SparseMatrix, policy: &RankPolicy) -> Result<Vec<u64>> {
    let want = policy.primes.max(2);
    let mut extra = want;
    loop {
        let cand = select_primes(policy, extra)?;
        let nforced = policy.forced.len().min(cand.len());
        let mut out: Vec<u64> = cand[..nforced].to_vec();
        out.extend(cand[nforced..].iter().copied().filter(|&p| content_ok(m, p)));
        if out.len() >= want {
            out.truncate(want);
            return Ok(out);
        }
        extra += 1;
    }
}

fn content_ok(m: &SparseMatrix, p: u64) -> bool {
    if m.max_abs() < p {
        return true;
    }
    (0..m.ncols).all(|c| m.col(c).iter().all(|e| e.1.rem_euclid(p as i64) != 0))
}

/// Column echelon form over F_p with pivots keyed by leading (smallest) row
/// index. Reducing a vector against it gives a canonical representative
/// modulo the column span, zero at every pivot row.
#[derive(Clone, Debug)]
pub struct ModEchelon {
    pub p: u64,
    pub nrows: usize,
    /// For each row, the pivot vector with leading entry 1 at that row.
    pivots: Vec<Option<Box<[(u32, u32)]>>>,
    rank: usize,
    acc: Vec<u64>,
}

impl ModEchelon {
    pub fn new(nrows: usize, p: u64) -> Self {
        ModEchelon { p, nrows, pivots: vec![None; nrows], rank: 0, acc: vec![0; nrows] }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_pivot(&self, r: usize) -> bool {
        self.pivots[r].is_some()
    }

    /// Number of pivots whose leading row is below `split`.
    pub fn pivots_before(&self, split: usize) -> usize {
        self.pivots[..split].iter().filter(|p| p.is_some()).count()
    }

    fn load(&mut self, col: &[(u32, i64)]) -> usize {
        let p = self.p as i64;
        let mut start = self.nrows;
        for &(r, v) in col {
            let x = v.rem_euclid(p) as u64;
            if x != 0 {
                self.acc[r as usize] = x;
                start = start.min(r as usize);
            }
        }
        start
    }

    /// Eliminate the accumulator from row `start`; returns the first row
    /// with a nonzero entry and no pivot, if any.
    fn sweep(&mut self, start: usize) -> Option<usize> {
        let p = self.p;
        let acc = &mut self.acc;
        for r in start..self.nrows {
            let c = acc[r];
            if c == 0 {
                continue;
            }
            match &self.pivots[r] {
                Some(piv) => {
                    let f = p - c;
                    for &(i, v) in piv.iter() {
                        let i = i as usize;
                        acc[i] = (acc[i] + f * v as u64) % p;
                    }
                }
                None => return Some(r),
            }
        }
        None
    }

    /// Insert a column; returns true if it enlarged the span.
    pub fn insert(&mut self, col: &[(u32, i64)]) -> bool {
        let start = self.load(col);
        match self.sweep(start) {
            None => false,
            Some(r) => {
                let p = self.p;
                let inv = inv_mod(self.acc[r], p);
                let mut piv = Vec::new();
                for i in r..self.nrows {
                    let x = self.acc[i];
                    if x != 0 {
                        piv.push((i as u32, mul_mod(x, inv, p) as u32));
                        self.acc[i] = 0;
                    }
                }
                self.pivots[r] = Some(piv.into_boxed_slice());
                self.rank += 1;
                true
            }
        }
    }

    /// Insert a dense vector given mod p.
    pub fn insert_dense(&mut self, v: &[u64]) -> bool {
        let col: Vec<(u32, i64)> =
            v.iter().enumerate().filter(|e| *e.1 != 0).map(|(i, &x)| (i as u32, x as i64)).collect();
        self.insert(&col)
    }

    /// Reduce a dense vector (entries already in `0..p`) in place to its
    /// canonical representative. Needs only shared access, so several
    /// threads can reduce against one echelon.
    pub fn reduce_dense(&self, acc: &mut [u64]) {
        let p = self.p;
        for r in 0..self.nrows {
            let c = acc[r];
            if c == 0 {
                continue;
            }
            if let Some(piv) = &self.pivots[r] {
                let f = p - c;
                for &(i, v) in piv.iter() {
                    let i = i as usize;
                    acc[i] = (acc[i] + f * v as u64) % p;
                }
            }
        }
    }

    /// Canonical representative of `v` modulo the span, as a dense vector.
    pub fn reduce(&mut self, v: &[(u32, i64)]) -> Vec<u64> {
        let start = self.load(v);
        let mut r = start;
        loop {
            match self.sweep(r) {
                None => break,
                Some(free) => r = free + 1,
            }
        }
        std::mem::replace(&mut self.acc, vec![0; self.nrows])
    }
}

/// Rank over F_p by repeated Schur complements.
///
/// Each round selects a set of rows that can serve as pivots as they
/// stand: first the shortest row starting at each column, then further
/// rows whose pivot column keeps the pivot graph acyclic. Pivot rows cause
/// no fill; only the others are reduced, by a sparse triangular solve in
/// topological order. The remainder goes to dense elimination once it is
/// small or dense.
pub fn sparse_rank_mod_p(m: &SparseMatrix, p: u64) -> usize {
    // fewer, longer rows: most of them end up as pivots
    if m.ncols > m.nrows {
        return sparse_rank_rows(&m.transpose(), p);
    }
    sparse_rank_rows(m, p)
}

const NONE: u32 = u32::MAX;
const LAZY: u64 = 1 << 62;

/// Pivot rows of one round, indexed by pivot column.
struct Pivots {
    of_col: Vec<u32>,
}

/// Scratch space for depth-first searches over the pivot graph.
struct Dfs {
    mark: Vec<u32>,
    stamp: u32,
    stack: Vec<(u32, usize)>,
    order: Vec<u32>,
}

impl Dfs {
    fn new(width: usize) -> Self {
        Dfs { mark: vec![0; width], stamp: 0, stack: Vec::new(), order: Vec::new() }
    }

    /// Columns reachable from `start`, in reverse topological order
    /// (`order` ends with the sources). Stops early past `limit` nodes.
    fn reach(&mut self, start: &[(u32, u64)], piv: &Pivots, rows: &[Vec<(u32, u64)>], limit: usize) -> bool {
        self.stamp += 1;
        self.order.clear();
        for &(c0, _) in start {
            if self.mark[c0 as usize] == self.stamp {
                continue;
            }
            self.mark[c0 as usize] = self.stamp;
            self.stack.push((c0, 1));
            while let Some(&mut (c, ref mut next)) = self.stack.last_mut() {
                let pr = piv.of_col[c as usize];
                let row: &[(u32, u64)] = if pr == NONE { &[] } else { &rows[pr as usize] };
                let mut pushed = false;
                while *next < row.len() {
                    let j = row[*next].0;
                    *next += 1;
                    if self.mark[j as usize] != self.stamp {
                        self.mark[j as usize] = self.stamp;
                        self.stack.push((j, 1));
                        pushed = true;
                        break;
                    }
                }
                if !pushed {
                    self.stack.pop();
                    self.order.push(c);
                    if self.order.len() > limit {
                        self.stack.clear();
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn sparse_rank_rows(m: &SparseMatrix, p: u64) -> usize {
    // columns of `m` serve as rows here; rank is the same
    let pi = p as i64;
    let mut rows: Vec<Vec<(u32, u64)>> = (0..m.ncols)
        .map(|c| {
            m.col(c).iter().filter_map(|&(r, v)| {
                let x = v.rem_euclid(pi) as u64;
                (x != 0).then_some((r, x))
            }).collect()
        })
        .collect();
    let width = m.nrows;
    let mut rank = 0;
    let mut acc = vec![0u64; width];
    let mut dfs = Dfs::new(width);
    loop {
        rows.retain(|r| !r.is_empty());
        if rows.is_empty() {
            return rank;
        }
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        if rows.len() <= 32 || nnz as f64 > 0.3 * rows.len() as f64 * width as f64 {
            return rank + dense_rank_rows(&rows, width, p);
        }
        // a pivot row is stored with its pivot entry first
        let mut piv = Pivots { of_col: vec![NONE; width] };
        for (i, r) in rows.iter().enumerate() {
            let c = r[0].0 as usize;
            let cur = piv.of_col[c];
            if cur == NONE || rows[cur as usize].len() > r.len() {
                piv.of_col[c] = i as u32;
            }
        }
        let mut is_piv = vec![false; rows.len()];
        for &i in piv.of_col.iter().filter(|&&i| i != NONE) {
            is_piv[i as usize] = true;
        }
        let mut cand: Vec<usize> = (0..rows.len()).filter(|&i| !is_piv[i]).collect();
        cand.sort_by_key(|&i| rows[i].len());
        for i in cand {
            // a free column of the row not reachable through existing pivots
            let free: Vec<(u32, u64)> = rows[i].iter().copied().filter(|e| piv.of_col[e.0 as usize] == NONE).collect();
            if free.is_empty() {
                continue;
            }
            let hops: Vec<(u32, u64)> = rows[i].iter().copied().filter(|e| piv.of_col[e.0 as usize] != NONE).collect();
            if !dfs.reach(&hops, &piv, &rows, 4 * width / 100 + 64) {
                continue;
            }
            let stamp = dfs.stamp;
            if let Some(&(c, _)) = free.iter().find(|e| dfs.mark[e.0 as usize] != stamp) {
                let r = &mut rows[i];
                let pos = r.iter().position(|e| e.0 == c).unwrap();
                r.swap(0, pos);
                piv.of_col[c as usize] = i as u32;
                is_piv[i] = true;
            }
        }
        let npiv = is_piv.iter().filter(|&&b| b).count();
        rank += npiv;
        if npiv == rows.len() {
            return rank;
        }
        // normalize pivot entries to 1
        for (i, r) in rows.iter_mut().enumerate() {
            if is_piv[i] {
                let inv = inv_mod(r[0].1, p);
                for e in r.iter_mut() {
                    e.1 = mul_mod(e.1, inv, p);
                }
            }
        }
        let mut next = Vec::with_capacity(rows.len() - npiv);
        for i in 0..rows.len() {
            if is_piv[i] {
                continue;
            }
            dfs.reach(&rows[i], &piv, &rows, usize::MAX);
            for &(c, v) in &rows[i] {
                acc[c as usize] = v;
            }
            let mut out = Vec::new();
            for &c in dfs.order.iter().rev() {
                let c = c as usize;
                let x = acc[c] % p;
                acc[c] = 0;
                if x == 0 {
                    continue;
                }
                let pr = piv.of_col[c];
                if pr == NONE {
                    out.push((c as u32, x));
                    continue;
                }
                let f = p - x;
                // reduce lazily: terms are below 2^62
                for &(j, v) in &rows[pr as usize][1..] {
                    let j = j as usize;
                    let t = acc[j] + f * v;
                    acc[j] = if t >= LAZY { t % p } else { t };
                }
            }
            out.sort_unstable_by_key(|e| e.0);
            next.push(out);
        }
        rows = next;
    }
}

/// Rank of sparse rows over F_p after compacting the columns in use.
fn dense_rank_rows(rows: &[Vec<(u32, u64)>], width: usize, p: u64) -> usize {
    let mut map = vec![u32::MAX; width];
    let mut ncols = 0usize;
    for r in rows {
        for &(c, _) in r {
            if map[c as usize] == u32::MAX {
                map[c as usize] = ncols as u32;
                ncols += 1;
            }
        }
    }
    let mut a = DenseModMatrix::zeros(rows.len(), ncols, p);
    for (i, r) in rows.iter().enumerate() {
        for &(c, v) in r {
            a.data[i * ncols + map[c as usize] as usize] = v;
        }
    }
    a.rank_in_place()
}

fn modular_split(m: &SparseMatrix, split: usize, p: u64) -> (usize, usize) {
    let total = sparse_rank_mod_p(m, p);
    let prefix = if split == 0 { 0 } else if split == m.nrows { total } else { sparse_rank_mod_p(&m.top_rows(split), p) };
    (total, prefix)
}

/// Rank over the rationals by fraction-free elimination with partial
/// pivoting by absolute value.
pub fn bareiss_rank(m: &SparseMatrix) -> usize {
    let (nr, nc) = (m.nrows, m.ncols);
    if nr == 0 || nc == 0 {
        return 0;
    }
    // eliminate along the shorter dimension: rows of the dense array are
    // the longer side so that each step touches fewer entries
    let (rows, cols, data) = if nr >= nc {
        let mut a = vec![BigInt::zero(); nr * nc];
        for c in 0..nc {
            for &(r, v) in m.col(c) {
                a[r as usize * nc + c] = BigInt::from(v);
            }
        }
        (nr, nc, a)
    } else {
        let mut a = vec![BigInt::zero(); nr * nc];
        for c in 0..nc {
            for &(r, v) in m.col(c) {
                a[c * nr + r as usize] = BigInt::from(v);
            }
        }
        (nc, nr, a)
    };
    let mut a = data;
    let mut prev = BigInt::from(1);
    let mut rank = 0usize;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let mut best: Option<usize> = None;
        for r in rank..rows {
            let x = &a[r * cols + col];
            if !x.is_zero() && best.is_none_or(|b| x.abs() > a[b * cols + col].abs()) {
                best = Some(r);
            }
        }
        let Some(b) = best else { continue };
        if b != rank {
            for c in 0..cols {
                a.swap(b * cols + c, rank * cols + c);
            }
        }
        let piv = a[rank * cols + col].clone();
        for r in rank + 1..rows {
            let f = a[r * cols + col].clone();
            for c in col + 1..cols {
                let v = &piv * &a[r * cols + c] - &f * &a[rank * cols + c];
                a[r * cols + c] = v / &prev;
            }
            a[r * cols + col] = BigInt::zero();
        }
        prev = piv;
        rank += 1;
    }
    rank
}

fn escalate(m: &SparseMatrix, policy: &RankPolicy, primes: &[u64], seen: &[(u64, usize)]) -> Result<(usize, Certification, RankMethod, Vec<(u64, usize)>)> {
    let mut seen = seen.to_vec();
    let third = select_primes(policy, primes.len() + 1)?;
    let extra = third.into_iter().find(|q| !primes.contains(q) && content_ok(m, *q));
    if let Some(q) = extra {
        let (r, _) = modular_split(m, 0, q);
        seen.push((q, r));
        let best = seen.iter().map(|e| e.1).max().unwrap_or(0);
        if seen.iter().filter(|e| e.1 == best).count() >= 2 {
            return Ok((best, Certification::Certified, RankMethod::ModularMajority, seen));
        }
    }
    Ok((bareiss_rank(m), Certification::Certified, RankMethod::ModularThenExact, seen))
}

pub fn rank(m: &SparseMatrix, policy: &RankPolicy) -> Result<RankResult> {
    if m.nrows == 0 || m.ncols == 0 {
        return Ok(RankResult { rank: 0, tag: Certification::Certified, method: RankMethod::Modular, prime_ranks: vec![] });
    }
    match policy.mode {
        RankMode::Exact => Ok(RankResult {
            rank: bareiss_rank(m),
            tag: Certification::Certified,
            method: RankMethod::Bareiss,
            prime_ranks: vec![],
        }),
        RankMode::Modular => {
            let primes = primes_for(m, policy)?;
            let seen: Vec<(u64, usize)> = primes.iter().map(|&p| (p, modular_split(m, 0, p).0)).collect();
            let first = seen[0].1;
            if seen.iter().all(|e| e.1 == first) {
                return Ok(RankResult { rank: first, tag: Certification::Certified, method: RankMethod::Modular, prime_ranks: seen });
            }
            let (rank, tag, method, seen) = escalate(m, policy, &primes, &seen)?;
            Ok(RankResult { rank, tag, method, prime_ranks: seen })
        }
    }
}

/// Rank of `m` and of its first `split` rows.
///
/// With rows ordered so that the block of interest comes first, a column
/// echelon form keyed by leading row index has exactly rank(top block)
/// pivots inside that block: column operations act on both at once, and a
/// column whose leading entry is below the block vanishes on it.
pub fn rank_split(m: &SparseMatrix, split: usize, policy: &RankPolicy) -> Result<SplitRank> {
    assert!(split <= m.nrows);
    if m.nrows == 0 || m.ncols == 0 {
        return Ok(SplitRank { total: 0, prefix: 0, tag: Certification::Certified, method: RankMethod::Modular, prime_ranks: vec![] });
    }
    match policy.mode {
        RankMode::Exact => {
            let total = bareiss_rank(m);
            let prefix = bareiss_rank(&m.top_rows(split));
            Ok(SplitRank { total, prefix, tag: Certification::Certified, method: RankMethod::Bareiss, prime_ranks: vec![] })
        }
        RankMode::Modular => {
            let primes = primes_for(m, policy)?;
            let seen: Vec<(u64, usize, usize)> = if primes.len() == 2 {
                let (a, b) = rayon::join(|| modular_split(m, split, primes[0]), || modular_split(m, split, primes[1]));
                vec![(primes[0], a.0, a.1), (primes[1], b.0, b.1)]
            } else {
                primes.iter().map(|&p| {
                    let (t, q) = modular_split(m, split, p);
                    (p, t, q)
                }).collect()
            };
            let (t0, q0) = (seen[0].1, seen[0].2);
            if seen.iter().all(|e| e.1 == t0 && e.2 == q0) {
                return Ok(SplitRank { total: t0, prefix: q0, tag: Certification::Certified, method: RankMethod::Modular, prime_ranks: seen });
            }
            // disagreement: settle each rank separately
            let tot: Vec<(u64, usize)> = seen.iter().map(|e| (e.0, e.1)).collect();
            let pre: Vec<(u64, usize)> = seen.iter().map(|e| (e.0, e.2)).collect();
            let (total, _, m1, _) = if tot.iter().all(|e| e.1 == t0) {
                (t0, Certification::Certified, RankMethod::Modular, tot.clone())
            } else {
                escalate(m, policy, &primes, &tot)?
            };
            let top = m.top_rows(split);
            let (prefix, _, m2, _) = if pre.iter().all(|e| e.1 == q0) {
                (q0, Certification::Certified, RankMethod::Modular, pre.clone())
            } else {
                escalate(&top, policy, &primes, &pre)?
            };
            let method = if m1 == RankMethod::ModularThenExact || m2 == RankMethod::ModularThenExact {
                RankMethod::ModularThenExact
            } else {
                RankMethod::ModularMajority
            };
            Ok(SplitRank { total, prefix, tag: Certification::Certified, method, prime_ranks: seen })
        }
    }
}

/// Rank over a single prime, without escalation. Used where a lower bound
/// is all that is needed and by tests.
pub fn rank_mod_p(m: &SparseMatrix, p: u64) -> usize {
    modular_split(m, 0, p).0
}

/// Dense matrix over F_p, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseModMatrix {
    pub p: u64,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl DenseModMatrix {
    pub fn zeros(rows: usize, cols: usize, p: u64) -> Self {
        DenseModMatrix { p, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn at(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v % self.p;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Reduced row echelon form in place; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let p = self.p;
        let (rows, cols) = (self.rows, self.cols);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(s) = (r..rows).find(|&i| self.data[i * cols + c] != 0) else { continue };
            if s != r {
                for j in 0..cols {
                    self.data.swap(s * cols + j, r * cols + j);
                }
            }
            let inv = inv_mod(self.data[r * cols + c], p);
            for j in c..cols {
                let v = self.data[r * cols + j];
                self.data[r * cols + j] = mul_mod(v, inv, p);
            }
            for i in 0..rows {
                if i == r {
                    continue;
                }
                let f = self.data[i * cols + c];
                if f == 0 {
                    continue;
                }
                let g = p - f;
                for j in c..cols {
                    let v = self.data[r * cols + j];
                    if v != 0 {
                        let x = &mut self.data[i * cols + j];
                        *x = (*x + mul_mod(g, v, p)) % p;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rank_in_place()
    }

    /// Row echelon elimination without back substitution; destroys `self`.
    pub fn rank_in_place(&mut self) -> usize {
        let p = self.p;
        let (rows, cols) = (self.rows, self.cols);
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(s) = (r..rows).find(|&i| self.data[i * cols + c] != 0) else { continue };
            if s != r {
                for j in c..cols {
                    self.data.swap(s * cols + j, r * cols + j);
                }
            }
            let inv = inv_mod(self.data[r * cols + c], p);
            let (head, tail) = self.data.split_at_mut((r + 1) * cols);
            let prow = &mut head[r * cols..];
            for v in prow[c..].iter_mut() {
                *v = mul_mod(*v, inv, p);
            }
            for i in 0..rows - r - 1 {
                let row = &mut tail[i * cols..(i + 1) * cols];
                let f = row[c];
                if f == 0 {
                    continue;
                }
                let g = p - f;
                for (x, &v) in row[c..].iter_mut().zip(&prow[c..]) {
                    *x = (*x + g * v) % p;
                }
            }
            r += 1;
        }
        r
    }

    /// Basis of the right null space, one vector per row of the result.
    pub fn nullspace(&self) -> Vec<Vec<u64>> {
        let p = self.p;
        let mut a = self.clone();
        let piv = a.rref();
        let cols = self.cols;
        let mut is_piv = vec![usize::MAX; cols];
        for (i, &c) in piv.iter().enumerate() {
            is_piv[c] = i;
        }
        let mut out = Vec::new();
        for free in 0..cols {
            if is_piv[free] != usize::MAX {
                continue;
            }
            let mut v = vec![0u64; cols];
            v[free] = 1;
            for (i, &c) in piv.iter().enumerate() {
                let x = a.data[i * cols + free];
                v[c] = (p - x) % p;
            }
            out.push(v);
        }
        out
    }
}
