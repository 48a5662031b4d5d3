//! Higher pages of the pole order spectral sequence from the ranks of the
//! maps Ψ^(r)_{i,k} and Φ^(r)_{i,k}.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactla::{rank, rank_split, Certification, RankPolicy, SparseMatrix};
use crate::koszul::{at, Complex, E1Table};
use crate::polyring::{binom, monomials, FormSpace, HomogPoly};

/// Ψ^(r)_{i,k} with its target blocks reordered so that the rows of Φ
/// (output blocks `1..=r`) come first and block 0 last. Returns the matrix
/// and the number of Φ rows.
pub fn psi_reordered(cx: &Complex, i: usize, k: i64, r: usize) -> Result<(SparseMatrix, usize)> {
    let (n, d) = (cx.n, cx.d as i64);
    let p_src = n - i - 1;
    let deg = |j: i64| j * d + k - i as i64 * d;
    let tgt: Vec<FormSpace> = (0..=r as i64).map(|j| FormSpace::new(n, n - i, deg(j))).collect();
    // row offsets: blocks 1..=r, then block 0
    let mut off = vec![0u32; r + 1];
    let mut acc = 0usize;
    for j in 1..=r {
        off[j] = acc as u32;
        acc += tgt[j].dim();
    }
    let split = acc;
    off[0] = acc as u32;
    acc += tgt[0].dim();
    let nrows = acc;
    let mut cols = Vec::new();
    for j in -1..r as i64 {
        let src = FormSpace::new(n, p_src, deg(j));
        let monos = monomials(n, src.mono_degree());
        for a in &monos {
            for &m in src.subset_masks() {
                let mut c = Vec::new();
                let up = (j + 1) as usize;
                cx.df_column(m, a, &tgt[up], off[up], &mut c);
                if j >= 0 {
                    cx.d_column(m, a, &tgt[j as usize], off[j as usize], &mut c);
                }
                cols.push(c);
            }
        }
    }
    Ok((SparseMatrix::from_columns(nrows, cols)?, split))
}

/// Ψ^(r)_{i,k} with target blocks in natural order `0..=r`, and Φ^(r)_{i,k}
/// obtained by dropping output block 0.
pub fn psi_phi_matrices(f: &HomogPoly, i: usize, k: i64, r: usize) -> Result<(SparseMatrix, SparseMatrix)> {
    let cx = Complex::new(f)?;
    let (m, split) = psi_reordered(&cx, i, k, r)?;
    let nrows = m.nrows;
    let b0 = nrows - split;
    // move block 0 (rows split..) to the front
    let trips: Vec<(usize, usize, i64)> = m
        .triplets()
        .into_iter()
        .map(|(row, c, v)| if row >= split { (row - split, c, v) } else { (row + b0, c, v) })
        .collect();
    let psi = SparseMatrix::from_triplets(nrows, m.ncols, &trips)?;
    let phi = m.top_rows(split);
    Ok((psi, phi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub rank_psi: usize,
    pub rank_phi: usize,
    pub beta: usize,
    pub tag: Certification,
    /// False when the value was carried over from page `r-1` because the
    /// differential is forced to vanish.
    pub computed: bool,
}

pub fn beta(f: &HomogPoly, i: usize, k: i64, r: usize, policy: &RankPolicy) -> Result<BetaEntry> {
    let cx = Complex::new(f)?;
    beta_cx(&cx, i, k, r, policy)
}

pub fn beta_cx(cx: &Complex, i: usize, k: i64, r: usize, policy: &RankPolicy) -> Result<BetaEntry> {
    beta_known_phi(cx, i, k, r, None, policy)
}

/// β with the rank of Φ supplied when it is already known. Φ^(r)_{i,k} is
/// Ψ^(r-1)_{i,k+d} with its blocks renumbered, since the first source block
/// maps into output block 0 only.
fn beta_known_phi(cx: &Complex, i: usize, k: i64, r: usize, phi: Option<(usize, Certification)>, policy: &RankPolicy) -> Result<BetaEntry> {
    let (m, split) = psi_reordered(cx, i, k, r)?;
    let (rank_psi, rank_phi, tag) = match phi {
        Some((rp, tp)) => {
            let t = rank(&m, policy)?;
            (t.rank, rp, t.tag.and(tp))
        }
        None => {
            let s = rank_split(&m, split, policy)?;
            (s.total, s.prefix, s.tag)
        }
    };
    if rank_phi > rank_psi {
        return Err(Error::Inconsistent(format!("rank Φ > rank Ψ at (i, k, r) = ({i}, {k}, {r})")));
    }
    Ok(BetaEntry { rank_psi, rank_phi, beta: rank_psi - rank_phi, tag, computed: true })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageOptions {
    /// Compute every β instead of skipping those forced by vanishing.
    pub full: bool,
}

/// μ^(r)_k, ν^(r)_k, ρ^(r)_k for `r` in `1..=r_max` and `k` in `0..=k_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageTable {
    pub n: usize,
    pub d: u32,
    pub r_max: usize,
    pub k_max: i64,
    /// `mu[r-1][k]`.
    pub mu: Vec<Vec<i64>>,
    pub nu: Vec<Vec<i64>>,
    pub rho: Vec<Vec<i64>>,
    pub mu_tag: Vec<Vec<Certification>>,
    pub nu_tag: Vec<Vec<Certification>>,
    pub rho_tag: Vec<Vec<Certification>>,
    /// Set when ρ vanished on the E1 table and the i = 1 maps were skipped.
    pub isolated: bool,
    /// β^(r)_{i,k} keyed by `(i, k, r)`.
    #[serde(with = "beta_map")]
    pub betas: BTreeMap<(usize, i64, usize), BetaEntry>,
}

mod beta_map {
    use super::BetaEntry;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    #[derive(Serialize, Deserialize)]
    struct Row {
        i: usize,
        k: i64,
        r: usize,
        #[serde(flatten)]
        e: BetaEntry,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<(usize, i64, usize), BetaEntry>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Row> = m.iter().map(|(&(i, k, r), &e)| Row { i, k, r, e }).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(usize, i64, usize), BetaEntry>, D::Error> {
        let rows: Vec<Row> = Vec::deserialize(d)?;
        Ok(rows.into_iter().map(|r| ((r.i, r.k, r.r), r.e)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    M,
    N,
    Q,
}

impl PageTable {
    fn row(&self, w: Which, r: usize) -> &[i64] {
        match w {
            Which::M => &self.mu[r - 1],
            Which::N => &self.nu[r - 1],
            Which::Q => &self.rho[r - 1],
        }
    }

    /// Value at page `r` (clamped to `r_max`) and degree `k`; zero outside the table.
    pub fn get(&self, w: Which, r: usize, k: i64) -> i64 {
        at(self.row(w, r.min(self.r_max)), k)
    }

    pub fn mu_at(&self, r: usize, k: i64) -> i64 {
        self.get(Which::M, r, k)
    }
    pub fn nu_at(&self, r: usize, k: i64) -> i64 {
        self.get(Which::N, r, k)
    }
    pub fn rho_at(&self, r: usize, k: i64) -> i64 {
        self.get(Which::Q, r, k)
    }

    pub fn tag(&self, w: Which, r: usize, k: i64) -> Certification {
        if k < 0 || k > self.k_max {
            return Certification::Certified;
        }
        let t = match w {
            Which::M => &self.mu_tag,
            Which::N => &self.nu_tag,
            Which::Q => &self.rho_tag,
        };
        t[r.min(self.r_max) - 1][k as usize]
    }

    /// The entry keeps its value on every later page computed.
    pub fn observed_stable(&self, w: Which, r: usize, k: i64) -> bool {
        let v = self.get(w, r, k);
        (r..=self.r_max).all(|s| self.get(w, s, k) == v)
    }

    pub fn beta_entry(&self, i: usize, k: i64, r: usize) -> Option<&BetaEntry> {
        self.betas.get(&(i, k, r))
    }
}

/// Drive the page recursions.
///
/// For `r >= 1`:
///   μ^(r+1)_k = C(k-1, n-1) - β^(r)_{0,k}
///   ρ^(r+1)_k = ρ^(r)_k - (β^(r)_{1,k-rd} - β^(r-1)_{1,k-rd})
///   ν^(r+1)_k = ν^(r)_k - (μ^(r)_{k-rd} - μ^(r+1)_{k-rd}) - (β^(r)_{1,k} - β^(r-1)_{1,k})
///
/// A β is recomputed only where the page-r differential can be nonzero,
/// that is, where both its source and its target are nonzero (or unknown).
pub fn page_tables(f: &HomogPoly, e1: &E1Table, r_max: usize, k_max: i64, policy: &RankPolicy, opts: &PageOptions) -> Result<PageTable> {
    let cx = Complex::new(f)?;
    page_tables_cx(&cx, e1, r_max, k_max, policy, opts)
}

pub fn page_tables_cx(cx: &Complex, e1: &E1Table, r_max: usize, k_max: i64, policy: &RankPolicy, opts: &PageOptions) -> Result<PageTable> {
    let (n, d) = (cx.n, cx.d as i64);
    if r_max == 0 || r_max > n {
        return Err(Error::Unsupported(format!("r_max = {r_max} (need 1..={n})")));
    }
    if k_max > e1.k_max {
        return Err(Error::Unsupported(format!("page range {k_max} exceeds the E1 table ({})", e1.k_max)));
    }
    let ks = (k_max + 1) as usize;
    let isolated = e1.rho_vanishes();
    let mut t = PageTable {
        n,
        d: cx.d,
        r_max,
        k_max,
        mu: vec![e1.mu[..ks].to_vec()],
        nu: vec![e1.nu[..ks].to_vec()],
        rho: vec![e1.rho[..ks].to_vec()],
        mu_tag: vec![e1.tags[..ks].to_vec()],
        nu_tag: vec![e1.tags[..ks].to_vec()],
        rho_tag: vec![e1.tags[..ks].to_vec()],
        isolated,
        betas: BTreeMap::new(),
    };
    // page 0: β^(0)_{i,k} = rank df∧ on Ω^{n-i-1}_{k-(i+1)d}
    for k in 0..=k_max {
        for i in 0..2usize {
            let p = n - i - 1;
            let q = k - (i as i64 + 1) * d;
            let rk = if q < p as i64 { 0 } else { e1.wedge_rank(p, q) };
            let tag = e1.tags[k as usize];
            t.betas.insert((i, k, 0), BetaEntry { rank_psi: rk, rank_phi: 0, beta: rk, tag, computed: true });
        }
    }
    for r in 1..r_max {
        let rd = r as i64 * d;
        // ν^(r) at degree j, falling back to E1 (an upper bound) past the page range
        let nu_r = |t: &PageTable, j: i64| -> Option<i64> {
            if j <= k_max {
                Some(t.nu_at(r, j))
            } else if j <= e1.k_max {
                // only a zero is conclusive here
                if e1.nu_at(j) == 0 { Some(0) } else { None }
            } else {
                None
            }
        };
        let rho_r = |t: &PageTable, j: i64| -> Option<i64> {
            if j <= k_max {
                Some(t.rho_at(r, j))
            } else if j <= e1.k_max {
                if e1.rho_at(j) == 0 { Some(0) } else { None }
            } else {
                None
            }
        };
        let mut tasks: Vec<(usize, i64)> = Vec::new();
        for k in 0..=k_max {
            // d_r : N^(r)_{k+rd} → M^(r)_k
            let need0 = opts.full || (t.mu_at(r, k) != 0 && nu_r(&t, k + rd) != Some(0));
            if need0 && binom(k - 1, n as i64 - 1) > 0 {
                tasks.push((0, k));
            }
            // d_r : Q^(r)_{k+rd} → N^(r)_k
            if !isolated {
                let need1 = opts.full || (t.nu_at(r, k) != 0 && rho_r(&t, k + rd) != Some(0));
                if need1 {
                    tasks.push((1, k));
                }
            }
        }
        tasks.sort_by_key(|&(i, k)| std::cmp::Reverse((k, i)));
        let known_phi = |i: usize, k: i64| -> Option<(usize, Certification)> {
            if r == 1 {
                let (p, q) = (n - i - 1, k - i as i64 * d);
                if q < p as i64 {
                    return Some((0, Certification::Certified));
                }
                if let Some(rk) = e1.wedge_ranks.get(&(p, q)) {
                    let kk = q + (i as i64 + 1) * d;
                    if kk <= e1.k_max {
                        return Some((*rk, e1.tags[kk as usize]));
                    }
                }
                return None;
            }
            let e = t.betas.get(&(i, k + d, r - 1))?;
            e.computed.then_some((e.rank_psi, e.tag))
        };
        let computed: Vec<Result<((usize, i64), BetaEntry)>> = tasks
            .par_iter()
            .map(|&(i, k)| {
                let phi = match known_phi(i, k) {
                    Some(x) => Some(x),
                    // Φ^(1) is a single df∧ map, cheap to rank on its own
                    None if r == 1 => {
                        let m = cx.wedge_df(n - i - 1, k - i as i64 * d)?;
                        let t = rank(&m, policy)?;
                        Some((t.rank, t.tag))
                    }
                    None => None,
                };
                Ok(((i, k), beta_known_phi(cx, i, k, r, phi, policy)?))
            })
            .collect();
        for c in computed {
            let ((i, k), e) = c?;
            t.betas.insert((i, k, r), e);
        }
        for k in 0..=k_max {
            for i in 0..2usize {
                if !t.betas.contains_key(&(i, k, r)) {
                    let prev = t.betas[&(i, k, r - 1)];
                    t.betas.insert((i, k, r), BetaEntry { computed: false, ..prev });
                }
            }
        }
        let b = |t: &PageTable, i: usize, k: i64, r: usize| -> (i64, Certification) {
            if k < 0 {
                return (0, Certification::Certified);
            }
            let e = t.betas[&(i, k, r)];
            (e.beta as i64, e.tag)
        };
        let mut mu = Vec::with_capacity(ks);
        let mut nu = Vec::with_capacity(ks);
        let mut rho = Vec::with_capacity(ks);
        let mut mt = Vec::with_capacity(ks);
        let mut nt = Vec::with_capacity(ks);
        let mut qt = Vec::with_capacity(ks);
        for k in 0..=k_max {
            let (b0, tb0) = b(&t, 0, k, r);
            let m = binom(k - 1, n as i64 - 1) as i64 - b0;
            mu.push(m);
            mt.push(tb0.and(t.tag(Which::M, r, k)));
        }
        for k in 0..=k_max {
            let (dr, tr) = if isolated {
                (0, Certification::Certified)
            } else {
                let (x, tx) = b(&t, 1, k - rd, r);
                let (y, ty) = b(&t, 1, k - rd, r - 1);
                (x - y, tx.and(ty))
            };
            rho.push(t.rho_at(r, k) - dr);
            qt.push(tr.and(t.tag(Which::Q, r, k)));
            let j = k - rd;
            let dm = if j >= 0 { t.mu_at(r, j) - mu[j as usize] } else { 0 };
            let tm = if j >= 0 { mt[j as usize] } else { Certification::Certified };
            let (dq, tq) = if isolated {
                (0, Certification::Certified)
            } else {
                let (x, tx) = b(&t, 1, k, r);
                let (y, ty) = b(&t, 1, k, r - 1);
                (x - y, tx.and(ty))
            };
            nu.push(t.nu_at(r, k) - dm - dq);
            nt.push(tm.and(tq).and(t.tag(Which::N, r, k)));
        }
        for k in 0..ks {
            let bad = mu[k] < 0 || nu[k] < 0 || rho[k] < 0 || mu[k] > t.mu[r - 1][k] || nu[k] > t.nu[r - 1][k] || rho[k] > t.rho[r - 1][k];
            if bad {
                return Err(Error::Inconsistent(format!("page {} at k = {k}: ({}, {}, {})", r + 1, mu[k], nu[k], rho[k])));
            }
        }
        t.mu.push(mu);
        t.nu.push(nu);
        t.rho.push(rho);
        t.mu_tag.push(mt);
        t.nu_tag.push(nt);
        t.rho_tag.push(qt);
    }
    Ok(t)
}

/// Same as [`page_tables`], retrying with exact ranks if the modular ranks
/// produce an impossible table.
pub fn page_tables_checked(f: &HomogPoly, e1: &E1Table, r_max: usize, k_max: i64, policy: &RankPolicy, opts: &PageOptions) -> Result<PageTable> {
    match page_tables(f, e1, r_max, k_max, policy, opts) {
        Err(Error::Inconsistent(_)) if policy.mode == crate::exactla::RankMode::Modular => {
            page_tables(f, e1, r_max, k_max, &RankPolicy::exact(), opts)
        }
        other => other,
    }
}
