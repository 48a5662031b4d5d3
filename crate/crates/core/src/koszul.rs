//! Matrices of `df∧` and `d` on graded forms, and the E1 dimensions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactla::{rank, Certification, RankPolicy, SparseMatrix};
use crate::polyring::{binom, form_dim, monomials, wedge_sign, FormSpace, HomogPoly};
use crate::series::{gamma_series, LaurentPoly};

/// A homogeneous polynomial prepared for matrix assembly: integer
/// coefficients and partial derivatives.
#[derive(Clone, Debug)]
pub struct Complex {
    pub n: usize,
    pub d: u32,
    grad: Vec<Vec<(Vec<u32>, i64)>>,
}

impl Complex {
    pub fn new(f: &HomogPoly) -> Result<Self> {
        Ok(Complex { n: f.n, d: f.d, grad: f.gradient()? })
    }

    /// Entries of `df ∧ (x^a dx_mask)` in `tgt`, with rows offset by `off`.
    pub fn df_column(&self, mask: u8, a: &[u32], tgt: &FormSpace, off: u32, out: &mut Vec<(u32, i64)>) {
        let mut e = vec![0u32; self.n];
        for j in 0..self.n {
            let Some((s, m2)) = wedge_sign(j, mask) else { continue };
            for (g, c) in &self.grad[j] {
                for i in 0..self.n {
                    e[i] = a[i] + g[i];
                }
                out.push((off + tgt.index(m2, &e) as u32, s * c));
            }
        }
    }

    /// Entries of `d(x^a dx_mask)` in `tgt`, rows offset by `off`.
    pub fn d_column(&self, mask: u8, a: &[u32], tgt: &FormSpace, off: u32, out: &mut Vec<(u32, i64)>) {
        let mut e = a.to_vec();
        for j in 0..self.n {
            if a[j] == 0 {
                continue;
            }
            let Some((s, m2)) = wedge_sign(j, mask) else { continue };
            e[j] -= 1;
            out.push((off + tgt.index(m2, &e) as u32, s * a[j] as i64));
            e[j] += 1;
        }
    }

    /// `df∧ : Ω^p_k → Ω^{p+1}_{k+d}`.
    pub fn wedge_df(&self, p: usize, k: i64) -> Result<SparseMatrix> {
        let src = FormSpace::new(self.n, p, k);
        if p >= self.n {
            return Ok(SparseMatrix::zeros(0, src.dim()));
        }
        let tgt = FormSpace::new(self.n, p + 1, k + self.d as i64);
        let monos = monomials(self.n, src.mono_degree());
        let mut cols = Vec::with_capacity(src.dim());
        for a in &monos {
            for &m in src.subset_masks() {
                let mut c = Vec::new();
                self.df_column(m, a, &tgt, 0, &mut c);
                cols.push(c);
            }
        }
        SparseMatrix::from_columns(tgt.dim(), cols)
    }

    /// `d : Ω^p_k → Ω^{p+1}_k`.
    pub fn d(&self, p: usize, k: i64) -> Result<SparseMatrix> {
        d_matrix(self.n, p, k)
    }

    /// Partial derivatives as (exponents, coefficient) lists.
    pub fn gradient(&self) -> &[Vec<(Vec<u32>, i64)>] {
        &self.grad
    }
}

pub fn wedge_df_matrix(f: &HomogPoly, p: usize, k: i64) -> Result<SparseMatrix> {
    Complex::new(f)?.wedge_df(p, k)
}

pub fn d_matrix(n: usize, p: usize, k: i64) -> Result<SparseMatrix> {
    let src = FormSpace::new(n, p, k);
    if p >= n {
        return Ok(SparseMatrix::zeros(0, src.dim()));
    }
    let tgt = FormSpace::new(n, p + 1, k);
    let monos = monomials(n, src.mono_degree());
    let cx = Complex { n, d: 0, grad: vec![] };
    let mut cols = Vec::with_capacity(src.dim());
    for a in &monos {
        for &m in src.subset_masks() {
            let mut c = Vec::new();
            cx.d_column(m, a, &tgt, 0, &mut c);
            cols.push(c);
        }
    }
    SparseMatrix::from_columns(tgt.dim(), cols)
}

/// E1 dimensions μ_k, ν_k, ρ_k and γ_k for `k` in `0..=k_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct E1Table {
    pub n: usize,
    pub d: u32,
    pub k_max: i64,
    pub mu: Vec<i64>,
    pub nu: Vec<i64>,
    pub rho: Vec<i64>,
    pub gamma: Vec<i64>,
    pub tags: Vec<Certification>,
    /// rank of `df∧` on Ω^p_q, keyed by `(p, q)`.
    #[serde(skip, default)]
    pub wedge_ranks: BTreeMap<(usize, i64), usize>,
}

impl E1Table {
    pub fn mu_at(&self, k: i64) -> i64 {
        at(&self.mu, k)
    }
    pub fn nu_at(&self, k: i64) -> i64 {
        at(&self.nu, k)
    }
    pub fn rho_at(&self, k: i64) -> i64 {
        at(&self.rho, k)
    }

    pub fn wedge_rank(&self, p: usize, q: i64) -> usize {
        if q < p as i64 {
            return 0;
        }
        self.wedge_ranks[&(p, q)]
    }

    pub fn mu_series(&self) -> LaurentPoly {
        LaurentPoly::from_slice(0, &self.mu)
    }
    pub fn nu_series(&self) -> LaurentPoly {
        LaurentPoly::from_slice(0, &self.nu)
    }
    pub fn rho_series(&self) -> LaurentPoly {
        LaurentPoly::from_slice(0, &self.rho)
    }

    pub fn all_certified(&self) -> bool {
        self.tags.iter().all(|&t| t == Certification::Certified)
    }

    /// ρ vanishes on the whole table, the signature of isolated singularities.
    pub fn rho_vanishes(&self) -> bool {
        self.rho.iter().all(|&r| r == 0)
    }
}

pub(crate) fn at(v: &[i64], k: i64) -> i64 {
    if k >= 0 && (k as usize) < v.len() {
        v[k as usize]
    } else {
        0
    }
}

/// Ranks of `df∧` on Ω^p_q for the requested keys, computed in parallel.
pub fn wedge_ranks(cx: &Complex, keys: &[(usize, i64)], policy: &RankPolicy) -> Result<BTreeMap<(usize, i64), (usize, Certification)>> {
    let mut keys: Vec<(usize, i64)> = keys.iter().copied().filter(|&(p, q)| q >= p as i64).collect();
    keys.sort();
    keys.dedup();
    // largest matrices first so the pool stays busy
    keys.sort_by_key(|&(p, q)| std::cmp::Reverse(form_dim(cx.n, p, q)));
    let res: Vec<Result<((usize, i64), (usize, Certification))>> = keys
        .par_iter()
        .map(|&(p, q)| {
            let m = cx.wedge_df(p, q)?;
            let r = rank(&m, policy)?;
            Ok(((p, q), (r.rank, r.tag)))
        })
        .collect();
    res.into_iter().collect()
}

pub fn e1_table(f: &HomogPoly, k_max: i64, policy: &RankPolicy) -> Result<E1Table> {
    let cx = Complex::new(f)?;
    e1_table_cx(&cx, k_max, policy)
}

pub fn e1_table_cx(cx: &Complex, k_max: i64, policy: &RankPolicy) -> Result<E1Table> {
    let (n, d) = (cx.n, cx.d as i64);
    let mut keys = Vec::new();
    for k in 0..=k_max {
        for i in 1..=3usize {
            if i <= n {
                keys.push((n - i, k - i as i64 * d));
            }
        }
    }
    let ranks = wedge_ranks(cx, &keys, policy)?;
    let rk = |p: usize, q: i64| -> (i64, Certification) {
        if q < p as i64 {
            return (0, Certification::Certified);
        }
        let (r, t) = ranks[&(p, q)];
        (r as i64, t)
    };
    let gamma = gamma_series(n, cx.d, k_max);
    let mut tab = E1Table {
        n,
        d: cx.d,
        k_max,
        mu: vec![],
        nu: vec![],
        rho: vec![],
        gamma: gamma.to_vec(0, k_max),
        tags: vec![],
        wedge_ranks: ranks.iter().map(|(&k, &(r, _))| (k, r)).collect(),
    };
    for k in 0..=k_max {
        let (r1, t1) = rk(n - 1, k - d);
        let (r2, t2) = rk(n - 2, k - 2 * d);
        let (r3, t3) = if n >= 3 { rk(n - 3, k - 3 * d) } else { (0, Certification::Certified) };
        let mu = form_dim(n, n, k) as i64 - r1;
        let nu = form_dim(n, n - 1, k - d) as i64 - r1 - r2;
        let rho = form_dim(n, n - 2, k - 2 * d) as i64 - r2 - r3;
        if mu < 0 || nu < 0 || rho < 0 {
            return Err(Error::Inconsistent(format!("negative E1 dimension at k = {k}")));
        }
        tab.mu.push(mu);
        tab.nu.push(nu);
        tab.rho.push(rho);
        tab.tags.push(t1.and(t2).and(t3));
    }
    Ok(tab)
}

/// ρ_k for `n = 3` from the degree of the reduced polynomial:
/// Σ_{i=d1}^{d2} p^(2)_{k-i} with d1 = 2d + d̃, d2 = 3d - 1.
pub fn rho_closed_form_n3(d: u32, d_reduced: u32, k: i64) -> Result<i64> {
    if d_reduced == 0 || d_reduced > d {
        return Err(Error::Unsupported(format!("reduced degree {d_reduced} for d = {d}")));
    }
    let d1 = 2 * d as i64 + d_reduced as i64;
    let d2 = 3 * d as i64 - 1;
    let p3 = |j: i64| if j < 0 { 0 } else { binom(j + 2, 2) as i64 };
    // Σ_{i=d1}^{d2} p^(2)_{k-i}; p^(2)_j = j+1 summed gives p^(3)
    Ok(if d1 > d2 {
        0
    } else if k <= d2 {
        p3(k - d1)
    } else {
        p3(d2 - d1) + (d - d_reduced) as i64 * (k - d2)
    })
}

/// Cohomology of the subcomplex of degree-`d` forms killed by `df∧`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplementBetti {
    /// `dims[j]` is dim H^j for `j` in `0..=n`.
    pub dims: Vec<i64>,
    /// True when the caller asserted the hypotheses under which
    /// `dims[j]` equals the Betti number b_{j-1} of the complement.
    pub as_complement_betti: bool,
    pub tag: Certification,
}

impl ComplementBetti {
    pub fn label(&self) -> &'static str {
        if self.as_complement_betti {
            "complement Betti numbers b_{j-1}(U)"
        } else {
            "raw complex cohomology"
        }
    }

    /// Σ (-1)^j dim H^j, which is -χ(U) under the hypotheses.
    pub fn alternating_sum(&self) -> i64 {
        self.dims.iter().enumerate().map(|(j, &x)| if j % 2 == 0 { x } else { -x }).sum()
    }
}

pub fn complement_betti(f: &HomogPoly, hypotheses: bool, policy: &RankPolicy) -> Result<ComplementBetti> {
    let cx = Complex::new(f)?;
    let (n, d) = (cx.n, cx.d as i64);
    // A^p = ker(df∧ on Ω^p_d); rank of d restricted to A^p equals
    // rank [df∧; d] - rank df∧.
    let mut a_dim = vec![0i64; n + 2];
    let mut d_rank = vec![0i64; n + 2];
    let mut tag = Certification::Certified;
    for p in 0..=n {
        let w = cx.wedge_df(p, d)?;
        let rw = rank(&w, policy)?;
        a_dim[p] = form_dim(n, p, d) as i64 - rw.rank as i64;
        tag = tag.and(rw.tag);
        if p < n {
            let dm = cx.d(p, d)?;
            let st = rank(&w.stack_rows(&dm), policy)?;
            tag = tag.and(st.tag);
            d_rank[p] = st.rank as i64 - rw.rank as i64;
        }
    }
    let dims = (0..=n)
        .map(|j| a_dim[j] - d_rank[j] - if j > 0 { d_rank[j - 1] } else { 0 })
        .collect();
    Ok(ComplementBetti { dims, as_complement_betti: hypotheses, tag })
}
