//! Pages of the filtered total complex computed straight from the
//! definition, with dense linear algebra modulo a large prime.
//!
//! For fixed residue of the degree modulo d, the total complex in form
//! degree j is ⊕_q Ω^j_{k0+qd} with D = d + df∧, filtered by p = j - q.
//! With x ∈ F^p whose top component has degree K,
//!
//!   E_r = Z_r / (Z_{r-1}^{p+1} + D Z_{r-1}^{p-r+1}),
//!
//! and every space involved is computed modulo F^{p+r}, which the
//! denominator contains.

use polespec::koszul::{d_matrix, wedge_df_matrix};
use polespec::exactla::SparseMatrix;
use polespec::polyring::{form_dim, HomogPoly};

const P: u64 = 2_147_483_647;

type Dense = Vec<Vec<u64>>;

fn red(v: i64) -> u64 {
    v.rem_euclid(P as i64) as u64
}

fn inv(a: u64) -> u64 {
    let (mut r, mut b, mut e) = (1u64, a % P, P - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % P;
        }
        b = b * b % P;
        e >>= 1;
    }
    r
}

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(m: &mut Dense, ncols: usize) -> Vec<usize> {
    let mut piv = Vec::new();
    let mut row = 0;
    for c in 0..ncols {
        let Some(s) = (row..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(row, s);
        let iv = inv(m[row][c]);
        for x in m[row].iter_mut() {
            *x = *x * iv % P;
        }
        let pivot = m[row].clone();
        for (i, r) in m.iter_mut().enumerate() {
            if i != row && r[c] != 0 {
                let f = r[c];
                for (x, &y) in r.iter_mut().zip(&pivot) {
                    *x = (*x + P - f * y % P) % P;
                }
            }
        }
        piv.push(c);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    piv
}

fn rank(vectors: &[Vec<u64>], len: usize) -> usize {
    let mut m = vectors.to_vec();
    rref(&mut m, len).len()
}

/// Basis of the kernel of a `rows × ncols` matrix.
fn kernel(rows: &Dense, ncols: usize) -> Dense {
    let mut m = rows.clone();
    let piv = rref(&mut m, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !piv.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![0u64; ncols];
            v[fc] = 1;
            for (i, &pc) in piv.iter().enumerate() {
                v[pc] = (P - m[i][fc]) % P;
            }
            v
        })
        .collect()
}

/// A block matrix under construction: row and column blocks of given sizes.
struct Blocks {
    row_off: Vec<usize>,
    col_off: Vec<usize>,
    m: Dense,
}

impl Blocks {
    fn new(rows: &[usize], cols: &[usize]) -> Self {
        let off = |v: &[usize]| {
            let mut o = vec![0];
            for &x in v {
                o.push(o.last().unwrap() + x);
            }
            o
        };
        let (row_off, col_off) = (off(rows), off(cols));
        let m = vec![vec![0u64; *col_off.last().unwrap()]; *row_off.last().unwrap()];
        Blocks { row_off, col_off, m }
    }

    fn ncols(&self) -> usize {
        *self.col_off.last().unwrap()
    }

    fn put(&mut self, rb: usize, cb: usize, s: &SparseMatrix) {
        for (r, c, v) in s.triplets() {
            let x = &mut self.m[self.row_off[rb] + r][self.col_off[cb] + c];
            *x = (*x + red(v)) % P;
        }
    }
}

fn wedge(f: &HomogPoly, p: usize, k: i64) -> Option<SparseMatrix> {
    (p < f.n && form_dim(f.n, p, k) > 0).then(|| wedge_df_matrix(f, p, k).unwrap())
}

fn dee(n: usize, p: usize, k: i64) -> Option<SparseMatrix> {
    (p < n && form_dim(n, p, k) > 0).then(|| d_matrix(n, p, k).unwrap())
}

/// dim E_r in form degree `j`, for the filtration step whose top
/// component lives in Ω^j_K.
pub fn page_dim(f: &HomogPoly, j: usize, big_k: i64, r: usize) -> usize {
    let (n, d) = (f.n, f.d as i64);
    assert!(r >= 1);
    // x_m ∈ Ω^j_{K-md}, m = 0..r
    let xdims: Vec<usize> = (0..r).map(|m| form_dim(n, j, big_k - m as i64 * d)).collect();
    let xlen: usize = xdims.iter().sum();
    if xdims[0] == 0 {
        return 0;
    }
    // Dx component m' ∈ Ω^{j+1}_{K+d-m'd} is df∧x_{m'} + d x_{m'-1}
    let cdims: Vec<usize> = (0..r).map(|m| if j < n { form_dim(n, j + 1, big_k + d - m as i64 * d) } else { 0 }).collect();
    let mut cons = Blocks::new(&cdims, &xdims);
    for m in 0..r {
        let km = big_k - m as i64 * d;
        if let Some(w) = wedge(f, j, km) {
            if cdims[m] > 0 {
                cons.put(m, m, &w);
            }
        }
        if m >= 1 && cdims[m] > 0 {
            if let Some(dm) = dee(n, j, km + d) {
                cons.put(m, m - 1, &dm);
            }
        }
    }
    let z = kernel(&cons.m, xlen);
    // Z_{r-1}^{p+1}: the same constraints with x_0 = 0
    let mut with_top = cons.m.clone();
    for i in 0..xdims[0] {
        let mut e = vec![0u64; xlen];
        e[i] = 1;
        with_top.push(e);
    }
    let mut den = kernel(&with_top, xlen);
    // D Z_{r-1}^{p-r+1}: y_t ∈ Ω^{j-1}_{K+td}, t ∈ [-r, r-2]
    if j >= 1 {
        let ts: Vec<i64> = (-(r as i64)..=r as i64 - 2).collect();
        let ydims: Vec<usize> = ts.iter().map(|&t| form_dim(n, j - 1, big_k + t * d)).collect();
        let ylen: usize = ydims.iter().sum();
        if ylen > 0 {
            // components t ∈ [1, r-1] of Dy vanish; component t is df∧y_{t-1} + d y_t
            let hi: Vec<i64> = (1..r as i64).collect();
            let hdims: Vec<usize> = hi.iter().map(|&t| form_dim(n, j, big_k + t * d)).collect();
            let mut yc = Blocks::new(&hdims, &ydims);
            let mut img = Blocks::new(&xdims, &ydims);
            let yb = |t: i64| (t + r as i64) as usize;
            for (row, &t) in hi.iter().enumerate() {
                if hdims[row] == 0 {
                    continue;
                }
                if let Some(w) = wedge(f, j - 1, big_k + (t - 1) * d) {
                    yc.put(row, yb(t - 1), &w);
                }
                if t <= r as i64 - 2 {
                    if let Some(dm) = dee(n, j - 1, big_k + t * d) {
                        yc.put(row, yb(t), &dm);
                    }
                }
            }
            for m in 0..r {
                let t = -(m as i64);
                if xdims[m] == 0 {
                    continue;
                }
                if let Some(w) = wedge(f, j - 1, big_k + (t - 1) * d) {
                    img.put(m, yb(t - 1), &w);
                }
                if t <= r as i64 - 2 {
                    if let Some(dm) = dee(n, j - 1, big_k + t * d) {
                        img.put(m, yb(t), &dm);
                    }
                }
            }
            let ker = kernel(&yc.m, yc.ncols());
            for v in ker {
                let w: Vec<u64> = img
                    .m
                    .iter()
                    .map(|row| row.iter().zip(&v).fold(0u64, |acc, (&a, &b)| (acc + a * b % P) % P))
                    .collect();
                den.push(w);
            }
        }
    }
    z.len() - rank(&den, xlen)
}

/// μ^(r)_k, ν^(r)_k, ρ^(r)_k from the definition.
pub fn page_entry(f: &HomogPoly, which: polespec::pages::Which, r: usize, k: i64) -> usize {
    use polespec::pages::Which;
    let (n, d) = (f.n, f.d as i64);
    match which {
        Which::M => page_dim(f, n, k, r),
        Which::N => page_dim(f, n - 1, k - d, r),
        Which::Q => page_dim(f, n - 2, k - 2 * d, r),
    }
}
