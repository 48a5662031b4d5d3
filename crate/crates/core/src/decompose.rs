//! Decomposition of M, N, Q by the codimension of support: the part
//! supported at the origin (′), the part supported on the singular curve
//! modulo it (″), and the rest (‴), with the max/def split of the last.
//!
//! Saturations are computed degree by degree as iterated annihilators over
//! F_p, never through Gröbner bases.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactla::{select_primes, Certification, DenseModMatrix, ModEchelon, RankPolicy};
use crate::koszul::{Complex, E1Table};
use crate::pages::Which;
use crate::polyring::{parse_expression, FormSpace, HomogPoly};
use crate::series::{reciprocal, LaurentPoly};

/// A homogeneous ideal generator with coprime integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub degree: u32,
    pub terms: Vec<(Vec<u32>, i64)>,
}

impl Generator {
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Generator { degree: 1, terms: vec![(e, 1)] }
    }
}

/// The variables, generating the graded maximal ideal.
pub fn maximal_ideal(n: usize) -> Vec<Generator> {
    (0..n).map(|i| Generator::var(n, i)).collect()
}

/// Parse ideal generators written in the polynomial grammar.
pub fn parse_generators<S: AsRef<str>>(texts: &[S], n: usize) -> Result<Vec<Generator>> {
    if texts.is_empty() {
        return Err(Error::InvalidE("no generators".into()));
    }
    texts
        .iter()
        .map(|t| {
            let p = parse_expression(t.as_ref(), n)?;
            let mut degs = p.terms.keys().map(|m| m.degree());
            let degree = degs.next().ok_or_else(|| Error::InvalidE(format!("zero generator '{}'", t.as_ref())))?;
            if degs.any(|e| e != degree) {
                return Err(Error::InvalidE(format!("generator '{}' is not homogeneous", t.as_ref())));
            }
            if degree == 0 {
                return Err(Error::InvalidE(format!("generator '{}' is a unit", t.as_ref())));
            }
            let mut l = BigInt::one();
            for c in p.terms.values() {
                l = l.lcm(c.denom());
            }
            let ints: Vec<BigInt> = p.terms.values().map(|c| (c * &l).to_integer()).collect();
            let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
            let terms = p
                .terms
                .keys()
                .zip(ints)
                .map(|(m, c)| {
                    let v = (c / &g).to_i64().ok_or(Error::Overflow("clearing denominators"))?;
                    Ok((m.exps.clone(), v))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Generator { degree, terms })
        })
        .collect()
}

/// One graded piece, held as a quotient K/I inside an ambient form space:
/// I is the image of `df∧`, K its kernel (everything for M). Coordinates of
/// a class are read off its canonical residue modulo I.
struct Piece {
    amb: FormSpace,
    decode: Vec<(u8, Vec<u32>)>,
    image: ModEchelon,
    coord_pos: Vec<usize>,
    basis: Vec<Vec<(u32, u64)>>,
}

fn form_degrees(which: Which, n: usize, d: i64, k: i64) -> (usize, i64) {
    match which {
        Which::M => (n, k),
        Which::N => (n - 1, k - d),
        Which::Q => (n - 2, k - 2 * d),
    }
}

fn build_piece(cx: &Complex, which: Which, k: i64, p: u64) -> Result<Piece> {
    let (n, d) = (cx.n, cx.d as i64);
    let (deg, q) = form_degrees(which, n, d, k);
    let amb = FormSpace::new(n, deg, q);
    let dim = amb.dim();
    let decode = amb
        .basis()
        .into_iter()
        .map(|b| (b.subset.iter().fold(0u8, |m, &i| m | (1 << i)), b.monomial.exps))
        .collect();
    let mut image = ModEchelon::new(dim, p);
    if deg >= 1 && q - d >= deg as i64 - 1 {
        let im = cx.wedge_df(deg - 1, q - d)?;
        for c in 0..im.ncols {
            image.insert(im.col(c));
        }
    }
    let (coord_pos, basis) = if deg == n {
        let pos: Vec<usize> = (0..dim).filter(|&r| !image.is_pivot(r)).collect();
        let basis = pos.iter().map(|&r| vec![(r as u32, 1u64)]).collect();
        (pos, basis)
    } else {
        let w = cx.wedge_df(deg, q)?;
        let mut dm = DenseModMatrix::zeros(w.nrows, dim, p);
        for (r, c, v) in w.triplets() {
            dm.set(r, c, v.rem_euclid(p as i64) as u64);
        }
        let ker = dm.nullspace();
        let mut res = DenseModMatrix::zeros(ker.len(), dim, p);
        for (i, mut v) in ker.into_iter().enumerate() {
            image.reduce_dense(&mut v);
            res.data[i * dim..(i + 1) * dim].copy_from_slice(&v);
        }
        let piv = res.rref();
        let basis = (0..piv.len())
            .map(|i| res.row(i).iter().enumerate().filter(|e| *e.1 != 0).map(|(c, &x)| (c as u32, x)).collect())
            .collect();
        (piv, basis)
    };
    Ok(Piece { amb, decode, image, coord_pos, basis })
}

/// M, N or Q over F_p, built lazily degree by degree.
pub struct GradedModule {
    pub which: Which,
    pub n: usize,
    pub d: u32,
    pub prime: u64,
    cx: Complex,
    pieces: BTreeMap<i64, Piece>,
}

impl GradedModule {
    pub fn new(f: &HomogPoly, which: Which, prime: u64) -> Result<Self> {
        let cx = Complex::new(f)?;
        Ok(GradedModule { which, n: cx.n, d: cx.d, prime, cx, pieces: BTreeMap::new() })
    }

    /// Build every missing piece with degree in `lo..=hi`.
    pub fn ensure(&mut self, lo: i64, hi: i64) -> Result<()> {
        let missing: Vec<i64> = (lo.max(0)..=hi).filter(|k| !self.pieces.contains_key(k)).collect();
        let built: Vec<(i64, Piece)> = missing
            .into_par_iter()
            .map(|k| Ok((k, build_piece(&self.cx, self.which, k, self.prime)?)))
            .collect::<Result<_>>()?;
        self.pieces.extend(built);
        Ok(())
    }

    pub fn dim(&self, k: i64) -> usize {
        self.pieces.get(&k).map_or(0, |p| p.basis.len())
    }

    /// Coset representatives in degree `k`, in ambient coordinates.
    pub fn basis(&self, k: i64) -> &[Vec<(u32, u64)>] {
        self.pieces.get(&k).map_or(&[], |p| &p.basis)
    }

    /// Coordinates of `g` times basis element `col` of degree `k`.
    fn image_of(&self, g: &Generator, k: i64, col: usize) -> Vec<u64> {
        let p = self.prime;
        let src = &self.pieces[&k];
        let Some(tgt) = self.pieces.get(&(k + g.degree as i64)) else { return Vec::new() };
        if tgt.basis.is_empty() {
            return Vec::new();
        }
        let mut acc = vec![0u64; tgt.amb.dim()];
        let mut e = vec![0u32; self.n];
        for &(idx, val) in &src.basis[col] {
            let (mask, a) = &src.decode[idx as usize];
            for (b, c) in &g.terms {
                for i in 0..self.n {
                    e[i] = a[i] + b[i];
                }
                let ti = tgt.amb.index(*mask, &e);
                let c = c.rem_euclid(p as i64) as u64;
                acc[ti] = (acc[ti] + val * c % p) % p;
            }
        }
        tgt.image.reduce_dense(&mut acc);
        tgt.coord_pos.iter().map(|&i| acc[i]).collect()
    }

    /// Matrix of multiplication by `g` from degree `k`, as dense columns.
    pub fn multiply(&self, g: &Generator, k: i64) -> Vec<Vec<u64>> {
        let rows = self.dim(k + g.degree as i64);
        (0..self.dim(k)).map(|c| if rows == 0 { Vec::new() } else { self.image_of(g, k, c) }).collect()
    }
}

/// A graded piece with the multiplication maps by the variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedModulePiece {
    pub which: Which,
    pub k: i64,
    pub prime: u64,
    pub dim: usize,
    /// Coset representatives in the ambient form space.
    pub basis: Vec<Vec<(u32, u64)>>,
    /// `mult[i]` is multiplication by `x_i` into degree `k + 1`.
    pub mult: Vec<DenseModMatrix>,
}

fn columns_to_matrix(cols: &[Vec<u64>], rows: usize, p: u64) -> DenseModMatrix {
    let mut m = DenseModMatrix::zeros(rows, cols.len(), p);
    for (c, col) in cols.iter().enumerate() {
        for (r, &x) in col.iter().enumerate() {
            m.data[r * cols.len() + c] = x;
        }
    }
    m
}

pub fn graded_piece(f: &HomogPoly, which: Which, k: i64, policy: &RankPolicy) -> Result<GradedModulePiece> {
    let prime = select_primes(policy, 1)?[0];
    let mut m = GradedModule::new(f, which, prime)?;
    m.ensure(k, k + 1)?;
    let rows = m.dim(k + 1);
    let mult = (0..m.n).map(|i| columns_to_matrix(&m.multiply(&Generator::var(m.n, i), k), rows, prime)).collect();
    Ok(GradedModulePiece { which, k, prime, dim: m.dim(k), basis: m.basis(k).to_vec(), mult })
}

/// Sub-space of one graded piece, in piece coordinates.
#[derive(Clone)]
struct Level {
    ech: ModEchelon,
    basis: Vec<Vec<u64>>,
}

impl Level {
    fn empty(dim: usize, p: u64) -> Self {
        Level { ech: ModEchelon::new(dim, p), basis: Vec::new() }
    }
}

struct SatRun {
    levels: usize,
    spaces: BTreeMap<i64, Level>,
}

fn saturate_run(module: &mut GradedModule, gens: &[Generator], k_lo: i64, k_hi: i64, n_max: usize) -> Result<SatRun> {
    let p = module.prime;
    let e_max = gens.iter().map(|g| g.degree as i64).max().unwrap_or(1);
    let mut margin = 2 * e_max;
    loop {
        let top = k_hi + margin;
        module.ensure(k_lo, top)?;
        let m = &*module;
        let maps: Vec<BTreeMap<i64, Vec<Vec<u64>>>> = gens
            .iter()
            .map(|g| {
                (k_lo..=top - g.degree as i64).into_par_iter().map(|k| (k, m.multiply(g, k))).collect()
            })
            .collect();
        let mut prev: BTreeMap<i64, Level> = (k_lo..=top).map(|k| (k, Level::empty(m.dim(k), p))).collect();
        let mut short = false;
        for t in 1..=n_max {
            let hi_t = top - t as i64 * e_max;
            if hi_t < k_hi {
                short = true;
                break;
            }
            let cur: BTreeMap<i64, Level> = (k_lo..=hi_t)
                .into_par_iter()
                .map(|k| {
                    let dim = m.dim(k);
                    let mut blocks: Vec<Vec<Vec<u64>>> = Vec::new();
                    let mut rows = 0;
                    for (j, g) in gens.iter().enumerate() {
                        let kk = k + g.degree as i64;
                        let cols = &maps[j][&k];
                        let lv = &prev[&kk];
                        let red: Vec<Vec<u64>> = cols
                            .iter()
                            .map(|c| {
                                let mut v = c.clone();
                                if !v.is_empty() {
                                    lv.ech.reduce_dense(&mut v);
                                }
                                v
                            })
                            .collect();
                        rows += m.dim(kk);
                        blocks.push(red);
                    }
                    let mut a = DenseModMatrix::zeros(rows, dim, p);
                    let mut r0 = 0;
                    for (j, g) in gens.iter().enumerate() {
                        let h = m.dim(k + g.degree as i64);
                        for (c, col) in blocks[j].iter().enumerate() {
                            for (r, &x) in col.iter().enumerate() {
                                a.data[(r0 + r) * dim + c] = x;
                            }
                        }
                        r0 += h;
                    }
                    let basis = if rows == 0 {
                        (0..dim)
                            .map(|i| {
                                let mut v = vec![0; dim];
                                v[i] = 1;
                                v
                            })
                            .collect()
                    } else {
                        a.nullspace()
                    };
                    let mut ech = ModEchelon::new(dim, p);
                    for v in &basis {
                        ech.insert_dense(v);
                    }
                    (k, Level { ech, basis })
                })
                .collect();
            let stable = (k_lo..=hi_t).all(|k| cur[&k].basis.len() == prev[&k].basis.len());
            if stable {
                let spaces = cur.into_iter().filter(|(k, _)| *k <= k_hi).collect();
                return Ok(SatRun { levels: t - 1, spaces });
            }
            prev = cur;
        }
        if !short {
            return Err(Error::NoStabilization(n_max));
        }
        margin *= 2;
    }
}

/// Degreewise dimensions of the elements killed by a power of an ideal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Saturation {
    pub which: Which,
    pub k_lo: i64,
    pub k_hi: i64,
    /// `dims[k - k_lo]`.
    pub dims: Vec<i64>,
    /// Annihilator levels needed before two consecutive levels agreed.
    pub levels: usize,
    pub tag: Certification,
}

impl Saturation {
    pub fn series(&self) -> LaurentPoly {
        LaurentPoly::from_slice(self.k_lo, &self.dims)
    }
}

/// H⁰ of the ideal generated by `gens` on the pieces `k_lo..=k_hi` of an
/// already created module.
pub fn saturate(module: &mut GradedModule, gens: &[Generator], k_lo: i64, k_hi: i64, n_max: usize) -> Result<Saturation> {
    let run = saturate_run(module, gens, k_lo, k_hi, n_max)?;
    Ok(Saturation {
        which: module.which,
        k_lo,
        k_hi,
        dims: (k_lo..=k_hi).map(|k| run.spaces[&k].basis.len() as i64).collect(),
        levels: run.levels,
        tag: Certification::Certified,
    })
}

/// Saturation over two primes (more on disagreement), for `k` in
/// `k_lo..=k_hi`, with at most `n_max` annihilator levels.
pub fn truncated_saturation(
    f: &HomogPoly,
    which: Which,
    gens: &[Generator],
    k_lo: i64,
    k_hi: i64,
    n_max: usize,
    policy: &RankPolicy,
) -> Result<Saturation> {
    by_primes(policy, |p| {
        let mut m = GradedModule::new(f, which, p)?;
        saturate(&mut m, gens, k_lo, k_hi, n_max)
    })
}

/// Run a modular computation over two primes; a third decides a split.
fn by_primes<T: PartialEq + Clone + Send, F: Fn(u64) -> Result<T> + Sync>(policy: &RankPolicy, run: F) -> Result<T> {
    let primes = select_primes(policy, 3)?;
    let a = run(primes[0])?;
    let b = run(primes[1])?;
    if a == b {
        return Ok(a);
    }
    let c = run(primes[2])?;
    if c == a || c == b {
        return Ok(c);
    }
    Err(Error::Inconsistent("three primes gave three different saturations".into()))
}

/// The ′/″/‴ split of one module on `0..=k_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub which: Which,
    pub k_max: i64,
    pub total: LaurentPoly,
    /// Supported at the origin.
    pub prime: LaurentPoly,
    /// Supported on the curve, modulo the origin.
    pub second: LaurentPoly,
    pub third: LaurentPoly,
    pub third_max: Option<LaurentPoly>,
    pub third_def: Option<LaurentPoly>,
    /// Diff of the ″ part: the ″ part is this times p^(1).
    pub second_gen: LaurentPoly,
    /// Diff² of the ‴_max part, once the split is known.
    pub third_gen: Option<LaurentPoly>,
    pub rank2: i64,
    pub rank3: i64,
    /// Shifts a″_i, with multiplicity.
    pub offsets2: Vec<i64>,
    /// Shifts a‴_j, with multiplicity.
    pub offsets3: Vec<i64>,
    pub levels: (usize, usize),
    pub tag: Certification,
}

fn offsets(gen: &LaurentPoly) -> Vec<i64> {
    if !gen.all_nonnegative() {
        return Vec::new();
    }
    gen.terms().flat_map(|(e, c)| std::iter::repeat(e).take(c as usize)).collect()
}

#[derive(Clone, PartialEq)]
struct RawSplit {
    total: Vec<i64>,
    origin: Vec<i64>,
    curve: Vec<i64>,
    levels: (usize, usize),
}

fn split_one_prime(f: &HomogPoly, which: Which, gens: &[Generator], k_max: i64, n_max: usize, p: u64) -> Result<RawSplit> {
    let mut m = GradedModule::new(f, which, p)?;
    let rm = saturate_run(&mut m, &maximal_ideal(f.n), 0, k_max, n_max)?;
    let re = saturate_run(&mut m, gens, 0, k_max, n_max)?;
    for k in 0..=k_max {
        let big = &re.spaces[&k];
        let ech = &big.ech;
        for v in &rm.spaces[&k].basis {
            let mut w = v.clone();
            ech.reduce_dense(&mut w);
            if w.iter().any(|&x| x != 0) {
                return Err(Error::InvalidE(format!(
                    "an element of degree {k} killed by a power of the maximal ideal is not killed by a power of E"
                )));
            }
        }
    }
    Ok(RawSplit {
        total: (0..=k_max).map(|k| m.dim(k) as i64).collect(),
        origin: (0..=k_max).map(|k| rm.spaces[&k].basis.len() as i64).collect(),
        curve: (0..=k_max).map(|k| re.spaces[&k].basis.len() as i64).collect(),
        levels: (rm.levels, re.levels),
    })
}

/// Split `which` into its ′, ″, ‴ parts on `0..=k_max`, given generators
/// of an ideal E cutting out the singular points of the singular locus.
/// At most `2d` annihilator levels are tried.
pub fn decompose_module(f: &HomogPoly, which: Which, e_gens: &[Generator], k_max: i64, policy: &RankPolicy) -> Result<Decomposition> {
    let n_max = 2 * f.d as usize;
    let raw = by_primes(policy, |p| split_one_prime(f, which, e_gens, k_max, n_max, p))?;
    let total = LaurentPoly::from_slice(0, &raw.total);
    let prime = LaurentPoly::from_slice(0, &raw.origin);
    let sat_e = LaurentPoly::from_slice(0, &raw.curve);
    let second = sat_e.sub(&prime);
    let third = total.sub(&sat_e);
    let second_gen = second.diff_pow(1).truncate(k_max);
    let rank2 = second.coeff(k_max);
    let rank3 = third.coeff(k_max) - third.coeff(k_max - 1);
    Ok(Decomposition {
        which,
        k_max,
        offsets2: offsets(&second_gen),
        total,
        prime,
        second,
        third,
        third_max: None,
        third_def: None,
        second_gen,
        third_gen: None,
        rank2,
        rank3,
        offsets3: Vec::new(),
        levels: raw.levels,
        tag: Certification::Certified,
    })
}

/// The ‴_max series and its defect.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxDef {
    pub max: LaurentPoly,
    pub def: LaurentPoly,
    /// Diff² of `max`.
    pub gen: LaurentPoly,
}

/// Recover μ‴_max from ρ, whose second difference is that of μ‴_max read
/// backwards from `nd + 2`, and the defect μ‴_max - μ‴. `mu3` is known on
/// `..=k_max`, `rho` on `..=rho_known_to`; the second difference of ρ must
/// already have ended there.
pub fn split_max_def(mu3: &LaurentPoly, k_max: i64, rho: &LaurentPoly, rho_known_to: i64, n: usize, d: u32) -> Result<MaxDef> {
    let g = rho.truncate(rho_known_to).diff_pow(2).truncate(rho_known_to);
    if g.coeff(rho_known_to) != 0 || g.coeff(rho_known_to - 1) != 0 {
        return Err(Error::TailNotCancelled(format!(
            "second difference of rho still nonzero at k = {rho_known_to}; extend the table"
        )));
    }
    let nd2 = (n as i64) * d as i64 + 2;
    let gen = reciprocal(&g, nd2).truncate(k_max);
    let max = gen.integrate(2, k_max);
    let def = max.sub(&mu3.truncate(k_max));
    if let Some((k, _)) = def.terms().find(|t| t.1 < 0) {
        return Err(Error::NegativeDef(k));
    }
    Ok(MaxDef { max, def, gen })
}

/// One admissible choice for ν‴_max and ν‴_def. The unknown rank of the
/// connecting map is encoded by `s_k = μ′_k - ν‴_def,nd-k`, symmetric
/// under `k -> nd - k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NuCandidate {
    pub s: LaurentPoly,
    pub max: LaurentPoly,
    pub def: LaurentPoly,
    /// Diff² of `max`.
    pub gen: LaurentPoly,
}

/// Every symmetric `s` with `0 <= s_k <= min(μ′_k, μ′_{nd-k})` whose
/// ν‴_max has a nonnegative second difference symmetric about `(nd+2)/2`.
/// Returns the survivors and the number of choices tried.
pub fn nu_third_candidates(mu_prime: &LaurentPoly, nu_third: &LaurentPoly, k_max: i64, n: usize, d: u32) -> (Vec<NuCandidate>, usize) {
    let nd = n as i64 * d as i64;
    let slots: Vec<(i64, i64)> = (0..=nd / 2)
        .map(|k| (k, mu_prime.coeff(k).min(mu_prime.coeff(nd - k))))
        .filter(|&(_, b)| b > 0)
        .collect();
    let mut out = Vec::new();
    let mut tried = 0;
    let mut choice = vec![0i64; slots.len()];
    loop {
        tried += 1;
        let mut s = LaurentPoly::zero();
        for (&(k, _), &c) in slots.iter().zip(&choice) {
            s.add_at(k, c);
            if nd - k != k {
                s.add_at(nd - k, c);
            }
        }
        let def = LaurentPoly::from_pairs(mu_prime.terms().map(|(e, c)| (nd - e, c))).sub(&s);
        let max = nu_third.add(&def).truncate(k_max);
        let gen = max.diff_pow(2).truncate(k_max);
        let lo = nd + 2 - k_max;
        let symmetric = gen.terms().all(|(e, c)| e >= lo && gen.coeff(nd + 2 - e) == c);
        if symmetric && gen.all_nonnegative() && def.all_nonnegative() {
            out.push(NuCandidate { s, max, def, gen });
        }
        // next choice in mixed radix
        let mut i = 0;
        loop {
            if i == choice.len() {
                return (out, tried);
            }
            if choice[i] < slots[i].1 {
                choice[i] += 1;
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Decompositions of M, N, Q together: M computed, N derived by duality,
/// Q pure by construction. Direct computations of N and Q can be attached
/// for cross-checking.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub n: usize,
    pub d: u32,
    pub k_max: i64,
    pub m: Decomposition,
    pub nu: LaurentPoly,
    pub nu_prime: LaurentPoly,
    pub nu_second: LaurentPoly,
    pub nu_third: LaurentPoly,
    /// True when μ′_k μ′_{nd-k} = 0 for all k, so that ν‴ is determined.
    pub nu_unique: bool,
    pub nu_candidates: Vec<NuCandidate>,
    pub nu_choices_tried: usize,
    pub rho: LaurentPoly,
    pub rho_gen: LaurentPoly,
    pub nu_direct: Option<Decomposition>,
    pub rho_direct: Option<Decomposition>,
}

/// Full decomposition on `0..=k_max`. The E1 table must reach past the
/// support of the second difference of ρ.
pub fn decompose_all(f: &HomogPoly, e1: &E1Table, e_gens: &[Generator], k_max: i64, policy: &RankPolicy) -> Result<DecompositionReport> {
    let (n, d) = (f.n, f.d);
    if e1.k_max < k_max {
        return Err(Error::Unsupported(format!("E1 table ends at {} < {k_max}", e1.k_max)));
    }
    let mut m = decompose_module(f, Which::M, e_gens, k_max, policy)?;
    if m.total != e1.mu_series().truncate(k_max) {
        return Err(Error::Inconsistent("module dimensions disagree with the E1 table".into()));
    }
    let rho = e1.rho_series();
    let md = split_max_def(&m.third, k_max, &rho, e1.k_max, n, d)?;
    m.offsets3 = offsets(&md.gen);
    m.third_gen = Some(md.gen.clone());
    m.third_max = Some(md.max);
    m.third_def = Some(md.def.clone());
    let nd = n as i64 * d as i64;
    let nu_prime = reciprocal(&md.def, nd).truncate(k_max);
    let nu_second = reciprocal(&m.second_gen, nd + 1).integrate(1, k_max);
    let nu = e1.nu_series().truncate(k_max);
    let nu_third = nu.sub(&nu_prime).sub(&nu_second);
    if let Some((k, _)) = nu_third.terms().find(|t| t.1 < 0) {
        return Err(Error::Inconsistent(format!("derived ν‴ is negative at k = {k}")));
    }
    let nu_unique = (0..=nd).all(|k| m.prime.coeff(k) * m.prime.coeff(nd - k) == 0);
    let (nu_candidates, nu_choices_tried) = nu_third_candidates(&m.prime, &nu_third, k_max, n, d);
    let rho_gen = rho.diff_pow(2).truncate(e1.k_max);
    Ok(DecompositionReport {
        n,
        d,
        k_max,
        m,
        nu,
        nu_prime,
        nu_second,
        nu_third,
        nu_unique,
        nu_candidates,
        nu_choices_tried,
        rho: rho.truncate(k_max),
        rho_gen,
        nu_direct: None,
        rho_direct: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "detail")]
pub enum CheckStatus {
    Holds,
    Fails(String),
    NotApplicable(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualityCheck {
    pub name: &'static str,
    pub status: CheckStatus,
}

fn status(ok: bool, why: impl FnOnce() -> String) -> CheckStatus {
    if ok {
        CheckStatus::Holds
    } else {
        CheckStatus::Fails(why())
    }
}

/// The duality identities between the parts of M, N, Q.
pub fn duality_check_suite(rep: &DecompositionReport) -> Vec<DualityCheck> {
    let nd = rep.n as i64 * rep.d as i64;
    let k_max = rep.k_max;
    let mut out = Vec::new();

    // μ‴_max against ρ, read backwards, plus a finite nonnegative defect
    let st = match (&rep.m.third_max, &rep.m.third_def) {
        (Some(max), Some(def)) => {
            let back = max.diff_pow(2).truncate(k_max);
            let want = reciprocal(&rep.rho_gen, nd + 2).truncate(k_max);
            let finite = def.degree().map_or(true, |e| e < k_max);
            status(back == want && def.all_nonnegative() && finite, || {
                format!("Diff² μ‴_max = {back}, reversed Diff² ρ = {want}, defect {def}")
            })
        }
        _ => CheckStatus::NotApplicable("max/def split not computed".into()),
    };
    out.push(DualityCheck { name: "mu-max-vs-rho", status: st });

    let st = if rep.nu_candidates.is_empty() {
        CheckStatus::Fails(format!("none of {} choices gives a symmetric ν‴_max", rep.nu_choices_tried))
    } else {
        CheckStatus::Holds
    };
    out.push(DualityCheck { name: "nu-max-symmetry", status: st });

    let st = match &rep.nu_direct {
        Some(nd_) => {
            let a = rep.m.second_gen.truncate(k_max);
            let b = reciprocal(&nd_.second_gen, nd + 1).truncate(k_max).window(nd + 1 - k_max, k_max);
            status(a.window(nd + 1 - k_max, k_max) == b, || format!("Diff μ″ = {a}, reversed Diff ν″ = {b}"))
        }
        None => CheckStatus::NotApplicable("ν″ derived from μ″".into()),
    };
    out.push(DualityCheck { name: "second-parts", status: st });

    let st = match (&rep.nu_direct, &rep.m.third_def) {
        (Some(nd_), Some(def)) => {
            let b = reciprocal(&nd_.prime, nd).window(nd - k_max, k_max);
            let a = def.window(nd - k_max, k_max);
            status(a == b, || format!("μ‴_def = {a}, reversed ν′ = {b}"))
        }
        (None, _) => CheckStatus::NotApplicable("ν′ derived from μ‴_def".into()),
        _ => CheckStatus::NotApplicable("max/def split not computed".into()),
    };
    out.push(DualityCheck { name: "def-vs-prime", status: st });

    // μ′_k - ν‴_def,nd-k = μ′_nd-k - ν‴_def,k >= 0, for every candidate
    let mp = &rep.m.prime;
    let bad = rep.nu_candidates.iter().find(|c| {
        (0..=nd).any(|k| {
            let l = mp.coeff(k) - c.def.coeff(nd - k);
            let r = mp.coeff(nd - k) - c.def.coeff(k);
            l != r || l < 0
        })
    });
    let st = if rep.nu_candidates.is_empty() {
        CheckStatus::NotApplicable("no ν‴ candidate".into())
    } else {
        status(bad.is_none(), || format!("candidate with s = {}", bad.unwrap().s))
    };
    out.push(DualityCheck { name: "prime-def-balance", status: st });

    let gen_ok = rep.rho_gen.all_nonnegative();
    let st = match &rep.rho_direct {
        Some(q) => status(q.prime.is_zero() && q.second.is_zero() && gen_ok, || {
            format!("ρ′ = {}, ρ″ = {}, Diff² ρ = {}", q.prime, q.second, rep.rho_gen)
        }),
        None if !gen_ok => CheckStatus::Fails(format!("Diff² ρ = {} has a negative coefficient", rep.rho_gen)),
        None => CheckStatus::NotApplicable("only the p^(2) shape of ρ was checked; Q not decomposed".into()),
    };
    out.push(DualityCheck { name: "rho-pure", status: st });
    out
}

/// ρ and ν from μ alone for a strongly free divisor: Diff²ρ is Diff²μ
/// read backwards from `nd + 2`, and ν = μ + ρ - γ. `mu` is known on
/// `..=known_to`, which must lie past the support of Diff²μ.
pub fn strongly_free_shortcut(mu: &LaurentPoly, known_to: i64, gamma: &LaurentPoly, n: usize, d: u32) -> Result<(LaurentPoly, LaurentPoly)> {
    let g = mu.truncate(known_to).diff_pow(2).truncate(known_to);
    if let Some((k, c)) = g.terms().find(|t| t.1 < 0) {
        return Err(Error::NotStronglyFreeEvidence(format!("Diff² μ has coefficient {c} at v^{k}")));
    }
    let tail = (known_to - d as i64 + 1..=known_to).find(|&k| g.coeff(k) != 0);
    if let Some(k) = tail {
        return Err(Error::TailNotCancelled(format!("Diff² μ nonzero at v^{k}; extend the table")));
    }
    let nd2 = n as i64 * d as i64 + 2;
    let rho = reciprocal(&g, nd2).integrate(2, known_to);
    let nu = mu.truncate(known_to).add(&rho).sub(&gamma.truncate(known_to));
    if let Some((k, _)) = nu.terms().find(|t| t.1 < 0) {
        return Err(Error::NotStronglyFreeEvidence(format!("derived ν negative at k = {k}")));
    }
    Ok((rho, nu))
}
