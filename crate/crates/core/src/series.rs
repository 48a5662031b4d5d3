//! Finitely supported integer series in one variable `v`, and the Euler
//! series built from the E1 data.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyring::binom;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, i64>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly::default()
    }

    pub fn monomial(e: i64, c: i64) -> Self {
        let mut s = LaurentPoly::zero();
        s.set(e, c);
        s
    }

    pub fn from_pairs<I: IntoIterator<Item = (i64, i64)>>(it: I) -> Self {
        let mut s = LaurentPoly::zero();
        for (e, c) in it {
            s.add_at(e, c);
        }
        s
    }

    /// Coefficients `cs[i]` at exponent `lo + i`.
    pub fn from_slice(lo: i64, cs: &[i64]) -> Self {
        LaurentPoly::from_pairs(cs.iter().enumerate().map(|(i, &c)| (lo + i as i64, c)))
    }

    pub fn coeff(&self, e: i64) -> i64 {
        self.coeffs.get(&e).copied().unwrap_or(0)
    }

    pub fn set(&mut self, e: i64, c: i64) {
        if c == 0 {
            self.coeffs.remove(&e);
        } else {
            self.coeffs.insert(e, c);
        }
    }

    pub fn add_at(&mut self, e: i64, c: i64) {
        let v = self.coeff(e) + c;
        self.set(e, v);
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.coeffs.iter().map(|(&e, &c)| (e, c))
    }

    /// Highest exponent with a nonzero coefficient.
    pub fn degree(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn low_degree(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn add(&self, o: &LaurentPoly) -> LaurentPoly {
        let mut r = self.clone();
        for (e, c) in o.terms() {
            r.add_at(e, c);
        }
        r
    }

    pub fn sub(&self, o: &LaurentPoly) -> LaurentPoly {
        self.add(&o.scale(-1))
    }

    pub fn scale(&self, s: i64) -> LaurentPoly {
        LaurentPoly::from_pairs(self.terms().map(|(e, c)| (e, c * s)))
    }

    pub fn mul(&self, o: &LaurentPoly) -> LaurentPoly {
        let mut r = LaurentPoly::zero();
        for (e1, c1) in self.terms() {
            for (e2, c2) in o.terms() {
                r.add_at(e1 + e2, c1 * c2);
            }
        }
        r
    }

    pub fn pow(&self, k: u32) -> LaurentPoly {
        let mut r = LaurentPoly::monomial(0, 1);
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    /// Multiply by `v^s`.
    pub fn shift(&self, s: i64) -> LaurentPoly {
        LaurentPoly { coeffs: self.coeffs.iter().map(|(&e, &c)| (e + s, c)).collect() }
    }

    /// Substitute `v -> v^{-1}`.
    pub fn reverse(&self) -> LaurentPoly {
        LaurentPoly { coeffs: self.coeffs.iter().map(|(&e, &c)| (-e, c)).collect() }
    }

    /// Keep exponents `<= hi`.
    pub fn truncate(&self, hi: i64) -> LaurentPoly {
        LaurentPoly { coeffs: self.coeffs.range(..=hi).map(|(&e, &c)| (e, c)).collect() }
    }

    /// Keep exponents in `lo..=hi`.
    pub fn window(&self, lo: i64, hi: i64) -> LaurentPoly {
        if lo > hi {
            return LaurentPoly::zero();
        }
        LaurentPoly { coeffs: self.coeffs.range(lo..=hi).map(|(&e, &c)| (e, c)).collect() }
    }

    /// Multiply by `(1 - v)^m`.
    pub fn diff_pow(&self, m: u32) -> LaurentPoly {
        let mut r = self.clone();
        for _ in 0..m {
            r = r.sub(&r.shift(1));
        }
        r
    }

    /// Inverse of `diff_pow(m)` on series supported from some exponent on,
    /// truncated at `hi`: partial sums taken `m` times.
    pub fn integrate(&self, m: u32, hi: i64) -> LaurentPoly {
        let mut r = self.truncate(hi);
        for _ in 0..m {
            let Some(lo) = r.low_degree() else { return r };
            let mut acc = 0;
            let mut out = LaurentPoly::zero();
            for e in lo..=hi {
                acc += r.coeff(e);
                out.set(e, acc);
            }
            r = out;
        }
        r
    }

    /// Dense coefficients on `lo..=hi`.
    pub fn to_vec(&self, lo: i64, hi: i64) -> Vec<i64> {
        (lo..=hi).map(|e| self.coeff(e)).collect()
    }

    pub fn all_nonnegative(&self) -> bool {
        self.coeffs.values().all(|&c| c >= 0)
    }

    pub fn eval_at_one(&self) -> i64 {
        self.coeffs.values().sum()
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms().enumerate() {
            if c < 0 {
                write!(f, "-")?;
            } else if i > 0 {
                write!(f, "+")?;
            }
            let a = c.abs();
            match (a, e) {
                (_, 0) => write!(f, "{a}")?,
                (1, 1) => write!(f, "v")?,
                (1, _) => write!(f, "v^{e}")?,
                (_, 1) => write!(f, "{a}v")?,
                _ => write!(f, "{a}v^{e}")?,
            }
        }
        Ok(())
    }
}

/// The staircase `p^(m)_k = C(k+m-1, m-1)` for `k >= 0`, listed up to `hi`.
pub fn p_series(m: u32, hi: i64) -> LaurentPoly {
    if m == 0 {
        return LaurentPoly::monomial(0, 1);
    }
    LaurentPoly::from_pairs((0..=hi).map(|k| (k, binom(k + m as i64 - 1, m as i64 - 1) as i64)))
}

/// `(v + ... + v^{d-1})^n`, truncated at `hi`.
pub fn gamma_series(n: usize, d: u32, hi: i64) -> LaurentPoly {
    let base = LaurentPoly::from_pairs((1..d as i64).map(|e| (e, 1)));
    base.pow(n as u32).truncate(hi)
}

/// `((v^d - v)/(v - 1))^2 = (v + ... + v^{d-1})^2`, expanded directly.
pub fn gamma_prime(d: u32) -> LaurentPoly {
    gamma_series(2, d, i64::MAX)
}

/// The Euler series `μ - v^{-d}ν + v^{-2d}ρ` and the per-class sums.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChiSpectrum {
    pub d: u32,
    pub chi: LaurentPoly,
    pub degree: i64,
    /// `eu[i-1]` is Eu_i for `i` in `1..=d`.
    pub eu: Vec<i64>,
    /// Degrees at which the series is known, `..=known_to`.
    pub known_to: i64,
}

impl ChiSpectrum {
    pub fn eu(&self, i: u32) -> i64 {
        self.eu[i as usize - 1]
    }
}

/// Eu_i := Σ_{i+jd <= m} χ_{f,i+jd} - δ_{i,d}.
pub fn euler_numbers(chi: &LaurentPoly, d: u32, m: i64) -> Vec<i64> {
    (1..=d as i64)
        .map(|i| {
            let s: i64 = chi.terms().filter(|&(e, _)| e <= m && e >= 0 && (e - i).rem_euclid(d as i64) == 0).map(|t| t.1).sum();
            s - if i == d as i64 { 1 } else { 0 }
        })
        .collect()
}

/// χ_f from arrays `mu`, `nu`, `rho` indexed by degree `0..=k_max`.
///
/// χ_{f,j} = μ_j - ν_{j+d} + ρ_{j+2d} is known for `j <= k_max - 2d`. The
/// series is a polynomial, so the last `d` known coefficients must vanish;
/// otherwise the table is too short to see where it ends.
pub fn chi_from_arrays(mu: &[i64], nu: &[i64], rho: &[i64], d: u32) -> Result<ChiSpectrum> {
    let k_max = mu.len() as i64 - 1;
    let d_ = d as i64;
    let known_to = k_max - 2 * d_;
    if known_to < d_ {
        return Err(Error::TailNotCancelled(format!("table ends at {k_max}; need at least {}", 3 * d_)));
    }
    let at = |v: &[i64], k: i64| if k >= 0 && (k as usize) < v.len() { v[k as usize] } else { 0 };
    let mut chi = LaurentPoly::zero();
    for j in 0..=known_to {
        chi.set(j, at(mu, j) - at(nu, j + d_) + at(rho, j + 2 * d_));
    }
    for j in known_to - d_ + 1..=known_to {
        if chi.coeff(j) != 0 {
            return Err(Error::TailNotCancelled(format!(
                "coefficient {} at v^{j}; extend the table beyond k = {k_max}",
                chi.coeff(j)
            )));
        }
    }
    let degree = chi.degree().unwrap_or(0);
    let eu = euler_numbers(&chi, d, degree);
    Ok(ChiSpectrum { d, chi, degree, eu, known_to })
}

/// Outcome of the symmetry checks for a strongly free divisor in P^3.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub d: u32,
    /// `v^{2d} χ_f(v^{-1}) = χ_f`.
    pub chi_symmetric: bool,
    /// Diff²μ, Diff²ν, Diff²ρ have no negative coefficient.
    pub diff2_nonnegative: bool,
    /// `Diff²ρ = v^{4d+2} (Diff²μ)(v^{-1})`.
    pub rho_mu_duality: bool,
    pub dchi_antisymmetric: bool,
    pub dchi_low_symmetric: bool,
    pub abc_sum_zero: bool,
    pub abc_reciprocal: bool,
    pub abc_supports: bool,
    pub abc_corners: bool,
    pub chi_tilde_values: bool,
    pub eps_factorization: bool,
    pub eps_antisymmetric: bool,
    pub eps_support: bool,
    pub chi: LaurentPoly,
    pub a: LaurentPoly,
    pub b: LaurentPoly,
    pub c: LaurentPoly,
    pub eps: LaurentPoly,
    pub dchi_low: LaurentPoly,
    pub dchi_high: LaurentPoly,
    /// Observed only: `a, b, c >= 0` everywhere and `ε_k >= 0` for `k <= d/2`.
    pub abc_nonnegative: bool,
    pub eps_low_nonnegative: bool,
}

impl SymmetryReport {
    /// Every identity holds (the nonnegativity observations excluded).
    pub fn all_hold(&self) -> bool {
        self.checks().iter().all(|c| c.1)
    }

    pub fn checks(&self) -> Vec<(&'static str, bool)> {
        vec![
            ("chi symmetry", self.chi_symmetric),
            ("Diff^2 nonnegative", self.diff2_nonnegative),
            ("rho/mu duality", self.rho_mu_duality),
            ("D-chi antisymmetry", self.dchi_antisymmetric),
            ("D-chi low symmetry", self.dchi_low_symmetric),
            ("a-b+c=0", self.abc_sum_zero),
            ("a/c reciprocity, b self-reciprocal", self.abc_reciprocal),
            ("a, c supports", self.abc_supports),
            ("a_2d = c_2d+2 = 1", self.abc_corners),
            ("chi-tilde values", self.chi_tilde_values),
            ("eps factorization", self.eps_factorization),
            ("eps antisymmetry", self.eps_antisymmetric),
            ("eps support", self.eps_support),
        ]
    }
}

/// `v^e s(v^{-1})`.
pub fn reciprocal(s: &LaurentPoly, e: i64) -> LaurentPoly {
    s.reverse().shift(e)
}

/// Second differences truncated to the range where they are determined by
/// a table ending at `k_max`.
fn diff2_known(s: &LaurentPoly, k_max: i64) -> LaurentPoly {
    s.diff_pow(2).truncate(k_max)
}

/// Check the symmetries of a strongly free divisor in P^3 from its E1
/// arrays. The arrays must reach `4d + 2`, past the support of every second
/// difference involved. A failed identity means the divisor is not strongly
/// free (or not essential).
pub fn sf_symmetry_report(mu: &[i64], nu: &[i64], rho: &[i64], d: u32) -> Result<SymmetryReport> {
    let di = d as i64;
    let k_max = mu.len() as i64 - 1;
    if k_max < 4 * di + 2 {
        return Err(Error::TailNotCancelled(format!("symmetry checks need k_max >= {}, got {k_max}", 4 * di + 2)));
    }
    let (m, n_, r) = (LaurentPoly::from_slice(0, mu), LaurentPoly::from_slice(0, nu), LaurentPoly::from_slice(0, rho));
    let (mt, nt, rt) = (diff2_known(&m, k_max), diff2_known(&n_, k_max), diff2_known(&r, k_max));
    // the second differences are polynomials for a strongly free divisor,
    // so χ_f follows from them without a longer table
    let chit = mt.sub(&nt.shift(-di)).add(&rt.shift(-2 * di));
    let chi_full = chit.integrate(2, 4 * di);
    let chi = chi_full.truncate(2 * di);
    let chi_is_polynomial = chi_full == chi;
    let gp = gamma_prime(d);
    let one = |e: i64| LaurentPoly::monomial(e, 1);
    let a = gp.shift(2).sub(&mt);
    let b = gp.shift(di + 1).scale(2).sub(&nt);
    let c = gp.shift(2 * di).sub(&rt);
    let dchi = chi.sub(&one(di)).diff_pow(1);
    let dchi_low = dchi.truncate(di);
    let dchi_high = dchi.sub(&dchi_low);
    let eps = a.sub(&c.shift(-di)).shift(-di).add(&one(2)).sub(&one(di));
    let within = |s: &LaurentPoly, lo: i64, hi: i64| s.terms().all(|(e, _)| e >= lo && e <= hi);
    let chi_tilde_values = [(2, 0), (di, 1), (di + 1, -2), (di + 2, 1), (2 * di, 0)].iter().all(|&(e, v)| chit.coeff(e) == v);
    let eps_low_nonnegative = eps.terms().all(|(e, v)| 2 * e > di || v >= 0);
    Ok(SymmetryReport {
        d,
        chi_symmetric: chi_is_polynomial && reciprocal(&chi, 2 * di) == chi,
        diff2_nonnegative: mt.all_nonnegative() && nt.all_nonnegative() && rt.all_nonnegative(),
        rho_mu_duality: rt == reciprocal(&mt, 4 * di + 2),
        dchi_antisymmetric: reciprocal(&dchi_low, 2 * di + 1) == dchi_high.scale(-1),
        dchi_low_symmetric: reciprocal(&dchi_low, di + 1) == dchi_low,
        abc_sum_zero: a.sub(&b).add(&c).is_zero(),
        abc_reciprocal: reciprocal(&a, 4 * di + 2) == c && reciprocal(&b, 4 * di + 2) == b,
        abc_supports: within(&a, di + 3, 2 * di) && within(&c, 2 * di + 2, 3 * di - 1),
        abc_corners: a.coeff(2 * di) == 1 && c.coeff(2 * di + 2) == 1,
        chi_tilde_values,
        eps_factorization: chit.sub(&one(di).diff_pow(2)) == eps.sub(&eps.shift(di)),
        eps_antisymmetric: reciprocal(&eps, di + 2) == eps.scale(-1),
        eps_support: within(&eps, 3, di - 1),
        abc_nonnegative: a.all_nonnegative() && b.all_nonnegative() && c.all_nonnegative(),
        eps_low_nonnegative,
        chi,
        a,
        b,
        c,
        eps,
        dchi_low,
        dchi_high,
    })
}
