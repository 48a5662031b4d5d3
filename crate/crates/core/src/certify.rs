//! Criteria under which the computed pages already agree with E_∞.
//!
//! Every check reads page dimensions from a [`PageTable`] and user-asserted
//! geometry from a [`GeometricInput`]. A certificate is emitted only when
//! every hypothesis holds on entries whose ranks are certified.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactla::Certification;
use crate::koszul::{ComplementBetti, E1Table};
use crate::pages::{PageTable, Which};
use crate::series::{euler_numbers, ChiSpectrum, LaurentPoly};

pub type Rat = Rational64;

/// `⌈a⌉^{/d}`, the least `k/d` with `k/d >= a`.
pub fn ceil_to_grid(a: Rat, d: u32) -> Rat {
    let dd = d as i64;
    Rat::new((a * dd).ceil().to_integer(), dd)
}

/// Parse a comma separated list of fractions such as `3/4,1,5/4`.
pub fn parse_rationals(text: &str) -> Result<Vec<Rat>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let q = Rat::from_str(part).map_err(|_| Error::Syntax { pos: 0, msg: format!("'{part}' is not a fraction") })?;
        out.push(q);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

pub(crate) mod rat_text {
    use super::Rat;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub mod vec {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|q| q.to_string()))
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
            let t: Vec<String> = Vec::deserialize(d)?;
            t.iter().map(|x| Rat::from_str(x).map_err(serde::de::Error::custom)).collect()
        }
    }

    pub mod opt {
        use super::*;
        pub fn serialize<S: Serializer>(v: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(q) => s.serialize_some(&q.to_string()),
                None => s.serialize_none(),
            }
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
            let t: Option<String> = Option::deserialize(d)?;
            t.map(|x| Rat::from_str(&x).map_err(serde::de::Error::custom)).transpose()
        }
    }
}

/// Geometric properties of `Z = {f = 0}` that the tool cannot check and
/// takes on trust.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    /// General hyperplane sections have weighted homogeneous isolated singularities.
    pub gh: bool,
    /// Locally analytically trivial along general points of Sing Z.
    pub at: bool,
    pub arrangement: bool,
    pub strongly_free: bool,
    /// Locally positively weighted homogeneous.
    pub lpwh: bool,
}

impl Flags {
    /// `gh,at,arr,sf,lpwh` in any order; an empty string sets nothing.
    pub fn parse(text: &str) -> Result<Flags> {
        let mut f = Flags::default();
        for w in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match w {
                "gh" => f.gh = true,
                "at" => f.at = true,
                "arr" => f.arrangement = true,
                "sf" => f.strongly_free = true,
                "lpwh" => f.lpwh = true,
                _ => return Err(Error::Unsupported(format!("unknown flag '{w}'"))),
            }
        }
        Ok(f)
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        for (on, name) in [(self.gh, "gh"), (self.at, "at"), (self.arrangement, "arr"), (self.strongly_free, "sf"), (self.lpwh, "lpwh")] {
            if on {
                v.push(name);
            }
        }
        v
    }

    fn sf_lpwh(&self) -> bool {
        self.strongly_free && self.lpwh
    }

    /// Hypotheses under which the degree-d cohomology of ker df∧ computes
    /// the Betti numbers of the complement.
    pub fn complement_hypotheses(&self, n: usize) -> bool {
        self.sf_lpwh() || (self.arrangement && n == 4)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometricInput {
    /// Roots of the local Bernstein-Sato polynomials along Z, up to sign.
    #[serde(with = "rat_text::vec")]
    pub rz: Vec<Rat>,
    /// Overrides `min rz` when only part of the local roots is known.
    #[serde(with = "rat_text::opt", default)]
    pub alpha_z: Option<Rat>,
    /// Least local root of a general hyperplane section; `3/d` when absent.
    #[serde(with = "rat_text::opt", default)]
    pub alpha_tilde_prime: Option<Rat>,
    pub chi_u: Option<i64>,
    /// Total Milnor number of a plane curve, for the curve formula for χ(U).
    pub milnor_total: Option<i64>,
    pub flags: Flags,
    pub m: Option<i64>,
    /// A known upper bound for the largest root of b_f, with its justification.
    #[serde(with = "rat_text::opt", default)]
    pub max_rf: Option<Rat>,
    pub max_rf_reason: Option<String>,
}

impl GeometricInput {
    pub fn alpha_z(&self) -> Option<Rat> {
        self.alpha_z.or_else(|| self.rz.first().copied())
    }

    pub fn alpha_tilde_prime(&self, d: u32) -> Rat {
        self.alpha_tilde_prime.unwrap_or_else(|| Rat::new(3, d as i64))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(q) = self.rz.iter().find(|q| **q <= Rat::zero()) {
            return Err(Error::Unsupported(format!("local root {q} is not positive")));
        }
        if let (Some(a), Some(m)) = (self.alpha_z, self.rz.first()) {
            if a > *m {
                return Err(Error::Unsupported(format!("alpha_z = {a} exceeds the local root {m}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiSource {
    User,
    /// 1 - χ_{f,d}, for arrangements and strongly free lpwh divisors in P^3.
    EulerSeries,
    /// Alternating sum of the degree-d cohomology of ker df∧.
    ComplementBetti,
    /// (d-1)(d-2) + 1 - μ_Z for a reduced plane curve.
    CurveMilnor,
}

impl fmt::Display for ChiSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChiSource::User => "user",
            ChiSource::EulerSeries => "euler-series",
            ChiSource::ComplementBetti => "complement-betti",
            ChiSource::CurveMilnor => "curve-milnor",
        })
    }
}

/// χ(U) from the most trusted source available.
pub fn resolve_chi_u(geo: &GeometricInput, n: usize, d: u32, chi: Option<&ChiSpectrum>, betti: Option<&ComplementBetti>) -> Result<(i64, ChiSource)> {
    if let Some(v) = geo.chi_u {
        return Ok((v, ChiSource::User));
    }
    if n == 4 && geo.flags.complement_hypotheses(n) {
        if let Some(c) = chi {
            if c.known_to >= d as i64 {
                return Ok((1 - c.chi.coeff(d as i64), ChiSource::EulerSeries));
            }
        }
    }
    if geo.flags.complement_hypotheses(n) {
        if let Some(b) = betti.filter(|b| b.as_complement_betti && b.tag == Certification::Certified) {
            return Ok((-b.alternating_sum(), ChiSource::ComplementBetti));
        }
    }
    if n == 3 {
        if let Some(mu) = geo.milnor_total {
            let d = d as i64;
            return Ok(((d - 1) * (d - 2) + 1 - mu, ChiSource::CurveMilnor));
        }
    }
    Err(Error::MissingGeometry("chi(U): give it explicitly, or flag hypotheses that derive it".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Euler characteristic bound on the Milnor fiber, any n.
    MilnorEuler,
    /// The n = 4 variant with the modified Euler characteristic.
    ModifiedEuler,
    /// Vanishing of the Euler series beyond m, n = 4.
    EulerSeries,
    /// The Euler series route for strongly free lpwh divisors with m = 2d - 2.
    StronglyFree,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::MilnorEuler => "milnor-euler",
            Criterion::ModifiedEuler => "modified-euler",
            Criterion::EulerSeries => "euler-series",
            Criterion::StronglyFree => "strongly-free",
        })
    }
}

/// `X^(page)_k = X^(∞)_k` for `k <= k_hi`, and `X^(∞)_k = 0` for `k > zero_above`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub criterion: Criterion,
    pub which: Which,
    pub page: usize,
    pub k_hi: i64,
    pub zero_above: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Condition {
    fn new(name: &str, holds: bool, detail: impl Into<String>) -> Self {
        Condition { name: name.into(), holds, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertReport {
    pub criterion: Criterion,
    pub r: Option<usize>,
    #[serde(with = "rat_text::opt")]
    pub beta: Option<Rat>,
    pub m: Option<i64>,
    pub conditions: Vec<Condition>,
    /// Euler characteristics per class `k = 1..=d`, where computed.
    pub euler: Vec<i64>,
    pub certified: bool,
    /// Page at which the whole spectral sequence degenerates, when shown.
    pub degenerates_at: Option<usize>,
    pub certificates: Vec<Certificate>,
    /// Cross-checks that do not gate the certificate.
    pub advisories: Vec<Condition>,
    pub notes: Vec<String>,
}

impl CertReport {
    fn new(criterion: Criterion) -> Self {
        CertReport {
            criterion,
            r: None,
            beta: None,
            m: None,
            conditions: Vec::new(),
            euler: Vec::new(),
            certified: false,
            degenerates_at: None,
            certificates: Vec::new(),
            advisories: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, holds: bool, detail: impl Into<String>) -> bool {
        self.conditions.push(Condition::new(name, holds, detail));
        holds
    }

    /// First failing condition, as an error value.
    pub fn failure(&self) -> Option<Error> {
        self.conditions
            .iter()
            .find(|c| !c.holds)
            .map(|c| Error::ConditionFailed { condition: c.name.clone(), witness: c.detail.clone() })
    }

    /// Largest k with `X^(∞)_k` read off the table by this report.
    pub fn range(&self, w: Which) -> Option<i64> {
        self.certificates.iter().filter(|c| c.which == w).map(|c| c.k_hi).max()
    }
}

fn need(t: &PageTable, r: usize, k_hi: i64) -> Result<()> {
    if r == 0 || r > t.r_max {
        return Err(Error::TableTooShort(format!("page {r} requested, table has pages 1..={}", t.r_max)));
    }
    if t.k_max < k_hi {
        return Err(Error::TableTooShort(format!("degrees up to {k_hi} needed, table ends at {}", t.k_max)));
    }
    Ok(())
}

fn certified_through(t: &PageTable, r: usize, k_hi: i64) -> Result<()> {
    for w in [Which::M, Which::N, Which::Q] {
        for s in 1..=r.min(t.r_max) {
            for k in 0..=k_hi.min(t.k_max) {
                if t.tag(w, s, k) != Certification::Certified {
                    return Err(Error::UncertifiedRanks(format!("{w:?} at page {s}, degree {k}")));
                }
            }
        }
    }
    Ok(())
}

fn list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Pairs `(k, m)` with `k <= k_hi`, `m >= r` and `a_{k-md} b_k != 0`.
fn product_witnesses(t: &PageTable, r: usize, a: Which, b: Which, k_hi: i64) -> Vec<(i64, i64)> {
    let d = t.d as i64;
    let mut out = Vec::new();
    for k in 0..=k_hi {
        if t.get(b, r, k) == 0 {
            continue;
        }
        let mut m = r as i64;
        while k - m * d >= 0 {
            if t.get(a, r, k - m * d) != 0 {
                out.push((k, m));
            }
            m += 1;
        }
    }
    out
}

fn pairs(v: &[(i64, i64)]) -> String {
    v.iter().map(|(k, m)| format!("(k={k}, m={m})")).collect::<Vec<_>>().join(", ")
}

/// Sum of `X^(r)_{i+jd}` over `j >= j0` with `i + jd <= hi`.
fn class_sum(t: &PageTable, w: Which, r: usize, i: i64, j0: i64, hi: i64) -> i64 {
    let d = t.d as i64;
    let mut s = 0;
    let mut k = i + j0 * d;
    while k <= hi {
        s += t.get(w, r, k);
        k += d;
    }
    s
}

/// Index of the complex conjugate class: `e(-i/d)` conjugates to `e(-(d-i)/d)`.
pub fn conj_class(i: u32, d: u32) -> u32 {
    if i == d {
        d
    } else {
        d - i
    }
}

/// Classes `i in 1..=d` carrying a product `μ^(r)_{k-md} ν^(r)_k != 0`
/// with `k <= d(n - β)`, `m >= r`, `k ≡ i mod d`.
pub fn lambda_set(t: &PageTable, r: usize, beta: Rat, d: u32, n: usize) -> BTreeSet<u32> {
    let hi = (Rat::from_integer(n as i64) - beta) * d as i64;
    let hi = hi.floor().to_integer().min(t.k_max);
    product_witnesses(t, r, Which::M, Which::N, hi)
        .into_iter()
        .map(|(k, _)| {
            let c = k.rem_euclid(d as i64) as u32;
            if c == 0 {
                d
            } else {
                c
            }
        })
        .collect()
}

/// The Betti sums and Euler characteristic per class for the Milnor fiber.
pub fn milnor_euler(t: &PageTable, r: usize, beta: Rat) -> (Vec<[i64; 3]>, Vec<i64>) {
    let (n, d) = (t.n as i64, t.d as i64);
    let hi = n * d - (beta * d).to_integer();
    let sign = if (n - 1) % 2 == 0 { 1 } else { -1 };
    let mut b = Vec::new();
    let mut chi = Vec::new();
    for i in 1..=d {
        let b1 = class_sum(t, Which::M, r, i, 0, hi);
        let b2 = class_sum(t, Which::N, r, i, 1, hi);
        let b3 = class_sum(t, Which::Q, r, i, 2, hi);
        b.push([b1, b2, b3]);
        chi.push(b1 - b2 + b3 + if i == d { sign } else { 0 });
    }
    (b, chi)
}

/// The Euler characteristic bound on the Milnor fiber with general n.
///
/// With `β` (default `1/d`) and `r` in `2..=n`, the degrees `k <= d(n - β)`
/// of page `r` are shown to be final for M, and for N and Q when the
/// products `ν_{k-md} ρ_k` vanish too (or AT is asserted).
pub fn milnor_euler_check(t: &PageTable, geo: &GeometricInput, r: usize, beta: Option<Rat>) -> Result<CertReport> {
    let (n, d) = (t.n, t.d);
    let beta = beta.unwrap_or_else(|| Rat::new(1, d as i64));
    if r < 2 || r > n {
        return Err(Error::Unsupported(format!("page {r} outside 2..={n}")));
    }
    if beta <= Rat::zero() || !(beta * d as i64).is_integer() {
        return Err(Error::Unsupported(format!("beta = {beta} is not a positive multiple of 1/{d}")));
    }
    let alpha_z = geo.alpha_z().ok_or_else(|| Error::MissingGeometry("local roots (alpha_Z)".into()))?;
    let chi_u = geo.chi_u.ok_or_else(|| Error::MissingGeometry("chi(U)".into()))?;
    let hi = n as i64 * d as i64 - (beta * d as i64).to_integer();
    need(t, r, hi)?;
    certified_through(t, r, hi)?;

    let mut rep = CertReport::new(Criterion::MilnorEuler);
    rep.r = Some(r);
    rep.beta = Some(beta);
    let gh = rep.push("gh-asserted", geo.flags.gh, if geo.flags.gh { "asserted" } else { "general hyperplane sections not asserted weighted homogeneous" });

    let cap = ceil_to_grid(Rat::new(n as i64, d as i64).min(alpha_z), d);
    let c5 = rep.push("beta-bound", beta <= cap, format!("beta = {beta}, bound = {cap}"));

    let sign = if (n - 1) % 2 == 0 { 1 } else { -1 };
    let target = sign * chi_u;
    let (b, chi) = milnor_euler(t, r, beta);
    let over: Vec<String> = (1..=d).filter(|&i| chi[i as usize - 1] > target).map(|i| format!("k={i}: {}", chi[i as usize - 1])).collect();
    let c6 = rep.push("euler-bound", over.is_empty(), if over.is_empty() { format!("all classes <= {target}") } else { format!("exceeds {target} at {}", over.join(", ")) });
    rep.euler = chi.clone();

    let wit = product_witnesses(t, r, Which::M, Which::N, hi);
    let c7 = rep.push("mu-nu-vanishing", wit.is_empty(), if wit.is_empty() { format!("k <= {hi}") } else { pairs(&wit) });
    let mut c9 = false;
    if !c7 {
        let asym: Vec<u32> = (1..=d).filter(|&i| b[i as usize - 1][0] != b[conj_class(i, d) as usize - 1][0]).collect();
        let ok1 = rep.push("conjugate-betti", asym.is_empty(), if asym.is_empty() { "top Betti sums are conjugation invariant".to_string() } else { format!("asymmetric at classes {}", list(&asym)) });
        let lam = lambda_set(t, r, beta, d, n);
        let clash: Vec<u32> = lam.iter().copied().filter(|&i| lam.contains(&conj_class(i, d))).collect();
        let ok2 = rep.push("lambda-disjoint", clash.is_empty(), format!("classes {{{}}}", list(&lam.iter().collect::<Vec<_>>())));
        c9 = ok1 && ok2;
    }

    rep.certified = gh && c5 && c6 && (c7 || c9);
    if rep.certified {
        let eq = chi.iter().all(|&c| c == target);
        rep.push("euler-equality", eq, if eq { format!("every class equals {target}") } else { format!("values {} against {target}", list(&chi)) });
        if !eq {
            rep.certified = false;
            rep.notes.push("hypotheses hold but the forced equality fails: chi(U) or the table is wrong".into());
        }
    }
    if rep.certified {
        rep.certificates.push(Certificate { criterion: Criterion::MilnorEuler, which: Which::M, page: r, k_hi: hi, zero_above: None });
        let nr = product_witnesses(t, r, Which::N, Which::Q, hi);
        if nr.is_empty() || geo.flags.at {
            rep.push("nu-rho-vanishing", true, if nr.is_empty() { format!("k <= {hi}") } else { "AT asserted".into() });
            for w in [Which::N, Which::Q] {
                rep.certificates.push(Certificate { criterion: Criterion::MilnorEuler, which: w, page: r, k_hi: hi, zero_above: None });
            }
        } else {
            rep.notes.push(format!("N and Q not certified: {}", pairs(&nr)));
        }
    }
    Ok(rep)
}

/// The modified Euler characteristic per class for n = 4 and β = 2/d.
pub fn modified_euler(t: &PageTable, r: usize) -> Vec<i64> {
    let d = t.d as i64;
    (1..=d)
        .map(|i| {
            class_sum(t, Which::M, r, i, 0, 2 * d - 2) - class_sum(t, Which::N, r, i, 1, 3 * d - 2) + class_sum(t, Which::Q, r, i, 2, 4 * d - 2)
                - if i == d { 1 } else { 0 }
        })
        .collect()
}

fn max_root_justification(geo: &GeometricInput, m: i64, d: u32) -> Option<String> {
    let two = 2 * d as i64 - 2;
    if m >= two && geo.flags.arrangement {
        return Some("hyperplane arrangement".into());
    }
    if m >= two && geo.flags.sf_lpwh() {
        return Some("strongly free, locally positively weighted homogeneous".into());
    }
    match geo.max_rf {
        Some(q) if q <= Rat::new(m, d as i64) => Some(format!("max root {q}: {}", geo.max_rf_reason.as_deref().unwrap_or("user supplied"))),
        _ => None,
    }
}

/// The n = 4 variant with β = 2/d: μ is final for `k <= 2d - 2` and
/// vanishes at E_∞ above; N, Q are final for `k <= 4d - 2` under the
/// `ν_{k-md} ρ_k` vanishing (or AT).
pub fn modified_euler_check(t: &PageTable, geo: &GeometricInput, r: usize) -> Result<CertReport> {
    let (n, d) = (t.n, t.d as i64);
    if n != 4 {
        return Err(Error::Unsupported("the modified Euler criterion needs n = 4".into()));
    }
    if !(2..=4).contains(&r) {
        return Err(Error::Unsupported(format!("page {r} outside 2..=4")));
    }
    let chi_u = geo.chi_u.ok_or_else(|| Error::MissingGeometry("chi(U)".into()))?;
    let hi = 4 * d - 2;
    need(t, r, hi)?;
    certified_through(t, r, hi)?;

    let mut rep = CertReport::new(Criterion::ModifiedEuler);
    rep.r = Some(r);
    rep.beta = Some(Rat::new(2, d));
    let gh = rep.push("gh-asserted", geo.flags.gh, if geo.flags.gh { "asserted" } else { "not asserted" });
    let just = max_root_justification(geo, 2 * d - 2, t.d);
    let c11 = rep.push("max-root-bound", just.is_some(), just.unwrap_or_else(|| format!("no justification for max R_f <= {}", Rat::new(2 * d - 2, d))));
    let chi = modified_euler(t, r);
    let target = -chi_u;
    let over: Vec<String> = (1..=d).filter(|&i| chi[i as usize - 1] > target).map(|i| format!("k={i}: {}", chi[i as usize - 1])).collect();
    let c12 = rep.push("modified-euler-bound", over.is_empty(), if over.is_empty() { format!("all classes <= {target}") } else { format!("exceeds {target} at {}", over.join(", ")) });
    rep.euler = chi.clone();
    let wit = product_witnesses(t, r, Which::M, Which::N, 3 * d - 2);
    let c13 = rep.push("mu-nu-vanishing", wit.is_empty(), if wit.is_empty() { format!("k <= {}", 3 * d - 2) } else { pairs(&wit) });

    rep.certified = gh && c11 && c12 && c13;
    if rep.certified {
        let eq = chi.iter().all(|&c| c == target);
        rep.push("euler-equality", eq, if eq { format!("every class equals {target}") } else { format!("values {} against {target}", list(&chi)) });
        let gap: Vec<i64> = (3 * d - 1..=4 * d - 2).filter(|&k| t.get(Which::N, r, k) != 0).collect();
        rep.push("nu-gap-vanishing", gap.is_empty(), if gap.is_empty() { format!("nu zero on {}..={}", 3 * d - 1, 4 * d - 2) } else { format!("nonzero at {}", list(&gap)) });
        if !eq || !gap.is_empty() {
            rep.certified = false;
            rep.notes.push("hypotheses hold but a forced conclusion fails: chi(U) or the table is wrong".into());
        }
    }
    if rep.certified {
        rep.certificates.push(Certificate { criterion: Criterion::ModifiedEuler, which: Which::M, page: r, k_hi: 2 * d - 2, zero_above: Some(2 * d - 2) });
        let nr = product_witnesses(t, r, Which::N, Which::Q, hi);
        let ext = nr.is_empty() || geo.flags.at;
        if ext {
            rep.push("nu-rho-vanishing", true, if nr.is_empty() { format!("k <= {hi}") } else { "AT asserted".into() });
            for w in [Which::N, Which::Q] {
                rep.certificates.push(Certificate { criterion: Criterion::ModifiedEuler, which: w, page: r, k_hi: hi, zero_above: None });
            }
        } else {
            rep.notes.push(format!("N and Q not certified: {}", pairs(&nr)));
        }
    }
    Ok(rep)
}

/// `-χ(U_ns)` for the complement of a smooth surface of degree d in P^3,
/// read off the Euler series γ of the Fermat polynomial.
pub fn smooth_complement_euler(gamma: &LaurentPoly, d: u32) -> i64 {
    let deg = gamma.degree().unwrap_or(0);
    euler_numbers(gamma, d, deg)[d as usize - 1]
}

/// Compare `Eu_i = -χ(U)` with the stable value of `μ_k - ρ_k - r‴d` on
/// each class. Needs the E1 table to end where both grow linearly.
pub fn growth_balance(e1: &E1Table, chi: &ChiSpectrum, chi_u: i64) -> Condition {
    let d = e1.d as i64;
    let k_max = e1.k_max;
    let slope = e1.mu_at(k_max) - e1.mu_at(k_max - 1);
    let linear = (k_max - d + 1..=k_max).all(|k| {
        e1.mu_at(k) - e1.mu_at(k - 1) == slope && e1.rho_at(k) - e1.rho_at(k - 1) == slope
    });
    if !linear || k_max < 3 * d {
        return Condition::new("growth-balance", true, "not applicable: table ends before mu and rho grow linearly");
    }
    let gamma = crate::series::gamma_series(e1.n, e1.d, 4 * d + 4);
    let chi_ns = -smooth_complement_euler(&gamma, e1.d);
    let want = chi_u - chi_ns;
    let mut bad = Vec::new();
    for i in 1..=d {
        let k = k_max - (k_max - i).rem_euclid(d);
        let lhs = e1.mu_at(k) - e1.rho_at(k) - slope * d;
        let eu_ok = chi.eu(i as u32) == -chi_u;
        if eu_ok != (lhs == want) {
            bad.push(i);
        }
    }
    Condition::new(
        "growth-balance",
        bad.is_empty(),
        if bad.is_empty() { format!("rank {slope}, chi(U) - chi(U_ns) = {want}") } else { format!("equivalence breaks at classes {}", list(&bad)) },
    )
}

/// Degeneration in all degrees from the Euler series `χ_f`.
///
/// With `m >= 2d - 2`, `max R_f <= m/d`, `deg χ_f <= m` and `Eu_i = -χ(U)`
/// for all i, the sequence degenerates at E_3 and the E_2 terms vanish in
/// degrees above m (shifted by d for N, 2d for Q). When both differentials
/// of page 2 vanish for dimension reasons, E_2 is already final.
pub fn euler_series_check(t: &PageTable, chi: &ChiSpectrum, e1: Option<&E1Table>, geo: &GeometricInput, m: Option<i64>) -> Result<CertReport> {
    let (n, d) = (t.n, t.d as i64);
    if n != 4 {
        return Err(Error::Unsupported("the Euler series criterion needs n = 4".into()));
    }
    let sf = geo.flags.sf_lpwh();
    let mut rep = CertReport::new(if sf { Criterion::StronglyFree } else { Criterion::EulerSeries });
    let m = match m.or(geo.m) {
        Some(m) => m,
        None if sf => 2 * d - 2,
        None => {
            let root = geo.max_rf.map(|q| (q * d).ceil().to_integer()).unwrap_or(0);
            (2 * d - 2).max(chi.degree).max(root)
        }
    };
    let chi_u = geo.chi_u.ok_or_else(|| Error::MissingGeometry("chi(U)".into()))?;
    rep.m = Some(m);
    need(t, 2, m.min(t.k_max))?;
    certified_through(t, 2, t.k_max)?;

    let gh = rep.push("gh-asserted", geo.flags.gh, if geo.flags.gh { "asserted" } else { "not asserted" });
    let c0 = rep.push("m-lower-bound", m >= 2 * d - 2, format!("m = {m}, need >= {}", 2 * d - 2));
    let just = max_root_justification(geo, m, t.d);
    let c1 = rep.push("max-root-bound", just.is_some(), just.unwrap_or_else(|| format!("no justification for max R_f <= {}", Rat::new(m, d))));
    let c2 = rep.push("chi-degree", chi.degree <= m, format!("deg chi_f = {}, m = {m}", chi.degree));
    let eu = euler_numbers(&chi.chi, t.d, chi.degree.max(m));
    rep.euler = eu.clone();
    let off: Vec<i64> = (1..=d).filter(|&i| eu[i as usize - 1] != -chi_u).collect();
    let c3 = rep.push("eu-constant", off.is_empty(), if off.is_empty() { format!("Eu_i = {} for all i", -chi_u) } else { format!("Eu_i = {} differs from {} at i = {}", list(&eu), -chi_u, list(&off)) });
    if let Some(e1) = e1 {
        rep.advisories.push(growth_balance(e1, chi, chi_u));
    }

    rep.certified = gh && c0 && c1 && c2 && c3;
    if !rep.certified {
        return Ok(rep);
    }
    let mut tail = Vec::new();
    for k in m + 1..=t.k_max {
        if t.get(Which::M, 2, k) != 0 {
            tail.push(format!("mu({k})"));
        }
        if k + d <= t.k_max && t.get(Which::N, 2, k + d) != 0 {
            tail.push(format!("nu({})", k + d));
        }
        if k + 2 * d <= t.k_max && t.get(Which::Q, 2, k + 2 * d) != 0 {
            tail.push(format!("rho({})", k + 2 * d));
        }
    }
    let ok = rep.push("tail-vanishing", tail.is_empty(), if tail.is_empty() { format!("page 2 vanishes above {m} (shifted) through {}", t.k_max) } else { tail.join(", ") });
    if !ok {
        rep.certified = false;
        rep.notes.push("hypotheses hold but page 2 does not vanish where forced".into());
        return Ok(rep);
    }
    rep.degenerates_at = Some(3);
    let top = m + 2 * d;
    let page = if t.k_max >= top {
        let mn = product_witnesses(t, 2, Which::M, Which::N, top).into_iter().filter(|&(_, mm)| mm == 2).collect::<Vec<_>>();
        let nq = product_witnesses(t, 2, Which::N, Which::Q, top).into_iter().filter(|&(_, mm)| mm == 2).collect::<Vec<_>>();
        if mn.is_empty() && nq.is_empty() {
            rep.degenerates_at = Some(2);
            rep.notes.push("page-2 differentials vanish for dimension reasons".into());
            Some(2)
        } else {
            rep.notes.push(format!("page-2 differentials may act at {}", pairs(&[mn, nq].concat())));
            (t.r_max >= 3).then_some(3)
        }
    } else {
        rep.notes.push(format!("table ends at {} < {top}; E_2 not examined", t.k_max));
        (t.r_max >= 3).then_some(3)
    };
    match page {
        Some(p) => {
            for (w, z) in [(Which::M, m), (Which::N, m + d), (Which::Q, m + 2 * d)] {
                rep.certificates.push(Certificate { criterion: rep.criterion, which: w, page: p, k_hi: t.k_max, zero_above: Some(z) });
            }
        }
        None => rep.notes.push("page 3 not in the table; E_3 values not certified".into()),
    }
    Ok(rep)
}

/// Flags `ρ^(2)_k != 0` for `k/d > n - ⌈α̃′_Z⌉^{/d}`, which would contradict
/// the supplied `α̃′_Z`.
pub fn rho_vanishing_advisory(t: &PageTable, geo: &GeometricInput) -> Condition {
    let (n, d) = (t.n as i64, t.d);
    let cut = (Rat::from_integer(n) - ceil_to_grid(geo.alpha_tilde_prime(d), d)) * d as i64;
    let cut = cut.to_integer();
    if t.r_max < 2 {
        return Condition::new("rho-high-degree-vanishing", true, "not applicable: page 2 not computed");
    }
    let bad: Vec<i64> = (cut + 1..=t.k_max).filter(|&k| t.rho_at(2, k) != 0).collect();
    Condition::new(
        "rho-high-degree-vanishing",
        bad.is_empty(),
        if bad.is_empty() { format!("rho^(2) zero above {cut}") } else { format!("rho^(2) nonzero at {} above {cut}; the supplied alpha~'_Z is too large", list(&bad)) },
    )
}

/// One entry of a row at E_∞.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfinityEntry {
    pub k: i64,
    pub value: Option<i64>,
    pub sources: Vec<Criterion>,
}

/// `X^(∞)_k` for `k` in `0..=k_hi`, merged from all certificates.
pub fn infinity_row(t: &PageTable, certs: &[Certificate], w: Which, k_hi: i64) -> Result<Vec<InfinityEntry>> {
    let mut out = Vec::new();
    for k in 0..=k_hi {
        let mut value = None;
        let mut sources = Vec::new();
        for c in certs.iter().filter(|c| c.which == w) {
            let v = if k <= c.k_hi.min(t.k_max) && c.page <= t.r_max {
                Some(t.get(w, c.page, k))
            } else if c.zero_above.is_some_and(|z| k > z) {
                Some(0)
            } else {
                None
            };
            if let Some(v) = v {
                if value.is_some_and(|old| old != v) {
                    return Err(Error::Inconsistent(format!("certificates disagree on {w:?} at k = {k}")));
                }
                value = Some(v);
                if !sources.contains(&c.criterion) {
                    sources.push(c.criterion);
                }
            }
        }
        out.push(InfinityEntry { k, value, sources });
    }
    Ok(out)
}

/// Values of an [`infinity_row`], `None` where nothing is certified.
pub fn row_values(row: &[InfinityEntry]) -> Vec<Option<i64>> {
    row.iter().map(|e| e.value).collect()
}

/// Every applicable check, run on one table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertSummary {
    pub chi_u: Option<i64>,
    pub chi_u_source: Option<ChiSource>,
    pub reports: Vec<CertReport>,
    /// Checks that could not be evaluated, with the error class and message.
    pub skipped: Vec<(Criterion, String, String)>,
    pub advisories: Vec<Condition>,
}

impl CertSummary {
    pub fn certificates(&self) -> Vec<Certificate> {
        self.reports.iter().flat_map(|r| r.certificates.iter().cloned()).collect()
    }

    pub fn any_certified(&self) -> bool {
        self.reports.iter().any(|r| r.certified)
    }

    /// Smallest page certified final in all degrees, if any.
    pub fn global_page(&self) -> Option<usize> {
        self.reports.iter().filter_map(|r| r.degenerates_at).min()
    }
}

fn derived_max_root(t: &PageTable, certs: &[Certificate], geo: &GeometricInput) -> Option<Rat> {
    let (n, d) = (t.n, t.d);
    let top = n as i64 * d as i64 - 1;
    let row = row_values(&infinity_row(t, certs, Which::M, top).ok()?);
    let rep = crate::roots::determine_roots(&row, &geo.rz, n, d).ok()?;
    if !rep.complete() {
        return None;
    }
    let local = geo.rz.iter().max().copied();
    let origin = rep.members.iter().max().map(|&k| Rat::new(k, d as i64));
    local.into_iter().chain(origin).max()
}

/// Run every criterion that applies to `t`, page by page, and collect the
/// certificates. For n = 4 without an asserted bound on the largest root,
/// the bound is taken from the roots determined by the earlier certificates.
pub fn certify_all(t: &PageTable, e1: Option<&E1Table>, chi: Option<&ChiSpectrum>, betti: Option<&ComplementBetti>, geo: &GeometricInput, beta: Option<Rat>) -> CertSummary {
    let mut geo = geo.clone();
    let mut sum = CertSummary { chi_u: None, chi_u_source: None, reports: Vec::new(), skipped: Vec::new(), advisories: Vec::new() };
    match resolve_chi_u(&geo, t.n, t.d, chi, betti) {
        Ok((v, src)) => {
            geo.chi_u = Some(v);
            sum.chi_u = Some(v);
            sum.chi_u_source = Some(src);
        }
        Err(e) => sum.skipped.push((Criterion::MilnorEuler, e.class().into(), e.to_string())),
    }
    let record = |sum: &mut CertSummary, c: Criterion, r: Result<CertReport>| match r {
        Ok(rep) => sum.reports.push(rep),
        Err(e) => sum.skipped.push((c, e.class().into(), e.to_string())),
    };
    for r in 2..=t.n.min(t.r_max) {
        record(&mut sum, Criterion::MilnorEuler, milnor_euler_check(t, &geo, r, beta));
    }
    if t.n == 4 {
        for r in 2..=4.min(t.r_max) {
            record(&mut sum, Criterion::ModifiedEuler, modified_euler_check(t, &geo, r));
        }
        if let Some(chi) = chi {
            if geo.max_rf.is_none() && !geo.flags.arrangement && !geo.flags.sf_lpwh() && !geo.rz.is_empty() {
                if let Some(q) = derived_max_root(t, &sum.certificates(), &geo) {
                    geo.max_rf = Some(q);
                    geo.max_rf_reason = Some("roots determined from the certified pages".into());
                }
            }
            let c = if geo.flags.sf_lpwh() { Criterion::StronglyFree } else { Criterion::EulerSeries };
            record(&mut sum, c, euler_series_check(t, chi, e1, &geo, None));
        }
    }
    sum.advisories.push(rho_vanishing_advisory(t, &geo));
    sum
}
