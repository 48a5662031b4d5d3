//! Roots of the Bernstein-Sato polynomial supported at the origin, read off
//! the certified E_∞ row of M together with the local roots `R_Z`.
//!
//! Degrees are integers `k` standing for the root `k/d`. `mu_inf[k]` is
//! `μ^(∞)_k` where certified and `None` elsewhere; an uncertified entry is
//! never guessed at.

use std::collections::BTreeSet;

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::certify::Condition;
use crate::error::{Error, Result};

type Rat = Rational64;

/// `α_f = min(α_Z, n/d)`.
pub fn alpha_f(alpha_z: Rat, n: usize, d: u32) -> Rat {
    alpha_z.min(Rat::new(n as i64, d as i64))
}

fn in_rz(q: Rat, rz: &[Rat]) -> bool {
    rz.contains(&q)
}

/// `q` lies in `R_Z + Z_{<0}`: some local root exceeds it by a positive integer.
pub fn shifted_local(q: Rat, rz: &[Rat]) -> bool {
    rz.iter().any(|&r| {
        let diff = r - q;
        diff.is_integer() && diff > Rat::zero()
    })
}

/// `d R_Z ∩ Z`.
pub fn local_degrees(rz: &[Rat], d: u32) -> BTreeSet<i64> {
    rz.iter().map(|&r| r * d as i64).filter(|q| q.is_integer()).map(|q| q.to_integer()).collect()
}

/// Integers `k` with `k/d` in `[α_Z, n-2-α_Z]`, in `R_Z + Z_{<0}` and not in `R_Z`.
pub fn cs_set(rz: &[Rat], n: usize, d: u32) -> Result<Vec<i64>> {
    if rz.is_empty() {
        return Err(Error::EmptyRz);
    }
    if let Some(q) = rz.iter().find(|q| **q <= Rat::zero() || **q >= Rat::from_integer(n as i64 - 1)) {
        return Err(Error::Unsupported(format!("local root {q} outside (0, {})", n - 1)));
    }
    let dd = d as i64;
    let a = *rz.iter().min().unwrap();
    let lo = (a * dd).ceil().to_integer();
    let hi = ((Rat::from_integer(n as i64 - 2) - a) * dd).floor().to_integer();
    Ok((lo..=hi)
        .filter(|&k| {
            let q = Rat::new(k, dd);
            shifted_local(q, rz) && !in_rz(q, rz)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    /// `μ^(∞)_k = 0` but `k/d` is a local root shifted down by an integer,
    /// so the converse of the root criterion is not available.
    ShiftedLocalRoot,
    /// `μ^(∞)_k` carries no degeneration certificate.
    Uncertified,
    /// A hypothesis of the complete determination failed, and the root
    /// criterion alone does not decide `k`.
    HypothesisFails,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Undecided {
    pub k: i64,
    pub reason: Reason,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootMethod {
    /// Degree by degree from the nonvanishing criterion and its converse.
    Criterion,
    /// All of `[n, nd)` from the support of `μ^(∞)`, given `CS(f)` is covered.
    Support,
    /// From a discretely connected support starting at n.
    Interval,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootReport {
    pub method: RootMethod,
    pub n: usize,
    pub d: u32,
    pub cs: Vec<i64>,
    /// Elements of `d R_f^0`.
    pub members: Vec<i64>,
    pub non_members: Vec<i64>,
    /// Degrees with `k/d` in `R_Z`, excluded by definition.
    pub local: Vec<i64>,
    pub undecided: Vec<Undecided>,
    pub k_min: Option<i64>,
    pub k_max: Option<i64>,
    pub hypotheses: Vec<Condition>,
    pub notes: Vec<String>,
}

impl RootReport {
    fn new(method: RootMethod, n: usize, d: u32, cs: Vec<i64>) -> Self {
        RootReport {
            method,
            n,
            d,
            cs,
            members: Vec::new(),
            non_members: Vec::new(),
            local: Vec::new(),
            undecided: Vec::new(),
            k_min: None,
            k_max: None,
            hypotheses: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Every degree in `(0, nd)` has a verdict.
    pub fn complete(&self) -> bool {
        self.undecided.is_empty()
    }

    /// `{4,5,7,8,10}` style rendering of the members.
    pub fn members_text(&self) -> String {
        format!("{{{}}}", self.members.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","))
    }

    fn support_interval(&mut self, mu_inf: &[Option<i64>], rz: &[Rat]) {
        let loc = local_degrees(rz, self.d);
        let supp: Vec<i64> = (0..mu_inf.len() as i64).filter(|&k| !loc.contains(&k) && at(mu_inf, k).is_some_and(|v| v > 0)).collect();
        self.k_min = supp.first().copied();
        self.k_max = supp.last().copied();
    }
}

fn at(row: &[Option<i64>], k: i64) -> Option<i64> {
    if k < 0 {
        return Some(0);
    }
    row.get(k as usize).copied().flatten()
}

/// Degree by degree: `μ^(∞)_k > 0` makes `k/d` a root; `μ^(∞)_k = 0`
/// excludes it when `k/d` is not in `R_Z + Z_{<0}`.
pub fn roots_criterion(mu_inf: &[Option<i64>], rz: &[Rat], n: usize, d: u32) -> Result<RootReport> {
    let cs = if rz.is_empty() { Vec::new() } else { cs_set(rz, n, d)? };
    let mut rep = RootReport::new(RootMethod::Criterion, n, d, cs);
    let dd = d as i64;
    for k in 1..n as i64 * dd {
        let q = Rat::new(k, dd);
        if in_rz(q, rz) {
            rep.local.push(k);
            continue;
        }
        match at(mu_inf, k) {
            None => rep.undecided.push(Undecided { k, reason: Reason::Uncertified }),
            Some(v) if v > 0 => rep.members.push(k),
            Some(_) if !shifted_local(q, rz) => rep.non_members.push(k),
            Some(_) => rep.undecided.push(Undecided { k, reason: Reason::ShiftedLocalRoot }),
        }
    }
    rep.support_interval(mu_inf, rz);
    Ok(rep)
}

/// Complete determination when `min CS(f) >= n` and `μ^(∞)_k > 0` on `CS(f)`:
/// `d R_f^0 ⊂ [n, nd)`, and outside `d R_Z` membership is `μ^(∞)_k > 0`.
pub fn roots_from_support(mu_inf: &[Option<i64>], rz: &[Rat], n: usize, d: u32) -> Result<RootReport> {
    let cs = cs_set(rz, n, d)?;
    let low: Vec<i64> = cs.iter().copied().filter(|&k| k < n as i64).collect();
    if !low.is_empty() {
        return Err(Error::HypothesisFailed("cs-above-n".into(), format!("CS(f) contains {low:?} below n = {n}")));
    }
    let mut bad = Vec::new();
    for &k in &cs {
        match at(mu_inf, k) {
            None => return Err(Error::UncertifiedRanks(format!("mu at E_inf, degree {k} in CS(f)"))),
            Some(0) => bad.push(k),
            _ => {}
        }
    }
    if !bad.is_empty() {
        return Err(Error::HypothesisFailed("support-covers-cs".into(), format!("mu at E_inf vanishes at {bad:?} in CS(f)")));
    }
    let mut rep = RootReport::new(RootMethod::Support, n, d, cs.clone());
    rep.hypotheses.push(Condition { name: "cs-above-n".into(), holds: true, detail: format!("CS(f) = {cs:?}") });
    rep.hypotheses.push(Condition { name: "support-covers-cs".into(), holds: true, detail: "mu at E_inf positive on CS(f)".into() });
    let dd = d as i64;
    for k in 1..n as i64 * dd {
        if in_rz(Rat::new(k, dd), rz) {
            rep.local.push(k);
        } else if k < n as i64 {
            rep.non_members.push(k);
        } else {
            match at(mu_inf, k) {
                None => rep.undecided.push(Undecided { k, reason: Reason::Uncertified }),
                Some(v) if v > 0 => rep.members.push(k),
                Some(_) => rep.non_members.push(k),
            }
        }
    }
    rep.support_interval(mu_inf, rz);
    Ok(rep)
}

/// `d R_f^0 = {n, …, k_max} ∖ d R_Z` when the support of `μ^(∞)` outside
/// `d R_Z` is an interval starting at n (up to `d R_Z`) and reaches far
/// enough. For n = 3 the reach condition is `k_max >= d - 1`.
pub fn roots_from_interval(mu_inf: &[Option<i64>], rz: &[Rat], n: usize, d: u32) -> Result<RootReport> {
    let cs = cs_set(rz, n, d)?;
    if let Some(&k) = cs.iter().find(|&&k| k < n as i64) {
        return Err(Error::HypothesisFailed("cs-above-n".into(), format!("CS(f) contains {k} below n = {n}")));
    }
    let dd = d as i64;
    let top = n as i64 * dd;
    if let Some(k) = (1..top).find(|&k| at(mu_inf, k).is_none()) {
        return Err(Error::UncertifiedRanks(format!("mu at E_inf, degree {k}")));
    }
    let loc = local_degrees(rz, d);
    let supp: Vec<i64> = (1..top).filter(|&k| !loc.contains(&k) && at(mu_inf, k).unwrap() > 0).collect();
    let (Some(&kmin), Some(&kmax)) = (supp.first(), supp.last()) else {
        return Err(Error::HypothesisFailed("connected-support".into(), "support is empty outside d R_Z".into()));
    };
    let span: Vec<i64> = (kmin..=kmax).filter(|k| !loc.contains(k)).collect();
    if span != supp {
        let gaps: Vec<i64> = span.iter().copied().filter(|k| !supp.contains(k)).collect();
        return Err(Error::HypothesisFailed("connected-support".into(), format!("gaps at {gaps:?}")));
    }
    let lead: Vec<i64> = (n as i64..kmin).filter(|k| !loc.contains(k)).collect();
    if !lead.is_empty() {
        return Err(Error::HypothesisFailed("support-starts-at-n".into(), format!("k_min = {kmin}, missing {lead:?}")));
    }
    let (reach_ok, reach) = if n == 3 {
        (kmax >= dd - 1, format!("k_max = {kmax} >= d - 1 = {}", dd - 1))
    } else {
        let m = loc.iter().max().copied();
        (m.map_or(true, |m| kmax >= m - dd), format!("k_max = {kmax}, max d R_Z = {m:?}"))
    };
    if !reach_ok {
        return Err(Error::HypothesisFailed("support-reach".into(), reach));
    }
    let mut rep = RootReport::new(RootMethod::Interval, n, d, cs);
    for (name, detail) in [
        ("connected-support", format!("{kmin}..={kmax} outside d R_Z")),
        ("support-starts-at-n", format!("k_min = {kmin}")),
        ("support-reach", reach),
    ] {
        rep.hypotheses.push(Condition { name: name.into(), holds: true, detail });
    }
    rep.k_min = Some(kmin);
    rep.k_max = Some(kmax);
    for k in 1..top {
        if in_rz(Rat::new(k, dd), rz) {
            rep.local.push(k);
        } else if k >= n as i64 && k <= kmax {
            rep.members.push(k);
        } else {
            rep.non_members.push(k);
        }
    }
    Ok(rep)
}

/// The strongest available determination: the support route, else the
/// interval route, else degree by degree. Failures of the first two are
/// recorded in `notes` and in the reasons of undecided degrees.
pub fn determine_roots(mu_inf: &[Option<i64>], rz: &[Rat], n: usize, d: u32) -> Result<RootReport> {
    let first = match roots_from_support(mu_inf, rz, n, d) {
        Ok(r) => return Ok(r),
        Err(e @ (Error::EmptyRz | Error::Unsupported(_))) => return Err(e),
        Err(e) => e,
    };
    let second = match roots_from_interval(mu_inf, rz, n, d) {
        Ok(mut r) => {
            r.notes.push(format!("support route: {first}"));
            return Ok(r);
        }
        Err(e) => e,
    };
    let mut rep = roots_criterion(mu_inf, rz, n, d)?;
    rep.notes.push(format!("support route: {first}"));
    rep.notes.push(format!("interval route: {second}"));
    let cs: BTreeSet<i64> = rep.cs.iter().copied().collect();
    for u in rep.undecided.iter_mut() {
        if u.reason == Reason::ShiftedLocalRoot && !cs.contains(&u.k) {
            u.reason = Reason::HypothesisFails;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> Rat {
        Rat::new(a, b)
    }

    fn row(vals: &[i64]) -> Vec<Option<i64>> {
        vals.iter().map(|&v| Some(v)).collect()
    }

    #[test]
    fn cs_empty_when_roots_twelfths() {
        let rz: Vec<Rat> = (5..=18).map(|k| q(k, 12)).collect();
        assert!(cs_set(&rz, 3, 6).unwrap().is_empty());
    }

    #[test]
    fn cs_single_half() {
        assert!(cs_set(&[q(1, 2)], 3, 6).unwrap().is_empty());
        assert_eq!(cs_set(&[], 3, 6), Err(Error::EmptyRz));
    }

    #[test]
    fn cs_contains_shifted_root() {
        let rz = [q(5, 18), q(4, 3)];
        assert!(cs_set(&rz, 3, 9).unwrap().contains(&3));
    }

    #[test]
    fn alpha_f_is_min() {
        assert_eq!(alpha_f(q(5, 6), 4, 4), q(5, 6));
        assert_eq!(alpha_f(q(3, 4), 4, 6), q(2, 3));
    }

    #[test]
    fn interval_synthetic() {
        // support {3,4,6,7}, 5 local
        let mut v = vec![0; 18];
        for k in [3, 4, 5, 6, 7] {
            v[k] = 1;
        }
        let rz = [q(5, 6)];
        let r = roots_from_interval(&row(&v), &rz, 3, 6).unwrap();
        assert_eq!(r.members, vec![3, 4, 6, 7]);
        assert_eq!(r.local, vec![5]);
    }

    #[test]
    fn interval_needs_start_at_n() {
        let mut v = vec![0; 18];
        for k in [4, 5, 6, 7] {
            v[k] = 1;
        }
        let e = roots_from_interval(&row(&v), &[q(1, 1)], 3, 6).unwrap_err();
        assert!(matches!(e, Error::HypothesisFailed(ref c, _) if c == "support-starts-at-n"));
    }

    #[test]
    fn uncertified_entries_stay_undecided() {
        let mut v = row(&[0, 0, 0, 0, 1, 0, 1]);
        v.resize(15, None);
        let r = roots_criterion(&v, &[q(1, 1)], 3, 5).unwrap();
        assert_eq!(r.members, vec![4, 6]);
        assert!(r.undecided.iter().all(|u| u.reason == Reason::Uncertified && u.k >= 7));
    }
}
