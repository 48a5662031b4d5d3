//! Worked examples and the runners shared by the integration tests.
#![allow(dead_code)]

pub mod oracle;
pub mod suites;

use polespec::certify::{certify_all, infinity_row, parse_rationals, row_values, CertSummary, Criterion, Flags, GeometricInput};
use polespec::decompose::{decompose_all, parse_generators, DecompositionReport};
use polespec::exactla::RankPolicy;
use polespec::koszul::{complement_betti, e1_table, ComplementBetti, E1Table};
use polespec::pages::{page_tables_checked, PageOptions, PageTable, Which};
use polespec::polyring::{parse_polynomial, HomogPoly};
use polespec::roots::{determine_roots, RootReport};
use polespec::series::{chi_from_arrays, ChiSpectrum, LaurentPoly};
use polespec::Error;

/// One example: the polynomial, how far to compute, and the geometric
/// input that the tool takes on trust.
#[derive(Clone, Debug)]
pub struct Example {
    pub poly: &'static str,
    pub n: usize,
    pub k_pages: i64,
    pub k_e1: i64,
    pub r_max: usize,
    pub rz: &'static str,
    pub chi_u: Option<i64>,
    pub flags: &'static str,
    pub ideal_e: &'static [&'static str],
}

impl Example {
    pub fn f(&self) -> HomogPoly {
        parse_polynomial(self.poly, self.n).unwrap()
    }

    pub fn geometry(&self) -> GeometricInput {
        GeometricInput {
            rz: parse_rationals(self.rz).unwrap(),
            chi_u: self.chi_u,
            flags: Flags::parse(self.flags).unwrap(),
            ..Default::default()
        }
    }
}

pub const EX_QUINTIC: Example = Example {
    poly: "x^5+y^4*z+x^3*y^2",
    n: 3,
    k_pages: 14,
    k_e1: 20,
    r_max: 3,
    // spectral numbers of x^5+y^4, and 1
    rz: "9/20,13/20,17/20,21/20,7/10,9/10,11/10,13/10,19/20,23/20,27/20,31/20,1",
    chi_u: Some(1),
    flags: "gh",
    ideal_e: &[],
};

pub const EX_CUSP_CUBE: Example = Example {
    poly: "(y*z-x^2)^3+y^6",
    n: 3,
    k_pages: 17,
    k_e1: 24,
    r_max: 3,
    rz: "5/12,6/12,7/12,8/12,9/12,10/12,11/12,12/12,13/12,14/12,15/12,16/12,17/12,18/12",
    chi_u: Some(-1),
    flags: "gh",
    ideal_e: &[],
};

pub const EX_NONIC: Example = Example {
    poly: "(y^2*z-x^3)^3+y^9",
    n: 3,
    k_pages: 26,
    k_e1: 36,
    r_max: 3,
    rz: "5/18,4/3",
    chi_u: Some(-1),
    flags: "gh",
    ideal_e: &[],
};

pub const EX_NONREDUCED: Example = Example {
    poly: "x^2*(x^2+y^2+z^2)^2",
    n: 3,
    k_pages: 17,
    k_e1: 24,
    r_max: 2,
    rz: "1/2,1",
    chi_u: Some(1),
    flags: "gh",
    ideal_e: &[],
};

const RZ_ARR9: &str = "1/4,1/2,2/3,3/4,1,4/3";

pub const EX_ARR9_A: Example = Example {
    poly: "x^4*y^2*z*(x+y+z)*(x+y)",
    n: 3,
    k_pages: 26,
    k_e1: 36,
    r_max: 3,
    rz: RZ_ARR9,
    chi_u: Some(1),
    flags: "gh",
    ideal_e: &[],
};

pub const EX_ARR9_B: Example = Example { poly: "x^5*y*z*(x+y+z)*(x+y)", ..EX_ARR9_A };

pub const EX_ARR9_C: Example = Example { poly: "x^3*y^3*z*(x+y+z)*(x+y)", ..EX_ARR9_A };

pub const EX_QUADRICS: Example = Example {
    poly: "(x^2+y^2+z^2+w^2)^2+w^4",
    n: 4,
    k_pages: 16,
    k_e1: 24,
    r_max: 2,
    rz: "3/4,1,5/4",
    chi_u: Some(-2),
    flags: "gh",
    ideal_e: &["x", "y", "z", "w"],
};

pub const EX_QUARTIC: Example = Example {
    poly: "x^3*z+x^2*y^2+y^3*w+y^2*w^2+x^2*w^2",
    n: 4,
    k_pages: 15,
    k_e1: 24,
    r_max: 3,
    rz: "5/6,1,3/2",
    chi_u: Some(-1),
    flags: "gh",
    ideal_e: &["x", "y", "w"],
};

pub const EX_ARR6: Example = Example {
    poly: "x*y*z*w*(x+y+z)*(y-z+w)",
    n: 4,
    k_pages: 23,
    k_e1: 36,
    r_max: 2,
    rz: "3/4,1,5/4,3/2",
    chi_u: None,
    flags: "gh,arr",
    ideal_e: &["y", "z", "x*w"],
};

pub const EX_SEXTIC: Example = Example {
    poly: "x^6+x^4*y*z+y^3*w^3+y^6",
    n: 4,
    k_pages: 12,
    k_e1: 30,
    r_max: 3,
    rz: "",
    chi_u: Some(-1),
    flags: "gh",
    ideal_e: &["x", "y", "w"],
};

/// The essential strongly free arrangement of degree 8.
pub const SF_ARRANGEMENT: &str = "x*y*z*w*(x+y+z)*(z+w)*(x+z)*(x+y)";

/// Everything computed for one example.
pub struct Run {
    pub f: HomogPoly,
    pub e1: E1Table,
    pub pages: PageTable,
    pub chi: Option<ChiSpectrum>,
    pub betti: Option<ComplementBetti>,
    pub summary: CertSummary,
    pub mu_inf: Vec<Option<i64>>,
    pub roots: Option<RootReport>,
}

pub fn policy() -> RankPolicy {
    RankPolicy::default()
}

/// E1 to `k_e1` (longer if the Euler series needs it), pages to `k_pages`,
/// certification, and the roots when R_Z is given.
pub fn run(ex: &Example) -> Run {
    let f = ex.f();
    let pol = policy();
    let d = f.d as i64;
    let mut e1 = e1_table(&f, ex.k_e1, &pol).unwrap();
    let mut chi = chi_from_arrays(&e1.mu, &e1.nu, &e1.rho, f.d);
    let cap = (ex.n as i64 + 3) * d - ex.n as i64;
    while matches!(chi, Err(Error::TailNotCancelled(_))) && e1.k_max < cap {
        e1 = e1_table(&f, (e1.k_max + d).min(cap), &pol).unwrap();
        chi = chi_from_arrays(&e1.mu, &e1.nu, &e1.rho, f.d);
    }
    let pages = page_tables_checked(&f, &e1, ex.r_max, ex.k_pages, &pol, &PageOptions::default()).unwrap();
    let geo = ex.geometry();
    let betti = geo.flags.complement_hypotheses(ex.n).then(|| complement_betti(&f, true, &pol).unwrap());
    let chi = chi.ok();
    let summary = certify_all(&pages, Some(&e1), chi.as_ref(), betti.as_ref(), &geo, None);
    let top = ex.n as i64 * d - 1;
    let mu_inf = row_values(&infinity_row(&pages, &summary.certificates(), Which::M, top).unwrap());
    let roots = (!geo.rz.is_empty()).then(|| determine_roots(&mu_inf, &geo.rz, ex.n, f.d).unwrap());
    Run { f, e1, pages, chi, betti, summary, mu_inf, roots }
}

pub fn decomposition(ex: &Example, k_max: i64, e1: &E1Table) -> DecompositionReport {
    let f = ex.f();
    let gens = parse_generators(ex.ideal_e, ex.n).unwrap();
    decompose_all(&f, e1, &gens, k_max, &policy()).unwrap()
}

/// A printed table row: the quantity, its page (1 for E1), the first
/// degree, and the values with blanks read as zero.
pub struct Row {
    pub which: Which,
    pub page: usize,
    pub from: i64,
    pub values: &'static [i64],
}

pub const fn row(which: Which, page: usize, from: i64, values: &'static [i64]) -> Row {
    Row { which, page, from, values }
}

/// Mismatches between the computed table and a printed row.
pub fn row_mismatches(t: &PageTable, r: &Row) -> Vec<String> {
    let mut out = Vec::new();
    for (i, &want) in r.values.iter().enumerate() {
        let k = r.from + i as i64;
        let got = t.get(r.which, r.page, k);
        if got != want {
            out.push(format!("{:?}^({})_{k} = {got}, expected {want}", r.which, r.page));
        }
    }
    out
}

pub fn gamma_mismatches(e1: &E1Table, from: i64, values: &[i64]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, &want) in values.iter().enumerate() {
        let k = from + i as i64;
        let got = e1.gamma.get(k as usize).copied().unwrap_or(0);
        if got != want {
            out.push(format!("γ_{k} = {got}, expected {want}"));
        }
    }
    out
}

pub fn series(text: &[(i64, i64)]) -> LaurentPoly {
    LaurentPoly::from_pairs(text.iter().copied())
}

/// `g · p^(m)` truncated at `hi`.
pub fn times_p(g: &[(i64, i64)], m: u32, hi: i64) -> LaurentPoly {
    series(g).integrate(m, hi)
}

pub fn certified_by(sum: &CertSummary, c: Criterion) -> Vec<(usize, Which, i64, Option<i64>)> {
    sum.reports
        .iter()
        .filter(|r| r.criterion == c && r.certified)
        .flat_map(|r| r.certificates.iter().map(|c| (c.page, c.which, c.k_hi, c.zero_above)))
        .collect()
}

/// Collects failures of one acceptance criterion.
#[derive(Default)]
pub struct Check {
    pub failures: Vec<String>,
}

impl Check {
    pub fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    pub fn eq<T: PartialEq + std::fmt::Debug>(&mut self, got: T, want: T, what: &str) {
        if got != want {
            self.failures.push(format!("{what}: got {got:?}, expected {want:?}"));
        }
    }

    pub fn extend(&mut self, v: Vec<String>) {
        self.failures.extend(v);
    }

    pub fn result(self) -> Result<(), String> {
        if self.failures.is_empty() {
            Ok(())
        } else {
            Err(self.failures.join("; "))
        }
    }
}
