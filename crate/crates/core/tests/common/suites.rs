//! The property suites. Each returns the number of cases it ran, so the
//! acceptance harness can report it; randomized suites use a fixed seed.

use std::collections::HashMap;
use std::fmt::Debug;
use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use polespec::decompose::{decompose_module, parse_generators, Decomposition, DecompositionReport};
use polespec::exactla::{rank, RankPolicy, SparseMatrix};
use polespec::koszul::{complement_betti, d_matrix, e1_table, wedge_df_matrix, E1Table};
use polespec::pages::{page_tables_checked, PageOptions, Which};
use polespec::polyring::{form_dim, monomials, parse_polynomial, HomogPoly};
use polespec::series::{chi_from_arrays, LaurentPoly};

use super::{decomposition, oracle, policy, Example, EX_ARR6, EX_QUADRICS, EX_QUARTIC, EX_SEXTIC, SF_ARRANGEMENT};

pub const CASES: u32 = 100;

const VARS: [&str; 4] = ["x", "y", "z", "w"];

fn drive<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<usize, String>
where
    S: Strategy,
    S::Value: Debug,
{
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map(|_| cases as usize).map_err(|e| e.to_string())
}

fn monomial_text(e: &[u32]) -> String {
    let parts: Vec<String> = e
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(i, &a)| if a == 1 { VARS[i].to_string() } else { format!("{}^{a}", VARS[i]) })
        .collect();
    parts.join("*")
}

/// A random form of degree `d` in `n` variables with a few small integer
/// coefficients, as text.
pub fn form_text(n: usize, d: u32, terms: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = String> {
    let monos = monomials(n, d as i64);
    let len = monos.len();
    let coef = (-3i64..=3).prop_filter("nonzero", |c| *c != 0);
    prop::collection::vec((0..len, coef), terms).prop_map(move |ts| {
        let parts: Vec<String> = ts.iter().map(|&(i, c)| format!("({c})*{}", monomial_text(&monos[i]))).collect();
        parts.join("+")
    })
}

/// `(n, f)` with `d` drawn per `n` and the zero form rejected.
pub fn forms(n3: std::ops::RangeInclusive<u32>, n4: std::ops::RangeInclusive<u32>) -> impl Strategy<Value = (usize, String)> {
    let three = n3.prop_flat_map(|d| form_text(3, d, 2..=6)).prop_map(|s| (3usize, s));
    let four = n4.prop_flat_map(|d| form_text(4, d, 2..=7)).prop_map(|s| (4usize, s));
    prop_oneof![three, four].prop_filter("nonzero form", |(n, s)| parse_polynomial(s, *n).is_ok())
}

fn parse(n: usize, s: &str) -> HomogPoly {
    parse_polynomial(s, n).unwrap()
}

/// For n = 4, H^1 of the df∧ complex vanishes in degrees up to `k_max`,
/// which holds when the singular locus of f = 0 has dimension at most one.
fn low_cohomology_vanishes(f: &HomogPoly, k_max: i64) -> bool {
    if f.n < 4 {
        return true;
    }
    let d = f.d as i64;
    let rk = |p: usize, k: i64| {
        if k < p as i64 || form_dim(f.n, p, k) == 0 {
            return 0;
        }
        rank(&wedge_df_matrix(f, p, k).unwrap(), &policy()).unwrap().rank
    };
    (1..=k_max).all(|k| form_dim(f.n, 1, k) as usize == rk(1, k) + rk(0, k - d))
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

/// Euler identity μ - ν + ρ = γ on every degree of the E1 table.
pub fn euler_identity(cases: u32) -> Result<usize, String> {
    drive(cases, forms(2..=5, 2..=3), |(n, s)| {
        let f = parse(n, &s);
        let k_max = (n as i64 + 1) * f.d as i64;
        prop_assume!(low_cohomology_vanishes(&f, k_max));
        let e1 = e1_table(&f, k_max, &policy()).map_err(|e| fail(e.to_string()))?;
        for k in 0..=k_max {
            let lhs = e1.mu_at(k) - e1.nu_at(k) + e1.rho_at(k);
            prop_assert_eq!(lhs, e1.gamma[k as usize], "k = {}", k);
            prop_assert!(e1.mu_at(k) >= 0 && e1.nu_at(k) >= 0 && e1.rho_at(k) >= 0);
        }
        Ok(())
    })
}

/// Later pages never grow, and for n = 3 the drops of μ, ν, ρ are the
/// ranks of the same differentials.
pub fn page_monotonicity(cases: u32) -> Result<usize, String> {
    drive(cases, forms(2..=4, 2..=3), |(n, s)| {
        let f = parse(n, &s);
        let d = f.d as i64;
        let k_max = n as i64 * d - 1;
        prop_assume!(low_cohomology_vanishes(&f, k_max));
        let pol = policy();
        let e1 = e1_table(&f, k_max, &pol).map_err(|e| fail(e.to_string()))?;
        let t = page_tables_checked(&f, &e1, n, k_max, &pol, &PageOptions::default()).map_err(|e| fail(e.to_string()))?;
        for r in 1..n {
            for k in 0..=k_max {
                for w in [Which::M, Which::N, Which::Q] {
                    let (a, b) = (t.get(w, r, k), t.get(w, r + 1, k));
                    prop_assert!(0 <= b && b <= a, "{:?} at r = {}, k = {}: {} then {}", w, r, k, a, b);
                }
            }
            if n == 3 {
                let rd = r as i64 * d;
                let drop = |w: Which, k: i64| t.get(w, r, k) - t.get(w, r + 1, k);
                for j in rd..=k_max - rd {
                    prop_assert_eq!(drop(Which::N, j), drop(Which::M, j - rd) + drop(Which::Q, j + rd), "ν drop at r = {}, k = {}", r, j);
                }
            }
        }
        Ok(())
    })
}

fn sum_is_zero(parts: &[SparseMatrix]) -> bool {
    let mut acc: HashMap<(usize, usize), i64> = HashMap::new();
    for m in parts {
        for (r, c, v) in m.triplets() {
            *acc.entry((r, c)).or_default() += v;
        }
    }
    acc.values().all(|&v| v == 0)
}

/// d² = 0, (df∧)² = 0 and d df∧ + df∧ d = 0 on random forms.
pub fn complex_identities(cases: u32) -> Result<usize, String> {
    let strat = forms(2..=5, 2..=4).prop_flat_map(|(n, s)| (Just(n), Just(s), 0..n - 1, 0i64..=8));
    drive(cases, strat, |(n, s, p, k)| {
        let f = parse(n, &s);
        let d = f.d as i64;
        let k = p as i64 + k;
        let dd = d_matrix(n, p + 1, k).unwrap().mul(&d_matrix(n, p, k).unwrap()).unwrap();
        prop_assert!(dd.is_zero(), "d² ≠ 0 on Ω^{}_{}", p, k);
        let ww = wedge_df_matrix(&f, p + 1, k + d).unwrap().mul(&wedge_df_matrix(&f, p, k).unwrap()).unwrap();
        prop_assert!(ww.is_zero(), "(df∧)² ≠ 0 on Ω^{}_{}", p, k);
        let a = d_matrix(n, p + 1, k + d).unwrap().mul(&wedge_df_matrix(&f, p, k).unwrap()).unwrap();
        let b = wedge_df_matrix(&f, p + 1, k).unwrap().mul(&d_matrix(n, p, k).unwrap()).unwrap();
        prop_assert!(sum_is_zero(&[a, b]), "d and df∧ do not anticommute on Ω^{}_{}", p, k);
        Ok(())
    })
}

fn low_rank_matrix() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, i64)>)> {
    (1usize..=14, 1usize..=14, 0usize..=7).prop_flat_map(|(rows, cols, inner)| {
        let b = prop::collection::vec(-4i64..=4, rows * inner);
        let c = prop::collection::vec(-4i64..=4, inner * cols);
        (Just(rows), Just(cols), Just(inner), b, c).prop_map(|(rows, cols, inner, b, c)| {
            let mut trips = Vec::new();
            for i in 0..rows {
                for j in 0..cols {
                    let v: i64 = (0..inner).map(|l| b[i * inner + l] * c[l * cols + j]).sum();
                    if v != 0 {
                        trips.push((i, j, v));
                    }
                }
            }
            (rows, cols, trips)
        })
    })
}

/// Modular ranks agree with exact ranks, on products of random factors
/// and on the df∧ matrices of random forms.
pub fn modular_vs_exact(cases: u32) -> Result<usize, String> {
    let wedge = forms(2..=4, 2..=3).prop_flat_map(|(n, s)| (Just(n), Just(s), 0..n, 0i64..=6));
    let strat = (low_rank_matrix(), wedge, any::<u64>());
    drive(cases, strat, |((rows, cols, trips), (n, s, p, k), seed)| {
        let m = SparseMatrix::from_triplets(rows, cols, &trips).unwrap();
        let f = parse(n, &s);
        let w = wedge_df_matrix(&f, p, p as i64 + k).unwrap();
        for mat in [&m, &w] {
            let exact = rank(mat, &RankPolicy::exact()).unwrap().rank;
            for pol in [RankPolicy::default(), RankPolicy::modular(1, seed), RankPolicy::modular(3, seed)] {
                let r = rank(mat, &pol).unwrap();
                prop_assert_eq!(r.rank, exact, "{}x{} matrix, policy {:?}", mat.nrows, mat.ncols, pol);
            }
        }
        Ok(())
    })
}

/// χ_f is a polynomial: μ_{k-d} + ρ_{k+d} = ν_k once k is large, reached
/// within the table, and the E2 page gives the same series as E1.
pub fn chi_tail(cases: u32) -> Result<usize, String> {
    drive(cases, forms(3..=4, 2..=3), |(n, s)| {
        let f = parse(n, &s);
        let d = f.d as i64;
        let pol = policy();
        let cap = (n as i64 + 3) * d - n as i64;
        prop_assume!(low_cohomology_vanishes(&f, cap));
        let e1 = e1_table(&f, cap, &pol).map_err(|e| fail(e.to_string()))?;
        let chi = chi_from_arrays(&e1.mu, &e1.nu, &e1.rho, f.d).map_err(|e| fail(format!("{e}")))?;
        let coeff = |k: i64| e1.mu_at(k) - e1.nu_at(k + d) + e1.rho_at(k + 2 * d);
        let known = cap - 2 * d;
        let top = chi.chi.degree().unwrap_or(0);
        prop_assert!(top <= known - d, "degree {} too close to the end of the known range {}", top, known);
        for k in top + 1..=known {
            prop_assert_eq!(e1.mu_at(k), e1.nu_at(k + d) - e1.rho_at(k + 2 * d), "tail at k = {}", k);
        }
        for k in 0..=known {
            prop_assert_eq!(chi.chi.coeff(k), coeff(k));
        }
        if n == 3 || d == 2 {
            let t = page_tables_checked(&f, &e1, 2, cap, &pol, &PageOptions::default()).map_err(|e| fail(e.to_string()))?;
            for k in 0..=known {
                let c2 = t.mu_at(2, k) - t.nu_at(2, k + d) + t.rho_at(2, k + 2 * d);
                prop_assert_eq!(c2, coeff(k), "E2 and E1 Euler series differ at k = {}", k);
            }
        }
        Ok(())
    })
}

pub fn sf_table() -> &'static E1Table {
    static T: OnceLock<E1Table> = OnceLock::new();
    T.get_or_init(|| {
        let f = parse(4, SF_ARRANGEMENT);
        e1_table(&f, 4 * f.d as i64 + 2, &policy()).unwrap()
    })
}

/// Counts identity evaluations and records the failing ones.
#[derive(Default)]
pub struct Tally {
    pub cases: usize,
    pub failures: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self) -> Result<usize, String> {
        if self.failures.is_empty() {
            Ok(self.cases)
        } else {
            Err(format!("{} of {} failed: {}", self.failures.len(), self.cases, self.failures.join("; ")))
        }
    }
}

/// The symmetries of the Euler series of the strongly free arrangement of
/// degree 8, recomputed here from its E1 table, one coefficient at a time.
pub fn strongly_free_identities() -> Result<usize, String> {
    let e1 = sf_table();
    let d = e1.d as i64;
    let top = 4 * d + 2;
    let s = |v: &[i64]| LaurentPoly::from_slice(0, v).truncate(top);
    let (mu, nu, rho) = (s(&e1.mu), s(&e1.nu), s(&e1.rho));
    let (mt, nt, rt) = (mu.diff_pow(2).truncate(top), nu.diff_pow(2).truncate(top), rho.diff_pow(2).truncate(top));
    let base = LaurentPoly::from_pairs((1..d).map(|e| (e, 1)));
    let gp = base.mul(&base);
    let a = gp.shift(2).sub(&mt);
    let b = gp.shift(d + 1).scale(2).sub(&nt);
    let c = gp.shift(2 * d).sub(&rt);
    let mut t = Tally::default();
    for k in 0..=top {
        t.check(a.coeff(k) - b.coeff(k) + c.coeff(k) == 0, || format!("a - b + c at {k}"));
        t.check(a.coeff(top - k) == c.coeff(k), || format!("a/c reciprocity at {k}"));
        t.check(b.coeff(top - k) == b.coeff(k), || format!("b self-reciprocity at {k}"));
        t.check(a.coeff(k) == 0 || (d + 3..=2 * d).contains(&k), || format!("a supported off [d+3, 2d] at {k}"));
        t.check(c.coeff(k) == 0 || (2 * d + 2..=3 * d - 1).contains(&k), || format!("c supported off [2d+2, 3d-1] at {k}"));
    }
    t.check(a.coeff(2 * d) == 1 && c.coeff(2 * d + 2) == 1, || "a_2d = c_2d+2 = 1".into());
    // the second difference of χ_f, then χ_f itself
    let chit = mt.sub(&nt.shift(-d)).add(&rt.shift(-2 * d));
    let chi = chit.integrate(2, 4 * d);
    t.check(chi.degree().is_some_and(|e| e <= 2 * d), || format!("χ_f = {chi} is not of degree <= 2d"));
    for k in -2..=3 * d {
        t.check(chi.coeff(2 * d - k) == chi.coeff(k), || format!("χ_f symmetry at {k}"));
    }
    for (k, want) in [(2, 0), (d, 1), (d + 1, -2), (d + 2, 1), (2 * d, 0)] {
        t.check(chit.coeff(k) == want, || format!("second difference of χ_f at {k} is {}, expected {want}", chit.coeff(k)));
    }
    let eps = a.sub(&c.shift(-d)).shift(-d).add(&LaurentPoly::monomial(2, 1)).sub(&LaurentPoly::monomial(d, 1));
    let lhs = chit.sub(&LaurentPoly::from_pairs([(d, 1), (d + 1, -2), (d + 2, 1)]));
    let rhs = eps.sub(&eps.shift(d));
    for k in -2 * d..=4 * d {
        t.check(lhs.coeff(k) == rhs.coeff(k), || format!("ε factorization at {k}"));
        t.check(eps.coeff(d + 2 - k) == -eps.coeff(k), || format!("ε antisymmetry at {k}"));
        t.check(eps.coeff(k) == 0 || (3..=d - 1).contains(&k), || format!("ε supported off [3, d-1] at {k}"));
    }
    // D(χ_f - v^d), split at d
    let hat = chi.sub(&LaurentPoly::monomial(d, 1));
    let dhat = hat.diff_pow(1);
    let low = dhat.window(i64::MIN / 4, d);
    let high = dhat.sub(&low);
    for k in -2..=3 * d {
        t.check(low.coeff(2 * d + 1 - k) == -high.coeff(k), || format!("antisymmetry of the split at {k}"));
        t.check(low.coeff(d + 1 - k) == low.coeff(k), || format!("symmetry of the low part at {k}"));
    }
    t.finish()
}

/// One of the examples with its decompositions: M from the saturations,
/// N derived by duality, and N, Q decomposed directly up to `k_direct`.
pub struct DualityData {
    pub name: &'static str,
    pub report: DecompositionReport,
    pub e1_k_max: i64,
    pub nu_direct: Decomposition,
    pub rho_direct: Decomposition,
}

pub fn duality_data() -> &'static [DualityData] {
    static D: OnceLock<Vec<DualityData>> = OnceLock::new();
    D.get_or_init(|| {
        let list: [(&str, &Example, i64, i64, i64); 4] = [
            ("quadrics", &EX_QUADRICS, 16, 24, 16),
            ("quartic", &EX_QUARTIC, 15, 24, 15),
            ("arrangement", &EX_ARR6, 22, 36, 18),
            ("sextic", &EX_SEXTIC, 24, 30, 21),
        ];
        list.iter()
            .map(|&(name, ex, k_max, k_e1, k_direct)| {
                let f = ex.f();
                let e1 = e1_table(&f, k_e1, &policy()).unwrap();
                let report = decomposition(ex, k_max, &e1);
                let gens = parse_generators(ex.ideal_e, ex.n).unwrap();
                let nu_direct = decompose_module(&f, Which::N, &gens, k_direct, &policy()).unwrap();
                let rho_direct = decompose_module(&f, Which::Q, &gens, k_direct, &policy()).unwrap();
                DualityData { name, report, e1_k_max: e1.k_max, nu_direct, rho_direct }
            })
            .collect()
    })
}

/// The duality relations between the parts of M, N and Q, coefficient by
/// coefficient, with N and Q also decomposed directly.
pub fn duality_identities() -> Result<usize, String> {
    let mut t = Tally::default();
    for dd in duality_data() {
        let rep = &dd.report;
        let nd = rep.n as i64 * rep.d as i64;
        let km = rep.k_max;
        let kn = dd.nu_direct.k_max;
        let name = dd.name;
        let max = rep.m.third_max.clone().unwrap_or_default();
        let def = rep.m.third_def.clone().unwrap_or_default();
        let max2 = max.diff_pow(2);
        let rho2 = rep.rho.diff_pow(2);
        t.check(rep.rho_gen.all_nonnegative(), || format!("{name}: Diff² ρ has a negative coefficient"));
        for k in 0..=km {
            let j = nd + 2 - k;
            if (0..=dd.e1_k_max).contains(&j) {
                t.check(max2.coeff(k) == rep.rho_gen.coeff(j), || format!("{name}: Diff² μ‴_max at {k} vs Diff² ρ at {j}"));
            }
            if j <= km && j >= 0 {
                t.check(rho2.coeff(j) == rep.rho_gen.coeff(j), || format!("{name}: ρ generator at {j}"));
            }
            let j1 = nd + 1 - k;
            if (0..=kn).contains(&j1) {
                t.check(rep.m.second_gen.coeff(k) == dd.nu_direct.second_gen.coeff(j1), || {
                    format!("{name}: Diff μ″ at {k} vs directly computed Diff ν″ at {j1}")
                });
            }
            let j0 = nd - k;
            if (0..=kn).contains(&j0) {
                t.check(def.coeff(k) == dd.nu_direct.prime.coeff(j0), || format!("{name}: μ‴_def at {k} vs directly computed ν′ at {j0}"));
            }
        }
        for k in 0..=kn.min(km) {
            t.check(rep.nu_prime.coeff(k) == dd.nu_direct.prime.coeff(k), || format!("{name}: derived ν′ vs direct at {k}"));
            t.check(rep.nu_second.coeff(k) == dd.nu_direct.second.coeff(k), || format!("{name}: derived ν″ vs direct at {k}"));
            t.check(dd.rho_direct.prime.coeff(k) == 0 && dd.rho_direct.second.coeff(k) == 0, || format!("{name}: Q has a ′ or ″ part at {k}"));
        }
        t.check(!rep.nu_candidates.is_empty(), || format!("{name}: no admissible ν‴ split"));
        for c in &rep.nu_candidates {
            for k in 0..=km {
                let j = nd + 2 - k;
                if (0..=km).contains(&j) {
                    t.check(c.gen.coeff(k) == c.gen.coeff(j), || format!("{name}: Diff² ν‴_max symmetry at {k}"));
                }
            }
            for k in 0..=nd {
                let l = rep.m.prime.coeff(k) - c.def.coeff(nd - k);
                let r = rep.m.prime.coeff(nd - k) - c.def.coeff(k);
                t.check(l == r && l >= 0, || format!("{name}: μ′ / ν‴_def balance at {k}"));
            }
        }
    }
    t.finish()
}

fn lin_text(c: &[i64; 4]) -> String {
    let parts: Vec<String> = c.iter().enumerate().filter(|(_, &v)| v != 0).map(|(i, &v)| format!("({v})*{}", VARS[i])).collect();
    format!("({})", parts.join("+"))
}

/// The arrangement xyzw(x+y+z)(y-z+w) after a random change of
/// coordinates: no H^0 and alternating sum 2 in the degree-d complex.
pub fn complement_cohomology(cases: u32) -> Result<usize, String> {
    let forms: [[i64; 4]; 6] = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 1, 1, 0], [0, 1, -1, 1]];
    let strat = (
        prop::collection::vec(-2i64..=2, 6),
        prop::collection::vec(-2i64..=2, 6),
        Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    );
    drive(cases, strat, move |(lo, up, perm)| {
        // G = L U P with unit triangular L, U
        let mut l = [[0i64; 4]; 4];
        let mut u = [[0i64; 4]; 4];
        let mut idx = 0;
        for i in 0..4 {
            l[i][i] = 1;
            u[i][i] = 1;
            for j in 0..i {
                l[i][j] = lo[idx];
                u[j][i] = up[idx];
                idx += 1;
            }
        }
        let mut g = [[0i64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let v: i64 = (0..4).map(|m| l[i][m] * u[m][j]).sum();
                g[i][perm[j]] = v;
            }
        }
        let text: Vec<String> = forms
            .iter()
            .map(|a| {
                let mut c = [0i64; 4];
                for (b, cb) in c.iter_mut().enumerate() {
                    *cb = (0..4).map(|i| a[i] * g[i][b]).sum();
                }
                lin_text(&c)
            })
            .collect();
        let f = parse(4, &text.join("*"));
        let b = complement_betti(&f, true, &policy()).map_err(|e| fail(e.to_string()))?;
        prop_assert_eq!(b.dims[0], 0);
        prop_assert_eq!(b.alternating_sum(), 2, "dims {:?}", b.dims);
        prop_assert_eq!(&b.dims, &vec![0, 1, 5, 10, 8]);
        Ok(())
    })
}

/// The page tables against the filtered complex spectral sequence built
/// from its definition, for plane curves of degree 3 and 4.
pub fn brute_force_pages(cases: u32) -> Result<usize, String> {
    let which = prop_oneof![Just(Which::M), Just(Which::N), Just(Which::Q)];
    let probe = (which, 1usize..=3, 0i64..=12);
    let strat = ((3u32..=4).prop_flat_map(|d| form_text(3, d, 2..=6)), prop::collection::vec(probe, 3));
    drive(cases, strat.prop_filter("nonzero form", |(s, _)| parse_polynomial(s, 3).is_ok()), |(s, probes)| {
        let f = parse(3, &s);
        let d = f.d as i64;
        let k_max = 3 * d;
        let pol = policy();
        let e1 = e1_table(&f, k_max, &pol).map_err(|e| fail(e.to_string()))?;
        let t = page_tables_checked(&f, &e1, 3, k_max, &pol, &PageOptions::default()).map_err(|e| fail(e.to_string()))?;
        for (w, r, k) in probes {
            let k = k.min(k_max);
            let want = oracle::page_entry(&f, w, r, k) as i64;
            prop_assert_eq!(t.get(w, r, k), want, "{:?}^({})_{}", w, r, k);
        }
        Ok(())
    })
}
