mod common;

use polespec::certify::{milnor_euler_check, modified_euler_check, parse_rationals, CertReport};
use polespec::decompose::strongly_free_shortcut;
use polespec::exactla::{bareiss_rank, rank, RankPolicy, SparseMatrix};
use polespec::koszul::{e1_table, rho_closed_form_n3};
use polespec::pages::{beta, page_tables_checked, PageOptions, Which};
use polespec::polyring::{form_dim, parse_polynomial};
use polespec::roots::cs_set;
use polespec::series::{gamma_series, p_series, reciprocal, LaurentPoly};
use polespec::Error;

use common::{policy, run, EX_ARR6, EX_NONIC, EX_QUARTIC, EX_QUINTIC, SF_ARRANGEMENT};

#[test]
fn parses_the_quintic() {
    let f = EX_QUINTIC.f();
    assert_eq!(f.d, 5);
    assert_eq!(f.integer_terms().unwrap().len(), 3);
    assert!(parse_polynomial("x^2+y", 3).is_err());
}

#[test]
fn top_forms_of_degree_five() {
    assert_eq!(form_dim(4, 4, 5), 4);
    assert_eq!(form_dim(3, 0, 2), 6);
}

#[test]
fn gamma_of_sextic_surfaces() {
    let g = gamma_series(4, 6, 30);
    assert_eq!(g.coeff(12), 85);
    assert_eq!(g.coeff(4), 1);
    assert_eq!(g.coeff(20), 1);
    assert_eq!(g.coeff(21), 0);
}

#[test]
fn e1_of_the_six_plane_arrangement() {
    let f = EX_ARR6.f();
    let e1 = e1_table(&f, 18, &policy()).unwrap();
    assert_eq!(e1.rho_at(18), 5);
    assert_eq!(e1.mu_at(11), 82);
    assert_eq!(e1.nu_at(12), 12);
    assert_eq!(e1.mu_at(10), 68);
    assert!(e1.all_certified());
}

#[test]
fn rho_closed_form_for_plane_curves() {
    assert_eq!(rho_closed_form_n3(9, 6, 24).unwrap(), 1);
    for k in 0..40 {
        assert_eq!(rho_closed_form_n3(9, 9, k).unwrap(), 0);
    }
    // the non-reduced sextic: d = 6, reduced degree 3
    let f = parse_polynomial("x^2*(x^2+y^2+z^2)^2", 3).unwrap();
    let e1 = e1_table(&f, 20, &policy()).unwrap();
    for k in 0..=20 {
        assert_eq!(e1.rho_at(k), rho_closed_form_n3(6, 3, k).unwrap(), "k = {k}");
    }
}

#[test]
fn beta_on_the_first_page() {
    let f = EX_QUINTIC.f();
    assert_eq!(beta(&f, 0, 9, 1, &policy()).unwrap().beta, 27);
}

#[test]
fn second_difference_of_p2() {
    let g = p_series(2, 40).diff_pow(2).truncate(40);
    assert_eq!(g, LaurentPoly::monomial(0, 1));
    assert_eq!(p_series(1, 10).coeff(7), 1);
    assert_eq!(p_series(2, 10).coeff(7), 8);
}

#[test]
fn reciprocal_reads_backwards() {
    let s = LaurentPoly::from_pairs([(1, 2), (3, 5)]);
    assert_eq!(reciprocal(&s, 10), LaurentPoly::from_pairs([(9, 2), (7, 5)]));
}

#[test]
fn exact_and_modular_rank_agree() {
    // rank 2 with entries that vanish modulo small primes
    let trips = [(0, 0, 6), (0, 1, 10), (1, 0, 15), (1, 1, 25), (2, 0, 21), (2, 1, 35), (2, 2, 7)];
    let m = SparseMatrix::from_triplets(3, 3, &trips).unwrap();
    assert_eq!(bareiss_rank(&m), 2);
    assert_eq!(rank(&m, &RankPolicy::default()).unwrap().rank, 2);
    assert_eq!(rank(&m, &RankPolicy::exact()).unwrap().rank, 2);
}

#[test]
fn shortcut_matches_direct_rho() {
    let f = parse_polynomial(SF_ARRANGEMENT, 4).unwrap();
    let top = 4 * f.d as i64 + 2;
    let e1 = e1_table(&f, top, &policy()).unwrap();
    let (rho, nu) = strongly_free_shortcut(&e1.mu_series(), top, &gamma_series(4, f.d, top), 4, f.d).unwrap();
    assert_eq!(rho, e1.rho_series().truncate(top));
    assert_eq!(nu, e1.nu_series().truncate(top));
}

#[test]
fn shortcut_rejects_a_non_free_arrangement() {
    let f = EX_ARR6.f();
    let e1 = e1_table(&f, 20, &policy()).unwrap();
    let r = strongly_free_shortcut(&e1.mu_series(), 20, &gamma_series(4, f.d, 20), 4, f.d);
    assert!(matches!(r, Err(Error::NotStronglyFreeEvidence(_))), "{r:?}");
}

#[test]
fn shifted_local_degrees() {
    let rz = parse_rationals(EX_QUINTIC.rz).unwrap();
    assert!(cs_set(&rz, 3, 5).unwrap().is_empty());
    let rz = parse_rationals(EX_NONIC.rz).unwrap();
    assert_eq!(cs_set(&rz, 3, 9).unwrap(), vec![3]);
    assert!(matches!(cs_set(&[], 3, 9), Err(Error::EmptyRz)));
}

fn assert_monotone(reports: &[(usize, CertReport)]) {
    for pair in reports.windows(2) {
        let ((r0, a), (r1, b)) = (&pair[0], &pair[1]);
        if a.certified {
            assert!(b.certified, "certified on page {r0} but not on page {r1}");
            for w in [Which::M, Which::N, Which::Q] {
                assert!(b.range(w) >= a.range(w), "{w:?} range shrinks from page {r0} to {r1}");
            }
        }
    }
}

#[test]
fn certification_is_monotone_in_the_page() {
    for ex in [&EX_QUINTIC, &EX_QUARTIC] {
        let r = run(ex);
        let geo = ex.geometry();
        let milnor: Vec<_> = (2..=ex.r_max).filter_map(|p| milnor_euler_check(&r.pages, &geo, p, None).ok().map(|c| (p, c))).collect();
        assert_monotone(&milnor);
        let modified: Vec<_> = (1..=ex.r_max).filter_map(|p| modified_euler_check(&r.pages, &geo, p).ok().map(|c| (p, c))).collect();
        assert_monotone(&modified);
        assert!(milnor.iter().chain(&modified).any(|c| c.1.certified), "nothing certified for {}", ex.poly);
    }
}

#[test]
fn fermat_pages_degenerate_at_once() {
    let f = parse_polynomial("x^4+y^4+z^4", 3).unwrap();
    let e1 = e1_table(&f, 12, &policy()).unwrap();
    let t = page_tables_checked(&f, &e1, 3, 12, &policy(), &PageOptions::default()).unwrap();
    for k in 0..=12 {
        assert_eq!(t.mu_at(3, k), e1.mu_at(k));
        assert_eq!(e1.nu_at(k), 0);
    }
}
