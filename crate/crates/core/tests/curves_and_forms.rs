use hermcurve::families::{construct_family, FamilyId};
use hermcurve::gf::Field;
use hermcurve::hermitian::{
    dependent, diagonalize_congruence, enumerate_variety_points, find_projection_center, herm_eval, norm_preimage,
    project_from_center, projective_points, rank, tangent_hyperplane, verify_center, HermitianForm,
};
use hermcurve::linalg::Matrix;
use hermcurve::plane::{affine_points, affine_points_naive, branch_expansion, frobenius_point, is_smooth_at, PlaneCurve};
use hermcurve::poly::MultiPoly;
use hermcurve::series::{eval_bivariate, Series, Valuation};
use hermcurve::{Exec, Fe};
use proptest::prelude::*;

fn curve(f: &Field, q: u64, terms: &[(i64, u32, u32)]) -> PlaneCurve {
    let t: Vec<(Fe, Vec<u32>)> = terms.iter().map(|&(c, a, b)| (f.from_int(c), vec![a, b])).collect();
    PlaneCurve::new(f, q, MultiPoly::from_terms(f, 2, &t)).unwrap()
}

/// Number of points of a non-degenerate Hermitian variety in P^m over GF(q^2).
fn hermitian_count(m: u32, q: i64) -> usize {
    let s = if m.is_multiple_of(2) { 1 } else { -1 };
    ((q.pow(m + 1) + s) * (q.pow(m) - s) / (q * q - 1)) as usize
}

#[test]
fn graph_curve_has_one_point_per_abscissa() {
    let inst = construct_family(FamilyId::Ex54, 2, 0).unwrap();
    let f = inst.field();
    let pts = affine_points(f, &inst.curve.plane, 1, Exec::Sequential).unwrap();
    assert_eq!(pts.len(), 4);
    assert!(pts.iter().all(|p| is_smooth_at(f, &inst.curve.plane, p).unwrap()));
}

#[test]
fn cubic_artin_schreier_curves_over_gf9() {
    let gf9 = Field::new(3, 2).unwrap();
    for sign in [1, -1] {
        let c = curve(&gf9, 3, &[(1, 0, 3), (1, 0, 1), (sign, 2, 0)]);
        let pts = affine_points(&gf9, &c, 1, Exec::Parallel).unwrap();
        assert_eq!(pts.len(), 15);
        assert_eq!(pts, affine_points_naive(&gf9, &c, 1).unwrap());
        assert!(pts.iter().all(|p| is_smooth_at(&gf9, &c, p).unwrap()));
    }
    let inst = construct_family(FamilyId::Ex53, 3, 1).unwrap();
    assert_eq!(affine_points(inst.field(), &inst.curve.plane, 1, Exec::Sequential).unwrap().len(), 15);
}

#[test]
fn unit_polynomial_has_no_points() {
    let gf4 = Field::new(2, 2).unwrap();
    let one = PlaneCurve::new(&gf4, 2, MultiPoly::constant(2, Fe::ONE)).unwrap();
    assert!(affine_points(&gf4, &one, 1, Exec::Sequential).unwrap().is_empty());
    assert!(PlaneCurve::new(&gf4, 2, MultiPoly::zero(2)).is_err());
}

#[test]
fn cusp_is_singular() {
    let gf49 = Field::new(7, 2).unwrap();
    let c = curve(&gf49, 7, &[(1, 0, 2), (-1, 3, 0)]);
    let origin = c.point(&gf49, Fe::ZERO, Fe::ZERO);
    assert!(!is_smooth_at(&gf49, &c, &origin).unwrap());
    assert!(branch_expansion(&gf49, &c, &origin, 6).is_err());
    let off = c.point(&gf49, Fe::ONE, Fe::ZERO);
    assert!(is_smooth_at(&gf49, &c, &off).is_err());
}

#[test]
fn branches_solve_the_curve() {
    let inst = construct_family(FamilyId::Ex54, 2, 0).unwrap();
    let f = inst.field();
    let origin = inst.curve.plane.point(f, Fe::ZERO, Fe::ZERO);
    let b = branch_expansion(f, &inst.curve.plane, &origin, 10).unwrap();
    let mut cube = vec![Fe::ZERO; 4];
    cube[3] = Fe::ONE;
    assert_eq!(b.y, Series::new(cube, 10));

    let gf4 = Field::new(2, 2).unwrap();
    let line = curve(&gf4, 2, &[(1, 0, 1), (-1, 1, 0)]);
    let b = branch_expansion(&gf4, &line, &line.point(&gf4, Fe::ZERO, Fe::ZERO), 5).unwrap();
    assert_eq!(b.y, Series::parameter_plus(Fe::ZERO, 5));

    let inst = construct_family(FamilyId::Ex53, 3, 1).unwrap();
    let f = inst.field();
    let plane = &inst.curve.plane;
    for p in affine_points(f, plane, 1, Exec::Sequential).unwrap() {
        let b = branch_expansion(f, plane, &p, 8).unwrap();
        assert_eq!(eval_bivariate(f, &plane.f, &b.x, &b.y).valuation(), Valuation::AtLeast(8));
    }
}

#[test]
fn frobenius_permutes_points() {
    let inst = construct_family(FamilyId::Ex53, 3, 0).unwrap();
    let f = inst.field();
    let plane = &inst.curve.plane;
    let pts = affine_points(f, plane, 2, Exec::Parallel).unwrap();
    for p in &pts {
        let fp = frobenius_point(f, 3, p);
        assert!(plane.contains(f, fp.x, fp.y));
        assert_eq!(frobenius_point(f, 3, &fp), *p);
        assert_eq!(fp == *p, p.ext == 1);
    }
}

#[test]
fn enumeration_strategies_agree() {
    for (id, q) in [(FamilyId::Ex53, 3), (FamilyId::Ex54, 4), (FamilyId::Ex55, 3)] {
        let inst = construct_family(id, q, 1).unwrap();
        let f = inst.field();
        let plane = &inst.curve.plane;
        let seq = affine_points(f, plane, 1, Exec::Sequential).unwrap();
        assert_eq!(seq, affine_points(f, plane, 1, Exec::Parallel).unwrap());
        assert_eq!(seq, affine_points_naive(f, plane, 1).unwrap());
    }
}

#[test]
fn hermitian_point_counts() {
    let gf4 = Field::new(2, 2).unwrap();
    let h = HermitianForm::canonical(2, 4);
    assert_eq!(projective_points(&gf4, 4, 3).unwrap().len(), 85);
    assert_eq!(enumerate_variety_points(&gf4, &h, 1, Exec::Parallel).unwrap().len(), 45);
    let deg = HermitianForm::new(2, Matrix::diagonal(&[Fe::ONE, Fe::ZERO, Fe::ZERO, Fe::ZERO])).unwrap();
    let pts = enumerate_variety_points(&gf4, &deg, 1, Exec::Sequential).unwrap();
    assert_eq!(pts.len(), 21);
    assert!(pts.iter().all(|p| p[0].is_zero()));
    let line = HermitianForm::canonical(2, 2);
    assert_eq!(enumerate_variety_points(&gf4, &line, 1, Exec::Sequential).unwrap().len(), 3);

    for (p, k, q) in [(2u32, 2u32, 2i64), (3, 2, 3), (2, 4, 4)] {
        let f = Field::new(p, k).unwrap();
        for m in 1..=3u32 {
            if m == 3 && q == 4 {
                continue;
            }
            let h = HermitianForm::canonical(q as u64, m as usize + 1);
            let n = enumerate_variety_points(&f, &h, 1, Exec::Parallel).unwrap().len();
            assert_eq!(n, hermitian_count(m, q), "m={m} q={q}");
        }
    }
}

#[test]
fn evaluation_rank_and_tangents() {
    let gf4 = Field::new(2, 2).unwrap();
    let h = HermitianForm::canonical(2, 4);
    assert_eq!(herm_eval(&gf4, &h, &[Fe::ONE, Fe::ZERO, Fe::ZERO, Fe::ZERO]).unwrap(), Fe::ONE);
    let ones = vec![Fe::ONE; 4];
    assert!(herm_eval(&gf4, &h, &ones).unwrap().is_zero());
    assert_eq!(tangent_hyperplane(&gf4, &h, &ones).unwrap(), ones);
    assert!(tangent_hyperplane(&gf4, &h, &[Fe::ONE, Fe::ZERO, Fe::ZERO, Fe::ZERO]).is_err());
    assert_eq!(rank(&gf4, &h), 4);
    let d = HermitianForm::new(2, Matrix::diagonal(&[Fe::ONE, Fe::ONE, Fe::ONE, Fe::ZERO])).unwrap();
    assert_eq!(rank(&gf4, &d), 3);
    for p in enumerate_variety_points(&gf4, &h, 1, Exec::Sequential).unwrap() {
        let t = tangent_hyperplane(&gf4, &h, &p).unwrap();
        assert!(hermcurve::linalg::dot(&gf4, &t, &p).is_zero());
    }
}

#[test]
fn diagonalization_examples() {
    let gf4 = Field::new(2, 2).unwrap();
    let id = diagonalize_congruence(&gf4, &HermitianForm::canonical(2, 4)).unwrap();
    assert!(id.verified);
    assert_eq!(id.a, Matrix::identity(4));
    assert_eq!(id.d, Matrix::identity(4));

    let gf9 = Field::new(3, 2).unwrap();
    let mut c = Matrix::zero(4, 4);
    c.set(0, 3, Fe::ONE);
    c.set(3, 0, Fe::ONE);
    c.set(2, 2, gf9.from_int(2));
    c.set(1, 1, gf9.from_int(-1));
    let h = HermitianForm::new(3, c).unwrap();
    assert!(h.is_hermitian(&gf9));
    let cong = diagonalize_congruence(&gf9, &h).unwrap();
    assert!(cong.verified);
    assert_eq!(cong.d, Matrix::identity(4));

    for d in gf9.subfield_elements(3).unwrap().into_iter().filter(|x| !x.is_zero()) {
        let x = norm_preimage(&gf9, 3, gf9.inv(d).unwrap()).unwrap();
        assert_eq!(gf9.mul(d, gf9.pow(x, 4)), Fe::ONE);
        let cong = diagonalize_congruence(&gf9, &HermitianForm::new(3, Matrix::diagonal(&[d])).unwrap()).unwrap();
        assert_eq!(cong.d, Matrix::identity(1));
    }
}

#[test]
fn projection_center_on_a_family_curve() {
    let inst = construct_family(FamilyId::Ex54, 2, 0).unwrap();
    let f = inst.field();
    let pts: Vec<Vec<Fe>> = affine_points(f, &inst.curve.plane, 1, Exec::Sequential)
        .unwrap()
        .iter()
        .map(|p| hermcurve::embed::evaluate_map(f, &inst.curve, p).unwrap())
        .collect();
    let search = find_projection_center(f, &inst.form, &pts, &[]).unwrap();
    assert!(!herm_eval(f, &inst.form, &search.center).unwrap().is_zero());
    assert!(verify_center(f, &inst.form, &search.center, &pts, &[]));
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            assert!(!dependent(f, &[&pts[i], &pts[j], &search.center]));
        }
    }
    let proj = project_from_center(f, &inst.form, &search.center).unwrap();
    assert_eq!(proj.reduced.c.rank(f), 3);
    let imgs: std::collections::BTreeSet<Vec<Fe>> = pts.iter().map(|p| proj.project(f, p).unwrap()).collect();
    assert_eq!(imgs.len(), pts.len());
}

fn random_hermitian(f: &Field, q: u64, n: usize, codes: &[u32]) -> HermitianForm {
    let sub = f.subfield_elements(q).unwrap();
    let mut c = Matrix::zero(n, n);
    let mut it = codes.iter().cycle();
    for i in 0..n {
        c.set(i, i, sub[*it.next().unwrap() as usize % sub.len()]);
        for j in i + 1..n {
            let v = f.from_code(*it.next().unwrap() % f.order());
            c.set(i, j, v);
            c.set(j, i, f.pow(v, q));
        }
    }
    HermitianForm::new(q, c).unwrap()
}

proptest! {
    #[test]
    fn congruence_reaches_the_identity_block(
        (p, q) in prop::sample::select(vec![(2u32, 2u64), (3, 3), (2, 4)]),
        n in 1usize..5,
        codes in prop::collection::vec(0u32..1000, 10),
    ) {
        let k = if q == 4 { 4 } else { 2 };
        let f = Field::new(p, k).unwrap();
        let h = random_hermitian(&f, q, n, &codes);
        prop_assert!(h.is_hermitian(&f));
        let cong = diagonalize_congruence(&f, &h).unwrap();
        prop_assert!(cong.verified);
        prop_assert_eq!(cong.rank, rank(&f, &h));
        let back = cong.a.transpose().mul(&f, &h.c).mul(&f, &cong.a.map_pow(&f, q));
        prop_assert_eq!(back, cong.d);
    }

    #[test]
    fn every_canonical_point_pairs_to_zero_with_its_tangent(idx in 0usize..45) {
        let gf4 = Field::new(2, 2).unwrap();
        let h = HermitianForm::canonical(2, 4);
        let pts = enumerate_variety_points(&gf4, &h, 1, Exec::Sequential).unwrap();
        let p = &pts[idx];
        let t = tangent_hyperplane(&gf4, &h, p).unwrap();
        let expected: Vec<Fe> = p.iter().map(|&x| gf4.pow(x, 2)).collect();
        prop_assert_eq!(Some(t), hermcurve::linalg::normalize(&gf4, &expected));
    }
}
