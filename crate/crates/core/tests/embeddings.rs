use hermcurve::embed::{
    containment_check_symbolic, evaluate_map, frame, hyperplane_valuation, osculating_hyperplane, point_image,
    solve_dual_form, tangent_divisor_check, ParametrizedCurve,
};
use hermcurve::families::{construct_family, FamilyId};
use hermcurve::gf::Field;
use hermcurve::hermitian::{tangent_hyperplane, HermitianForm};
use hermcurve::pipeline::Context;
use hermcurve::plane::{affine_points, branch_expansion, is_smooth_at, CurvePoint, PlaneCurve};
use hermcurve::poly::MultiPoly;
use hermcurve::series::{Series, Valuation};
use hermcurve::wronskian::{rationality_valuation, wronskian, wronskian_identity, wronskian_valuation};
use hermcurve::{Exec, Fe};

fn context(id: FamilyId, q: u64, i: u32) -> Context {
    Context::new(construct_family(id, q, i).unwrap(), Exec::Parallel, None, 7, 12).unwrap()
}

fn smooth_points(ctx: &Context, m: u32) -> Vec<CurvePoint> {
    let f = ctx.field();
    let plane = &ctx.inst.curve.plane;
    affine_points(f, plane, m, Exec::Parallel)
        .unwrap()
        .into_iter()
        .filter(|p| is_smooth_at(f, plane, p).unwrap())
        .collect()
}

fn nonrational(ctx: &Context, n: usize) -> Vec<CurvePoint> {
    ctx.nonrational_places().unwrap().iter().take(n).map(|p| p.point).collect()
}

#[test]
fn image_of_the_origin() {
    let inst = construct_family(FamilyId::Ex54, 2, 0).unwrap();
    let f = inst.field();
    let origin = inst.curve.plane.point(f, Fe::ZERO, Fe::ZERO);
    assert_eq!(evaluate_map(f, &inst.curve, &origin).unwrap(), vec![Fe::ONE, Fe::ZERO, Fe::ZERO, Fe::ZERO]);
}

#[test]
fn rational_points_have_rational_images() {
    let ctx = context(FamilyId::Ex53, 3, 1);
    let f = ctx.field();
    for p in smooth_points(&ctx, 1) {
        let img = evaluate_map(f, &ctx.inst.curve, &p).unwrap();
        assert!(img.iter().all(|&a| f.in_subfield(a, 9)));
    }
    for p in nonrational(&ctx, 10) {
        let img = evaluate_map(f, &ctx.inst.curve, &p).unwrap();
        let frob: Vec<Fe> = img.iter().map(|&a| f.pow(a, 9)).collect();
        assert_ne!(frob, img);
    }
}

#[test]
fn tangent_hyperplane_contact_orders() {
    let ctx = context(FamilyId::Ex53, 3, 1);
    let f = ctx.field();
    let form = &ctx.inst.form;
    let q = 3;
    for p in smooth_points(&ctx, 1) {
        let b = branch_expansion(f, &ctx.inst.curve.plane, &p, 12).unwrap();
        let img = point_image(f, &ctx.inst.curve, &p, 12).unwrap();
        let h = tangent_hyperplane(f, form, &img).unwrap();
        assert_eq!(hyperplane_valuation(f, &ctx.inst.curve, &b, &h).unwrap(), Valuation::Finite(q + 1));
        let fr = frame(f, &ctx.inst.curve, &b).unwrap();
        let rec = tangent_divisor_check(f, &fr, form).unwrap();
        assert_eq!(rec.v_at_p, Valuation::Finite(q + 1));
        assert!(rec.fr_on_h);
        // a hyperplane missing the image
        let mut generic = vec![Fe::ZERO; 4];
        let k = img.iter().position(|a| !a.is_zero()).unwrap();
        generic[k] = Fe::ONE;
        assert_eq!(hyperplane_valuation(f, &ctx.inst.curve, &b, &generic).unwrap(), Valuation::Finite(0));
    }
    for p in nonrational(&ctx, 10) {
        let b = branch_expansion(f, &ctx.inst.curve.plane, &p, 12).unwrap();
        let rec = tangent_divisor_check(f, &frame(f, &ctx.inst.curve, &b).unwrap(), form).unwrap();
        assert_eq!(rec.v_at_p, Valuation::Finite(q));
        assert!(rec.fr_on_h);
    }
}

#[test]
fn tangent_check_rejects_points_off_the_variety() {
    let ctx = context(FamilyId::Ex53, 3, 1);
    let f = ctx.field();
    let canonical = HermitianForm::canonical(3, 4);
    let off = smooth_points(&ctx, 1).into_iter().find_map(|p| {
        let b = branch_expansion(f, &ctx.inst.raw.plane, &p, 8).unwrap();
        let fr = frame(f, &ctx.inst.raw, &b).unwrap();
        (!canonical.pairing(f, &fr.image(f), &fr.image(f)).is_zero()).then_some(fr)
    });
    assert!(tangent_divisor_check(f, &off.expect("some image is off the canonical variety"), &canonical).is_err());
}

#[test]
fn osculating_hyperplane_at_the_origin() {
    let inst = construct_family(FamilyId::Ex54, 2, 0).unwrap();
    let f = inst.field();
    let origin = inst.curve.plane.point(f, Fe::ZERO, Fe::ZERO);
    let b = branch_expansion(f, &inst.curve.plane, &origin, 8).unwrap();
    let fr = frame(f, &inst.curve, &b).unwrap();
    let osc = osculating_hyperplane(f, &fr).unwrap();
    assert_eq!(osc, vec![Fe::ZERO, Fe::ZERO, Fe::ONE, Fe::ZERO]);
    assert_eq!(osc, tangent_hyperplane(f, &inst.form, &fr.image(f)).unwrap());
}

#[test]
fn osculating_equals_tangent_in_canonical_coordinates() {
    for (id, q) in [(FamilyId::Ex53, 3u64), (FamilyId::Ex54, 4)] {
        let ctx = context(id, q, 1);
        let f = ctx.field();
        let mut pts = smooth_points(&ctx, 1);
        pts.truncate(6);
        pts.extend(nonrational(&ctx, 6));
        for p in pts {
            let b = branch_expansion(f, &ctx.canonical.plane, &p, 2 * q as usize + 4).unwrap();
            let fr = frame(f, &ctx.canonical, &b).unwrap();
            let osc = osculating_hyperplane(f, &fr).unwrap();
            let img = fr.image(f);
            let conj: Vec<Fe> = img.iter().map(|&a| f.pow(a, q)).collect();
            assert_eq!(Some(osc.clone()), hermcurve::linalg::normalize(f, &conj));
            if p.ext == 1 {
                assert_eq!(fr.valuation(f, &osc), Valuation::Finite(q as usize + 1));
            }
        }
    }
}

#[test]
fn dual_form_of_literal_coordinates() {
    let ctx = context(FamilyId::Ex53, 3, 0);
    let f = ctx.field();
    let rational: Vec<Vec<Fe>> =
        smooth_points(&ctx, 1).iter().map(|p| evaluate_map(f, &ctx.inst.raw, p).unwrap()).collect();
    let extra: Vec<Vec<Fe>> =
        nonrational(&ctx, 64).iter().map(|p| evaluate_map(f, &ctx.inst.raw, p).unwrap()).collect();
    let sol = solve_dual_form(f, 3, &rational, &extra).unwrap();
    assert_eq!(sol.nullity, 1);
    assert!(sol.hermitian);
    let c = sol.c.unwrap();
    assert_eq!(c.get(0, 3), Fe::ONE);
    assert_eq!(c.get(3, 0), Fe::ONE);
    assert_eq!(c.get(2, 2), f.from_int(2));
    assert_eq!(c.get(1, 1), f.from_int(-1));
    let off_pattern = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|&(i, j)| {
        !matches!((i, j), (0, 3) | (3, 0) | (1, 1) | (2, 2))
    });
    for (i, j) in off_pattern {
        assert!(c.get(i, j).is_zero(), "entry ({i},{j})");
    }
    assert_eq!(c.rank(f), 4);
}

#[test]
fn symbolic_containment() {
    for (id, q) in [(FamilyId::Ex54, 2u64), (FamilyId::Ex51, 2), (FamilyId::Ex53, 3), (FamilyId::Ex55, 3)] {
        let inst = construct_family(id, q, 0).unwrap();
        let (ok, residue) = containment_check_symbolic(inst.field(), &inst.curve, &inst.form).unwrap();
        assert!(ok && residue.is_zero(), "{id:?} q={q}");
    }
    let inst = construct_family(FamilyId::Ex51, 2, 0).unwrap();
    let f = inst.field();
    let raw_form = inst.raw_form.clone().unwrap();
    assert!(containment_check_symbolic(f, &inst.raw, &raw_form).unwrap().0);

    let gf4 = Field::new(2, 2).unwrap();
    let line = PlaneCurve::new(
        &gf4,
        2,
        MultiPoly::from_terms(&gf4, 2, &[(Fe::ONE, vec![0, 1]), (Fe::ONE, vec![1, 0])]),
    )
    .unwrap();
    let coords = vec![
        MultiPoly::one(2),
        MultiPoly::var(2, 0),
        MultiPoly::var(2, 1),
        MultiPoly::term(Fe::ONE, vec![2, 0]),
    ];
    let pc = ParametrizedCurve::new(line, coords).unwrap();
    let (ok, residue) = containment_check_symbolic(&gf4, &pc, &HermitianForm::canonical(2, 4)).unwrap();
    assert!(!ok);
    assert!(!residue.is_zero());
}

#[test]
fn small_wronskians() {
    let gf4 = Field::new(2, 2).unwrap();
    let one = Series::constant(Fe::ONE, 6);
    let t = Series::parameter_plus(Fe::ZERO, 6);
    let t2 = t.mul(&gf4, &t);
    let w = wronskian(&gf4, &[one.clone(), t.clone()], &[0, 1]).unwrap();
    assert_eq!(w.coeff(0), Fe::ONE);
    assert_eq!(wronskian_valuation(&gf4, &[one.clone(), t.clone()], &[0, 1]).unwrap(), Valuation::Finite(0));
    let w3 = wronskian(&gf4, &[one.clone(), t.clone(), t2.clone()], &[0, 1, 2]).unwrap();
    assert_eq!(w3.coeff(0), Fe::ONE);
    // ordinary derivatives would give 2 = 0 here
    assert_eq!(w3.valuation(), Valuation::Finite(0));
    assert!(wronskian(&gf4, &[one, t], &[1, 0]).is_err());
}

#[test]
fn valuation_identity_at_mixed_branches() {
    for (id, q) in [(FamilyId::Ex53, 3u64), (FamilyId::Ex54, 4), (FamilyId::Ex55, 3)] {
        let ctx = context(id, q, 0);
        let f = ctx.field();
        let mut pts = smooth_points(&ctx, 1);
        pts.truncate(5);
        pts.extend(nonrational(&ctx, 5));
        for p in pts {
            let b = branch_expansion(f, &ctx.canonical.plane, &p, 4 * q as usize + 8).unwrap();
            let fr = frame(f, &ctx.canonical, &b).unwrap();
            let rec = wronskian_identity(f, &fr, q as usize).unwrap();
            assert!(rec.pass, "{id:?} q={q} at {p:?}: {rec:?}");
        }
    }
}

#[test]
fn rationality_valuation_separates_points() {
    let ctx = context(FamilyId::Ex53, 3, 1);
    let f = ctx.field();
    let rational = smooth_points(&ctx, 1);
    assert_eq!(rational.len(), 15);
    for p in rational {
        let b = branch_expansion(f, &ctx.canonical.plane, &p, 10).unwrap();
        let rec = rationality_valuation(f, &frame(f, &ctx.canonical, &b).unwrap(), 3).unwrap();
        assert_eq!(rec.valuation, Valuation::Finite(1));
        assert!(rec.first_order && rec.conjugate_first_order);
    }
    for p in nonrational(&ctx, 20) {
        let b = branch_expansion(f, &ctx.canonical.plane, &p, 10).unwrap();
        let rec = rationality_valuation(f, &frame(f, &ctx.canonical, &b).unwrap(), 3).unwrap();
        assert_eq!(rec.valuation, Valuation::Finite(0));
        assert!(!rec.conjugate_first_order);
    }
}
