use hermcurve::families::FamilyId;
use hermcurve::pipeline::{parse_checks, run_family, run_verify, with_retries, CheckKind, Context, VerifyOptions, MAX_RETRIES};
use hermcurve::report::Status;
use hermcurve::{Error, Exec};

fn opts(id: FamilyId, exec: Exec, seed: u64) -> VerifyOptions {
    let mut o = VerifyOptions::all(id);
    o.exec = exec;
    o.seed = seed;
    o.timings = false;
    o
}

#[test]
fn same_seed_gives_identical_reports() {
    for (id, q, i) in [(FamilyId::Ex53, 3, 1), (FamilyId::Ex54, 2, 0)] {
        let a = run_verify(id, q, i, &opts(id, Exec::Parallel, 11)).unwrap().to_json();
        let b = run_verify(id, q, i, &opts(id, Exec::Parallel, 11)).unwrap().to_json();
        assert_eq!(a, b);
    }
}

#[test]
fn sequential_and_parallel_reports_agree() {
    for (id, q, i) in [(FamilyId::Ex53, 3, 0), (FamilyId::Ex54, 4, 1), (FamilyId::Ex52, 2, 0)] {
        let s = run_verify(id, q, i, &opts(id, Exec::Sequential, 5)).unwrap().to_json();
        let p = run_verify(id, q, i, &opts(id, Exec::Parallel, 5)).unwrap().to_json();
        assert_eq!(s, p, "{id:?} q={q} i={i}");
    }
}

#[test]
fn other_seeds_reach_the_same_verdict() {
    let id = FamilyId::Ex55;
    let base = run_verify(id, 3, 2, &opts(id, Exec::Parallel, 0)).unwrap();
    assert_eq!(base.status, Status::Pass);
    for seed in [1, 99, 12345] {
        let r = run_verify(id, 3, 2, &opts(id, Exec::Parallel, seed)).unwrap();
        assert_eq!(r.status, Status::Pass, "seed {seed}");
    }
}

#[test]
fn family_batches_cover_every_component() {
    let reps = run_family(FamilyId::Ex51, 5, &opts(FamilyId::Ex51, Exec::Parallel, 0)).unwrap();
    assert_eq!(reps.iter().map(|r| r.instance.i).collect::<Vec<_>>(), vec![0, 1, 2]);
    assert!(reps.iter().all(|r| r.status == Status::Pass));
    assert!(run_family(FamilyId::Ex53, 4, &opts(FamilyId::Ex53, Exec::Parallel, 0)).is_err());
}

#[test]
fn check_names_and_aliases() {
    let c = parse_checks("lemma41, lemma42,LEMMA45", FamilyId::Ex53).unwrap();
    // canonical order, whatever the order given
    assert_eq!(c, vec![CheckKind::RationalityValuation, CheckKind::TangentDivisor, CheckKind::WronskianIdentity]);
    assert_eq!(parse_checks("dual_form", FamilyId::Ex54).unwrap(), vec![CheckKind::DualForm]);
    let twisted = parse_checks("all", FamilyId::Ex52).unwrap();
    assert!(twisted.contains(&CheckKind::Kappa));
    assert!(!twisted.contains(&CheckKind::RationalityEquivalence));
    let plain = parse_checks("all", FamilyId::Ex51).unwrap();
    assert!(!plain.contains(&CheckKind::Kappa));
    assert!(matches!(parse_checks("lemma99", FamilyId::Ex51), Err(Error::Invalid(_))));
}

#[test]
fn retries_double_the_truncation() {
    let mut seen = Vec::new();
    let r = with_retries(6, |t| {
        seen.push(t);
        if t < 24 {
            Err(Error::Unresolved(t))
        } else {
            Ok(t)
        }
    })
    .unwrap();
    assert_eq!(r, Some((24, 24)));
    assert_eq!(seen, vec![6, 12, 24]);

    let mut calls = 0;
    let r: Option<((), usize)> = with_retries(4, |t| {
        calls += 1;
        Err(Error::Unresolved(t))
    })
    .unwrap();
    assert!(r.is_none());
    assert_eq!(calls, MAX_RETRIES + 1);

    assert!(with_retries(4, |_| -> Result<(), Error> { Err(Error::Invalid("x".into())) }).is_err());
}

#[test]
fn status_precedence() {
    use Status::*;
    assert_eq!(Status::combine([Pass, Inconclusive, Pass]), Inconclusive);
    assert_eq!(Status::combine([Inconclusive, Fail, Pass]), Fail);
    assert_eq!(Status::combine([]), Pass);
}

#[test]
fn working_field_grows_only_when_samples_run_short() {
    let small = Context::build(FamilyId::Ex51, 2, 0, &opts(FamilyId::Ex51, Exec::Parallel, 0)).unwrap();
    assert!(small.extended());
    assert_eq!(small.field().order(), 256);
    assert!(small.nonrational_places().unwrap().len() >= 20);
    assert_eq!(small.rational_places().unwrap().0.len(), 8);

    let large = Context::build(FamilyId::Ex51, 5, 0, &opts(FamilyId::Ex51, Exec::Parallel, 0)).unwrap();
    assert!(!large.extended());
    assert_eq!(large.field().order(), 625);

    let report = run_verify(FamilyId::Ex51, 2, 0, &opts(FamilyId::Ex51, Exec::Parallel, 0)).unwrap();
    assert_eq!(report.instance.moduli.len(), 4);
}

#[test]
fn short_truncation_is_rejected() {
    let mut o = opts(FamilyId::Ex53, Exec::Parallel, 0);
    o.truncation = Some(1);
    assert!(matches!(run_verify(FamilyId::Ex53, 3, 0, &o), Err(Error::Invalid(_))));
}
