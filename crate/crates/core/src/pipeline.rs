//! Batch verification of a family instance: sampling, truncation retries
//! and the individual checks assembled into a [`VerificationReport`].

use crate::embed::{
    containment_check_symbolic, frame, osculating_hyperplane, point_image, solve_dual_form, tangent_divisor_check,
    Frame, ParametrizedCurve,
};
use crate::error::{Error, Result};
use crate::families::{construct_family, construct_family_over, verify_family_identities, FamilyId, Instance};
use crate::gf::{enumeration_cap, Fe, Field};
use crate::hermitian::{
    dependent, diagonalize_congruence, enumerate_variety_points, find_projection_center, herm_eval, project_from_center,
    tangent_hyperplane, verify_center, HermitianForm, TangentLine,
};
use crate::linalg::{normalize, Matrix};
use crate::par::Exec;
use crate::plane::{affine_points, branch_expansion, is_smooth_at, CurvePoint};
use crate::poly::reduce_mod_curve;
use crate::report::{CheckReport, InstanceInfo, Status, Timing, VerificationReport, SCHEMA_VERSION};
use crate::series::Valuation;
use crate::wronskian::{rationality_valuation, wronskian_identity};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;
use std::time::Instant;

pub const DEFAULT_SAMPLE: usize = 20;
pub const DEFAULT_SEED: u64 = 0;
pub const MAX_RETRIES: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckKind {
    Maximality,
    Containment,
    Identities,
    RationalityValuation,
    TangentDivisor,
    WronskianIdentity,
    OsculatingTangent,
    DualForm,
    RationalityEquivalence,
    Projection,
    Secant,
    Splitting,
    ComponentEquivalence,
    Kappa,
}

impl CheckKind {
    pub const ALL: [CheckKind; 14] = [
        CheckKind::Maximality,
        CheckKind::Containment,
        CheckKind::Identities,
        CheckKind::RationalityValuation,
        CheckKind::TangentDivisor,
        CheckKind::WronskianIdentity,
        CheckKind::OsculatingTangent,
        CheckKind::DualForm,
        CheckKind::RationalityEquivalence,
        CheckKind::Projection,
        CheckKind::Secant,
        CheckKind::Splitting,
        CheckKind::ComponentEquivalence,
        CheckKind::Kappa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Maximality => "maximality",
            CheckKind::Containment => "containment",
            CheckKind::Identities => "identities",
            CheckKind::RationalityValuation => "rationality_valuation",
            CheckKind::TangentDivisor => "tangent_divisor",
            CheckKind::WronskianIdentity => "wronskian_identity",
            CheckKind::OsculatingTangent => "osculating_tangent",
            CheckKind::DualForm => "dual_form",
            CheckKind::RationalityEquivalence => "rationality_equivalence",
            CheckKind::Projection => "projection",
            CheckKind::Secant => "secant",
            CheckKind::Splitting => "splitting",
            CheckKind::ComponentEquivalence => "component_equivalence",
            CheckKind::Kappa => "kappa",
        }
    }

    pub fn parse(s: &str) -> Result<CheckKind> {
        let s = s.trim().to_ascii_lowercase();
        let alias = match s.as_str() {
            "lemma41" => Some(CheckKind::TangentDivisor),
            "lemma42" => Some(CheckKind::WronskianIdentity),
            "lemma45" => Some(CheckKind::RationalityValuation),
            _ => None,
        };
        alias
            .or_else(|| CheckKind::ALL.iter().copied().find(|c| c.name() == s))
            .ok_or_else(|| Error::Invalid(format!("unknown check {s:?}")))
    }

    pub fn anchor(self) -> &'static str {
        match self {
            CheckKind::Maximality => "affine points plus places at infinity equal 1 + q^2 + 2qg",
            CheckKind::Containment => "the image lies on the attached Hermitian variety and second surface",
            CheckKind::Identities => "displayed factorization identities hold by exact arithmetic",
            CheckKind::RationalityValuation => "v(sum g_i D^q(g_i^q)) is 1 at rational branches and 0 otherwise",
            CheckKind::TangentDivisor => "tangent hyperplane meets with multiplicity q+1 at rational points, q and through Fr(P) otherwise",
            CheckKind::WronskianIdentity => "q v(g_M) + v(W(0..M-1,q)) = v(W(0..M-1)) + v(S)",
            CheckKind::OsculatingTangent => "osculating hyperplane equals the tangent hyperplane of the variety",
            CheckKind::DualForm => "the form recovered from sample images is unique, Hermitian, non-degenerate and diagonalizable",
            CheckKind::RationalityEquivalence => "the image is Frobenius-fixed exactly at rational points",
            CheckKind::Projection => "a projection center off all chords and tangents exists and keeps rational points distinct",
            CheckKind::Secant => "R, S, Fr(S) are never collinear for rational R and non-rational S",
            CheckKind::Splitting => "the surface intersection is the union of the component images and boundary points",
            CheckKind::ComponentEquivalence => "a linear map carries the image of component 0 onto component i",
            CheckKind::Kappa => "the coordinate change maps the twisted surface to the canonical Hermitian surface",
        }
    }

    pub fn applies(self, id: FamilyId) -> bool {
        match self {
            CheckKind::Kappa => id == FamilyId::Ex52,
            CheckKind::RationalityEquivalence => !id.twisted(),
            _ => true,
        }
    }
}

/// `"all"` or a comma-separated list of check names.
pub fn parse_checks(spec: &str, id: FamilyId) -> Result<Vec<CheckKind>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(CheckKind::ALL.iter().copied().filter(|c| c.applies(id)).collect());
    }
    let mut out = BTreeSet::new();
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        out.insert(CheckKind::parse(part)?);
    }
    if out.is_empty() {
        return Err(Error::Invalid("empty check list".into()));
    }
    Ok(out.into_iter().collect())
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub checks: Vec<CheckKind>,
    pub sample: usize,
    pub seed: u64,
    /// Defaults to `2q + 4`.
    pub truncation: Option<usize>,
    pub exec: Exec,
    pub timings: bool,
}

impl VerifyOptions {
    pub fn all(id: FamilyId) -> VerifyOptions {
        VerifyOptions {
            checks: CheckKind::ALL.iter().copied().filter(|c| c.applies(id)).collect(),
            sample: DEFAULT_SAMPLE,
            seed: DEFAULT_SEED,
            truncation: None,
            exec: Exec::default(),
            timings: false,
        }
    }
}

/// A smooth point with its rationality.
#[derive(Clone, Debug)]
pub struct Place {
    pub point: CurvePoint,
    pub rational: bool,
}

/// Everything shared by the checks of one instance.
pub struct Context {
    pub inst: Instance,
    /// Coordinates in which the attached form is the identity.
    pub canonical: ParametrizedCurve,
    pub canonical_form: HermitianForm,
    pub exec: Exec,
    pub prec: usize,
    pub seed: u64,
    pub sample: usize,
    rational: OnceLock<Result<(Vec<Place>, Vec<CurvePoint>)>>,
    nonrational: OnceLock<Result<Vec<Place>>>,
    splitting: OnceLock<Result<SplitData>>,
}

#[derive(Clone, Debug)]
struct ComponentSplit {
    component: u32,
    smooth_images: usize,
    boundary: Vec<Vec<Fe>>,
    relations: [usize; 2],
}

#[derive(Clone, Debug)]
struct SplitData {
    intersection: usize,
    remainder: Vec<Vec<Fe>>,
    uncertified: Vec<Vec<Fe>>,
    off_surface: Vec<Value>,
    own_images: Vec<Vec<Fe>>,
    union_images: usize,
    components: Vec<ComponentSplit>,
}

fn render_vec(f: &Field, v: &[Fe]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| f.render(x)).collect();
    format!("({})", parts.join(" : "))
}

fn render_point(f: &Field, p: &CurvePoint) -> Value {
    json!({ "x": f.render(p.x), "y": f.render(p.y), "ext": p.ext })
}

fn is_rational_vec(f: &Field, q: u64, v: &[Fe]) -> bool {
    v.iter().all(|&x| f.in_subfield(x, q * q))
}

fn frob_vec(f: &Field, q: u64, v: &[Fe]) -> Vec<Fe> {
    v.iter().map(|&x| f.pow(x, q * q)).collect()
}

fn apply(f: &Field, m: &Matrix, v: &[Fe]) -> Option<Vec<Fe>> {
    normalize(f, &m.mul_vec(f, v))
}

/// Runs `op` at the working truncation, doubling it on unresolved
/// valuations up to [`MAX_RETRIES`] times. `Ok(None)` means still
/// unresolved.
pub fn with_retries<T>(prec: usize, mut op: impl FnMut(usize) -> Result<T>) -> Result<Option<(T, usize)>> {
    let mut t = prec;
    for _ in 0..=MAX_RETRIES {
        match op(t) {
            Ok(v) => return Ok(Some((v, t))),
            Err(Error::Unresolved(_)) => t *= 2,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

impl Context {
    pub fn new(inst: Instance, exec: Exec, truncation: Option<usize>, seed: u64, sample: usize) -> Result<Context> {
        let f = inst.field().clone();
        let cong = diagonalize_congruence(&f, &inst.form)?;
        if !cong.verified || cong.rank != inst.form.dim() {
            return Err(Error::Internal("attached form does not diagonalize to the identity".into()));
        }
        let a_inv = cong.a.inverse(&f).ok_or_else(|| Error::Internal("singular congruence".into()))?;
        let canonical = inst.curve.transformed(&f, &a_inv);
        let canonical_form = HermitianForm::canonical(inst.q, inst.form.dim());
        let prec = truncation.unwrap_or(2 * inst.q as usize + 4);
        if prec < 2 {
            return Err(Error::Invalid("truncation must be at least 2".into()));
        }
        Ok(Context {
            inst,
            canonical,
            canonical_form,
            exec,
            prec,
            seed,
            sample,
            rational: OnceLock::new(),
            nonrational: OnceLock::new(),
            splitting: OnceLock::new(),
        })
    }

    /// Context for `(id, q, i)` over the default working field, moved to the
    /// extended tower when fewer than `sample` smooth non-rational points
    /// exist there.
    pub fn build(id: FamilyId, q: u64, i: u32, opts: &VerifyOptions) -> Result<Context> {
        let ctx = Context::new(construct_family(id, q, i)?, opts.exec, opts.truncation, opts.seed, opts.sample)?;
        if ctx.nonrational_places()?.len() >= opts.sample {
            return Ok(ctx);
        }
        let degrees = id.extended_tower_degrees();
        let top = q.checked_pow(*degrees.last().unwrap()).unwrap_or(u64::MAX);
        if top > enumeration_cap() {
            return Ok(ctx);
        }
        Context::new(construct_family_over(id, q, i, degrees)?, opts.exec, opts.truncation, opts.seed, opts.sample)
    }

    /// Component `j` of the same family over the same tower.
    pub fn sibling(&self, j: u32) -> Result<Context> {
        let degrees: Vec<u32> = self.inst.tower.levels.iter().map(|l| l.degree).collect();
        let inst = construct_family_over(self.inst.id, self.q(), j, &degrees)?;
        Context::new(inst, self.exec, Some(self.prec), self.seed, self.sample)
    }

    /// Whether the working field is larger than the default one.
    pub fn extended(&self) -> bool {
        self.inst.tower.levels.len() > self.inst.id.tower_degrees().len()
    }

    pub fn field(&self) -> &Field {
        self.inst.field()
    }

    fn q(&self) -> u64 {
        self.inst.q
    }

    /// Degree of the working field over GF(q^2).
    fn top_m(&self) -> u32 {
        self.field().degree() / (2 * self.inst.tower.e)
    }

    fn image_rational(&self, p: &CurvePoint) -> Result<bool> {
        let img = point_image(self.field(), &self.inst.curve, p, self.prec)?;
        Ok(is_rational_vec(self.field(), self.q(), &img))
    }

    fn classify(&self, p: &CurvePoint) -> Result<bool> {
        if self.inst.id.twisted() {
            self.image_rational(p)
        } else {
            Ok(p.ext == 1)
        }
    }

    /// Smooth rational places of the affine model and the singular affine
    /// points that would be counted as rational.
    pub fn rational_places(&self) -> Result<&(Vec<Place>, Vec<CurvePoint>)> {
        self.rational
            .get_or_init(|| {
                let f = self.field();
                let plane = &self.inst.curve.plane;
                let m = if self.inst.id.twisted() { self.top_m() } else { 1 };
                let pts = affine_points(f, plane, m, self.exec)?;
                let info = self.exec.map(&pts, |p| -> Result<(bool, bool)> {
                    let smooth = is_smooth_at(f, plane, p)?;
                    let rat = if self.inst.id.twisted() {
                        smooth && self.image_rational(p)?
                    } else {
                        p.ext == 1
                    };
                    Ok((smooth, rat))
                });
                let mut places = Vec::new();
                let mut singular = Vec::new();
                for (p, r) in pts.iter().zip(info) {
                    let (smooth, rat) = r?;
                    if !rat {
                        continue;
                    }
                    if smooth {
                        places.push(Place { point: *p, rational: true });
                    } else {
                        singular.push(*p);
                    }
                }
                Ok((places, singular))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Seeded selection of smooth non-rational points over the working
    /// field: one per `x0`, the first qualifying root.
    pub fn nonrational_places(&self) -> Result<&Vec<Place>> {
        self.nonrational
            .get_or_init(|| {
                let f = self.field();
                let plane = &self.inst.curve.plane;
                let mut xs: Vec<Fe> = f.elements().collect();
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                xs.shuffle(&mut rng);
                let want = self.sample.max(4 * self.inst.form.dim() * self.inst.form.dim());
                let mut out = Vec::new();
                for x0 in xs {
                    if out.len() >= want {
                        break;
                    }
                    let poly = crate::gf::UniPoly::new(plane.f.specialize_to_univariate(f, 1, &[x0, Fe::ZERO]));
                    if poly.is_zero() {
                        continue;
                    }
                    for y0 in poly.roots_in_subfield(f, f.order() as u64)? {
                        let p = plane.point(f, x0, y0);
                        if !is_smooth_at(f, plane, &p)? || self.classify(&p)? {
                            continue;
                        }
                        out.push(Place { point: p, rational: false });
                        break;
                    }
                }
                Ok(out)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Seeded rational and non-rational samples for branch checks.
    pub fn samples(&self, per_kind: usize) -> Result<Vec<Place>> {
        let (rat, _) = self.rational_places()?;
        let mut rat = rat.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed);
        rat.shuffle(&mut rng);
        rat.truncate(per_kind);
        let non = self.nonrational_places()?;
        rat.extend(non.iter().take(per_kind).cloned());
        Ok(rat)
    }

    fn canonical_frame(&self, p: &CurvePoint, prec: usize) -> Result<Frame> {
        let b = branch_expansion(self.field(), &self.canonical.plane, p, prec)?;
        frame(self.field(), &self.canonical, &b)
    }

    fn curve_frame(&self, p: &CurvePoint, prec: usize) -> Result<Frame> {
        let b = branch_expansion(self.field(), &self.inst.curve.plane, p, prec)?;
        frame(self.field(), &self.inst.curve, &b)
    }

    fn split_data(&self) -> Result<&SplitData> {
        self.splitting.get_or_init(|| compute_split(self)).as_ref().map_err(Clone::clone)
    }
}

/// Uniform per-branch driver: `op` returns a status and record, may ask for
/// more precision via `Error::Unresolved`, and degenerate frames become
/// inconclusive.
fn per_branch<F>(ctx: &Context, places: &[Place], op: F) -> (Status, Vec<Value>)
where
    F: Fn(&Place, usize) -> Result<(Status, Value)> + Sync + Send,
{
    let rows = ctx.exec.map(places, |pl| {
        let head = render_point(ctx.field(), &pl.point);
        let res = with_retries(ctx.prec, |t| op(pl, t));
        let (status, mut rec) = match res {
            Ok(Some(((s, v), t))) => {
                let mut v = v;
                if t != ctx.prec {
                    v["truncation"] = json!(t);
                }
                (s, v)
            }
            Ok(None) => (Status::Inconclusive, json!({ "reason": "unresolved after retries" })),
            Err(Error::Degenerate(m)) => (Status::Inconclusive, json!({ "reason": m })),
            Err(e) => (Status::Fail, json!({ "error": e.to_string() })),
        };
        rec["point"] = head;
        rec["rational"] = json!(pl.rational);
        rec["status"] = json!(status.as_str());
        (status, rec)
    });
    let status = Status::combine(rows.iter().map(|r| r.0));
    (status, rows.into_iter().map(|r| r.1).collect())
}

fn check(kind: CheckKind, status: Status, payload: Value, notes: Vec<String>) -> CheckReport {
    CheckReport { name: kind.name().to_string(), anchor: kind.anchor().to_string(), status, payload, notes }
}

fn maximality(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let inst = &ctx.inst;
    let (affine, singular, note) = if inst.id.twisted() {
        let (places, sing) = ctx.rational_places()?;
        (places.len() as u64, sing.len(), "affine count is the number of smooth points over the working field with rational image")
    } else {
        let pts = affine_points(f, &inst.curve.plane, 1, ctx.exec)?;
        let sing = pts.iter().filter(|p| !is_smooth_at(f, &inst.curve.plane, p).unwrap_or(false)).count();
        (pts.len() as u64, sing, "affine count is the number of GF(q^2)-points of the plane model")
    };
    let total = affine + inst.infinite_places;
    let bound = inst.bound();
    Ok(check(
        CheckKind::Maximality,
        Status::from_bool(total == bound),
        json!({
            "affine": affine,
            "singular_affine": singular,
            "infinite_places": inst.infinite_places,
            "total": total,
            "genus": inst.genus,
            "bound": bound,
            "maximal": total == bound,
        }),
        vec![note.to_string()],
    ))
}

fn containment(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let inst = &ctx.inst;
    let (herm, res) = containment_check_symbolic(f, &inst.curve, &inst.form)?;
    let (canon, _) = containment_check_symbolic(f, &ctx.canonical, &ctx.canonical_form)?;
    let surf = inst.surface.poly.compose(f, &inst.curve.coords);
    let surf_res = reduce_mod_curve(f, &surf, &inst.curve.plane.f)?;
    let ok = herm && canon && surf_res.is_zero();
    Ok(check(
        CheckKind::Containment,
        Status::from_bool(ok),
        json!({
            "hermitian_residual": res.render(f, &["x", "y"]),
            "canonical_coordinates": canon,
            "surface": inst.surface.name,
            "surface_residual": surf_res.render(f, &["x", "y"]),
        }),
        vec![],
    ))
}

fn identities(ctx: &Context) -> Result<CheckReport> {
    let groups = verify_family_identities(ctx.inst.id, ctx.q())?;
    let ok = groups.iter().all(|g| g.holding.is_some());
    let mut notes = Vec::new();
    for g in &groups {
        if g.readings.iter().any(|r| !r.holds) {
            notes.push(format!("{}: some readings fail; holding reading {:?}", g.name, g.holding));
        }
    }
    Ok(check(CheckKind::Identities, Status::from_bool(ok), serde_json::to_value(&groups).unwrap(), notes))
}

fn rationality_check(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let q = ctx.q() as usize;
    let places = ctx.samples(ctx.sample)?;
    let (status, rows) = per_branch(ctx, &places, |pl, t| {
        let fr = ctx.canonical_frame(&pl.point, t)?;
        let rec = rationality_valuation(f, &fr, q)?;
        let v = match rec.valuation {
            Valuation::Finite(v) => v,
            Valuation::AtLeast(_) => return Err(Error::Unresolved(t)),
        };
        let expected = if pl.rational { 1 } else { 0 };
        let image_rational = is_rational_vec(f, ctx.q(), &fr.image(f));
        let ok = v <= 1 && v == expected && image_rational == pl.rational;
        Ok((Status::from_bool(ok), json!({ "valuation": v, "expected": expected, "record": rec })))
    });
    let rational = places.iter().filter(|p| p.rational).count();
    let agree = rows.iter().filter(|r| r["status"] == "pass").count();
    Ok(check(
        CheckKind::RationalityValuation,
        status,
        json!({ "rational_samples": rational, "nonrational_samples": places.len() - rational, "agreement": agree, "branches": rows }),
        sample_notes(ctx, rational),
    ))
}

fn sample_notes(ctx: &Context, rational: usize) -> Vec<String> {
    if rational < ctx.sample {
        vec![format!("only {rational} rational smooth places exist; all are used")]
    } else {
        vec![]
    }
}

fn tangent_check(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let q = ctx.q() as usize;
    let places = ctx.samples(ctx.sample)?;
    let (status, rows) = per_branch(ctx, &places, |pl, t| {
        let fr = ctx.curve_frame(&pl.point, t)?;
        let rec = tangent_divisor_check(f, &fr, &ctx.inst.form)?;
        let v = match rec.v_at_p {
            Valuation::Finite(v) => v,
            Valuation::AtLeast(_) => return Err(Error::Unresolved(t)),
        };
        let ok = if pl.rational { v == q + 1 } else { v == q && rec.fr_on_h };
        Ok((Status::from_bool(ok), json!({ "valuation": v, "frobenius_on_hyperplane": rec.fr_on_h })))
    });
    let rational = places.iter().filter(|p| p.rational).count();
    Ok(check(CheckKind::TangentDivisor, status, json!({ "branches": rows }), sample_notes(ctx, rational)))
}

fn wronskian_check(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let q = ctx.q() as usize;
    let per = ctx.sample.clamp(5, 10);
    let places = ctx.samples(per)?;
    let mut notes = vec![];
    if ctx.inst.form.dim() - 1 > q {
        notes.push(format!("orders 0..{} followed by q = {q} are not increasing; identity is degenerate", ctx.inst.form.dim() - 2));
    }
    let (status, rows) = per_branch(ctx, &places, |pl, t| {
        let fr = ctx.canonical_frame(&pl.point, t)?;
        let rec = wronskian_identity(f, &fr, q)?;
        Ok((Status::from_bool(rec.pass), serde_json::to_value(&rec).unwrap()))
    });
    Ok(check(CheckKind::WronskianIdentity, status, json!({ "branches": rows }), notes))
}

fn osculating_check(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let q = ctx.q() as usize;
    let m = ctx.inst.form.dim() - 1;
    let per = ctx.sample.clamp(5, 10);
    let places = ctx.samples(per)?;
    let mut notes = vec![];
    if m > q {
        notes.push(format!("q = {q} < M = {m}: the tangent hyperplane need not have maximal contact; recorded only"));
    }
    let (status, rows) = per_branch(ctx, &places, |pl, t| {
        let fr = ctx.curve_frame(&pl.point, t.max(q + 2))?;
        let osc = osculating_hyperplane(f, &fr)?;
        if let Valuation::AtLeast(_) = fr.valuation(f, &osc) {
            return Err(Error::Degenerate("image lies in a hyperplane".into()));
        }
        let tan = tangent_hyperplane(f, &ctx.inst.form, &fr.image(f))?;
        let status = if m > q { Status::Inconclusive } else { Status::from_bool(osc == tan) };
        Ok((status, json!({ "osculating": render_vec(f, &osc), "tangent": render_vec(f, &tan), "equal": osc == tan })))
    });
    Ok(check(CheckKind::OsculatingTangent, status, json!({ "branches": rows }), notes))
}

type Images = Vec<Vec<Fe>>;

/// Images of the rational places and of the spread sample, in the
/// coordinates carrying the attached form.
fn dual_inputs(ctx: &Context) -> Result<(Images, Images)> {
    let f = ctx.field();
    let (rat, _) = ctx.rational_places()?;
    let rational = rat
        .iter()
        .map(|p| point_image(f, &ctx.inst.curve, &p.point, ctx.prec))
        .collect::<Result<Vec<_>>>()?;
    let extra = ctx
        .nonrational_places()?
        .iter()
        .map(|p| point_image(f, &ctx.inst.curve, &p.point, ctx.prec))
        .collect::<Result<Vec<_>>>()?;
    Ok((rational, extra))
}

/// Result of the dual-form pipeline with the matrices rendered.
pub fn dual_form_report(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let q = ctx.q();
    let (rational, extra) = dual_inputs(ctx)?;
    let sol = solve_dual_form(f, q, &rational, &extra)?;
    let n = ctx.inst.form.dim();
    let mut payload = json!({ "nullity": sol.nullity, "points_used": sol.points_used, "hermitian": sol.hermitian });
    let mut notes = vec![];
    let status = match &sol.c {
        None => {
            notes.push(format!("solution space has dimension {}; the image spans a degenerate configuration", sol.nullity));
            Status::Inconclusive
        }
        Some(c) => {
            let h = HermitianForm { q, c: c.clone() };
            let r = h.c.rank(f);
            payload["matrix"] = json!(c.render(f));
            payload["rank"] = json!(r);
            let proportional = proportional_matrix(f, c, &ctx.inst.form.c);
            payload["matches_attached_form"] = json!(proportional);
            if !sol.hermitian || r != n {
                Status::Fail
            } else {
                let cong = diagonalize_congruence(f, &h)?;
                payload["congruence"] = json!(cong.a.render(f));
                payload["diagonal"] = json!(cong.d.render(f));
                payload["congruence_verified"] = json!(cong.verified);
                let a_inv = cong.a.inverse(f).ok_or_else(|| Error::Internal("singular congruence".into()))?;
                let canon = ctx.inst.curve.transformed(f, &a_inv);
                let (ok, _) = containment_check_symbolic(f, &canon, &HermitianForm::canonical(q, n))?;
                payload["canonical_containment"] = json!(ok);
                Status::from_bool(cong.verified && cong.d == Matrix::identity(n) && ok)
            }
        }
    };
    Ok(check(CheckKind::DualForm, status, payload, notes))
}

fn proportional_matrix(f: &Field, a: &Matrix, b: &Matrix) -> bool {
    let fa: Vec<Fe> = (0..a.rows).flat_map(|i| a.row(i)).collect();
    let fb: Vec<Fe> = (0..b.rows).flat_map(|i| b.row(i)).collect();
    normalize(f, &fa) == normalize(f, &fb)
}

fn rationality_equivalence(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let q = ctx.q();
    if ctx.inst.id.twisted() {
        return Ok(check(
            CheckKind::RationalityEquivalence,
            Status::Inconclusive,
            json!({}),
            vec!["rationality of this family is defined on the image; the comparison is vacuous".into()],
        ));
    }
    let plane = &ctx.inst.curve.plane;
    let mut levels = Vec::new();
    let mut exceptions = Vec::new();
    let even = ctx.inst.tower.levels.iter().filter(|l| l.degree % 2 == 0).map(|l| l.degree / 2);
    for m in even.collect::<Vec<_>>() {
        let pts = affine_points(f, plane, m, ctx.exec)?;
        let res = ctx.exec.map(&pts, |p| -> Result<Option<(bool, bool)>> {
            if !is_smooth_at(f, plane, p)? {
                return Ok(None);
            }
            let img = point_image(f, &ctx.inst.curve, p, ctx.prec)?;
            Ok(Some((p.ext == 1, frob_vec(f, q, &img) == img)))
        });
        let mut checked = 0usize;
        for (p, r) in pts.iter().zip(res) {
            if let Some((rat, fixed)) = r? {
                checked += 1;
                if rat != fixed {
                    exceptions.push(render_point(f, p));
                }
            }
        }
        levels.push(json!({ "field_order": q.pow(2 * m), "smooth_points": checked }));
    }
    Ok(check(
        CheckKind::RationalityEquivalence,
        Status::from_bool(exceptions.is_empty()),
        json!({ "levels": levels, "exceptions": exceptions }),
        vec![],
    ))
}

/// Exponent vectors of the monomials of degree `d` in `n` variables.
pub fn monomials(n: usize, d: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![d]];
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in monomials(n - 1, d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn eval_monomial(f: &Field, e: &[u32], p: &[Fe]) -> Fe {
    e.iter().zip(p).fold(Fe::ONE, |acc, (&k, &x)| f.mul(acc, f.pow(x, k as u64)))
}

/// Basis of the degree-`d` forms vanishing at every given point.
pub fn vanishing_forms(f: &Field, points: &[Vec<Fe>], d: u32) -> Vec<Vec<Fe>> {
    let n = points.first().map(|p| p.len()).unwrap_or(0);
    let mons = monomials(n, d);
    let rows: Vec<Vec<Fe>> = points.iter().map(|p| mons.iter().map(|e| eval_monomial(f, e, p)).collect()).collect();
    Matrix::from_rows(&rows).kernel(f)
}

fn on_forms(f: &Field, forms: &[Vec<Fe>], d: u32, p: &[Fe]) -> bool {
    let mons = monomials(p.len(), d);
    forms.iter().all(|c| f.sum(c.iter().zip(&mons).map(|(&a, e)| f.mul(a, eval_monomial(f, e, p)))).is_zero())
}

fn compute_split(ctx: &Context) -> Result<SplitData> {
    let f = ctx.field();
    let inst = &ctx.inst;
    let pts = enumerate_variety_points(f, &inst.form, 1, ctx.exec)?;
    let inter: Vec<Vec<Fe>> = pts.into_iter().filter(|p| inst.surface.poly.eval(f, p).is_zero()).collect();
    let mut union: HashSet<Vec<Fe>> = HashSet::new();
    let mut off_surface = Vec::new();
    let mut own = Vec::new();
    let mut fitted = Vec::new();
    for i in inst.id.components() {
        let comp;
        let c = if i == inst.i {
            ctx
        } else {
            comp = ctx.sibling(i)?;
            &comp
        };
        let (rat, _) = c.rational_places()?;
        let mut imgs = Vec::new();
        for p in rat {
            imgs.push((p.point, point_image(f, &c.inst.curve, &p.point, c.prec)?, true));
        }
        for p in c.nonrational_places()? {
            imgs.push((p.point, point_image(f, &c.inst.curve, &p.point, c.prec)?, false));
        }
        let mut smooth = BTreeSet::new();
        for (p, img, rational) in &imgs {
            let on_h = herm_eval(f, &inst.form, img)?.is_zero();
            let on_s = inst.surface.poly.eval(f, img).is_zero();
            if !on_h || !on_s {
                off_surface.push(json!({ "component": i, "point": render_point(f, p) }));
            }
            if *rational {
                smooth.insert(img.clone());
            }
        }
        if i == inst.i {
            own = smooth.iter().cloned().collect();
        }
        let all: Vec<Vec<Fe>> = imgs.into_iter().map(|t| t.1).collect();
        let quadrics = vanishing_forms(f, &all, 2);
        let cubics = vanishing_forms(f, &all, 3);
        union.extend(smooth.iter().cloned());
        fitted.push((i, smooth.len(), quadrics, cubics));
    }
    let remainder: Vec<Vec<Fe>> = inter.iter().filter(|p| !union.contains(*p)).cloned().collect();
    let mut certified = HashSet::new();
    let components = fitted
        .into_iter()
        .map(|(i, n, quadrics, cubics)| {
            let boundary: Vec<Vec<Fe>> = remainder
                .iter()
                .filter(|p| on_forms(f, &quadrics, 2, p) && on_forms(f, &cubics, 3, p))
                .cloned()
                .collect();
            certified.extend(boundary.iter().cloned());
            ComponentSplit { component: i, smooth_images: n, boundary, relations: [quadrics.len(), cubics.len()] }
        })
        .collect();
    let uncertified = remainder.iter().filter(|p| !certified.contains(*p)).cloned().collect();
    Ok(SplitData {
        intersection: inter.len(),
        remainder,
        uncertified,
        off_surface,
        own_images: own,
        union_images: union.len(),
        components,
    })
}

fn splitting(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let d = ctx.split_data()?;
    let bound = ctx.inst.bound();
    let comps: Vec<Value> = d
        .components
        .iter()
        .map(|c| {
            json!({
                "component": c.component,
                "smooth_images": c.smooth_images,
                "boundary": c.boundary.iter().map(|v| render_vec(f, v)).collect::<Vec<_>>(),
                "total": c.smooth_images + c.boundary.len(),
                "quadrics": c.relations[0],
                "cubics": c.relations[1],
            })
        })
        .collect();
    let totals_ok = d.components.iter().all(|c| (c.smooth_images + c.boundary.len()) as u64 == bound);
    let ok = d.off_surface.is_empty() && d.uncertified.is_empty() && totals_ok;
    Ok(check(
        CheckKind::Splitting,
        Status::from_bool(ok),
        json!({
            "intersection_points": d.intersection,
            "covered_by_images": d.union_images,
            "remainder": d.remainder.len(),
            "uncertified": d.uncertified.iter().map(|v| render_vec(f, v)).collect::<Vec<_>>(),
            "components": comps,
            "bound": bound,
            "off_surface": d.off_surface,
        }),
        vec![],
    ))
}

/// Rationalized tangent line at a rational place from the first-order
/// layer of its frame.
fn tangent_line(ctx: &Context, p: &CurvePoint) -> Result<Option<TangentLine>> {
    let f = ctx.field();
    let fr = ctx.curve_frame(p, ctx.prec)?;
    let a0 = fr.image(f);
    let a1 = fr.layer(1);
    if normalize(f, &a1).is_none() || dependent(f, &[&a0, &a1]) {
        return Ok(None);
    }
    let (r, _) = Matrix::from_rows(&[a0, a1]).rref(f);
    Ok(Some(TangentLine { point: r.row(0), direction: r.row(1) }))
}

fn projection(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let form = &ctx.inst.form;
    let d = ctx.split_data()?;
    let own = d.components.iter().find(|c| c.component == ctx.inst.i).expect("own component");
    let mut points = d.own_images.clone();
    points.extend(own.boundary.iter().cloned());
    points.sort();
    points.dedup();
    let (rat, _) = ctx.rational_places()?;
    let mut tangents = Vec::new();
    let mut flagged = Vec::new();
    for pl in rat {
        match tangent_line(ctx, &pl.point)? {
            Some(t) => tangents.push(t),
            None => flagged.push(render_point(f, &pl.point)),
        }
    }
    let mut notes = vec![];
    if !own.boundary.is_empty() {
        notes.push(format!("{} boundary points enter as curve points without tangent lines", own.boundary.len()));
    }
    if !flagged.is_empty() {
        notes.push(format!("{} places with vanishing first-order term excluded from tangents", flagged.len()));
    }
    let search = find_projection_center(f, form, &points, &tangents)?;
    let verified = verify_center(f, form, &search.center, &points, &tangents);
    let proj = project_from_center(f, form, &search.center)?;
    let images: Vec<Vec<Fe>> = points.iter().filter_map(|p| proj.project(f, p)).collect();
    let distinct: BTreeSet<&Vec<Fe>> = images.iter().collect();
    let reduced_rank = proj.reduced.c.rank(f);
    let ok = verified && images.len() == points.len() && distinct.len() == points.len();
    Ok(check(
        CheckKind::Projection,
        Status::from_bool(ok),
        json!({
            "center": render_vec(f, &search.center),
            "scanned": search.scanned,
            "chord_points": search.chord_points,
            "tangent_points": search.tangent_points,
            "curve_points": points.len(),
            "tangent_lines": tangents.len(),
            "center_verified": verified,
            "projected_distinct": distinct.len(),
            "reduced_rank": reduced_rank,
            "flagged": flagged,
        }),
        notes,
    ))
}

fn secant(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let q = ctx.q();
    let d = ctx.split_data()?;
    let non = ctx.nonrational_places()?;
    let non_imgs = non
        .iter()
        .take(ctx.sample)
        .map(|p| point_image(f, &ctx.inst.curve, &p.point, ctx.prec))
        .collect::<Result<Vec<_>>>()?;
    let rows = ctx.exec.map(&non_imgs, |s| {
        let fs = frob_vec(f, q, s);
        d.own_images.iter().filter(|r| dependent(f, &[r, s, &fs])).count()
    });
    let bad: usize = rows.iter().sum();
    Ok(check(
        CheckKind::Secant,
        Status::from_bool(bad == 0),
        json!({ "rational_points": d.own_images.len(), "nonrational_samples": non_imgs.len(), "collinear_triples": bad }),
        vec![],
    ))
}

/// Literal-coordinate images of all smooth affine points over the working
/// field.
fn raw_images(ctx: &Context) -> Result<BTreeSet<Vec<Fe>>> {
    let f = ctx.field();
    let plane = &ctx.inst.raw.plane;
    let pts = affine_points(f, plane, ctx.top_m(), ctx.exec)?;
    let imgs = ctx.exec.map(&pts, |p| -> Result<Option<Vec<Fe>>> {
        if !is_smooth_at(f, plane, p)? {
            return Ok(None);
        }
        point_image(f, &ctx.inst.raw, p, ctx.prec).map(Some)
    });
    let mut out = BTreeSet::new();
    for r in imgs {
        if let Some(v) = r? {
            out.insert(v);
        }
    }
    Ok(out)
}

fn component_equivalence(ctx: &Context) -> Result<CheckReport> {
    let f = ctx.field();
    let inst = &ctx.inst;
    let base = ctx.sibling(0)?;
    let src = raw_images(&base)?;
    let dst = raw_images(ctx)?;
    let test = |m: &Matrix| -> bool {
        let mapped: Option<BTreeSet<Vec<Fe>>> = src.iter().map(|v| apply(f, m, v)).collect();
        mapped.is_some_and(|s| s == dst)
    };
    let published = inst.published_equivalence.as_ref().map(|m| (test(m), m.render(f)));
    let derived = inst.derived_equivalence.as_ref().map(|m| (test(m), m.render(f)));
    let mut notes = vec![];
    if let Some((false, _)) = &published {
        let target = (0..3u32)
            .find(|&j| {
                ctx.sibling(j)
                    .ok()
                    .and_then(|c| raw_images(&c).ok())
                    .is_some_and(|imgs| {
                        let m = inst.published_equivalence.as_ref().unwrap();
                        let mapped: Option<BTreeSet<Vec<Fe>>> = src.iter().map(|v| apply(f, m, v)).collect();
                        mapped.is_some_and(|s| s == imgs)
                    })
            });
        notes.push(match target {
            Some(j) => format!("published matrix maps component 0 onto component {j}"),
            None => "published matrix maps component 0 onto no component".to_string(),
        });
    }
    let ok = published.as_ref().is_some_and(|p| p.0) || derived.as_ref().is_some_and(|d| d.0);
    Ok(check(
        CheckKind::ComponentEquivalence,
        Status::from_bool(ok && src.len() == dst.len()),
        json!({
            "source_points": src.len(),
            "target_points": dst.len(),
            "published": published.map(|(ok, m)| json!({ "maps": ok, "matrix": m })),
            "derived": derived.map(|(ok, m)| json!({ "maps": ok, "matrix": m })),
        }),
        notes,
    ))
}

fn kappa(ctx: &Context) -> Result<CheckReport> {
    match &ctx.inst.kappa {
        Some(k) => Ok(check(CheckKind::Kappa, Status::from_bool(k.verified), serde_json::to_value(k).unwrap(), vec![])),
        None => Ok(check(CheckKind::Kappa, Status::Inconclusive, json!({}), vec!["family has no coordinate change".into()])),
    }
}

pub fn run_check(ctx: &Context, kind: CheckKind) -> Result<CheckReport> {
    match kind {
        CheckKind::Maximality => maximality(ctx),
        CheckKind::Containment => containment(ctx),
        CheckKind::Identities => identities(ctx),
        CheckKind::RationalityValuation => rationality_check(ctx),
        CheckKind::TangentDivisor => tangent_check(ctx),
        CheckKind::WronskianIdentity => wronskian_check(ctx),
        CheckKind::OsculatingTangent => osculating_check(ctx),
        CheckKind::DualForm => dual_form_report(ctx),
        CheckKind::RationalityEquivalence => rationality_equivalence(ctx),
        CheckKind::Projection => projection(ctx),
        CheckKind::Secant => secant(ctx),
        CheckKind::Splitting => splitting(ctx),
        CheckKind::ComponentEquivalence => component_equivalence(ctx),
        CheckKind::Kappa => kappa(ctx),
    }
}

pub fn instance_info(inst: &Instance) -> InstanceInfo {
    InstanceInfo {
        family: inst.id.name().to_string(),
        q: inst.q,
        i: inst.i,
        moduli: inst.tower.levels.iter().map(|l| l.field.spec()).collect(),
        genus: inst.genus,
        infinite_places: inst.infinite_places,
        bound: inst.bound(),
    }
}

/// Runs the selected checks. Only usage and resource errors escape; check
/// failures are recorded in the report.
pub fn run_verify(id: FamilyId, q: u64, i: u32, opts: &VerifyOptions) -> Result<VerificationReport> {
    let ctx = Context::build(id, q, i, opts)?;
    let info = instance_info(&ctx.inst);
    let mut checks = Vec::new();
    let mut timings = Vec::new();
    for &kind in &opts.checks {
        let start = Instant::now();
        let rep = match run_check(&ctx, kind) {
            Ok(r) => r,
            Err(e @ Error::Cap(_)) => return Err(e),
            Err(e) => check(kind, Status::Fail, json!({ "error": e.to_string() }), vec![]),
        };
        timings.push(Timing { check: kind.name().to_string(), millis: start.elapsed().as_secs_f64() * 1e3 });
        checks.push(rep);
    }
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        instance: info,
        seed: opts.seed,
        truncation: ctx.prec,
        sample: opts.sample,
        status: Status::combine(checks.iter().map(|c| c.status)),
        checks,
        timings: opts.timings.then_some(timings),
    })
}

/// The dual-form pipeline alone.
pub fn run_dualform(id: FamilyId, q: u64, i: u32, opts: &VerifyOptions) -> Result<VerificationReport> {
    let mut o = opts.clone();
    o.checks = vec![CheckKind::DualForm];
    run_verify(id, q, i, &o)
}

/// Every component of a family, verified independently.
pub fn run_family(id: FamilyId, q: u64, opts: &VerifyOptions) -> Result<Vec<VerificationReport>> {
    id.check_q(q)?;
    let comps = id.components();
    opts.exec.map(&comps, |&i| run_verify(id, q, i, opts)).into_iter().collect()
}
