//! The map `P -> (f_0(P) : ... : f_M(P))` of a plane curve into `P^M`:
//! evaluation, branch frames, hyperplane valuations and the dual form.

use crate::error::{Error, Result};
use crate::gf::{Fe, Field};
use crate::hermitian::{tangent_hyperplane, HermitianForm};
use crate::linalg::{normalize, Matrix};
use crate::plane::{branch_expansion, Branch, CurvePoint, PlaneCurve};
use crate::poly::{reduce_mod_curve, MultiPoly};
use crate::series::{eval_bivariate, Series, Valuation};
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct ParametrizedCurve {
    pub plane: PlaneCurve,
    pub coords: Vec<MultiPoly>,
}

impl ParametrizedCurve {
    pub fn new(plane: PlaneCurve, coords: Vec<MultiPoly>) -> Result<ParametrizedCurve> {
        if coords.len() < 2 || coords.iter().any(|c| c.nvars() != 2) {
            return Err(Error::Invalid("need at least two bivariate coordinate functions".into()));
        }
        if coords.iter().all(|c| c.is_zero()) {
            return Err(Error::Invalid("all coordinate functions vanish".into()));
        }
        Ok(ParametrizedCurve { plane, coords })
    }

    /// Ambient dimension `M`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// New coordinates `g_i = sum_j t_ij f_j`.
    pub fn transformed(&self, f: &Field, t: &Matrix) -> ParametrizedCurve {
        let coords = (0..t.rows)
            .map(|i| {
                (0..t.cols).fold(MultiPoly::zero(2), |acc, j| acc.add(f, &self.coords[j].scale(f, t.get(i, j))))
            })
            .collect();
        ParametrizedCurve { plane: self.plane.clone(), coords }
    }
}

/// Coordinate series at a branch with the common power of `t` removed.
#[derive(Clone, Debug)]
pub struct Frame {
    pub series: Vec<Series>,
    pub shift: usize,
}

impl Frame {
    pub fn prec(&self) -> usize {
        self.series.iter().map(|s| s.prec()).min().unwrap_or(0)
    }

    /// Image of the branch center, normalized.
    pub fn image(&self, f: &Field) -> Vec<Fe> {
        let v: Vec<Fe> = self.series.iter().map(|s| s.coeff(0)).collect();
        normalize(f, &v).expect("cleared frame has a unit coordinate")
    }

    /// Coefficients of `t^j` across the coordinates.
    pub fn layer(&self, j: usize) -> Vec<Fe> {
        self.series.iter().map(|s| s.coeff(j)).collect()
    }

    /// `v(sum a_i s_i)`.
    pub fn valuation(&self, f: &Field, h: &[Fe]) -> Valuation {
        let n = self.prec();
        let mut acc = Series::zero(n);
        for (s, &a) in self.series.iter().zip(h) {
            acc = acc.add(f, &s.scale(f, a));
        }
        acc.valuation()
    }
}

pub fn coordinate_series(f: &Field, pc: &ParametrizedCurve, b: &Branch) -> Vec<Series> {
    pc.coords.iter().map(|c| eval_bivariate(f, c, &b.x, &b.y)).collect()
}

pub fn frame(f: &Field, pc: &ParametrizedCurve, b: &Branch) -> Result<Frame> {
    let raw = coordinate_series(f, pc, b);
    let prec = raw.iter().map(|s| s.prec()).min().unwrap_or(0);
    let e = raw
        .iter()
        .filter_map(|s| s.valuation().finite())
        .min()
        .ok_or(Error::Unresolved(prec))?;
    let series = raw.iter().map(|s| s.shift_down(e)).collect::<Result<Vec<_>>>()?;
    Ok(Frame { series, shift: e })
}

/// Direct evaluation; fails when every coordinate vanishes at the point.
pub fn evaluate_map(f: &Field, pc: &ParametrizedCurve, p: &CurvePoint) -> Result<Vec<Fe>> {
    let v: Vec<Fe> = pc.coords.iter().map(|c| c.eval(f, &[p.x, p.y])).collect();
    normalize(f, &v).ok_or_else(|| Error::Degenerate("all coordinates vanish; use the branch image".into()))
}

/// Image of a smooth point, through the branch when direct evaluation fails.
pub fn point_image(f: &Field, pc: &ParametrizedCurve, p: &CurvePoint, prec: usize) -> Result<Vec<Fe>> {
    match evaluate_map(f, pc, p) {
        Ok(v) => Ok(v),
        Err(Error::Degenerate(_)) => {
            let b = branch_expansion(f, &pc.plane, p, prec)?;
            Ok(frame(f, pc, &b)?.image(f))
        }
        Err(e) => Err(e),
    }
}

pub fn hyperplane_valuation(f: &Field, pc: &ParametrizedCurve, b: &Branch, h: &[Fe]) -> Result<Valuation> {
    if h.len() != pc.coords.len() {
        return Err(Error::Invalid("hyperplane dimension mismatch".into()));
    }
    Ok(frame(f, pc, b)?.valuation(f, h))
}

/// Intersection data of the tangent hyperplane at `pi(P)`.
#[derive(Clone, Debug, Serialize)]
pub struct TangentRecord {
    pub v_at_p: Valuation,
    pub fr_on_h: bool,
    pub hyperplane: Vec<Fe>,
}

pub fn tangent_divisor_check(f: &Field, fr: &Frame, form: &HermitianForm) -> Result<TangentRecord> {
    let alpha = fr.image(f);
    let h = tangent_hyperplane(f, form, &alpha)?;
    let frob: Vec<Fe> = alpha.iter().map(|&a| f.pow(a, form.q * form.q)).collect();
    let fr_on_h = crate::linalg::dot(f, &h, &frob).is_zero();
    Ok(TangentRecord { v_at_p: fr.valuation(f, &h), fr_on_h, hyperplane: h })
}

/// Hyperplane of maximal contact: coefficient layers `t^0, t^1, ..` are
/// added until their kernel is one-dimensional. For `q >= M` this is the
/// kernel of the layers below `t^q`.
pub fn osculating_hyperplane(f: &Field, fr: &Frame) -> Result<Vec<Fe>> {
    let n = fr.series.len();
    let mut rows = Vec::new();
    for j in 0..fr.prec().saturating_sub(1) {
        rows.push(fr.layer(j));
        let ker = Matrix::from_rows(&rows).kernel(f);
        if ker.len() == 1 {
            return Ok(normalize(f, &ker[0]).unwrap());
        }
        if ker.is_empty() {
            return Err(Error::Degenerate(format!("coefficient layers span all of {n} coordinates")));
        }
    }
    Err(Error::Unresolved(fr.prec()))
}

/// Outcome of the dual-form solve.
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub nullity: usize,
    pub points_used: usize,
    pub c: Option<Matrix>,
    pub hermitian: bool,
}

/// Solves `sum u_ij f_j(P)^q f_i(P) = 0` over the sample images for
/// `u_ij = c_ij^q`. Rational images are all used; the extra images are added
/// until at least `2 (M+1)^2` rows are present and the rank is unchanged for
/// three consecutive additions.
pub fn solve_dual_form(f: &Field, q: u64, rational: &[Vec<Fe>], extra: &[Vec<Fe>]) -> Result<DualSolution> {
    let n = rational.first().or(extra.first()).map(|v| v.len()).ok_or_else(|| Error::Invalid("no sample points".into()))?;
    let row = |p: &Vec<Fe>| -> Vec<Fe> {
        let mut r = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                r.push(f.mul(p[i], f.pow(p[j], q)));
            }
        }
        r
    };
    let mut rows: Vec<Vec<Fe>> = rational.iter().map(row).collect();
    let mut rank = if rows.is_empty() { 0 } else { Matrix::from_rows(&rows).rank(f) };
    let mut stable = 0;
    for p in extra {
        if stable >= 3 && rows.len() >= 2 * n * n {
            break;
        }
        rows.push(row(p));
        let r = Matrix::from_rows(&rows).rank(f);
        if r == rank {
            stable += 1;
        } else {
            stable = 0;
            rank = r;
        }
    }
    let m = Matrix::from_rows(&rows);
    let ker = m.kernel(f);
    let nullity = ker.len();
    if nullity == 0 {
        return Err(Error::Internal("dual system is inconsistent".into()));
    }
    let (c, hermitian) = if nullity == 1 {
        let u = normalize(f, &ker[0]).unwrap();
        // c = u^(q^-1); on GF(q^2) this is u^q
        let inv_frob = f.order() as u64 / q;
        let mut c = Matrix::zero(n, n);
        for i in 0..n {
            for j in 0..n {
                c.set(i, j, f.pow(u[i * n + j], inv_frob));
            }
        }
        let c = {
            let flat: Vec<Fe> = (0..n).flat_map(|i| c.row(i)).collect();
            let nf = normalize(f, &flat).unwrap();
            Matrix::from_rows(&nf.chunks(n).map(|r| r.to_vec()).collect::<Vec<_>>())
        };
        let h = HermitianForm { q, c: c.clone() };
        (Some(c), h.is_hermitian(f))
    } else {
        (None, false)
    };
    Ok(DualSolution { nullity, points_used: rows.len(), c, hermitian })
}

/// Reduces `sum c_ij f_i f_j^q` modulo the curve; zero means the image lies
/// on the variety.
pub fn containment_check_symbolic(f: &Field, pc: &ParametrizedCurve, h: &HermitianForm) -> Result<(bool, MultiPoly)> {
    let n = pc.coords.len();
    if h.dim() != n {
        return Err(Error::Invalid("form dimension mismatch".into()));
    }
    let frob: Vec<MultiPoly> = pc.coords.iter().map(|c| c.frobenius_power(f, h.q)).collect();
    let mut acc = MultiPoly::zero(2);
    for i in 0..n {
        for (j, fj) in frob.iter().enumerate() {
            let c = h.c.get(i, j);
            if c.is_zero() {
                continue;
            }
            acc = acc.add(f, &pc.coords[i].mul(f, fj).scale(f, c));
        }
    }
    let r = reduce_mod_curve(f, &acc, &pc.plane.f)?;
    Ok((r.is_zero(), r))
}
