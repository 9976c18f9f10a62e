//! Affine plane models `F(x, y) = 0`: point enumeration, smoothness,
//! branch expansions and the Frobenius action.

use crate::error::{Error, Result};
use crate::gf::{enumeration_cap, Fe, Field, UniPoly};
use crate::par::Exec;
use crate::poly::MultiPoly;
use crate::series::{eval_bivariate, Series, Valuation};
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct PlaneCurve {
    /// Order of the subfield GF(q); the curve is defined over GF(q^2).
    pub q: u64,
    pub f: MultiPoly,
    fx: MultiPoly,
    fy: MultiPoly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CurvePoint {
    pub x: Fe,
    pub y: Fe,
    /// Smallest `m` with both coordinates in GF(q^(2m)).
    pub ext: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalParam {
    /// `t = x - x0`
    X,
    /// `t = y - y0`
    Y,
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub center: CurvePoint,
    pub param: LocalParam,
    pub x: Series,
    pub y: Series,
}

impl PlaneCurve {
    pub fn new(field: &Field, q: u64, f: MultiPoly) -> Result<PlaneCurve> {
        if f.nvars() != 2 {
            return Err(Error::Invalid("plane curve needs two variables".into()));
        }
        if f.is_zero() {
            return Err(Error::Invalid("zero polynomial".into()));
        }
        let fx = f.hasse_partial(field, 0, 1);
        let fy = f.hasse_partial(field, 1, 1);
        if fx.is_zero() && fy.is_zero() && f.total_degree() > 0 {
            return Err(Error::Invalid("polynomial is a p-th power".into()));
        }
        Ok(PlaneCurve { q, f, fx, fy })
    }

    pub fn contains(&self, field: &Field, x: Fe, y: Fe) -> bool {
        self.f.eval(field, &[x, y]).is_zero()
    }

    pub fn partials(&self, field: &Field, x: Fe, y: Fe) -> (Fe, Fe) {
        (self.fx.eval(field, &[x, y]), self.fy.eval(field, &[x, y]))
    }

    pub fn point(&self, field: &Field, x: Fe, y: Fe) -> CurvePoint {
        CurvePoint { x, y, ext: ext_degree(field, self.q, &[x, y]) }
    }
}

/// Smallest `m` with every value in GF(q^(2m)).
pub fn ext_degree(field: &Field, q: u64, vals: &[Fe]) -> u32 {
    let mut m = 1u32;
    loop {
        let order = (q * q).saturating_pow(m);
        if vals.iter().all(|&v| field.pow(v, order) == v) || m >= field.degree() {
            return m;
        }
        m += 1;
    }
}

/// All affine points over GF(q^(2m)), found by root finding in `y` for each
/// `x0`. Sorted by coordinate codes.
pub fn affine_points(field: &Field, c: &PlaneCurve, m: u32, exec: Exec) -> Result<Vec<CurvePoint>> {
    let sub_order = c.q.pow(2 * m);
    if sub_order > enumeration_cap() {
        return Err(Error::Cap(format!("GF({sub_order}) exceeds the enumeration cap")));
    }
    let xs = field.subfield_elements(sub_order)?;
    let per_x: Vec<Result<Vec<CurvePoint>>> = exec.map(&xs, |&x0| {
        let coeffs = c.f.specialize_to_univariate(field, 1, &[x0, Fe::ZERO]);
        let poly = UniPoly::new(coeffs);
        if poly.is_zero() {
            return Err(Error::Degenerate(format!("curve contains the line x = {}", field.render(x0))));
        }
        Ok(poly
            .roots_in_subfield(field, sub_order)?
            .into_iter()
            .map(|y0| c.point(field, x0, y0))
            .collect())
    });
    let mut out = Vec::new();
    for r in per_x {
        out.extend(r?);
    }
    out.sort();
    Ok(out)
}

/// Reference enumeration by testing every pair.
pub fn affine_points_naive(field: &Field, c: &PlaneCurve, m: u32) -> Result<Vec<CurvePoint>> {
    let sub_order = c.q.pow(2 * m);
    if sub_order.saturating_mul(sub_order) > enumeration_cap().saturating_mul(16) {
        return Err(Error::Cap("dense scan too large".into()));
    }
    let xs = field.subfield_elements(sub_order)?;
    let mut out = Vec::new();
    for &x in &xs {
        for &y in &xs {
            if c.contains(field, x, y) {
                out.push(c.point(field, x, y));
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn is_smooth_at(field: &Field, c: &PlaneCurve, p: &CurvePoint) -> Result<bool> {
    if !c.contains(field, p.x, p.y) {
        return Err(Error::Invalid("point is not on the curve".into()));
    }
    let (a, b) = c.partials(field, p.x, p.y);
    Ok(!(a.is_zero() && b.is_zero()))
}

/// Power-series branch at a smooth point by Newton iteration with doubling
/// precision. The parameter is `x - x0` unless `dF/dy` vanishes there.
pub fn branch_expansion(field: &Field, c: &PlaneCurve, p: &CurvePoint, prec: usize) -> Result<Branch> {
    if prec < 2 {
        return Err(Error::Invalid("truncation must be at least 2".into()));
    }
    if !is_smooth_at(field, c, p)? {
        return Err(Error::Invalid("branch requested at a singular point".into()));
    }
    let (fx0, fy0) = c.partials(field, p.x, p.y);
    let (param, fixed, deriv) = if !fy0.is_zero() {
        (LocalParam::X, Series::parameter_plus(p.x, prec), &c.fy)
    } else {
        debug_assert!(!fx0.is_zero());
        (LocalParam::Y, Series::parameter_plus(p.y, prec), &c.fx)
    };
    let start = if param == LocalParam::X { p.y } else { p.x };
    let mut solved = Series::constant(start, 1);
    let mut cur = 1usize;
    // ceil(log2 T) + 1 doubling steps
    let steps = (usize::BITS - (prec - 1).leading_zeros()) as usize + 1;
    for _ in 0..steps {
        let next = (cur * 2).min(prec);
        let s = Series::new(solved.coeffs().to_vec(), next);
        let t = fixed.truncate(next);
        let (xs, ys) = if param == LocalParam::X { (&t, &s) } else { (&s, &t) };
        let val = eval_bivariate(field, &c.f, xs, ys);
        let dv = eval_bivariate(field, deriv, xs, ys);
        solved = s.sub(field, &val.mul(field, &dv.inverse(field)?));
        cur = next;
    }
    let (x, y) = if param == LocalParam::X { (fixed, solved) } else { (solved, fixed) };
    if eval_bivariate(field, &c.f, &x, &y).valuation() != Valuation::AtLeast(prec) {
        return Err(Error::Internal("Newton iteration did not converge".into()));
    }
    Ok(Branch { center: *p, param, x, y })
}

/// Coordinatewise `q^2`-power.
pub fn frobenius_point(field: &Field, q: u64, p: &CurvePoint) -> CurvePoint {
    CurvePoint { x: field.pow(p.x, q * q), y: field.pow(p.y, q * q), ext: p.ext }
}
