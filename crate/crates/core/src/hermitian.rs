//! Hermitian forms `H(X) = sum c_ij X_i X_j^q` over GF(q^2) and the
//! projective geometry around them.

use crate::error::{Error, Result};
use crate::gf::{enumeration_cap, Fe, Field};
use crate::linalg::{normalize, Matrix};
use crate::par::Exec;
use std::collections::HashSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HermitianForm {
    pub q: u64,
    pub c: Matrix,
}

/// Result of [`diagonalize_congruence`]: `A^t C A^(q) = D`.
#[derive(Clone, Debug)]
pub struct Congruence {
    pub a: Matrix,
    pub d: Matrix,
    pub rank: usize,
    pub verified: bool,
}

impl HermitianForm {
    pub fn new(q: u64, c: Matrix) -> Result<HermitianForm> {
        if c.rows != c.cols || c.rows == 0 {
            return Err(Error::Invalid("form matrix must be square".into()));
        }
        Ok(HermitianForm { q, c })
    }

    /// `X_0^(q+1) + ... + X_M^(q+1)`.
    pub fn canonical(q: u64, dim: usize) -> HermitianForm {
        HermitianForm { q, c: Matrix::identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.c.rows
    }

    /// Entrywise test of `c_ij = c_ji^q`.
    pub fn is_hermitian(&self, f: &Field) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.c.get(i, j) == f.pow(self.c.get(j, i), self.q)))
    }

    /// `u^t C v^(q)`.
    pub fn pairing(&self, f: &Field, u: &[Fe], v: &[Fe]) -> Fe {
        let vq: Vec<Fe> = v.iter().map(|&x| f.pow(x, self.q)).collect();
        let cv = self.c.mul_vec(f, &vq);
        crate::linalg::dot(f, u, &cv)
    }
}

pub fn herm_eval(f: &Field, h: &HermitianForm, p: &[Fe]) -> Result<Fe> {
    if p.len() != h.dim() {
        return Err(Error::Invalid(format!("point has {} coordinates, form has {}", p.len(), h.dim())));
    }
    Ok(h.pairing(f, p, p))
}

pub fn rank(f: &Field, h: &HermitianForm) -> usize {
    h.c.rank(f)
}

/// Smallest-code `x` in GF(q^2) with `x^(q+1) = a`.
pub fn norm_preimage(f: &Field, q: u64, a: Fe) -> Option<Fe> {
    f.subfield_elements(q * q).ok()?.into_iter().find(|&x| f.pow(x, q + 1) == a)
}

/// Hermitian Gram-Schmidt. Isotropic pairs are resolved by `u + lambda w`
/// with `Tr(lambda h(w, u)) != 0`, and each anisotropic vector is scaled to
/// norm one with a solution of `x^(q+1) = h(v, v)^-1`.
pub fn diagonalize_congruence(f: &Field, h: &HermitianForm) -> Result<Congruence> {
    let q = h.q;
    let n = h.dim();
    let small = f.subfield_elements(q * q)?;
    let mut rest: Vec<Vec<Fe>> = (0..n)
        .map(|i| {
            let mut e = vec![Fe::ZERO; n];
            e[i] = Fe::ONE;
            e
        })
        .collect();
    let mut chosen: Vec<Vec<Fe>> = Vec::new();
    let add = |u: &[Fe], c: Fe, w: &[Fe]| -> Vec<Fe> { u.iter().zip(w).map(|(&a, &b)| f.add(a, f.mul(c, b))).collect() };
    while !rest.is_empty() {
        let aniso = rest.iter().position(|w| !h.pairing(f, w, w).is_zero());
        let v = if let Some(i) = aniso {
            rest.remove(i)
        } else {
            let mut found = None;
            'outer: for i in 0..rest.len() {
                for j in 0..rest.len() {
                    if i != j && !h.pairing(f, &rest[j], &rest[i]).is_zero() {
                        found = Some((i, j));
                        break 'outer;
                    }
                }
            }
            let Some((i, j)) = found else { break };
            let s = h.pairing(f, &rest[j], &rest[i]);
            let lambda = small
                .iter()
                .copied()
                .find(|&l| {
                    let t = f.mul(l, s);
                    !f.add(t, f.pow(t, q)).is_zero()
                })
                .ok_or_else(|| Error::Internal("trace form vanished".into()))?;
            let u = rest[i].clone();
            let w = rest[j].clone();
            rest.remove(i);
            add(&u, lambda, &w)
        };
        let a = h.pairing(f, &v, &v);
        let x = norm_preimage(f, q, f.inv(a).unwrap())
            .ok_or_else(|| Error::Internal("norm equation has no solution".into()))?;
        let v: Vec<Fe> = v.iter().map(|&c| f.mul(c, x)).collect();
        // project the rest onto v^perp; s(v, v) = 1
        let projected: Vec<Vec<Fe>> = rest
            .iter()
            .map(|w| {
                let s = h.pairing(f, w, &v);
                add(w, f.neg(s), &v)
            })
            .collect();
        rest = independent_subset(f, &projected);
        chosen.push(v);
    }
    let r = chosen.len();
    chosen.extend(rest);
    let a = Matrix::from_columns(&chosen);
    let d = a.transpose().mul(f, &h.c).mul(f, &a.map_pow(f, q));
    let mut target = Matrix::zero(n, n);
    for i in 0..r {
        target.set(i, i, Fe::ONE);
    }
    let verified = d == target && a.rank(f) == n && h.c.rank(f) == r;
    Ok(Congruence { a, d, rank: r, verified })
}

fn independent_subset(f: &Field, vecs: &[Vec<Fe>]) -> Vec<Vec<Fe>> {
    let mut out: Vec<Vec<Fe>> = Vec::new();
    for v in vecs {
        let mut trial = out.clone();
        trial.push(v.clone());
        if Matrix::from_rows(&trial).rank(f) == trial.len() {
            out = trial;
        }
    }
    out
}

/// Tangent hyperplane at a point of the variety: coefficients `C P^(q)`,
/// normalized.
pub fn tangent_hyperplane(f: &Field, h: &HermitianForm, p: &[Fe]) -> Result<Vec<Fe>> {
    if !herm_eval(f, h, p)?.is_zero() {
        return Err(Error::Invalid("point is not on the Hermitian variety".into()));
    }
    let pq: Vec<Fe> = p.iter().map(|&x| f.pow(x, h.q)).collect();
    normalize(f, &h.c.mul_vec(f, &pq)).ok_or_else(|| Error::Degenerate("point lies in the radical".into()))
}

/// Points of `P^dim` over the subfield of order `sub_order`, first nonzero
/// coordinate one, in lexicographic order of element codes.
pub fn projective_points(f: &Field, sub_order: u64, dim: usize) -> Result<Vec<Vec<Fe>>> {
    let count: u128 = (0..=dim as u32).map(|i| (sub_order as u128).pow(i)).sum();
    if count > enumeration_cap() as u128 {
        return Err(Error::Cap(format!("P^{dim}(GF({sub_order})) has {count} points")));
    }
    let elems = f.subfield_elements(sub_order)?;
    let mut out = Vec::with_capacity(count as usize);
    for lead in (0..=dim).rev() {
        let free = dim - lead;
        let total = (elems.len() as u64).pow(free as u32);
        for idx in 0..total {
            let mut v = vec![Fe::ZERO; dim + 1];
            v[lead] = Fe::ONE;
            let mut t = idx;
            for pos in (lead + 1..=dim).rev() {
                v[pos] = elems[(t % elems.len() as u64) as usize];
                t /= elems.len() as u64;
            }
            out.push(v);
        }
    }
    Ok(out)
}

/// Points of the variety over GF(q^(2m)).
pub fn enumerate_variety_points(f: &Field, h: &HermitianForm, m: u32, exec: Exec) -> Result<Vec<Vec<Fe>>> {
    let pts = projective_points(f, h.q.pow(2 * m), h.dim() - 1)?;
    let keep = exec.map(&pts, |p| h.pairing(f, p, p).is_zero());
    Ok(pts.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect())
}

/// Whether the vectors span a space of dimension below their count.
pub fn dependent(f: &Field, vecs: &[&[Fe]]) -> bool {
    let rows: Vec<Vec<Fe>> = vecs.iter().map(|v| v.to_vec()).collect();
    Matrix::from_rows(&rows).rank(f) < rows.len()
}

/// All points of the line through `a` and `b` over the subfield of order
/// `sub_order`, normalized.
pub fn line_points(f: &Field, sub_order: u64, a: &[Fe], b: &[Fe]) -> Result<Vec<Vec<Fe>>> {
    let elems = f.subfield_elements(sub_order)?;
    let mut out = vec![normalize(f, b).ok_or_else(|| Error::Invalid("zero vector".into()))?];
    for &l in &elems {
        let v: Vec<Fe> = a.iter().zip(b).map(|(&x, &y)| f.add(x, f.mul(l, y))).collect();
        if let Some(n) = normalize(f, &v) {
            out.push(n);
        }
    }
    Ok(out)
}

/// A rational tangent line: point and direction.
#[derive(Clone, Debug)]
pub struct TangentLine {
    pub point: Vec<Fe>,
    pub direction: Vec<Fe>,
}

/// Outcome of the projection-center search.
#[derive(Clone, Debug)]
pub struct CenterSearch {
    pub center: Vec<Fe>,
    pub scanned: usize,
    pub chord_points: usize,
    pub tangent_points: usize,
}

/// First point of `P^M(GF(q^2))` in scan order that is off the variety, on
/// no given tangent line, and on no chord of two given curve points.
pub fn find_projection_center(
    f: &Field,
    h: &HermitianForm,
    curve_points: &[Vec<Fe>],
    tangents: &[TangentLine],
) -> Result<CenterSearch> {
    if h.dim() < 4 {
        return Err(Error::Invalid("projection needs M >= 3".into()));
    }
    let q2 = h.q * h.q;
    let mut chord = HashSet::new();
    for i in 0..curve_points.len() {
        for j in i + 1..curve_points.len() {
            chord.extend(line_points(f, q2, &curve_points[i], &curve_points[j])?);
        }
    }
    let mut tang = HashSet::new();
    for t in tangents {
        tang.extend(line_points(f, q2, &t.point, &t.direction)?);
    }
    let pts = projective_points(f, q2, h.dim() - 1)?;
    for (k, p) in pts.iter().enumerate() {
        if h.pairing(f, p, p).is_zero() || chord.contains(p) || tang.contains(p) {
            continue;
        }
        return Ok(CenterSearch { center: p.clone(), scanned: k + 1, chord_points: chord.len(), tangent_points: tang.len() });
    }
    Err(Error::Internal("no projection center exists".into()))
}

/// Direct check of the three center conditions by rank computations.
pub fn verify_center(f: &Field, h: &HermitianForm, center: &[Fe], curve_points: &[Vec<Fe>], tangents: &[TangentLine]) -> bool {
    if h.pairing(f, center, center).is_zero() {
        return false;
    }
    for i in 0..curve_points.len() {
        if dependent(f, &[&curve_points[i], center]) {
            return false;
        }
        for j in i + 1..curve_points.len() {
            if dependent(f, &[&curve_points[i], &curve_points[j], center]) {
                return false;
            }
        }
    }
    tangents.iter().all(|t| !dependent(f, &[&t.point, &t.direction, center]))
}

/// Coordinates in which the center is the last unit vector and the form is
/// block diagonal; projection drops the last coordinate.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Columns: a basis of the orthogonal complement of the center, then
    /// the center.
    pub basis: Matrix,
    pub inverse: Matrix,
    /// Form in the new coordinates.
    pub form: HermitianForm,
    /// Form induced on the hyperplane of the first `M` coordinates.
    pub reduced: HermitianForm,
}

impl Projection {
    pub fn project(&self, f: &Field, p: &[Fe]) -> Option<Vec<Fe>> {
        let y = self.inverse.mul_vec(f, p);
        normalize(f, &y[..y.len() - 1])
    }
}

pub fn project_from_center(f: &Field, h: &HermitianForm, center: &[Fe]) -> Result<Projection> {
    let n = h.dim();
    if h.pairing(f, center, center).is_zero() {
        return Err(Error::Invalid("center lies on the variety".into()));
    }
    // s(x, c) = x^t C c^(q) = 0
    let cq: Vec<Fe> = center.iter().map(|&x| f.pow(x, h.q)).collect();
    let row = h.c.mul_vec(f, &cq);
    let mut cols = Matrix::from_rows(&[row]).kernel(f);
    cols.push(center.to_vec());
    let basis = Matrix::from_columns(&cols);
    let inverse = basis.inverse(f).ok_or_else(|| Error::Internal("singular projection basis".into()))?;
    let g = basis.transpose().mul(f, &h.c).mul(f, &basis.map_pow(f, h.q));
    for i in 0..n - 1 {
        if !g.get(i, n - 1).is_zero() || !g.get(n - 1, i).is_zero() {
            return Err(Error::Internal("projected form is not block diagonal".into()));
        }
    }
    let mut red = Matrix::zero(n - 1, n - 1);
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            red.set(i, j, g.get(i, j));
        }
    }
    Ok(Projection { basis, inverse, form: HermitianForm { q: h.q, c: g }, reduced: HermitianForm { q: h.q, c: red } })
}
