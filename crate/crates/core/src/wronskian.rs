//! Hasse-Wronskians of coordinate frames and the valuation identities that
//! hold on curves lying on the canonical Hermitian variety.

use crate::embed::Frame;
use crate::error::{Error, Result};
use crate::gf::Field;
use crate::series::{Series, Valuation};
use serde::Serialize;

/// Determinant of `[D^orders[r] s_c]` over the series ring by cofactor
/// expansion.
pub fn wronskian(f: &Field, series: &[Series], orders: &[usize]) -> Result<Series> {
    if series.len() != orders.len() || series.is_empty() {
        return Err(Error::Invalid("frame must be square".into()));
    }
    if orders[0] != 0 || orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Degenerate(format!("orders {orders:?} are not strictly increasing from 0")));
    }
    let m: Vec<Vec<Series>> = orders.iter().map(|&k| series.iter().map(|s| s.hasse(f, k)).collect()).collect();
    let cols: Vec<usize> = (0..series.len()).collect();
    Ok(det_rec(f, &m, 0, &cols))
}

fn det_rec(f: &Field, m: &[Vec<Series>], row: usize, cols: &[usize]) -> Series {
    if cols.len() == 1 {
        return m[row][cols[0]].clone();
    }
    let prec = m[row..].iter().flat_map(|r| cols.iter().map(move |&c| r[c].prec())).min().unwrap();
    let mut acc = Series::zero(prec);
    for (k, &c) in cols.iter().enumerate() {
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let term = m[row][c].mul(f, &det_rec(f, m, row + 1, &rest));
        acc = if k % 2 == 0 { acc.add(f, &term) } else { acc.sub(f, &term) };
    }
    acc
}

pub fn wronskian_valuation(f: &Field, series: &[Series], orders: &[usize]) -> Result<Valuation> {
    Ok(wronskian(f, series, orders)?.valuation())
}

/// `sum g_i D^q(g_i^q)` for a frame in canonical coordinates.
pub fn rationality_series(f: &Field, fr: &Frame, q: usize) -> Result<Series> {
    let prec = fr.prec();
    let mut acc: Option<Series> = None;
    for g in &fr.series {
        let t = g.mul(f, &g.qth_power(f, q)?.hasse(f, q).truncate(prec));
        acc = Some(match acc {
            None => t,
            Some(a) => a.add(f, &t),
        });
    }
    acc.ok_or_else(|| Error::Invalid("empty frame".into()))
}

/// Valuation of [`rationality_series`] with the first-order coefficient
/// sums used in its analysis.
#[derive(Clone, Debug, Serialize)]
pub struct RationalityRecord {
    pub valuation: Valuation,
    /// `sum a_i0^q a_i1`, zero at every branch.
    pub first_order: bool,
    /// `sum a_i0 a_i1^q`, zero exactly at rational branches.
    pub conjugate_first_order: bool,
    /// `sum a_i1^(q+1)`.
    pub tangent_norm_zero: bool,
}

pub fn rationality_valuation(f: &Field, fr: &Frame, q: usize) -> Result<RationalityRecord> {
    let s = rationality_series(f, fr, q)?;
    let a0 = fr.layer(0);
    let a1 = fr.layer(1);
    let qq = q as u64;
    let s1 = f.sum(a0.iter().zip(&a1).map(|(&x, &y)| f.mul(f.pow(x, qq), y)));
    let s2 = f.sum(a0.iter().zip(&a1).map(|(&x, &y)| f.mul(x, f.pow(y, qq))));
    let s3 = f.sum(a1.iter().map(|&y| f.pow(y, qq + 1)));
    Ok(RationalityRecord {
        valuation: s.valuation(),
        first_order: s1.is_zero(),
        conjugate_first_order: s2.is_zero(),
        tangent_norm_zero: s3.is_zero(),
    })
}

/// Both sides of `q v(g_M) + v(Wr(g_0..g_M)) = v(Wr(g_0..g_{M-1})) + v(S)`
/// with orders `(0, .., M-1, q)` and `(0, .., M-1)`.
#[derive(Clone, Debug, Serialize)]
pub struct WronskianRecord {
    pub full: Valuation,
    pub reduced: Valuation,
    pub last_coordinate: Valuation,
    pub rationality: Valuation,
    pub lhs: Option<usize>,
    pub rhs: Option<usize>,
    pub pass: bool,
}

pub fn wronskian_identity(f: &Field, fr: &Frame, q: usize) -> Result<WronskianRecord> {
    let m = fr.series.len() - 1;
    let mut full_orders: Vec<usize> = (0..m).collect();
    full_orders.push(q);
    let red_orders: Vec<usize> = (0..m).collect();
    let full = wronskian_valuation(f, &fr.series, &full_orders)?;
    let reduced = wronskian_valuation(f, &fr.series[..m], &red_orders)?;
    let last = fr.series[m].valuation();
    let s = rationality_series(f, fr, q)?.valuation();
    let lhs = match (full, last) {
        (Valuation::Finite(a), Valuation::Finite(b)) => Some(a + q * b),
        _ => None,
    };
    let rhs = match (reduced, s) {
        (Valuation::Finite(a), Valuation::Finite(b)) => Some(a + b),
        _ => None,
    };
    if lhs.is_none() || rhs.is_none() {
        return Err(Error::Unresolved(fr.prec()));
    }
    Ok(WronskianRecord { full, reduced, last_coordinate: last, rationality: s, lhs, rhs, pass: lhs == rhs })
}
