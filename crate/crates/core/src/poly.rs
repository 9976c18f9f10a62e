//! Sparse multivariate polynomials over a [`Field`].

use crate::error::{Error, Result};
use crate::gf::{binom_mod, Fe, Field};
use std::cmp::Ordering;
use std::collections::BTreeMap;

/// Exponent vector ordered by total degree, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mono(pub Vec<u32>);

impl Mono {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Mono {
    fn cmp(&self, o: &Self) -> Ordering {
        self.degree().cmp(&o.degree()).then_with(|| self.0.cmp(&o.0))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Mono, Fe>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> MultiPoly {
        MultiPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Fe) -> MultiPoly {
        let mut p = MultiPoly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Mono(vec![0; nvars]), c);
        }
        p
    }

    pub fn one(nvars: usize) -> MultiPoly {
        MultiPoly::constant(nvars, Fe::ONE)
    }

    pub fn var(nvars: usize, i: usize) -> MultiPoly {
        let mut e = vec![0; nvars];
        e[i] = 1;
        MultiPoly::term(c_one(), e)
    }

    pub fn term(c: Fe, exps: Vec<u32>) -> MultiPoly {
        let nvars = exps.len();
        let mut p = MultiPoly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Mono(exps), c);
        }
        p
    }

    /// Builds from `(coefficient, exponents)` pairs, combining duplicates.
    pub fn from_terms(f: &Field, nvars: usize, terms: &[(Fe, Vec<u32>)]) -> MultiPoly {
        let mut p = MultiPoly::zero(nvars);
        for (c, e) in terms {
            assert_eq!(e.len(), nvars, "exponent length");
            p.add_term(f, Mono(e.clone()), *c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Fe)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u32]) -> Fe {
        *self.terms.get(&Mono(exps.to_vec())).unwrap_or(&Fe::ZERO)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    fn add_term(&mut self, f: &Field, m: Mono, c: Fe) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v = f.add(*v, c);
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn check(&self, o: &MultiPoly) {
        assert_eq!(self.nvars, o.nvars, "variable count mismatch");
    }

    pub fn add(&self, f: &Field, o: &MultiPoly) -> MultiPoly {
        self.check(o);
        let mut r = self.clone();
        for (m, &c) in &o.terms {
            r.add_term(f, m.clone(), c);
        }
        r
    }

    pub fn sub(&self, f: &Field, o: &MultiPoly) -> MultiPoly {
        self.add(f, &o.neg(f))
    }

    pub fn neg(&self, f: &Field) -> MultiPoly {
        self.scale(f, f.neg(Fe::ONE))
    }

    pub fn scale(&self, f: &Field, c: Fe) -> MultiPoly {
        let mut r = MultiPoly::zero(self.nvars);
        if c.is_zero() {
            return r;
        }
        for (m, &v) in &self.terms {
            r.terms.insert(m.clone(), f.mul(v, c));
        }
        r
    }

    pub fn mul(&self, f: &Field, o: &MultiPoly) -> MultiPoly {
        self.check(o);
        let mut r = MultiPoly::zero(self.nvars);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &o.terms {
                let e: Vec<u32> = ma.0.iter().zip(&mb.0).map(|(a, b)| a + b).collect();
                r.add_term(f, Mono(e), f.mul(ca, cb));
            }
        }
        r
    }

    pub fn pow(&self, f: &Field, mut e: u64) -> MultiPoly {
        let mut r = MultiPoly::one(self.nvars);
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(f, &b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(f, &b);
            }
        }
        r
    }

    /// `self^q` for `q` a power of the characteristic: coefficients raised
    /// to the q-th power and exponents scaled by q.
    pub fn frobenius_power(&self, f: &Field, q: u64) -> MultiPoly {
        debug_assert!({
            let p = f.characteristic() as u64;
            let mut t = q;
            while t > 1 && t.is_multiple_of(p) {
                t /= p;
            }
            t == 1
        });
        let mut r = MultiPoly::zero(self.nvars);
        for (m, &c) in &self.terms {
            let e: Vec<u32> = m.0.iter().map(|&x| x * q as u32).collect();
            r.terms.insert(Mono(e), f.pow(c, q));
        }
        r
    }

    /// Coefficients mapped by `x -> x^e`; exponents unchanged.
    pub fn map_coeffs_pow(&self, f: &Field, e: u64) -> MultiPoly {
        let mut r = MultiPoly::zero(self.nvars);
        for (m, &c) in &self.terms {
            r.terms.insert(m.clone(), f.pow(c, e));
        }
        r
    }

    pub fn eval(&self, f: &Field, point: &[Fe]) -> Fe {
        assert_eq!(point.len(), self.nvars, "point dimension");
        let mut acc = Fe::ZERO;
        for (m, &c) in &self.terms {
            let mut t = c;
            for (&x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t = f.mul(t, f.pow(x, e as u64));
                }
            }
            acc = f.add(acc, t);
        }
        acc
    }

    /// Substitutes polynomial `subs[i]` for variable `i`.
    pub fn compose(&self, f: &Field, subs: &[MultiPoly]) -> MultiPoly {
        assert_eq!(subs.len(), self.nvars, "substitution arity");
        let nv = subs.first().map_or(0, |s| s.nvars);
        let mut cache: Vec<Vec<MultiPoly>> = subs.iter().map(|s| vec![MultiPoly::one(s.nvars), s.clone()]).collect();
        let mut r = MultiPoly::zero(nv);
        for (m, &c) in &self.terms {
            let mut t = MultiPoly::constant(nv, c);
            for (i, &e) in m.0.iter().enumerate() {
                let e = e as usize;
                while cache[i].len() <= e {
                    let next = cache[i].last().unwrap().mul(f, &subs[i]);
                    cache[i].push(next);
                }
                if e > 0 {
                    t = t.mul(f, &cache[i][e]);
                }
            }
            r = r.add(f, &t);
        }
        r
    }

    /// Linear change of variables: variable `i` becomes `sum_j m[i][j] X_j`.
    pub fn linear_substitute(&self, f: &Field, m: &crate::linalg::Matrix) -> MultiPoly {
        let subs: Vec<MultiPoly> = (0..self.nvars)
            .map(|i| {
                let terms: Vec<(Fe, Vec<u32>)> = (0..m.cols)
                    .map(|j| {
                        let mut e = vec![0; m.cols];
                        e[j] = 1;
                        (m.get(i, j), e)
                    })
                    .collect();
                MultiPoly::from_terms(f, m.cols, &terms)
            })
            .collect();
        self.compose(f, &subs)
    }

    /// Hasse derivative of order `k` in variable `var`.
    pub fn hasse_partial(&self, f: &Field, var: usize, k: u32) -> MultiPoly {
        let mut r = MultiPoly::zero(self.nvars);
        for (m, &c) in &self.terms {
            let e = m.0[var];
            if e < k {
                continue;
            }
            let b = binom_mod(e as u64, k as u64, f.characteristic());
            if b == 0 {
                continue;
            }
            let mut ne = m.0.clone();
            ne[var] -= k;
            r.add_term(f, Mono(ne), f.mul(c, f.from_int(b as i64)));
        }
        r
    }

    /// Homogenizes with a new leading variable of index 0.
    pub fn homogenize(&self) -> MultiPoly {
        let d = self.total_degree();
        let mut r = MultiPoly::zero(self.nvars + 1);
        for (m, &c) in &self.terms {
            let mut e = vec![d - m.degree()];
            e.extend_from_slice(&m.0);
            r.terms.insert(Mono(e), c);
        }
        r
    }

    /// Coefficients of `self` viewed as a polynomial in `var`, for a fixed
    /// assignment of the remaining variables.
    pub fn specialize_to_univariate(&self, f: &Field, var: usize, values: &[Fe]) -> Vec<Fe> {
        let d = self.degree_in(var) as usize;
        let mut out = vec![Fe::ZERO; d + 1];
        for (m, &c) in &self.terms {
            let mut t = c;
            for (i, (&x, &e)) in values.iter().zip(&m.0).enumerate() {
                if i != var && e > 0 {
                    t = f.mul(t, f.pow(x, e as u64));
                }
            }
            let k = m.0[var] as usize;
            out[k] = f.add(out[k], t);
        }
        out
    }

    /// Canonical text rendering, highest graded-lex term first.
    pub fn render(&self, f: &Field, names: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (m, &c) in self.terms.iter().rev() {
            let mut mono = Vec::new();
            for (i, &e) in m.0.iter().enumerate() {
                let name = names.get(i).copied().unwrap_or("?");
                match e {
                    0 => {}
                    1 => mono.push(name.to_string()),
                    _ => mono.push(format!("{name}^{e}")),
                }
            }
            let cs = f.render(c);
            let cs = if cs.contains('+') { format!("({cs})") } else { cs };
            parts.push(match (mono.is_empty(), c == Fe::ONE) {
                (true, _) => cs,
                (false, true) => mono.join("*"),
                (false, false) => format!("{cs}*{}", mono.join("*")),
            });
        }
        parts.join(" + ")
    }
}

fn c_one() -> Fe {
    Fe::ONE
}

/// Reduces `g(x, y)` modulo a curve `F` monic in `y` (variable 1). The
/// result has `y`-degree below that of `F`.
pub fn reduce_mod_curve(f: &Field, g: &MultiPoly, curve: &MultiPoly) -> Result<MultiPoly> {
    if g.nvars != 2 || curve.nvars != 2 {
        return Err(Error::Invalid("curve reduction needs polynomials in x, y".into()));
    }
    let d = curve.degree_in(1);
    if d == 0 {
        return Err(Error::Invalid("curve has no y term".into()));
    }
    let lead: Vec<(&Mono, &Fe)> = curve.terms.iter().filter(|(m, _)| m.0[1] == d).collect();
    if lead.len() != 1 || lead[0].0 .0[0] != 0 {
        return Err(Error::Invalid("curve is not monic in y up to a unit".into()));
    }
    let unit = *lead[0].1;
    let monic = curve.scale(f, f.inv(unit).unwrap());
    // tail = y^d - monic, so y^d == tail on the curve
    let tail = MultiPoly::term(Fe::ONE, vec![0, d]).sub(f, &monic);
    // bucket by y exponent, reduce from the top down
    let top = g.degree_in(1);
    let mut buckets: Vec<BTreeMap<u32, Fe>> = vec![BTreeMap::new(); top as usize + 1];
    for (m, &c) in &g.terms {
        buckets[m.0[1] as usize].insert(m.0[0], c);
    }
    let add = |b: &mut BTreeMap<u32, Fe>, x: u32, c: Fe| {
        if c.is_zero() {
            return;
        }
        let e = b.entry(x).or_insert(Fe::ZERO);
        *e = f.add(*e, c);
        if e.is_zero() {
            b.remove(&x);
        }
    };
    for yd in (d..=top).rev() {
        let bucket = std::mem::take(&mut buckets[yd as usize]);
        for (xe, c) in bucket {
            for (tm, &tc) in &tail.terms {
                let ny = yd - d + tm.0[1];
                add(&mut buckets[ny as usize], xe + tm.0[0], f.mul(c, tc));
            }
        }
    }
    let mut r = MultiPoly::zero(2);
    for (yd, b) in buckets.into_iter().enumerate() {
        for (xe, c) in b {
            r.terms.insert(Mono(vec![xe, yd as u32]), c);
        }
    }
    Ok(r)
}

/// Exact equality after canonicalization.
pub fn poly_identity_check(lhs: &MultiPoly, rhs: &MultiPoly) -> Result<bool> {
    if lhs.nvars != rhs.nvars {
        return Err(Error::Invalid("mismatched variable sets".into()));
    }
    Ok(lhs == rhs)
}
