//! Truncated power series in one local parameter.

use crate::error::{Error, Result};
use crate::gf::{binom_mod, Fe, Field};
use crate::poly::MultiPoly;
use serde::Serialize;

/// Order of vanishing, or a lower bound when every stored coefficient is
/// zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Valuation {
    Finite(usize),
    AtLeast(usize),
}

impl Valuation {
    pub fn finite(self) -> Option<usize> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::AtLeast(_) => None,
        }
    }
}

impl std::fmt::Display for Valuation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::AtLeast(v) => write!(f, ">={v}"),
        }
    }
}

/// `sum c_i t^i mod t^prec`; `coeffs.len() == prec` always.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    coeffs: Vec<Fe>,
}

impl Series {
    pub fn new(mut coeffs: Vec<Fe>, prec: usize) -> Series {
        coeffs.resize(prec, Fe::ZERO);
        Series { coeffs }
    }

    pub fn zero(prec: usize) -> Series {
        Series { coeffs: vec![Fe::ZERO; prec] }
    }

    pub fn constant(c: Fe, prec: usize) -> Series {
        Series::new(vec![c], prec)
    }

    /// `c + t`.
    pub fn parameter_plus(c: Fe, prec: usize) -> Series {
        Series::new(vec![c, Fe::ONE], prec)
    }

    pub fn prec(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, i: usize) -> Fe {
        *self.coeffs.get(i).unwrap_or(&Fe::ZERO)
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    pub fn truncate(&self, prec: usize) -> Series {
        Series::new(self.coeffs[..prec.min(self.prec())].to_vec(), prec.min(self.prec()))
    }

    pub fn valuation(&self) -> Valuation {
        match self.coeffs.iter().position(|c| !c.is_zero()) {
            Some(i) => Valuation::Finite(i),
            None => Valuation::AtLeast(self.prec()),
        }
    }

    pub fn add(&self, f: &Field, o: &Series) -> Series {
        let n = self.prec().min(o.prec());
        Series { coeffs: (0..n).map(|i| f.add(self.coeffs[i], o.coeffs[i])).collect() }
    }

    pub fn sub(&self, f: &Field, o: &Series) -> Series {
        let n = self.prec().min(o.prec());
        Series { coeffs: (0..n).map(|i| f.sub(self.coeffs[i], o.coeffs[i])).collect() }
    }

    pub fn neg(&self, f: &Field) -> Series {
        Series { coeffs: self.coeffs.iter().map(|&c| f.neg(c)).collect() }
    }

    pub fn scale(&self, f: &Field, c: Fe) -> Series {
        Series { coeffs: self.coeffs.iter().map(|&a| f.mul(a, c)).collect() }
    }

    /// Product at the smaller of the two precisions.
    pub fn mul(&self, f: &Field, o: &Series) -> Series {
        let n = self.prec().min(o.prec());
        let mut r = vec![Fe::ZERO; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i >= n {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                if !b.is_zero() {
                    r[i + j] = f.add(r[i + j], f.mul(a, b));
                }
            }
        }
        Series { coeffs: r }
    }

    pub fn pow(&self, f: &Field, mut e: u64) -> Series {
        let mut r = Series::constant(Fe::ONE, self.prec());
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

    /// Multiplicative inverse of a unit series.
    pub fn inverse(&self, f: &Field) -> Result<Series> {
        let c0 = f
            .inv(self.coeff(0))
            .ok_or_else(|| Error::Invalid("series is not a unit".into()))?;
        let n = self.prec();
        let mut r = vec![Fe::ZERO; n];
        if n == 0 {
            return Ok(Series { coeffs: r });
        }
        r[0] = c0;
        for k in 1..n {
            let mut s = Fe::ZERO;
            for j in 1..=k {
                s = f.add(s, f.mul(self.coeffs[j], r[k - j]));
            }
            r[k] = f.neg(f.mul(s, c0));
        }
        Ok(Series { coeffs: r })
    }

    /// Multiplies by `t^e`.
    pub fn shift_up(&self, e: usize) -> Series {
        let mut c = vec![Fe::ZERO; e];
        c.extend_from_slice(&self.coeffs);
        Series { coeffs: c }
    }

    /// Divides by `t^e`; the first `e` coefficients must vanish.
    pub fn shift_down(&self, e: usize) -> Result<Series> {
        if e > self.prec() || self.coeffs[..e].iter().any(|c| !c.is_zero()) {
            return Err(Error::Invalid(format!("series not divisible by t^{e}")));
        }
        Ok(Series { coeffs: self.coeffs[e..].to_vec() })
    }

    /// Hasse derivative `D^k`: `D^k t^n = C(n, k) t^(n-k)`, precision drops
    /// by `k`.
    pub fn hasse(&self, f: &Field, k: usize) -> Series {
        let p = f.characteristic();
        let n = self.prec().saturating_sub(k);
        Series {
            coeffs: (0..n)
                .map(|i| {
                    let c = self.coeffs[i + k];
                    if c.is_zero() {
                        return c;
                    }
                    f.mul(c, f.from_int(binom_mod((i + k) as u64, k as u64, p) as i64))
                })
                .collect(),
        }
    }

    /// `s^q` for `q` a power of the characteristic, by coefficient powering
    /// and exponent scaling. Precision becomes `q * prec`.
    pub fn qth_power(&self, f: &Field, q: usize) -> Result<Series> {
        if self.prec() == 0 {
            return Err(Error::Invalid("series holds no terms".into()));
        }
        let n = self.prec() * q;
        let mut r = vec![Fe::ZERO; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            r[i * q] = f.pow(c, q as u64);
        }
        Ok(Series { coeffs: r })
    }

    /// Entrywise `c -> c^e` on coefficients.
    pub fn map_coeffs_pow(&self, f: &Field, e: u64) -> Series {
        Series { coeffs: self.coeffs.iter().map(|&c| f.pow(c, e)).collect() }
    }
}

/// Evaluates a bivariate polynomial at a pair of series.
pub fn eval_bivariate(f: &Field, poly: &MultiPoly, x: &Series, y: &Series) -> Series {
    let prec = x.prec().min(y.prec());
    let dx = poly.degree_in(0) as usize;
    let dy = poly.degree_in(1) as usize;
    let powers = |s: &Series, d: usize| {
        let mut v = vec![Series::constant(Fe::ONE, prec)];
        for i in 1..=d {
            let next = v[i - 1].mul(f, s);
            v.push(next);
        }
        v
    };
    let xp = powers(x, dx);
    let yp = powers(y, dy);
    let mut acc = Series::zero(prec);
    for (m, &c) in poly.terms() {
        let t = xp[m.0[0] as usize].mul(f, &yp[m.0[1] as usize]).scale(f, c);
        acc = acc.add(f, &t);
    }
    acc.truncate(prec)
}
