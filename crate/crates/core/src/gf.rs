//! Finite fields GF(p^k) with table-driven arithmetic, univariate root
//! finding, and towers of subfields sharing one top field.
//!
//! An element is stored as its packed coordinate code `c_0 + c_1 p + ... +
//! c_{k-1} p^{k-1}` in the polynomial basis `1, t, ..., t^{k-1}`, so equal
//! elements have equal codes.

use crate::error::{Error, Result};
use std::fmt;

/// Default bound on field orders used for exhaustive work.
pub const DEFAULT_CAP: u64 = 1 << 20;
/// Absolute bound on table size, regardless of `HERMCURVE_CAP`.
pub const HARD_LIMIT: u64 = 1 << 24;
const NONE: u32 = u32::MAX;

/// Enumeration cap, overridable through `HERMCURVE_CAP`.
pub fn enumeration_cap() -> u64 {
    std::env::var("HERMCURVE_CAP")
        .ok()
        .and_then(|s| s.trim().parse::<u64>().ok())
        .filter(|&c| c > 0)
        .unwrap_or(DEFAULT_CAP)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Fe(pub u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
    pub fn code(self) -> u32 {
        self.0
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Splits a prime power into `(p, e)`.
pub fn prime_power(q: u64) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let f = prime_factors(q);
    if f.len() != 1 {
        return None;
    }
    let p = f[0];
    let mut e = 0;
    let mut t = q;
    while t > 1 {
        t /= p;
        e += 1;
    }
    Some((p as u32, e))
}

/// Binomial coefficient C(n, k) mod p by Lucas' theorem.
pub fn binom_mod(mut n: u64, mut k: u64, p: u32) -> u32 {
    let p = p as u64;
    let mut acc = 1u64;
    while n > 0 || k > 0 {
        let (a, b) = (n % p, k % p);
        if b > a {
            return 0;
        }
        // small binomial via multiplicative formula mod p
        let mut num = 1u64;
        let mut den = 1u64;
        for i in 0..b {
            num = num * (a - i) % p;
            den = den * (i + 1) % p;
        }
        acc = acc * num % p * modinv(den, p) % p;
        n /= p;
        k /= p;
    }
    acc as u32
}

fn modinv(a: u64, p: u64) -> u64 {
    modpow(a % p, p - 2, p)
}

fn modpow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

// Dense polynomials over GF(p), coefficients low first, used only while
// selecting a modulus and building tables.
mod fp {
    pub fn trim(a: &mut Vec<u32>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let n = a.len().max(b.len());
        let mut r: Vec<u32> = (0..n)
            .map(|i| {
                let x = *a.get(i).unwrap_or(&0);
                let y = *b.get(i).unwrap_or(&0);
                (x + p - y) % p
            })
            .collect();
        trim(&mut r);
        r
    }

    pub fn mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut r = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                r[i + j] = (r[i + j] + x as u64 * y as u64) % p as u64;
            }
        }
        let mut r: Vec<u32> = r.into_iter().map(|v| v as u32).collect();
        rem_in_place(&mut r, m, p);
        r
    }

    pub fn rem_in_place(r: &mut Vec<u32>, m: &[u32], p: u32) {
        trim(r);
        let dm = m.len() - 1;
        let inv_lead = super::modinv(m[dm] as u64, p as u64) as u32;
        while r.len() > dm {
            let d = r.len() - 1;
            let c = (r[d] as u64 * inv_lead as u64 % p as u64) as u32;
            if c != 0 {
                for (i, &mi) in m.iter().enumerate() {
                    let idx = d - dm + i;
                    r[idx] = ((r[idx] as u64 + (p - c) as u64 * mi as u64) % p as u64) as u32;
                }
            }
            r.pop();
            trim(r);
        }
    }

    pub fn powmod(base: &[u32], mut e: u64, m: &[u32], p: u32) -> Vec<u32> {
        let mut r = vec![1u32];
        let mut b = base.to_vec();
        rem_in_place(&mut b, m, p);
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(&r, &b, m, p);
            }
            b = mulmod(&b, &b, m, p);
            e >>= 1;
        }
        r
    }

    pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            rem_in_place(&mut a, &b, p);
            std::mem::swap(&mut a, &mut b);
        }
        a
    }

    /// Rabin's irreducibility test for a monic polynomial of degree k.
    pub fn is_irreducible(f: &[u32], p: u32) -> bool {
        let k = f.len() - 1;
        let x = vec![0, 1];
        let pk = (p as u64).pow(k as u32);
        if sub(&powmod(&x, pk, f, p), &x, p) != Vec::<u32>::new() {
            return false;
        }
        for r in super::prime_factors(k as u64) {
            let e = (p as u64).pow((k as u64 / r) as u32);
            let h = sub(&powmod(&x, e, f, p), &x, p);
            if gcd(f, &h, p).len() != 1 {
                return false;
            }
        }
        true
    }
}

/// The lexicographically smallest monic irreducible polynomial of degree `k`
/// over GF(p), as coefficients constant-first. Candidates are scanned by the
/// integer `sum c_i p^i` of their lower coefficients.
pub fn smallest_irreducible(p: u32, k: u32) -> Vec<u32> {
    if k == 1 {
        return vec![0, 1];
    }
    let total = (p as u64).pow(k);
    for n in 0..total {
        let mut f = Vec::with_capacity(k as usize + 1);
        let mut t = n;
        for _ in 0..k {
            f.push((t % p as u64) as u32);
            t /= p as u64;
        }
        f.push(1);
        if f[0] != 0 && fp::is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// GF(p^k) with exp/log/Zech tables. Immutable once built.
#[derive(Clone)]
pub struct Field {
    p: u32,
    k: u32,
    order: u32,
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    zech: Vec<u32>,
    half: u32,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{}) mod {:?}", self.p, self.k, self.modulus)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k && self.modulus == other.modulus
    }
}

impl Field {
    /// Builds GF(p^k), honouring the enumeration cap.
    pub fn new(p: u32, k: u32) -> Result<Field> {
        Self::with_cap(p, k, enumeration_cap())
    }

    pub fn with_cap(p: u32, k: u32, cap: u64) -> Result<Field> {
        if !is_prime(p as u64) {
            return Err(Error::Invalid(format!("{p} is not prime")));
        }
        if k == 0 {
            return Err(Error::Invalid("extension degree must be at least 1".into()));
        }
        let order = (p as u64).checked_pow(k).unwrap_or(u64::MAX);
        if order > cap.min(HARD_LIMIT) {
            return Err(Error::Cap(format!(
                "GF({p}^{k}) has {order} elements, cap is {}",
                cap.min(HARD_LIMIT)
            )));
        }
        let modulus = smallest_irreducible(p, k);
        Ok(Self::build(p, k, modulus))
    }

    /// Parses `p k c_0 c_1 ... c_k` and checks the modulus.
    pub fn from_spec(text: &str) -> Result<Field> {
        let nums: Vec<u32> = text
            .split_whitespace()
            .map(|s| s.parse::<u32>().map_err(|e| Error::Invalid(e.to_string())))
            .collect::<Result<_>>()?;
        if nums.len() < 3 {
            return Err(Error::Invalid("field spec too short".into()));
        }
        let (p, k) = (nums[0], nums[1]);
        let modulus = nums[2..].to_vec();
        if !is_prime(p as u64) || k == 0 || modulus.len() != k as usize + 1 {
            return Err(Error::Invalid("malformed field spec".into()));
        }
        if modulus[k as usize] != 1 || modulus.iter().any(|&c| c >= p) {
            return Err(Error::Invalid("modulus must be monic with reduced coefficients".into()));
        }
        if k > 1 && (modulus[0] == 0 || !fp::is_irreducible(&modulus, p)) {
            return Err(Error::Invalid("modulus is reducible".into()));
        }
        let order = (p as u64).checked_pow(k).unwrap_or(u64::MAX);
        if order > enumeration_cap().min(HARD_LIMIT) {
            return Err(Error::Cap(format!("GF({p}^{k}) exceeds cap")));
        }
        Ok(Self::build(p, k, modulus))
    }

    /// Inverse of [`Field::from_spec`].
    pub fn spec(&self) -> String {
        let mut s = format!("{} {}", self.p, self.k);
        for c in &self.modulus {
            s.push_str(&format!(" {c}"));
        }
        s
    }

    fn build(p: u32, k: u32, modulus: Vec<u32>) -> Field {
        let order = p.pow(k);
        let n1 = (order - 1) as u64;
        let to_vec = |code: u32| -> Vec<u32> {
            let mut v = Vec::with_capacity(k as usize);
            let mut t = code;
            for _ in 0..k {
                v.push(t % p);
                t /= p;
            }
            fp::trim(&mut v);
            v
        };
        let to_code = |v: &[u32]| -> u32 { v.iter().rev().fold(0u32, |acc, &c| acc * p + c) };
        let one = vec![1u32];
        let factors = prime_factors(n1);
        let mut gen = 1u32;
        if order > 2 {
            gen = (2..order)
                .find(|&c| {
                    let g = to_vec(c);
                    factors.iter().all(|&r| fp::powmod(&g, n1 / r, &modulus, p) != one)
                })
                .expect("multiplicative group is cyclic");
        }
        let g = to_vec(gen);
        let mut exp = vec![0u32; 2 * n1 as usize];
        let mut log = vec![NONE; order as usize];
        let mut cur = vec![1u32];
        for i in 0..n1 as usize {
            let c = to_code(&cur);
            exp[i] = c;
            exp[i + n1 as usize] = c;
            log[c as usize] = i as u32;
            cur = fp::mulmod(&cur, &g, &modulus, p);
        }
        let mut zech = vec![NONE; n1 as usize];
        for i in 0..n1 as usize {
            // 1 + g^i, adding 1 to the constant digit
            let c = exp[i];
            let d0 = c % p;
            let s = c - d0 + (d0 + 1) % p;
            zech[i] = if s == 0 { NONE } else { log[s as usize] };
        }
        let half = if p == 2 { 0 } else { (n1 / 2) as u32 };
        Field { p, k, order, modulus, exp, log, zech, half }
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }
    pub fn degree(&self) -> u32 {
        self.k
    }
    pub fn order(&self) -> u32 {
        self.order
    }
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn zero(&self) -> Fe {
        Fe::ZERO
    }
    pub fn one(&self) -> Fe {
        Fe::ONE
    }

    /// Image of an integer in the prime field.
    pub fn from_int(&self, n: i64) -> Fe {
        Fe(n.rem_euclid(self.p as i64) as u32)
    }

    pub fn from_code(&self, c: u32) -> Fe {
        assert!(c < self.order, "code {c} out of range");
        Fe(c)
    }

    pub fn coeffs(&self, a: Fe) -> Vec<u32> {
        let mut v = Vec::with_capacity(self.k as usize);
        let mut t = a.0;
        for _ in 0..self.k {
            v.push(t % self.p);
            t /= self.p;
        }
        v
    }

    pub fn from_coeffs(&self, c: &[u32]) -> Fe {
        Fe(c.iter().rev().fold(0u32, |acc, &x| acc * self.p + x % self.p))
    }

    /// Generator of the multiplicative group used for the tables.
    pub fn generator(&self) -> Fe {
        Fe(self.exp[if self.order > 2 { 1 } else { 0 }])
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if self.p == 2 {
            return Fe(a.0 ^ b.0);
        }
        if a.0 == 0 {
            return b;
        }
        if b.0 == 0 {
            return a;
        }
        let n1 = self.order - 1;
        let la = self.log[a.0 as usize];
        let lb = self.log[b.0 as usize];
        let d = if lb >= la { lb - la } else { lb + n1 - la };
        let z = self.zech[d as usize];
        if z == NONE {
            Fe::ZERO
        } else {
            Fe(self.exp[(la + z) as usize])
        }
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        if self.p == 2 || a.0 == 0 {
            return a;
        }
        Fe(self.exp[(self.log[a.0 as usize] + self.half) as usize])
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 || b.0 == 0 {
            return Fe::ZERO;
        }
        Fe(self.exp[(self.log[a.0 as usize] + self.log[b.0 as usize]) as usize])
    }

    pub fn inv(&self, a: Fe) -> Option<Fe> {
        if a.0 == 0 {
            return None;
        }
        let n1 = self.order - 1;
        let l = self.log[a.0 as usize];
        Some(Fe(self.exp[((n1 - l) % n1) as usize]))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Option<Fe> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    pub fn pow(&self, a: Fe, e: u64) -> Fe {
        if e == 0 {
            return Fe::ONE;
        }
        if a.0 == 0 {
            return Fe::ZERO;
        }
        let n1 = (self.order - 1) as u128;
        let l = self.log[a.0 as usize] as u128 * (e as u128 % n1) % n1;
        Fe(self.exp[l as usize])
    }

    /// Discrete logarithm to the table generator.
    pub fn log(&self, a: Fe) -> Option<u32> {
        if a.0 == 0 {
            None
        } else {
            Some(self.log[a.0 as usize])
        }
    }

    pub fn exp(&self, i: u64) -> Fe {
        Fe(self.exp[(i % (self.order as u64 - 1)) as usize])
    }

    pub fn sum<I: IntoIterator<Item = Fe>>(&self, it: I) -> Fe {
        it.into_iter().fold(Fe::ZERO, |acc, x| self.add(acc, x))
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        (0..self.order).map(Fe)
    }

    /// Whether `a` lies in the subfield of order `sub_order`.
    pub fn in_subfield(&self, a: Fe, sub_order: u64) -> bool {
        self.pow(a, sub_order) == a
    }

    /// Elements of the subfield of order `sub_order`, sorted by code.
    pub fn subfield_elements(&self, sub_order: u64) -> Result<Vec<Fe>> {
        let n1 = self.order as u64 - 1;
        if sub_order < 2 || !n1.is_multiple_of(sub_order - 1) || !self.is_subfield_order(sub_order) {
            return Err(Error::Invalid(format!(
                "no subfield of order {sub_order} in GF({}^{})",
                self.p, self.k
            )));
        }
        let step = n1 / (sub_order - 1);
        let mut v: Vec<Fe> = std::iter::once(Fe::ZERO)
            .chain((0..sub_order - 1).map(|j| Fe(self.exp[(j * step) as usize])))
            .collect();
        v.sort();
        Ok(v)
    }

    fn is_subfield_order(&self, s: u64) -> bool {
        let mut t = 1u64;
        for d in 1..=self.k {
            t *= self.p as u64;
            if t == s {
                return self.k.is_multiple_of(d);
            }
        }
        false
    }

    /// Coefficient rendering `c0+c1*t+...`, constant first.
    pub fn render(&self, a: Fe) -> String {
        if a.0 == 0 {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (i, c) in self.coeffs(a).into_iter().enumerate() {
            if c == 0 {
                continue;
            }
            parts.push(match i {
                0 => format!("{c}"),
                1 if c == 1 => "t".to_string(),
                1 => format!("{c}t"),
                _ if c == 1 => format!("t^{i}"),
                _ => format!("{c}t^{i}"),
            });
        }
        parts.join("+")
    }
}

/// `x^q` on GF(q^2). Errors unless the field has order q^2.
pub fn conjugate(f: &Field, q: u64, x: Fe) -> Result<Fe> {
    quadratic_check(f, q)?;
    Ok(f.pow(x, q))
}

/// `x^(q+1)`, the norm from GF(q^2) to GF(q).
pub fn norm_to_subfield(f: &Field, q: u64, x: Fe) -> Result<Fe> {
    quadratic_check(f, q)?;
    Ok(f.pow(x, q + 1))
}

/// `x + x^q`, the trace from GF(q^2) to GF(q).
pub fn trace_to_subfield(f: &Field, q: u64, x: Fe) -> Result<Fe> {
    quadratic_check(f, q)?;
    Ok(f.add(x, f.pow(x, q)))
}

fn quadratic_check(f: &Field, q: u64) -> Result<()> {
    if q * q != f.order() as u64 {
        return Err(Error::Invalid(format!(
            "field of order {} is not a quadratic extension of GF({q})",
            f.order()
        )));
    }
    Ok(())
}

/// Dense univariate polynomial, coefficients low first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UniPoly {
    pub coeffs: Vec<Fe>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Fe>) -> UniPoly {
        while coeffs.last() == Some(&Fe::ZERO) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn monomial(c: Fe, d: usize) -> UniPoly {
        let mut v = vec![Fe::ZERO; d + 1];
        v[d] = c;
        UniPoly::new(v)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> Fe {
        *self.coeffs.last().unwrap_or(&Fe::ZERO)
    }

    pub fn eval(&self, f: &Field, x: Fe) -> Fe {
        self.coeffs.iter().rev().fold(Fe::ZERO, |acc, &c| f.add(f.mul(acc, x), c))
    }

    pub fn add(&self, f: &Field, o: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        UniPoly::new(
            (0..n)
                .map(|i| {
                    f.add(
                        *self.coeffs.get(i).unwrap_or(&Fe::ZERO),
                        *o.coeffs.get(i).unwrap_or(&Fe::ZERO),
                    )
                })
                .collect(),
        )
    }

    pub fn sub(&self, f: &Field, o: &UniPoly) -> UniPoly {
        self.add(f, &o.scale(f, f.neg(Fe::ONE)))
    }

    pub fn scale(&self, f: &Field, c: Fe) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|&a| f.mul(a, c)).collect())
    }

    pub fn mul(&self, f: &Field, o: &UniPoly) -> UniPoly {
        if self.is_zero() || o.is_zero() {
            return UniPoly::default();
        }
        let mut r = vec![Fe::ZERO; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate() {
                r[i + j] = f.add(r[i + j], f.mul(a, b));
            }
        }
        UniPoly::new(r)
    }

    pub fn divrem(&self, f: &Field, d: &UniPoly) -> (UniPoly, UniPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let inv = f.inv(d.lead()).expect("nonzero lead");
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (UniPoly::default(), self.clone());
        }
        let mut qc = vec![Fe::ZERO; r.len() - dd];
        for i in (dd..r.len()).rev() {
            let c = f.mul(r[i], inv);
            if c.is_zero() {
                continue;
            }
            qc[i - dd] = c;
            for (j, &dj) in d.coeffs.iter().enumerate() {
                let idx = i - dd + j;
                r[idx] = f.sub(r[idx], f.mul(c, dj));
            }
        }
        r.truncate(dd);
        (UniPoly::new(qc), UniPoly::new(r))
    }

    pub fn rem(&self, f: &Field, d: &UniPoly) -> UniPoly {
        self.divrem(f, d).1
    }

    pub fn monic(&self, f: &Field) -> UniPoly {
        match f.inv(self.lead()) {
            Some(i) => self.scale(f, i),
            None => self.clone(),
        }
    }

    /// Monic gcd.
    pub fn gcd(&self, f: &Field, o: &UniPoly) -> UniPoly {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let r = a.rem(f, &b);
            a = b;
            b = r;
        }
        a.monic(f)
    }

    /// `self^e mod m`.
    pub fn powmod(&self, f: &Field, mut e: u64, m: &UniPoly) -> UniPoly {
        let mut r = UniPoly::new(vec![Fe::ONE]).rem(f, m);
        let mut b = self.rem(f, m);
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(f, &b).rem(f, m);
            }
            b = b.mul(f, &b).rem(f, m);
            e >>= 1;
        }
        r
    }

    /// Roots among `candidates` by direct evaluation.
    pub fn roots_scan<I: IntoIterator<Item = Fe>>(&self, f: &Field, candidates: I) -> Result<Vec<Fe>> {
        if self.is_zero() {
            return Err(Error::Invalid("zero polynomial has every element as a root".into()));
        }
        let mut v: Vec<Fe> = candidates.into_iter().filter(|&x| self.eval(f, x).is_zero()).collect();
        v.sort();
        v.dedup();
        Ok(v)
    }

    /// Distinct roots in the subfield of order `sub_order`, sorted by code.
    /// Uses gcd with `y^Q - y` followed by deterministic trace splitting.
    pub fn roots_in_subfield(&self, f: &Field, sub_order: u64) -> Result<Vec<Fe>> {
        if self.is_zero() {
            return Err(Error::Invalid("zero polynomial has every element as a root".into()));
        }
        let p = f.characteristic() as u64;
        let d = {
            let mut d = 0u32;
            let mut t = 1u64;
            while t < sub_order {
                t *= p;
                d += 1;
            }
            if t != sub_order || !f.degree().is_multiple_of(d) {
                return Err(Error::Invalid(format!("no subfield of order {sub_order}")));
            }
            d
        };
        let m = self.monic(f);
        if m.degree() == Some(0) {
            return Ok(Vec::new());
        }
        let y = UniPoly::new(vec![Fe::ZERO, Fe::ONE]);
        let yq = y.powmod(f, sub_order, &m);
        let g = m.gcd(f, &yq.sub(f, &y));
        let mut pending = vec![g];
        let mut linear = Vec::new();
        let n1 = f.order() as u64 - 1;
        let prim = f.exp(n1 / (sub_order - 1));
        for j in 0..d {
            if pending.is_empty() {
                break;
            }
            let beta = f.pow(prim, j as u64);
            let mut next = Vec::new();
            for h in pending.drain(..) {
                match h.degree() {
                    Some(0) | None => continue,
                    Some(1) => {
                        linear.push(h);
                        continue;
                    }
                    _ => {}
                }
                // Tr(beta*y) mod h over GF(p)
                let by = UniPoly::new(vec![Fe::ZERO, beta]).rem(f, &h);
                let mut term = by.clone();
                let mut tr = by;
                for _ in 1..d {
                    term = term.powmod(f, p, &h);
                    tr = tr.add(f, &term);
                }
                let mut rest = h.clone();
                for c in 0..p as u32 {
                    if rest.degree().unwrap_or(0) == 0 {
                        break;
                    }
                    let shifted = tr.sub(f, &UniPoly::new(vec![f.from_int(c as i64)]));
                    let part = rest.gcd(f, &shifted);
                    if part.degree().unwrap_or(0) > 0 {
                        rest = rest.divrem(f, &part).0;
                        next.push(part);
                    }
                }
                if rest.degree().unwrap_or(0) > 0 {
                    next.push(rest);
                }
            }
            pending = next;
        }
        for h in pending {
            match h.degree() {
                Some(1) => linear.push(h),
                Some(0) | None => {}
                _ => return Err(Error::Internal("trace splitting did not terminate".into())),
            }
        }
        let mut roots: Vec<Fe> = linear
            .into_iter()
            .map(|h| f.neg(f.mul(h.coeffs[0], f.inv(h.coeffs[1]).unwrap())))
            .collect();
        roots.sort();
        roots.dedup();
        Ok(roots)
    }
}

/// Exhaustive root scan over the whole field, the reference behaviour for
/// root finding.
pub fn univariate_roots(f: &Field, poly: &UniPoly) -> Result<Vec<Fe>> {
    poly.roots_scan(f, f.elements())
}

/// One level of a tower: a separately constructed field and its embedding
/// into the top field.
#[derive(Clone, Debug)]
pub struct Level {
    /// Degree over GF(q).
    pub degree: u32,
    pub field: Field,
    /// Image of the generator `t` in the top field.
    pub root: Fe,
    embed: Vec<Fe>,
    pullback: std::collections::HashMap<Fe, Fe>,
}

impl Level {
    pub fn embed(&self, x: Fe) -> Fe {
        self.embed[x.0 as usize]
    }
    /// Preimage of a top-field element, if it lies in this level.
    pub fn pull_back(&self, x: Fe) -> Option<Fe> {
        self.pullback.get(&x).copied()
    }
}

/// GF(q) ⊂ GF(q^d1) ⊂ ... ⊂ top, every level embedded by the smallest root
/// of its modulus in the top field.
#[derive(Clone, Debug)]
pub struct Tower {
    pub q: u64,
    pub p: u32,
    pub e: u32,
    pub levels: Vec<Level>,
}

impl Tower {
    /// `degrees` are over GF(q) and must include the top degree last.
    pub fn new(q: u64, degrees: &[u32]) -> Result<Tower> {
        let (p, e) = prime_power(q).ok_or_else(|| Error::Invalid(format!("{q} is not a prime power")))?;
        let top_deg = *degrees.last().ok_or_else(|| Error::Invalid("empty tower".into()))?;
        for &d in degrees {
            if d == 0 || top_deg % d != 0 {
                return Err(Error::Invalid(format!("degree {d} does not divide {top_deg}")));
            }
        }
        let top = Field::new(p, e * top_deg)?;
        let mut levels = Vec::new();
        for &d in degrees {
            let field = if d == top_deg { top.clone() } else { Field::new(p, e * d)? };
            let poly = UniPoly::new(field.modulus().iter().map(|&c| top.from_int(c as i64)).collect());
            let root = if d == top_deg {
                // identity on the top field: t itself
                if field.degree() == 1 {
                    Fe::ZERO
                } else {
                    Fe(p)
                }
            } else {
                *poly
                    .roots_in_subfield(&top, top.order() as u64)?
                    .first()
                    .ok_or_else(|| Error::Internal("subfield modulus has no root".into()))?
            };
            let embed: Vec<Fe> = field
                .elements()
                .map(|x| {
                    field
                        .coeffs(x)
                        .iter()
                        .rev()
                        .fold(Fe::ZERO, |acc, &c| top.add(top.mul(acc, root), top.from_int(c as i64)))
                })
                .collect();
            let pullback = embed.iter().enumerate().map(|(i, &y)| (y, Fe(i as u32))).collect();
            levels.push(Level { degree: d, field, root, embed, pullback });
        }
        Ok(Tower { q, p, e, levels })
    }

    pub fn top(&self) -> &Field {
        &self.levels.last().unwrap().field
    }

    pub fn level(&self, degree: u32) -> Option<&Level> {
        self.levels.iter().find(|l| l.degree == degree)
    }

    /// Embedding between two registered levels, obtained by pulling back
    /// through the top field.
    pub fn embed_between(&self, from: u32, to: u32, x: Fe) -> Option<Fe> {
        let a = self.level(from)?;
        let b = self.level(to)?;
        b.pull_back(a.embed(x))
    }

    /// Order of GF(q^d).
    pub fn order_of(&self, d: u32) -> u64 {
        self.q.pow(d)
    }

    /// Elements of GF(q^d) inside the top field.
    pub fn sub_elements(&self, d: u32) -> Result<Vec<Fe>> {
        self.top().subfield_elements(self.order_of(d))
    }

    pub fn conj(&self, x: Fe) -> Fe {
        self.top().pow(x, self.q)
    }

    pub fn is_in(&self, x: Fe, d: u32) -> bool {
        self.top().in_subfield(x, self.order_of(d))
    }
}
