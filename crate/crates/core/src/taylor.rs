//! Truncated multivariate Taylor series in the four base coordinates.
//!
//! A [`JetScalar`] stores the Taylor coefficients `∂^m f(x₀) / m!` of a
//! function around an expansion point `x₀`, for every multi-index `m` of
//! degree at most the truncation order `K`. Storage is dense in graded
//! order (all degree-0 monomials, then degree 1, ...), so truncating to a
//! lower order is a prefix of the coefficient vector and multiplication is a
//! fixed loop over a precomputed table of index triples.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 6;

/// Default truncation order: third-order jets plus one order for total
/// derivatives and tangent lifts.
pub const DEFAULT_ORDER: usize = 4;

/// Exponents of a monomial `x0^a x1^b x2^c x3^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub [u8; 4]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0; 4]);

    pub fn unit(dir: usize) -> Self {
        let mut e = [0u8; 4];
        e[dir] = 1;
        MultiIndex(e)
    }

    /// Multi-index of the partial derivative `∂_{dirs[0]} ∂_{dirs[1]} ...`.
    pub fn from_dirs(dirs: &[usize]) -> Self {
        let mut e = [0u8; 4];
        for &d in dirs {
            e[d] += 1;
        }
        MultiIndex(e)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// `m! = m0!·m1!·m2!·m3!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial(e as usize)).product()
    }

    /// All multi-indices of degree ≤ `order`, in storage order.
    pub fn enumerate(order: usize) -> impl Iterator<Item = MultiIndex> {
        let t = tables();
        t.monomials[..t.count[order.min(MAX_ORDER)]].iter().copied()
    }

    /// Position in the dense coefficient vector (independent of the order
    /// of the containing series).
    pub fn position(&self) -> Option<usize> {
        if self.0.iter().any(|&e| e as usize > MAX_ORDER) || self.degree() > MAX_ORDER {
            return None;
        }
        Some(tables().lookup[lookup_key(self)] as usize)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a},{b},{c},{d})")
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Number of multi-indices of degree ≤ `order` in 4 variables, C(order+4, 4).
pub fn monomial_count(order: usize) -> usize {
    tables().count[order]
}

fn lookup_key(m: &MultiIndex) -> usize {
    let b = MAX_ORDER + 1;
    ((m.0[0] as usize * b + m.0[1] as usize) * b + m.0[2] as usize) * b + m.0[3] as usize
}

struct Tables {
    monomials: Vec<MultiIndex>,
    /// `count[k]` = number of monomials of degree ≤ k.
    count: [usize; MAX_ORDER + 1],
    lookup: Vec<u16>,
    /// Per truncation order: (i, j, i+j) index triples with deg(i)+deg(j) ≤ K.
    mul: Vec<Vec<(u16, u16, u16)>>,
    /// Per truncation order K ≥ 1 and direction: for each target monomial of
    /// degree ≤ K-1, the source index of `m + e_dir` and the factor `m_dir+1`.
    partial: Vec<[Vec<(u16, f64)>; 4]>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

fn build_tables() -> Tables {
    let mut monomials = Vec::new();
    let mut count = [0usize; MAX_ORDER + 1];
    for deg in 0..=MAX_ORDER {
        // lexicographically descending within a degree: x0^deg first
        for a in (0..=deg).rev() {
            for b in (0..=deg - a).rev() {
                for c in (0..=deg - a - b).rev() {
                    let d = deg - a - b - c;
                    monomials.push(MultiIndex([a as u8, b as u8, c as u8, d as u8]));
                }
            }
        }
        count[deg] = monomials.len();
    }
    let mut lookup = vec![u16::MAX; (MAX_ORDER + 1).pow(4)];
    for (i, m) in monomials.iter().enumerate() {
        lookup[lookup_key(m)] = i as u16;
    }

    let mut mul = Vec::with_capacity(MAX_ORDER + 1);
    for k in 0..=MAX_ORDER {
        let n = count[k];
        let mut triples = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (mi, mj) = (monomials[i], monomials[j]);
                if mi.degree() + mj.degree() > k {
                    continue;
                }
                let s = MultiIndex([mi.0[0] + mj.0[0], mi.0[1] + mj.0[1], mi.0[2] + mj.0[2], mi.0[3] + mj.0[3]]);
                triples.push((i as u16, j as u16, lookup[lookup_key(&s)]));
            }
        }
        mul.push(triples);
    }

    let mut partial = Vec::with_capacity(MAX_ORDER + 1);
    for k in 0..=MAX_ORDER {
        let per_dir: [Vec<(u16, f64)>; 4] = std::array::from_fn(|dir| {
            if k == 0 {
                return Vec::new();
            }
            (0..count[k - 1])
                .map(|t| {
                    let mut src = monomials[t];
                    let factor = src.0[dir] as f64 + 1.0;
                    src.0[dir] += 1;
                    (lookup[lookup_key(&src)], factor)
                })
                .collect()
        });
        partial.push(per_dir);
    }

    Tables { monomials, count, lookup, mul, partial }
}

/// Truncated Taylor series of a scalar function of `(x0, x1, x2, x3)`.
///
/// Values are immutable; arithmetic between series requires the same
/// truncation order and the same expansion point. The `try_*` methods report
/// violations as errors; the operator impls (used by the generic geometry
/// code) panic on them instead.
#[derive(Clone, Debug, PartialEq)]
pub struct JetScalar {
    order: u8,
    base: [f64; 4],
    coeffs: Vec<f64>,
}

impl JetScalar {
    fn check_order(order: usize) -> Result<()> {
        if order > MAX_ORDER {
            return Err(Error::Usage(format!("truncation order {order} exceeds the supported maximum {MAX_ORDER}")));
        }
        Ok(())
    }

    pub fn constant(c: f64, order: usize, base: [f64; 4]) -> Result<Self> {
        Self::check_order(order)?;
        let mut coeffs = vec![0.0; monomial_count(order)];
        coeffs[0] = c;
        Ok(JetScalar { order: order as u8, base, coeffs })
    }

    /// The coordinate function `x_dir` expanded around `base`.
    pub fn variable(dir: usize, order: usize, base: [f64; 4]) -> Result<Self> {
        if dir > 3 {
            return Err(Error::Usage(format!("coordinate direction {dir} out of range 0..3")));
        }
        let mut s = Self::constant(base[dir], order, base)?;
        if order >= 1 {
            let pos = MultiIndex::unit(dir).position().expect("unit index");
            s.coeffs[pos] = 1.0;
        }
        Ok(s)
    }

    /// Build from Taylor coefficients in storage order.
    pub fn from_coeffs(order: usize, base: [f64; 4], coeffs: Vec<f64>) -> Result<Self> {
        Self::check_order(order)?;
        if coeffs.len() != monomial_count(order) {
            return Err(Error::Usage(format!(
                "expected {} coefficients for order {order}, got {}",
                monomial_count(order),
                coeffs.len()
            )));
        }
        Ok(JetScalar { order: order as u8, base, coeffs })
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn base_point(&self) -> [f64; 4] {
        self.base
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient at `m`; `None` above the truncation order.
    pub fn coeff(&self, m: MultiIndex) -> Option<f64> {
        if m.degree() > self.order() {
            return None;
        }
        m.position().map(|p| self.coeffs[p])
    }

    /// The partial derivative `∂^m f(x₀) = m!·coeff(m)`.
    pub fn derivative(&self, m: MultiIndex) -> Option<f64> {
        self.coeff(m).map(|c| c * m.factorial())
    }

    /// Value at the expansion point.
    pub fn constant_term(&self) -> f64 {
        self.coeffs[0]
    }

    fn compatible(&self, o: &JetScalar) -> Result<()> {
        if self.order != o.order {
            return Err(Error::Usage(format!("mixing series of truncation order {} and {}", self.order, o.order)));
        }
        if self.base != o.base {
            return Err(Error::Usage(format!("mixing series expanded at {:?} and {:?}", self.base, o.base)));
        }
        Ok(())
    }

    fn with_coeffs(&self, coeffs: Vec<f64>) -> JetScalar {
        JetScalar { order: self.order, base: self.base, coeffs }
    }

    pub fn try_add(&self, o: &JetScalar) -> Result<JetScalar> {
        self.compatible(o)?;
        Ok(self.with_coeffs(self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect()))
    }

    pub fn try_sub(&self, o: &JetScalar) -> Result<JetScalar> {
        self.compatible(o)?;
        Ok(self.with_coeffs(self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect()))
    }

    pub fn try_mul(&self, o: &JetScalar) -> Result<JetScalar> {
        self.compatible(o)?;
        Ok(self.mul_unchecked(o))
    }

    fn mul_unchecked(&self, o: &JetScalar) -> JetScalar {
        let mut out = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &tables().mul[self.order()] {
            out[k as usize] += self.coeffs[i as usize] * o.coeffs[j as usize];
        }
        self.with_coeffs(out)
    }

    pub fn try_div(&self, o: &JetScalar) -> Result<JetScalar> {
        self.compatible(o)?;
        let inv = o.recip()?;
        Ok(self.mul_unchecked(&inv))
    }

    /// `1/self`, via `1/(c(1+u)) = (1/c)·Σ (-u)^k` with nilpotent `u`.
    pub fn recip(&self) -> Result<JetScalar> {
        let c = self.constant_term();
        if c == 0.0 || !c.is_finite() {
            return Err(Error::SingularPoint(format!("division by a series with constant term {c}")));
        }
        let u = self.nilpotent_part(1.0 / c);
        let coeffs: Vec<f64> = (0..=self.order()).map(|k| if k % 2 == 0 { 1.0 / c } else { -1.0 / c }).collect();
        Ok(u.power_series(&coeffs))
    }

    /// `sqrt(c(1+u)) = sqrt(c)·Σ C(1/2, k) u^k`.
    pub fn try_sqrt(&self) -> Result<JetScalar> {
        let c = self.constant_term();
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::Domain(format!(
                "square root of a series with constant term {c} (degenerate or sign-flipped determinant?)"
            )));
        }
        let u = self.nilpotent_part(1.0 / c);
        let s = c.sqrt();
        let mut binom = 1.0;
        let coeffs: Vec<f64> = (0..=self.order())
            .map(|k| {
                if k > 0 {
                    binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
                }
                s * binom
            })
            .collect();
        Ok(u.power_series(&coeffs))
    }

    pub fn exp(&self) -> JetScalar {
        let c = self.constant_term();
        let u = self.nilpotent_part(1.0);
        let e = c.exp();
        let coeffs: Vec<f64> = (0..=self.order()).map(|k| e / factorial(k)).collect();
        u.power_series(&coeffs)
    }

    /// `ln(c(1+u)) = ln c + Σ (-1)^{k+1} u^k / k`.
    pub fn ln(&self) -> Result<JetScalar> {
        let c = self.constant_term();
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::Domain(format!("logarithm of a series with constant term {c}")));
        }
        let u = self.nilpotent_part(1.0 / c);
        let coeffs: Vec<f64> = (0..=self.order())
            .map(|k| match k {
                0 => c.ln(),
                _ if k % 2 == 1 => 1.0 / k as f64,
                _ => -1.0 / k as f64,
            })
            .collect();
        Ok(u.power_series(&coeffs))
    }

    pub fn sin(&self) -> JetScalar {
        let c = self.constant_term();
        let u = self.nilpotent_part(1.0);
        let (s, co) = c.sin_cos();
        // sin(c+u) = sin c cos u + cos c sin u
        let coeffs: Vec<f64> = (0..=self.order())
            .map(|k| {
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                let lead = if k % 2 == 0 { s } else { co };
                sign * lead / factorial(k)
            })
            .collect();
        u.power_series(&coeffs)
    }

    pub fn cos(&self) -> JetScalar {
        let c = self.constant_term();
        let u = self.nilpotent_part(1.0);
        let (s, co) = c.sin_cos();
        // cos(c+u) = cos c cos u - sin c sin u
        let coeffs: Vec<f64> = (0..=self.order())
            .map(|k| {
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                let lead = if k % 2 == 0 { co } else { -s };
                sign * lead / factorial(k)
            })
            .collect();
        u.power_series(&coeffs)
    }

    /// Integer power; negative exponents go through [`JetScalar::recip`].
    pub fn powi(&self, n: i32) -> Result<JetScalar> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut acc = self.lift(1.0);
        let mut sq = base;
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_unchecked(&sq);
            }
        }
        Ok(acc)
    }

    /// `(self - c0)·scale`: the part with zero constant term, scaled.
    fn nilpotent_part(&self, scale: f64) -> JetScalar {
        let mut coeffs: Vec<f64> = self.coeffs.iter().map(|c| c * scale).collect();
        coeffs[0] = 0.0;
        self.with_coeffs(coeffs)
    }

    /// `Σ_k coeffs[k]·self^k` by Horner's rule; `self` must be nilpotent
    /// (zero constant term) so that the truncated sum is exact.
    fn power_series(&self, coeffs: &[f64]) -> JetScalar {
        let mut acc = self.lift(*coeffs.last().unwrap_or(&0.0));
        for &c in coeffs.iter().rev().skip(1) {
            acc = acc.mul_unchecked(self);
            acc.coeffs[0] += c;
        }
        acc
    }

    /// `∂/∂x_dir`; the result has truncation order `K - 1`.
    pub fn partial(&self, dir: usize) -> Result<JetScalar> {
        if dir > 3 {
            return Err(Error::Usage(format!("coordinate direction {dir} out of range 0..3")));
        }
        if self.order == 0 {
            return Err(Error::Usage("cannot differentiate a series of truncation order 0".into()));
        }
        let coeffs = tables().partial[self.order()][dir]
            .iter()
            .map(|&(src, factor)| factor * self.coeffs[src as usize])
            .collect();
        Ok(JetScalar { order: self.order - 1, base: self.base, coeffs })
    }

    /// Drop all terms above degree `order`.
    pub fn truncate(&self, order: usize) -> Result<JetScalar> {
        if order > self.order() {
            return Err(Error::Usage(format!("cannot raise truncation order from {} to {order}", self.order)));
        }
        Ok(JetScalar { order: order as u8, base: self.base, coeffs: self.coeffs[..monomial_count(order)].to_vec() })
    }

    /// Evaluate the truncated polynomial at `x` (used by tests and oracles).
    pub fn eval_polynomial(&self, x: [f64; 4]) -> f64 {
        let d: [f64; 4] = std::array::from_fn(|i| x[i] - self.base[i]);
        MultiIndex::enumerate(self.order())
            .zip(&self.coeffs)
            .map(|(m, c)| c * (0..4).map(|i| d[i].powi(m.0[i] as i32)).product::<f64>())
            .sum()
    }
}

impl Add for JetScalar {
    type Output = JetScalar;
    fn add(self, o: JetScalar) -> JetScalar {
        self.try_add(&o).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Sub for JetScalar {
    type Output = JetScalar;
    fn sub(self, o: JetScalar) -> JetScalar {
        self.try_sub(&o).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Mul for JetScalar {
    type Output = JetScalar;
    fn mul(self, o: JetScalar) -> JetScalar {
        self.try_mul(&o).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Div for JetScalar {
    type Output = JetScalar;
    fn div(self, o: JetScalar) -> JetScalar {
        self.try_div(&o).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Neg for JetScalar {
    type Output = JetScalar;
    fn neg(mut self) -> JetScalar {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Add<f64> for JetScalar {
    type Output = JetScalar;
    fn add(mut self, c: f64) -> JetScalar {
        self.coeffs[0] += c;
        self
    }
}

impl Mul<f64> for JetScalar {
    type Output = JetScalar;
    fn mul(mut self, c: f64) -> JetScalar {
        self.coeffs.iter_mut().for_each(|x| *x *= c);
        self
    }
}

impl Scalar for JetScalar {
    fn value(&self) -> f64 {
        self.constant_term()
    }

    fn lift(&self, c: f64) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = c;
        self.with_coeffs(coeffs)
    }

    fn sqrt(&self) -> Self {
        self.try_sqrt().unwrap_or_else(|e| panic!("{e}"))
    }
}
