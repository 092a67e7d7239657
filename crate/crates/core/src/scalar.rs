//! Scalar arithmetic shared by plain reals, forward-mode tangents and
//! truncated Taylor series.
//!
//! Every formula in the models is written once, generically over [`Scalar`],
//! and then evaluated on `f64` (values), on [`Dual`] (one exact directional
//! derivative) or on `Dual<Dual<f64>>` (mixed second derivatives). The same
//! geometry code also runs on [`crate::taylor::JetScalar`] to build series for
//! connections and curvature.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    /// The primal real value (constant term / real part).
    fn value(&self) -> f64;

    /// A constant `c` of the same kind as `self` (same truncation order and
    /// expansion point for series).
    fn lift(&self, c: f64) -> Self;

    fn sqrt(&self) -> Self;

    fn zero_like(&self) -> Self {
        self.lift(0.0)
    }

    /// `|self|`, branching on the sign of the primal value.
    fn abs(&self) -> Self {
        if self.value() < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Scalar for f64 {
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn lift(&self, c: f64) -> Self {
        c
    }
    #[inline]
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
}

/// Forward-mode dual number `re + eps·ε` with `ε² = 0`.
///
/// Nests: `Dual<Dual<f64>>` carries two independent tangent directions and
/// their mixed second derivative in `eps.eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub eps: S,
}

impl<S: Scalar> Dual<S> {
    pub fn new(re: S, eps: S) -> Self {
        Dual { re, eps }
    }

    pub fn constant(re: S) -> Self {
        let eps = re.zero_like();
        Dual { re, eps }
    }

    /// Seed `re` as the active variable (tangent 1).
    pub fn variable(re: S) -> Self {
        let eps = re.lift(1.0);
        Dual { re, eps }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual { re: self.re + o.re, eps: self.eps + o.eps }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual { re: self.re - o.re, eps: self.eps - o.eps }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let eps = self.re.clone() * o.eps + self.eps * o.re.clone();
        Dual { re: self.re * o.re, eps }
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = o.re.lift(1.0) / o.re;
        let re = self.re * inv.clone();
        let eps = (self.eps - re.clone() * o.eps) * inv;
        Dual { re, eps }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual { re: -self.re, eps: -self.eps }
    }
}

impl<S: Scalar> Add<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, c: f64) -> Self {
        Dual { re: self.re + c, eps: self.eps }
    }
}

impl<S: Scalar> Mul<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, c: f64) -> Self {
        Dual { re: self.re * c, eps: self.eps * c }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    #[inline]
    fn value(&self) -> f64 {
        self.re.value()
    }
    #[inline]
    fn lift(&self, c: f64) -> Self {
        Dual { re: self.re.lift(c), eps: self.re.lift(0.0) }
    }
    #[inline]
    fn sqrt(&self) -> Self {
        let s = self.re.sqrt();
        let eps = self.eps.clone() / (s.clone() * 2.0);
        Dual { re: s, eps }
    }
}

/// Sum of an iterator of scalars; `zero` fixes the kind of the result.
pub fn sum<S: Scalar>(zero: S, items: impl IntoIterator<Item = S>) -> S {
    items.into_iter().fold(zero, |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<S: Scalar>(x: S, y: S) -> S {
        // x²y + sqrt(x)/y
        x.clone() * x.clone() * y.clone() + x.sqrt() / y
    }

    #[test]
    fn first_derivative_matches_hand_value() {
        let x = Dual::variable(4.0);
        let y = Dual::constant(2.0);
        let r = f(x, y);
        assert_eq!(r.re, 32.0 + 1.0);
        // d/dx = 2xy + 1/(2 sqrt(x) y) = 16 + 1/8
        assert!((r.eps - 16.125).abs() < 1e-15);
    }

    #[test]
    fn nested_duals_give_mixed_partial() {
        // outer seeds y, inner seeds x: eps.eps = d²f/dxdy = 2x - 1/(2 sqrt(x) y²)
        let x = Dual::new(Dual::variable(4.0), Dual::constant(0.0));
        let y = Dual::new(Dual::constant(2.0), Dual::constant(1.0));
        let r = f(x, y);
        let expected = 8.0 - 1.0 / (2.0 * 2.0 * 4.0);
        assert!((r.eps.eps - expected).abs() < 1e-14);
    }

    #[test]
    fn abs_follows_primal_sign() {
        let x = Dual::new(-3.0, 1.0);
        let a = x.abs();
        assert_eq!(a.re, 3.0);
        assert_eq!(a.eps, -1.0);
    }
}
