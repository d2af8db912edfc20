//! Forward-mode automatic differentiation on fixed-size variable sets.
//!
//! [`Dual1`] propagates a value plus an exact gradient; [`Dual2`] additionally
//! propagates the full Hessian. Both are stack-allocated over `N` independent
//! variables, so differentiating a Lagrangian in its 4 or 6 continuous
//! arguments costs a small constant factor over plain evaluation and involves
//! no truncation error beyond ordinary rounding.
//!
//! The [`Scalar`] trait abstracts over `f64`, [`Dual1`], and [`Dual2`] so the
//! same generic code path produces values, gradients, and Hessians. This is
//! how wind fields and Lagrangians stay single-sourced: each formula is
//! written once against `Scalar`.
//!
//! Hessians are kept bitwise symmetric by computing the upper triangle and
//! mirroring it, which downstream code relies on when assembling Newton
//! systems.

// Index loops here follow the componentwise derivative formulas.
#![allow(clippy::needless_range_loop)]

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic scalars that support the elementary functions used by wind
/// fields and Lagrangians.
///
/// `abs`, `powi` with negative exponent, `powf`, `ln`, and `sqrt` have the
/// usual real-analytic domain restrictions; callers are expected to guard
/// them (the expression evaluator checks operand values before applying
/// these, and reports domain errors with source locations).
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True for differentiating scalar types, false for plain `f64`.
    ///
    /// Lets shared evaluation code reject inputs that are fine to evaluate
    /// at but not to differentiate through (e.g. `abs` at zero).
    const DIFFERENTIATING: bool;

    fn from_f64(c: f64) -> Self;

    /// The underlying point value (derivative payload dropped).
    fn value(self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn recip(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, p: f64) -> Self;
}

impl Scalar for f64 {
    const DIFFERENTIATING: bool = false;

    fn from_f64(c: f64) -> Self {
        c
    }

    fn value(self) -> f64 {
        self
    }

    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn recip(self) -> Self {
        f64::recip(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

/// First-order dual number: value and gradient with respect to `N` variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual1<const N: usize> {
    pub val: f64,
    pub grad: [f64; N],
}

impl<const N: usize> Dual1<N> {
    pub fn constant(val: f64) -> Self {
        Dual1 {
            val,
            grad: [0.0; N],
        }
    }

    /// Seed the `i`-th independent variable at value `val`.
    pub fn variable(val: f64, i: usize) -> Self {
        let mut grad = [0.0; N];
        grad[i] = 1.0;
        Dual1 { val, grad }
    }

    /// Apply a unary function given its value and first derivative at `val`.
    fn chain(self, f: f64, df: f64) -> Self {
        let mut grad = [0.0; N];
        for i in 0..N {
            grad[i] = df * self.grad[i];
        }
        Dual1 { val: f, grad }
    }
}

/// Seed all `N` variables of a first-order dual evaluation at once.
pub fn seed1<const N: usize>(vals: [f64; N]) -> [Dual1<N>; N] {
    let mut out = [Dual1::constant(0.0); N];
    for (i, v) in vals.into_iter().enumerate() {
        out[i] = Dual1::variable(v, i);
    }
    out
}

impl<const N: usize> Add for Dual1<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut grad = [0.0; N];
        for i in 0..N {
            grad[i] = self.grad[i] + rhs.grad[i];
        }
        Dual1 {
            val: self.val + rhs.val,
            grad,
        }
    }
}

impl<const N: usize> Sub for Dual1<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut grad = [0.0; N];
        for i in 0..N {
            grad[i] = self.grad[i] - rhs.grad[i];
        }
        Dual1 {
            val: self.val - rhs.val,
            grad,
        }
    }
}

impl<const N: usize> Mul for Dual1<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut grad = [0.0; N];
        for i in 0..N {
            grad[i] = self.grad[i] * rhs.val + self.val * rhs.grad[i];
        }
        Dual1 {
            val: self.val * rhs.val,
            grad,
        }
    }
}

impl<const N: usize> Div for Dual1<N> {
    type Output = Self;
    // Quotients propagate through the product and reciprocal rules so the
    // derivative logic lives in one place.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<const N: usize> Neg for Dual1<N> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut grad = [0.0; N];
        for i in 0..N {
            grad[i] = -self.grad[i];
        }
        Dual1 {
            val: -self.val,
            grad,
        }
    }
}

impl<const N: usize> Scalar for Dual1<N> {
    const DIFFERENTIATING: bool = true;

    fn from_f64(c: f64) -> Self {
        Dual1::constant(c)
    }

    fn value(self) -> f64 {
        self.val
    }

    fn sin(self) -> Self {
        self.chain(self.val.sin(), self.val.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.val.cos(), -self.val.sin())
    }

    fn tan(self) -> Self {
        let c = self.val.cos();
        self.chain(self.val.tan(), 1.0 / (c * c))
    }

    fn exp(self) -> Self {
        let e = self.val.exp();
        self.chain(e, e)
    }

    fn ln(self) -> Self {
        self.chain(self.val.ln(), 1.0 / self.val)
    }

    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        self.chain(s, 0.5 / s)
    }

    fn abs(self) -> Self {
        // Not differentiable at zero; callers guard that case.
        self.chain(self.val.abs(), self.val.signum())
    }

    fn recip(self) -> Self {
        let r = 1.0 / self.val;
        self.chain(r, -r * r)
    }

    fn powi(self, n: i32) -> Self {
        match n {
            0 => Dual1::constant(1.0),
            1 => self,
            _ => self.chain(self.val.powi(n), f64::from(n) * self.val.powi(n - 1)),
        }
    }

    fn powf(self, p: f64) -> Self {
        self.chain(self.val.powf(p), p * self.val.powf(p - 1.0))
    }
}

/// Second-order dual number: value, gradient, and full symmetric Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2<const N: usize> {
    pub val: f64,
    pub grad: [f64; N],
    pub hess: [[f64; N]; N],
}

impl<const N: usize> Dual2<N> {
    pub fn constant(val: f64) -> Self {
        Dual2 {
            val,
            grad: [0.0; N],
            hess: [[0.0; N]; N],
        }
    }

    /// Seed the `i`-th independent variable at value `val`.
    pub fn variable(val: f64, i: usize) -> Self {
        let mut grad = [0.0; N];
        grad[i] = 1.0;
        Dual2 {
            val,
            grad,
            hess: [[0.0; N]; N],
        }
    }

    /// Apply a unary function given its value and first two derivatives at
    /// `val`. Fills the upper triangle and mirrors, so the result is bitwise
    /// symmetric.
    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        let mut grad = [0.0; N];
        for i in 0..N {
            grad[i] = df * self.grad[i];
        }
        let mut hess = [[0.0; N]; N];
        for i in 0..N {
            for j in i..N {
                let e = df * self.hess[i][j] + ddf * self.grad[i] * self.grad[j];
                hess[i][j] = e;
                hess[j][i] = e;
            }
        }
        Dual2 { val: f, grad, hess }
    }
}

/// Seed all `N` variables of a second-order dual evaluation at once.
pub fn seed2<const N: usize>(vals: [f64; N]) -> [Dual2<N>; N] {
    let mut out = [Dual2::constant(0.0); N];
    for (i, v) in vals.into_iter().enumerate() {
        out[i] = Dual2::variable(v, i);
    }
    out
}

impl<const N: usize> Add for Dual2<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        out.val += rhs.val;
        for i in 0..N {
            out.grad[i] += rhs.grad[i];
            for j in 0..N {
                out.hess[i][j] += rhs.hess[i][j];
            }
        }
        out
    }
}

impl<const N: usize> Sub for Dual2<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        out.val -= rhs.val;
        for i in 0..N {
            out.grad[i] -= rhs.grad[i];
            for j in 0..N {
                out.hess[i][j] -= rhs.hess[i][j];
            }
        }
        out
    }
}

impl<const N: usize> Mul for Dual2<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut grad = [0.0; N];
        for i in 0..N {
            grad[i] = self.grad[i] * rhs.val + self.val * rhs.grad[i];
        }
        let mut hess = [[0.0; N]; N];
        for i in 0..N {
            for j in i..N {
                let e = self.hess[i][j] * rhs.val
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i]
                    + self.val * rhs.hess[i][j];
                hess[i][j] = e;
                hess[j][i] = e;
            }
        }
        Dual2 {
            val: self.val * rhs.val,
            grad,
            hess,
        }
    }
}

impl<const N: usize> Div for Dual2<N> {
    type Output = Self;
    // Same single-sourcing of the quotient rule as `Dual1`.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<const N: usize> Neg for Dual2<N> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut out = self;
        out.val = -out.val;
        for i in 0..N {
            out.grad[i] = -out.grad[i];
            for j in 0..N {
                out.hess[i][j] = -out.hess[i][j];
            }
        }
        out
    }
}

impl<const N: usize> Scalar for Dual2<N> {
    const DIFFERENTIATING: bool = true;

    fn from_f64(c: f64) -> Self {
        Dual2::constant(c)
    }

    fn value(self) -> f64 {
        self.val
    }

    fn sin(self) -> Self {
        let (s, c) = (self.val.sin(), self.val.cos());
        self.chain(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = (self.val.sin(), self.val.cos());
        self.chain(c, -s, -c)
    }

    fn tan(self) -> Self {
        let t = self.val.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    fn exp(self) -> Self {
        let e = self.val.exp();
        self.chain(e, e, e)
    }

    fn ln(self) -> Self {
        let r = 1.0 / self.val;
        self.chain(self.val.ln(), r, -r * r)
    }

    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        let d = 0.5 / s;
        self.chain(s, d, -0.5 * d / self.val)
    }

    fn abs(self) -> Self {
        // Not differentiable at zero; callers guard that case.
        self.chain(self.val.abs(), self.val.signum(), 0.0)
    }

    fn recip(self) -> Self {
        let r = 1.0 / self.val;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    fn powi(self, n: i32) -> Self {
        match n {
            0 => Dual2::constant(1.0),
            1 => self,
            _ => {
                let nf = f64::from(n);
                self.chain(
                    self.val.powi(n),
                    nf * self.val.powi(n - 1),
                    nf * (nf - 1.0) * self.val.powi(n - 2),
                )
            }
        }
    }

    fn powf(self, p: f64) -> Self {
        self.chain(
            self.val.powf(p),
            p * self.val.powf(p - 1.0),
            p * (p - 1.0) * self.val.powf(p - 2.0),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// A mildly nasty two-variable test function with hand-derived partials:
    /// f(x, y) = x^2 y + sin(x y) + exp(x) / y
    fn f<S: Scalar>(x: S, y: S) -> S {
        x * x * y + (x * y).sin() + x.exp() / y
    }

    #[test]
    fn gradient_matches_hand_derivatives() {
        let (x, y) = (0.7, 1.3);
        let [dx, dy] = seed1::<2>([x, y]);
        let out = f(dx, dy);

        let fx = 2.0 * x * y + y * (x * y).cos() + x.exp() / y;
        let fy = x * x + x * (x * y).cos() - x.exp() / (y * y);
        assert_relative_eq!(out.val, f(x, y), max_relative = 1e-15);
        assert_relative_eq!(out.grad[0], fx, max_relative = 1e-13);
        assert_relative_eq!(out.grad[1], fy, max_relative = 1e-13);
    }

    #[test]
    fn hessian_matches_hand_derivatives() {
        let (x, y) = (0.7, 1.3);
        let [dx, dy] = seed2::<2>([x, y]);
        let out = f(dx, dy);

        let s = (x * y).sin();
        let c = (x * y).cos();
        let fxx = 2.0 * y - y * y * s + x.exp() / y;
        let fxy = 2.0 * x + c - x * y * s - x.exp() / (y * y);
        let fyy = -x * x * s + 2.0 * x.exp() / (y * y * y);
        assert_relative_eq!(out.hess[0][0], fxx, max_relative = 1e-13);
        assert_relative_eq!(out.hess[0][1], fxy, max_relative = 1e-13);
        assert_relative_eq!(out.hess[1][1], fyy, max_relative = 1e-13);
    }

    #[test]
    fn hessian_is_bitwise_symmetric() {
        // Chain several asymmetric operations; the mirror construction must
        // still leave h[i][j] and h[j][i] identical to the last bit.
        let [x, y, z] = seed2::<3>([0.3, -1.7, 2.9]);
        let g = (x * y - z).tan() + (x / z).exp() * y.sqrt().cos() - (y * y + z * z).ln();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.hess[i][j].to_bits(), g.hess[j][i].to_bits());
            }
        }
    }

    #[test]
    fn dual_values_match_plain_evaluation_bitwise() {
        let (x, y) = (1.234_567_8, -0.987_654_3);
        let plain = f(x, y);
        let d1 = f(Dual1::<2>::variable(x, 0), Dual1::<2>::variable(y, 1));
        let d2 = f(Dual2::<2>::variable(x, 0), Dual2::<2>::variable(y, 1));
        assert_eq!(plain.to_bits(), d1.val.to_bits());
        assert_eq!(plain.to_bits(), d2.val.to_bits());
    }

    #[test]
    fn powi_agrees_with_repeated_multiplication() {
        let [x] = seed2::<1>([1.37]);
        let a = x.powi(4);
        let b = x * x * x * x;
        assert_relative_eq!(a.val, b.val, max_relative = 1e-15);
        assert_relative_eq!(a.grad[0], b.grad[0], max_relative = 1e-14);
        assert_relative_eq!(a.hess[0][0], b.hess[0][0], max_relative = 1e-14);
    }

    #[test]
    fn powi_handles_zero_base_and_small_exponents() {
        let [x] = seed2::<1>([0.0]);
        let sq = x.powi(2);
        assert_eq!(sq.val, 0.0);
        assert_eq!(sq.grad[0], 0.0);
        assert_eq!(sq.hess[0][0], 2.0);

        assert_eq!(x.powi(0).val, 1.0);
        assert_eq!(x.powi(0).grad[0], 0.0);
        assert_eq!(x.powi(1).grad[0], 1.0);
    }

    #[test]
    fn division_and_recip_derivatives() {
        let [x] = seed2::<1>([2.0]);
        let inv = x.recip();
        assert_relative_eq!(inv.val, 0.5, max_relative = 1e-15);
        assert_relative_eq!(inv.grad[0], -0.25, max_relative = 1e-15);
        assert_relative_eq!(inv.hess[0][0], 0.25, max_relative = 1e-15);

        let [a, b] = seed1::<2>([3.0, 4.0]);
        let q = a / b;
        assert_relative_eq!(q.val, 0.75, max_relative = 1e-15);
        assert_relative_eq!(q.grad[0], 0.25, max_relative = 1e-15);
        assert_relative_eq!(q.grad[1], -3.0 / 16.0, max_relative = 1e-15);
    }

    #[test]
    fn sqrt_tan_ln_second_derivatives() {
        let v = 0.8;
        let [x] = seed2::<1>([v]);

        let s = x.sqrt();
        assert_relative_eq!(s.hess[0][0], -0.25 * v.powf(-1.5), max_relative = 1e-13);

        let t = x.tan();
        let sec2 = 1.0 / (v.cos() * v.cos());
        assert_relative_eq!(t.grad[0], sec2, max_relative = 1e-13);
        assert_relative_eq!(t.hess[0][0], 2.0 * v.tan() * sec2, max_relative = 1e-13);

        let l = x.ln();
        assert_relative_eq!(l.grad[0], 1.0 / v, max_relative = 1e-14);
        assert_relative_eq!(l.hess[0][0], -1.0 / (v * v), max_relative = 1e-14);
    }
}
