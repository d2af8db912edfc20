//! Wind (drift) vector fields on the plane, with exact first and second
//! derivatives.
//!
//! Fields are built from a few closed-form primitives plus arbitrary
//! user-supplied expression pairs. Every variant evaluates generically over
//! [`Scalar`], so the same definitions serve plain evaluation and the
//! automatic differentiation used by the Lagrangians; the Jacobians of the
//! built-in fields are hand-derived closed forms, while expression fields
//! carry symbolically differentiated component derivatives.

use crate::dual::{Dual2, Scalar};
use crate::error::Result;
use crate::geometry::{Mat2, Vec2};
use crate::windexpr::{differentiate, parse, Expr, Var};

/// The rotational bump centered at `(a, b)`:
///
/// ```text
/// R_{a,b}(x, y) = (-(y - b), x - a) / (3((x - a)^2 + (y - b)^2) + 1)
/// ```
///
/// A localized counterclockwise swirl: it vanishes at the center, peaks near
/// it, and decays like `1/r` far away.
pub fn rotational_bump(a: f64, b: f64, p: Vec2) -> Vec2 {
    let [wx, wy] = bump_eval(a, b, p.x, p.y);
    Vec2::new(wx, wy)
}

fn bump_eval<S: Scalar>(a: f64, b: f64, x: S, y: S) -> [S; 2] {
    let u = x - S::from_f64(a);
    let v = y - S::from_f64(b);
    let d = S::from_f64(3.0) * (u * u + v * v) + S::from_f64(1.0);
    [-v / d, u / d]
}

/// Hand-derived Jacobian of the rotational bump. With `u = x - a`,
/// `v = y - b`, `D = 3(u^2 + v^2) + 1`:
///
/// ```text
/// d(-v/D)/dx = 6uv/D^2          d(-v/D)/dy = (6v^2 - D)/D^2
/// d( u/D)/dx = (D - 6u^2)/D^2   d( u/D)/dy = -6uv/D^2
/// ```
fn bump_jacobian<S: Scalar>(a: f64, b: f64, x: S, y: S) -> [[S; 2]; 2] {
    let u = x - S::from_f64(a);
    let v = y - S::from_f64(b);
    let six = S::from_f64(6.0);
    let d = S::from_f64(3.0) * (u * u + v * v) + S::from_f64(1.0);
    let d2 = d * d;
    [
        [six * u * v / d2, (six * v * v - d) / d2],
        [(d - six * u * u) / d2, -(six * u * v) / d2],
    ]
}

/// A wind field `W : R^2 -> R^2`.
#[derive(Debug, Clone)]
pub enum WindField {
    /// No wind.
    Zero,
    /// Spatially constant wind.
    Constant(Vec2),
    /// A [`rotational_bump`] centered at `(a, b)`.
    RotationalBump { a: f64, b: f64 },
    /// A scalar multiple of another field.
    Scaled(f64, Box<WindField>),
    /// A pointwise sum of fields, evaluated in order.
    Sum(Vec<WindField>),
    /// `W(x, y) = (cos(2x - y - 6), (2/3) sin(y) + x - 3)`: a smooth shear
    /// current with an interior rest point, used by the built-in
    /// minimum-effort crossing problem.
    TrigShear,
    /// Components given by parsed expressions in `x`, `y`.
    Expression(Box<ExprField>),
}

/// Expression-defined field: the two components plus their symbolically
/// differentiated partials, prepared once at construction.
#[derive(Debug, Clone)]
pub struct ExprField {
    components: [Expr; 2],
    /// `partials[i][j]` is the derivative of component `i` with respect to
    /// coordinate `j`.
    partials: [[Expr; 2]; 2],
}

impl WindField {
    /// Build a field from one expression string per component. The
    /// expressions are parsed and symbolically differentiated up front, so
    /// later evaluation can only fail on domain errors.
    pub fn from_expressions(wx: &str, wy: &str) -> Result<WindField> {
        let cx = parse(wx)?;
        let cy = parse(wy)?;
        let partials = [
            [differentiate(&cx, Var::X)?, differentiate(&cx, Var::Y)?],
            [differentiate(&cy, Var::X)?, differentiate(&cy, Var::Y)?],
        ];
        Ok(WindField::Expression(Box::new(ExprField {
            components: [cx, cy],
            partials,
        })))
    }

    /// Evaluate the field over any [`Scalar`].
    pub fn eval_s<S: Scalar>(&self, x: S, y: S) -> Result<[S; 2]> {
        Ok(match self {
            WindField::Zero => [S::from_f64(0.0); 2],
            WindField::Constant(c) => [S::from_f64(c.x), S::from_f64(c.y)],
            WindField::RotationalBump { a, b } => bump_eval(*a, *b, x, y),
            WindField::Scaled(k, inner) => {
                let [wx, wy] = inner.eval_s(x, y)?;
                let k = S::from_f64(*k);
                [k * wx, k * wy]
            }
            WindField::Sum(fields) => {
                let mut acc = [S::from_f64(0.0); 2];
                for field in fields {
                    let [wx, wy] = field.eval_s(x, y)?;
                    acc = [acc[0] + wx, acc[1] + wy];
                }
                acc
            }
            WindField::TrigShear => trig_shear_eval(x, y),
            WindField::Expression(f) => [f.components[0].eval(x, y)?, f.components[1].eval(x, y)?],
        })
    }

    /// Jacobian over any [`Scalar`]: `out[i][j] = d W_i / d x_j`.
    pub fn jacobian_s<S: Scalar>(&self, x: S, y: S) -> Result<[[S; 2]; 2]> {
        Ok(match self {
            WindField::Zero | WindField::Constant(_) => [[S::from_f64(0.0); 2]; 2],
            WindField::RotationalBump { a, b } => bump_jacobian(*a, *b, x, y),
            WindField::Scaled(k, inner) => {
                let j = inner.jacobian_s(x, y)?;
                let k = S::from_f64(*k);
                [[k * j[0][0], k * j[0][1]], [k * j[1][0], k * j[1][1]]]
            }
            WindField::Sum(fields) => {
                let zero = S::from_f64(0.0);
                let mut acc = [[zero; 2]; 2];
                for field in fields {
                    let j = field.jacobian_s(x, y)?;
                    for i in 0..2 {
                        for l in 0..2 {
                            acc[i][l] = acc[i][l] + j[i][l];
                        }
                    }
                }
                acc
            }
            WindField::TrigShear => trig_shear_jacobian(x, y),
            WindField::Expression(f) => [
                [f.partials[0][0].eval(x, y)?, f.partials[0][1].eval(x, y)?],
                [f.partials[1][0].eval(x, y)?, f.partials[1][1].eval(x, y)?],
            ],
        })
    }

    /// Field value at a point.
    pub fn eval(&self, p: Vec2) -> Result<Vec2> {
        let [wx, wy] = self.eval_s(p.x, p.y)?;
        Ok(Vec2::new(wx, wy))
    }

    /// Jacobian matrix at a point.
    pub fn jacobian(&self, p: Vec2) -> Result<Mat2> {
        let j = self.jacobian_s(p.x, p.y)?;
        Ok(Mat2::new(j[0][0], j[0][1], j[1][0], j[1][1]))
    }

    /// Second partials at a point: `out[i]` is the (symmetric) Hessian of
    /// component `i`.
    pub fn second_partials(&self, p: Vec2) -> Result<[Mat2; 2]> {
        let x = Dual2::<2>::variable(p.x, 0);
        let y = Dual2::<2>::variable(p.y, 1);
        let [wx, wy] = self.eval_s(x, y)?;
        Ok([Mat2 { m: wx.hess }, Mat2 { m: wy.hess }])
    }
}

fn trig_shear_eval<S: Scalar>(x: S, y: S) -> [S; 2] {
    let two = S::from_f64(2.0);
    let phase = two * x - y - S::from_f64(6.0);
    [
        phase.cos(),
        S::from_f64(2.0 / 3.0) * y.sin() + x - S::from_f64(3.0),
    ]
}

fn trig_shear_jacobian<S: Scalar>(x: S, y: S) -> [[S; 2]; 2] {
    let two = S::from_f64(2.0);
    let s = (two * x - y - S::from_f64(6.0)).sin();
    [
        [-(two * s), s],
        [S::from_f64(1.0), S::from_f64(2.0 / 3.0) * y.cos()],
    ]
}

/// The four-swirl field used by the built-in time-optimal navigation
/// problem: `1.7 (-R_{2,2} - R_{4,4} - R_{2,5} + R_{5,1})` in terms of
/// [`rotational_bump`]. Its speed stays strictly below 1 (it peaks around
/// 0.96 on the region of interest), which the time-optimal metric requires.
pub fn vortex_field() -> WindField {
    let neg =
        |a: f64, b: f64| WindField::Scaled(-1.0, Box::new(WindField::RotationalBump { a, b }));
    WindField::Scaled(
        1.7,
        Box::new(WindField::Sum(vec![
            neg(2.0, 2.0),
            neg(4.0, 4.0),
            neg(2.0, 5.0),
            WindField::RotationalBump { a: 5.0, b: 1.0 },
        ])),
    )
}

/// The trigonometric shear current used by the built-in minimum-effort
/// crossing problem.
pub fn trig_shear_field() -> WindField {
    WindField::TrigShear
}
