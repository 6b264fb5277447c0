//! Polynomials over dual quaternions and motion polynomials.
//!
//! The indeterminate `t` commutes with all coefficients; products are
//! convolutions with coefficient products kept in left-to-right order.
//! Evaluation at a dual quaternion `h` substitutes on the right,
//! `C(h) = Σ c_i hⁱ`, so that zeros correspond to right factors.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, DualQuaternion, Quaternion};
use crate::rpoly::{greatest_real_factor, RealPoly};
use crate::tolerance::tolerance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotionError {
    #[error("empty coefficient list")]
    Empty,
    #[error("not a motion polynomial: dual part of the norm polynomial is {0:e} (relative)")]
    NotMotionPolynomial(f64),
    #[error("leading coefficient {0} is not invertible")]
    LeadingNotInvertible(DualQuaternion),
    #[error("divisor is not monic: leading coefficient {0}")]
    NotMonic(DualQuaternion),
    #[error("parameter t = {0} is a pole of the motion")]
    Pole(f64),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Parameter value in `ℝ ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Finite(f64),
    Infinity,
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Finite(t) => write!(f, "{t}"),
            Param::Infinity => write!(f, "inf"),
        }
    }
}

impl From<f64> for Param {
    fn from(t: f64) -> Self {
        if t.is_infinite() {
            Param::Infinity
        } else {
            Param::Finite(t)
        }
    }
}

/// Polynomial over dual quaternions, ascending coefficients, no invariants.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DqPoly {
    coeffs: Vec<DualQuaternion>,
}

impl DqPoly {
    /// Drops exactly-zero leading coefficients.
    pub fn new(coeffs: Vec<DualQuaternion>) -> Self {
        let mut p = Self { coeffs };
        while p.coeffs.last() == Some(&DualQuaternion::ZERO) {
            p.coeffs.pop();
        }
        p
    }

    pub fn constant(c: DualQuaternion) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(DualQuaternion::ONE)
    }

    /// `t - h`
    pub fn linear(h: DualQuaternion) -> Self {
        Self::new(vec![-h, DualQuaternion::ONE])
    }

    pub fn from_real(p: &RealPoly) -> Self {
        Self::new(p.coeffs().iter().map(|c| DualQuaternion::real(*c)).collect())
    }

    pub fn from_quaternions(q: &[Quaternion]) -> Self {
        Self::new(q.iter().map(|c| DualQuaternion::from_primal(*c)).collect())
    }

    pub fn coeffs(&self) -> &[DualQuaternion] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> DualQuaternion {
        self.coeffs.last().copied().unwrap_or(DualQuaternion::ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.max_abs()))
    }

    pub fn trimmed(&self, cutoff: f64) -> Self {
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|v| v.max_abs() <= cutoff) {
            c.pop();
        }
        Self { coeffs: c }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.scale(s)).collect())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    pub fn primal(&self) -> Vec<Quaternion> {
        self.coeffs.iter().map(|c| c.primal).collect()
    }

    pub fn dual(&self) -> Vec<Quaternion> {
        self.coeffs.iter().map(|c| c.dual).collect()
    }

    pub fn left_mul(&self, c: DualQuaternion) -> Self {
        Self::new(self.coeffs.iter().map(|x| c * *x).collect())
    }

    pub fn right_mul(&self, c: DualQuaternion) -> Self {
        Self::new(self.coeffs.iter().map(|x| *x * c).collect())
    }

    /// `C(h) = Σ c_i hⁱ`.
    pub fn eval(&self, h: DualQuaternion) -> DualQuaternion {
        self.coeffs
            .iter()
            .rev()
            .fold(DualQuaternion::ZERO, |acc, c| acc * h + *c)
    }

    /// Value at a real parameter, or the leading coefficient at `∞`.
    pub fn eval_param(&self, t: Param) -> DualQuaternion {
        match t {
            Param::Finite(t) => self.eval(DualQuaternion::real(t)),
            Param::Infinity => self.leading(),
        }
    }

    /// Largest coordinate difference between coefficient sequences.
    pub fn distance(&self, other: &DqPoly) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &DqPoly, i| p.coeffs.get(i).copied().unwrap_or(DualQuaternion::ZERO);
        (0..n).fold(0.0_f64, |m, i| m.max(get(self, i).distance(get(other, i))))
    }

    /// Coefficient distance relative to the larger max-norm.
    pub fn relative_distance(&self, other: &DqPoly) -> f64 {
        let scale = self.max_abs().max(other.max_abs());
        if scale == 0.0 {
            0.0
        } else {
            self.distance(other) / scale
        }
    }

    /// `C C̄` split into real primal and dual scalar parts, plus the largest
    /// vector-part coefficient (zero up to rounding for any `C`).
    pub fn norm_parts(&self) -> (RealPoly, RealPoly, f64) {
        let n = self * &self.conj();
        let re = RealPoly::new(n.coeffs.iter().map(|c| c.primal.w).collect());
        let du = RealPoly::new(n.coeffs.iter().map(|c| c.dual.w).collect());
        let vec = n.coeffs.iter().fold(0.0_f64, |m, c| {
            m.max(c.primal.vec().iter().chain(c.dual.vec().iter()).fold(0.0_f64, |a, v| a.max(v.abs())))
        });
        (re, du, vec)
    }

    /// Right division `self = Q·divisor + R` with `deg R < deg divisor`, for
    /// a monic divisor. Only coefficient products are used; each step
    /// subtracts `c tⁿ · divisor`, keeping `c` on the left of the divisor's
    /// coefficients so that the identity holds in the non-commutative ring.
    pub fn div_rem(&self, divisor: &DqPoly) -> Result<(DqPoly, DqPoly), MotionError> {
        let Some(dd) = divisor.degree() else {
            return Err(MotionError::NotMonic(DualQuaternion::ZERO));
        };
        let lead = divisor.leading();
        if lead.distance(DualQuaternion::ONE) > tolerance() {
            return Err(MotionError::NotMonic(lead));
        }
        let Some(nd) = self.degree() else {
            return Ok((DqPoly::default(), DqPoly::default()));
        };
        if nd < dd {
            return Ok((DqPoly::default(), self.clone()));
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![DualQuaternion::ZERO; nd - dd + 1];
        for n in (0..=nd - dd).rev() {
            let c = rem[n + dd];
            quot[n] = c;
            for (i, b) in divisor.coeffs.iter().enumerate() {
                rem[n + i] -= c * *b;
            }
            rem[n + dd] = DualQuaternion::ZERO;
        }
        rem.truncate(dd);
        Ok((DqPoly::new(quot), DqPoly::new(rem)))
    }
}

impl Add for &DqPoly {
    type Output = DqPoly;
    fn add(self, o: &DqPoly) -> DqPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let get = |p: &DqPoly, i| p.coeffs.get(i).copied().unwrap_or(DualQuaternion::ZERO);
        DqPoly::new((0..n).map(|i| get(self, i) + get(o, i)).collect())
    }
}

impl Sub for &DqPoly {
    type Output = DqPoly;
    fn sub(self, o: &DqPoly) -> DqPoly {
        self + &(-o)
    }
}

impl Neg for &DqPoly {
    type Output = DqPoly;
    fn neg(self) -> DqPoly {
        self.scale(-1.0)
    }
}

impl Mul for &DqPoly {
    type Output = DqPoly;
    fn mul(self, o: &DqPoly) -> DqPoly {
        if self.is_zero() || o.is_zero() {
            return DqPoly::default();
        }
        let mut c = vec![DualQuaternion::ZERO; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += *a * *b;
            }
        }
        DqPoly::new(c)
    }
}

impl fmt::Display for DqPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .map(|(i, c)| format!("[{c}]t^{i}"))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Product `(t - h_1)⋯(t - h_n)`.
pub fn product_of_linear(factors: &[DualQuaternion]) -> DqPoly {
    factors
        .iter()
        .fold(DqPoly::one(), |acc, h| &acc * &DqPoly::linear(*h))
}

/// Polynomial over dual quaternions with invertible leading coefficient and
/// real norm polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DqPoly", into = "DqPoly")]
pub struct MotionPolynomial {
    poly: DqPoly,
}

/// Result of left-multiplying by the inverse leading coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct MonicMotion {
    pub poly: MotionPolynomial,
    /// Original leading coefficient `c_n`, so that `C = c_n · poly`.
    pub leading: DualQuaternion,
    /// `true` when `c_n` is real and `poly` is projectively the same motion;
    /// otherwise `poly` is the motion seen from a transformed fixed frame.
    pub same_motion: bool,
}

impl MotionPolynomial {
    /// Validates coefficients (ascending degree) as a motion polynomial.
    pub fn new(coeffs: Vec<DualQuaternion>) -> Result<Self, MotionError> {
        Self::from_poly(DqPoly::new(coeffs))
    }

    pub fn from_poly(poly: DqPoly) -> Result<Self, MotionError> {
        if poly.coeffs.is_empty() {
            return Err(MotionError::Empty);
        }
        let poly = poly.trimmed(tolerance() * poly.max_abs());
        if poly.is_zero() {
            return Err(MotionError::Empty);
        }
        let lead = poly.leading();
        if lead.primal.max_abs() <= tolerance() * lead.max_abs() {
            return Err(MotionError::LeadingNotInvertible(lead));
        }
        let residual = norm_dual_residual(&poly);
        if residual > tolerance() {
            return Err(MotionError::NotMotionPolynomial(residual));
        }
        Ok(Self { poly })
    }

    pub(crate) fn from_poly_unchecked(poly: DqPoly) -> Self {
        Self { poly }
    }

    pub fn as_poly(&self) -> &DqPoly {
        &self.poly
    }

    pub fn into_poly(self) -> DqPoly {
        self.poly
    }

    pub fn coeffs(&self) -> &[DualQuaternion] {
        self.poly.coeffs()
    }

    pub fn degree(&self) -> usize {
        self.poly.degree().unwrap_or(0)
    }

    pub fn leading(&self) -> DualQuaternion {
        self.poly.leading()
    }

    pub fn eval(&self, h: DualQuaternion) -> DualQuaternion {
        self.poly.eval(h)
    }

    pub fn eval_param(&self, t: Param) -> DualQuaternion {
        self.poly.eval_param(t)
    }

    /// Real norm polynomial `C C̄`.
    pub fn norm(&self) -> Result<RealPoly, MotionError> {
        let residual = norm_dual_residual(&self.poly);
        if residual > tolerance() {
            return Err(MotionError::NotMotionPolynomial(residual));
        }
        Ok(self.poly.norm_parts().0)
    }

    /// Greatest real polynomial factor of the primal part; constant for
    /// generic motion polynomials.
    pub fn primal_real_factor(&self) -> RealPoly {
        greatest_real_factor(&self.poly.primal())
    }

    pub fn is_generic(&self) -> bool {
        self.primal_real_factor().degree() == Some(0)
    }

    pub fn mul(&self, other: &MotionPolynomial) -> MotionPolynomial {
        Self { poly: &self.poly * &other.poly }
    }

    /// `C(∞) = c_n`, exposed through [`Param::Infinity`].
    pub fn at_infinity(&self) -> DualQuaternion {
        self.leading()
    }

    pub fn make_monic(&self) -> Result<MonicMotion, MotionError> {
        let lead = self.leading();
        let inv = lead
            .inverse()
            .map_err(|_| MotionError::LeadingNotInvertible(lead))?;
        let mut poly = self.poly.left_mul(inv);
        if let Some(last) = poly.coeffs.last_mut() {
            *last = DualQuaternion::ONE;
        }
        Ok(MonicMotion {
            poly: Self { poly },
            leading: lead,
            same_motion: lead.is_real(),
        })
    }

    pub fn is_monic(&self) -> bool {
        self.leading().distance(DualQuaternion::ONE) <= tolerance()
    }
}

impl TryFrom<DqPoly> for MotionPolynomial {
    type Error = MotionError;
    fn try_from(p: DqPoly) -> Result<Self, MotionError> {
        Self::from_poly(p)
    }
}

impl From<MotionPolynomial> for DqPoly {
    fn from(m: MotionPolynomial) -> DqPoly {
        m.poly
    }
}

impl fmt::Display for MotionPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.poly.fmt(f)
    }
}

/// Dual part of `C C̄` relative to `1 + max primal norm coefficient`.
fn norm_dual_residual(poly: &DqPoly) -> f64 {
    let (re, du, _) = poly.norm_parts();
    du.max_abs() / (1.0 + re.max_abs())
}
