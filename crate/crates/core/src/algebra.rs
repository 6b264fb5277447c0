//! Quaternions, dual quaternions and dual numbers.
//!
//! A dual quaternion `h = p + εd` is stored as two [`Quaternion`]s. Its eight
//! coordinates `h0..h7` are `(p.w, p.x, p.y, p.z, d.w, d.x, d.y, d.z)`.
//! Dual quaternions serve three roles in this crate: rigid-body poses
//! (projectively, up to a nonzero real factor), joint generators `h` of
//! linear motion polynomials `t - h`, and polynomial coefficients.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance::{is_negligible, tolerance};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("dual quaternion {0} has a vanishing primal part and no inverse")]
    NotInvertible(DualQuaternion),
    #[error("dual quaternion {0} violates the Study condition and is not a displacement")]
    NotADisplacement(DualQuaternion),
    #[error("dual quaternion {0} is not a rotation generator")]
    NotARotation(DualQuaternion),
    #[error("degenerate line: zero direction")]
    DegenerateLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const fn real(w: f64) -> Self {
        Self::new(w, 0.0, 0.0, 0.0)
    }

    /// Vector quaternion `x i + y j + z k`.
    pub const fn vector(v: Vec3) -> Self {
        Self::new(0.0, v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// `q q̄ = w² + x² + y² + z²` (not its square root).
    pub fn norm(self) -> f64 {
        self.dot(self)
    }

    /// Euclidean inner product of coordinate vectors, the scalar part of `a b̄`.
    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn vec(self) -> Vec3 {
        [self.x, self.y, self.z]
    }

    pub fn max_abs(self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn inverse(self) -> Option<Self> {
        let n = self.norm();
        if n == 0.0 {
            None
        } else {
            Some(self.conj().scale(1.0 / n))
        }
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Quaternion {
    type Output = Self;
    /// Hamilton product, `i² = j² = k² = ijk = -1`.
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {:+}i {:+}j {:+}k)", self.w, self.x, self.y, self.z)
    }
}

/// Dual number `re + ε du`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualNumber {
    pub re: f64,
    pub du: f64,
}

impl DualNumber {
    pub const fn new(re: f64, du: f64) -> Self {
        Self { re, du }
    }

    pub fn inverse(self) -> Option<Self> {
        if self.re == 0.0 {
            None
        } else {
            Some(Self::new(1.0 / self.re, -self.du / (self.re * self.re)))
        }
    }
}

impl Mul for DualNumber {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.re * o.du + self.du * o.re)
    }
}

/// Dual quaternion `primal + ε dual`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualQuaternion {
    pub primal: Quaternion,
    pub dual: Quaternion,
}

/// What a linear motion polynomial `t - h` describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Rotation,
    Translation,
    Invalid,
}

impl DualQuaternion {
    pub const ZERO: Self = Self::new(Quaternion::ZERO, Quaternion::ZERO);
    pub const ONE: Self = Self::new(Quaternion::ONE, Quaternion::ZERO);

    pub const fn new(primal: Quaternion, dual: Quaternion) -> Self {
        Self { primal, dual }
    }

    pub const fn real(s: f64) -> Self {
        Self::new(Quaternion::real(s), Quaternion::ZERO)
    }

    pub const fn from_primal(primal: Quaternion) -> Self {
        Self::new(primal, Quaternion::ZERO)
    }

    /// `ε d`
    pub const fn from_dual(dual: Quaternion) -> Self {
        Self::new(Quaternion::ZERO, dual)
    }

    /// Pure translation by `v`, acting as `x ↦ x + v`.
    pub fn translation(v: Vec3) -> Self {
        Self::new(Quaternion::ONE, Quaternion::vector(v).scale(-0.5))
    }

    /// Coordinates `h0..h7`.
    pub fn to_array(self) -> [f64; 8] {
        let [a, b, c, d] = self.primal.to_array();
        let [e, f, g, h] = self.dual.to_array();
        [a, b, c, d, e, f, g, h]
    }

    pub fn from_array(h: [f64; 8]) -> Self {
        Self::new(
            Quaternion::new(h[0], h[1], h[2], h[3]),
            Quaternion::new(h[4], h[5], h[6], h[7]),
        )
    }

    pub fn conj(self) -> Self {
        Self::new(self.primal.conj(), self.dual.conj())
    }

    /// `h h̄ = p p̄ + ε(p d̄ + d p̄)`.
    pub fn norm(self) -> DualNumber {
        DualNumber::new(self.primal.norm(), 2.0 * self.primal.dot(self.dual))
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.primal.scale(s), self.dual.scale(s))
    }

    pub fn max_abs(self) -> f64 {
        self.primal.max_abs().max(self.dual.max_abs())
    }

    /// Largest coordinate difference.
    pub fn distance(self, other: Self) -> f64 {
        (self - other).max_abs()
    }

    pub fn is_real(self) -> bool {
        let scale = self.max_abs();
        let v = self.primal.vec();
        v.iter()
            .chain(self.dual.to_array().iter())
            .all(|c| is_negligible(*c, scale))
    }

    /// `(h h̄)⁻¹ h̄`.
    pub fn inverse(self) -> Result<Self, AlgebraError> {
        let scale = self.max_abs();
        if scale == 0.0 || self.primal.max_abs() <= tolerance() * scale {
            return Err(AlgebraError::NotInvertible(self));
        }
        let n = self
            .norm()
            .inverse()
            .ok_or(AlgebraError::NotInvertible(self))?;
        Ok(self.conj().mul_dual_number(n))
    }

    pub fn mul_dual_number(self, n: DualNumber) -> Self {
        Self::new(
            self.primal.scale(n.re),
            self.dual.scale(n.re) + self.primal.scale(n.du),
        )
    }

    /// Study condition `p d̄ + d p̄ = 0`, relative to `‖p‖²`.
    pub fn satisfies_study_condition(self) -> bool {
        let pp = self.primal.norm();
        let dd = self.dual.norm();
        (self.primal.dot(self.dual)).abs() <= tolerance() * pp.max(pp.sqrt() * dd.sqrt()).max(1e-300)
    }

    /// Image of the point `x` under the displacement `h`:
    /// `(p x p̄ + 2 p d̄) / (p p̄)`.
    pub fn act_on_point(self, x: Vec3) -> Result<Vec3, AlgebraError> {
        let scale = self.max_abs();
        if scale == 0.0 || self.primal.max_abs() <= tolerance() * scale {
            return Err(AlgebraError::NotInvertible(self));
        }
        if !self.satisfies_study_condition() {
            return Err(AlgebraError::NotADisplacement(self));
        }
        Ok(self.act_unchecked(x))
    }

    pub(crate) fn act_unchecked(self, x: Vec3) -> Vec3 {
        let p = self.primal;
        let y = p * Quaternion::vector(x) * p.conj() + (p * self.dual.conj()).scale(2.0);
        let n = p.norm();
        [y.x / n, y.y / n, y.z / n]
    }

    /// Classifies `h` as generator of `t - h`: rotations satisfy
    /// `h + h̄, h h̄ ∈ ℝ` with nonzero vector part; translations have a zero
    /// primal vector part and a nonzero dual vector part.
    pub fn classify_generator(self) -> GeneratorKind {
        let scale = self.max_abs();
        if scale == 0.0 {
            return GeneratorKind::Invalid;
        }
        let dual_scalar = self.dual.w;
        let study = self.primal.x * self.dual.x + self.primal.y * self.dual.y + self.primal.z * self.dual.z;
        if !is_negligible(dual_scalar, scale) || !is_negligible(study, scale * scale) {
            return GeneratorKind::Invalid;
        }
        let pv = self.primal.vec();
        let dv = self.dual.vec();
        if pv.iter().any(|c| !is_negligible(*c, scale)) {
            GeneratorKind::Rotation
        } else if dv.iter().any(|c| !is_negligible(*c, scale)) {
            GeneratorKind::Translation
        } else {
            GeneratorKind::Invalid
        }
    }

    /// Rotation axis of `t - h`, Plücker coordinates `[h1,h2,h3,-h5,-h6,-h7]`.
    pub fn axis(self) -> Result<Line, AlgebraError> {
        if self.classify_generator() != GeneratorKind::Rotation {
            return Err(AlgebraError::NotARotation(self));
        }
        Line::new(self.primal.vec(), neg3(self.dual.vec()))
    }

    /// Rotation angle of `t - h` at parameter `t`, from
    /// `tan(φ/2) = (t - h0) / ‖(h1, h2, h3)‖`.
    pub fn rotation_angle(self, t: f64) -> Result<f64, AlgebraError> {
        if self.classify_generator() != GeneratorKind::Rotation {
            return Err(AlgebraError::NotARotation(self));
        }
        let v = norm3(self.primal.vec());
        Ok(2.0 * ((t - self.primal.w) / v).atan())
    }

    /// Representative with the first non-negligible coordinate positive.
    pub fn canonical(self) -> Self {
        let scale = self.max_abs();
        match self
            .to_array()
            .into_iter()
            .find(|c| !is_negligible(*c, scale) && *c != 0.0)
        {
            Some(c) if c < 0.0 => -self,
            _ => self,
        }
    }

    /// Representative with unit max-norm and canonical sign.
    pub fn normalized(self) -> Self {
        let m = self.max_abs();
        if m == 0.0 {
            self
        } else {
            self.scale(1.0 / m).canonical()
        }
    }

    /// Equality in the projective sense.
    pub fn projectively_eq(self, other: Self, tol: f64) -> bool {
        self.normalized().distance(other.normalized()) <= tol
    }
}

/// Rotation angle of `t - h` recovered from its norm polynomial
/// `t² + a t + b` alone: `tan(φ/2) = (2t + a) / √(4b - a²)`.
pub fn rotation_angle_from_norm(a: f64, b: f64, t: f64) -> f64 {
    2.0 * ((2.0 * t + a) / (4.0 * b - a * a).sqrt()).atan()
}

impl Add for DualQuaternion {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.primal + o.primal, self.dual + o.dual)
    }
}

impl AddAssign for DualQuaternion {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for DualQuaternion {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.primal - o.primal, self.dual - o.dual)
    }
}

impl SubAssign for DualQuaternion {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl Neg for DualQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for DualQuaternion {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.primal * o.primal,
            self.primal * o.dual + self.dual * o.primal,
        )
    }
}

impl Mul<f64> for DualQuaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl Div<f64> for DualQuaternion {
    type Output = Self;
    fn div(self, s: f64) -> Self {
        self.scale(1.0 / s)
    }
}

impl From<Quaternion> for DualQuaternion {
    fn from(q: Quaternion) -> Self {
        Self::from_primal(q)
    }
}

impl fmt::Display for DualQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + ε{}", self.primal, self.dual)
    }
}

/// Spatial line in Plücker coordinates, `moment = point × direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub direction: Vec3,
    pub moment: Vec3,
}

impl Line {
    pub fn new(direction: Vec3, moment: Vec3) -> Result<Self, AlgebraError> {
        let d = norm3(direction);
        if d == 0.0 || !d.is_finite() {
            return Err(AlgebraError::DegenerateLine);
        }
        Ok(Self { direction, moment })
    }

    pub fn through(point: Vec3, direction: Vec3) -> Result<Self, AlgebraError> {
        Self::new(direction, cross(point, direction))
    }

    /// `direction · moment`, zero for a proper line.
    pub fn plucker_residual(&self) -> f64 {
        dot3(self.direction, self.moment) / (norm3(self.direction) * norm3(self.direction).max(norm3(self.moment)))
    }

    /// Point of the line closest to the origin.
    pub fn foot(&self) -> Vec3 {
        let d = self.direction;
        let dd = dot3(d, d);
        scale3(cross(d, self.moment), 1.0 / dd)
    }

    pub fn unit_direction(&self) -> Vec3 {
        scale3(self.direction, 1.0 / norm3(self.direction))
    }

    /// Representative with unit direction whose first non-negligible
    /// coordinate is positive.
    pub fn canonical(&self) -> Self {
        let n = norm3(self.direction);
        let mut d = scale3(self.direction, 1.0 / n);
        let mut m = scale3(self.moment, 1.0 / n);
        let first = d.iter().copied().find(|c| c.abs() > tolerance());
        if matches!(first, Some(c) if c < 0.0) {
            d = neg3(d);
            m = neg3(m);
        }
        Self { direction: d, moment: m }
    }

    /// Same unoriented line within `tol`.
    pub fn coincides(&self, other: &Line, tol: f64) -> bool {
        let a = self.canonical();
        let b = other.canonical();
        let dd = (0..3).fold(0.0_f64, |m, i| m.max((a.direction[i] - b.direction[i]).abs()));
        let dm = (0..3).fold(0.0_f64, |m, i| m.max((a.moment[i] - b.moment[i]).abs()));
        dd <= tol && dm <= tol * (1.0 + norm3(a.moment))
    }
}

pub(crate) fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn neg3(a: Vec3) -> Vec3 {
    [-a[0], -a[1], -a[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dq(h: [f64; 8]) -> DualQuaternion {
        DualQuaternion::from_array(h)
    }

    fn close(a: DualQuaternion, b: DualQuaternion) -> bool {
        a.distance(b) < 1e-12
    }

    #[test]
    fn quaternion_products_from_worked_example() {
        let a = Quaternion::I + Quaternion::J;
        let b = Quaternion::real(2.0) - Quaternion::K;
        assert_eq!(a * b, Quaternion::new(0.0, 1.0, 3.0, 0.0));
        assert_eq!(b * a, Quaternion::new(0.0, 3.0, 1.0, 0.0));
        assert_eq!(Quaternion::ONE * a, a);
    }

    #[test]
    fn dual_quaternion_products() {
        let a = DualQuaternion::new(Quaternion::I, Quaternion::J);
        let b = DualQuaternion::new(Quaternion::J, -Quaternion::K);
        // k - ε(1 - j)
        assert!(close(a * b, dq([0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 1.0, 0.0])));
        let ej = DualQuaternion::from_dual(Quaternion::J);
        let ek = DualQuaternion::from_dual(Quaternion::K);
        assert_eq!(ej * ek, DualQuaternion::ZERO);
        let p = DualQuaternion::new(Quaternion::ONE, Quaternion::I);
        let m = DualQuaternion::new(Quaternion::ONE, -Quaternion::I);
        assert_eq!(p * m, DualQuaternion::ONE);
    }

    #[test]
    fn dual_norms() {
        assert_eq!(DualQuaternion::from_primal(Quaternion::K).norm(), DualNumber::new(1.0, 0.0));
        assert_eq!(DualQuaternion::new(Quaternion::I, Quaternion::J).norm(), DualNumber::new(1.0, 0.0));
        assert_eq!(DualQuaternion::new(Quaternion::real(2.0), Quaternion::I).norm(), DualNumber::new(4.0, 0.0));
    }

    #[test]
    fn inverses() {
        assert!(close(DualQuaternion::real(2.0).inverse().unwrap(), DualQuaternion::real(0.5)));
        let k = DualQuaternion::from_primal(Quaternion::K);
        assert!(close(k.inverse().unwrap(), -k));
        assert!(matches!(
            DualQuaternion::from_dual(Quaternion::I).inverse(),
            Err(AlgebraError::NotInvertible(_))
        ));
    }

    #[test]
    fn point_action() {
        let x = [0.3, -1.2, 4.0];
        assert_eq!(DualQuaternion::ONE.act_on_point(x).unwrap(), x);
        let half_turn = DualQuaternion::from_primal(Quaternion::K);
        let y = half_turn.act_on_point([1.0, 0.0, 0.0]).unwrap();
        assert!((y[0] + 1.0).abs() < 1e-15 && y[1].abs() < 1e-15 && y[2].abs() < 1e-15);
        let shift = DualQuaternion::new(Quaternion::ONE, Quaternion::I.scale(-0.5));
        assert_eq!(shift.act_on_point([0.0; 3]).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(DualQuaternion::translation([1.0, 2.0, 3.0]).act_on_point([0.0; 3]).unwrap(), [1.0, 2.0, 3.0]);
        let bad = DualQuaternion::new(Quaternion::ONE, Quaternion::real(1.0));
        assert!(matches!(bad.act_on_point(x), Err(AlgebraError::NotADisplacement(_))));
    }

    #[test]
    fn generator_classes() {
        let g = dq([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -5.0, 0.0]);
        assert_eq!(g.classify_generator(), GeneratorKind::Rotation);
        let tr = dq([1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 3.0, -1.0]);
        assert_eq!(tr.classify_generator(), GeneratorKind::Translation);
        let bad = dq([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(bad.classify_generator(), GeneratorKind::Invalid);
    }

    #[test]
    fn axes() {
        let k = DualQuaternion::from_primal(Quaternion::K).axis().unwrap();
        assert_eq!(k.direction, [0.0, 0.0, 1.0]);
        assert_eq!(k.moment, [0.0, 0.0, 0.0]);
        let h2 = dq([-1.0, 0.0, 0.0, -1.0, 0.0, 0.0, -2.0, 0.0]);
        let l = h2.axis().unwrap();
        assert_eq!(l.direction, [0.0, 0.0, -1.0]);
        assert_eq!(l.moment, [0.0, 2.0, 0.0]);
        let lneg = (-h2).axis().unwrap();
        assert!(l.coincides(&lneg, 1e-12));
        assert_eq!(l.canonical(), lneg.canonical());
        assert!(matches!(DualQuaternion::ONE.axis(), Err(AlgebraError::NotARotation(_))));
    }

    #[test]
    fn axis_points_are_fixed_by_the_rotation() {
        // k - 5εj: fixed points of C(t) = t - h lie on the reported axis.
        let h = dq([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -5.0, 0.0]);
        let axis = h.axis().unwrap();
        let foot = axis.foot();
        for t in [-3.0, 0.0, 0.7, 10.0] {
            let c = DualQuaternion::real(t) - h;
            let y = c.act_on_point(foot).unwrap();
            assert!(sub3(y, foot).iter().all(|v| v.abs() < 1e-12), "{y:?} vs {foot:?}");
        }
    }

    #[test]
    fn angles() {
        let k = DualQuaternion::from_primal(Quaternion::K);
        assert!((k.rotation_angle(1.0).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(k.rotation_angle(0.0).unwrap(), 0.0);
    }

    #[test]
    fn canonical_sign() {
        let h = dq([0.0, -1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.5]);
        assert_eq!(h.canonical(), -h);
        assert_eq!((-h).canonical(), -h);
        assert!(h.projectively_eq(h.scale(-3.5), 1e-12));
    }
}
