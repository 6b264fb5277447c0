//! Real polynomials: roots, splitting into irreducible quadratics,
//! approximate gcd and repeated-factor detection.
//!
//! Roots come from Aberth–Ehrlich simultaneous iteration followed by Newton
//! polishing. Norm polynomials of motion polynomials are products of
//! quadratics without real roots, so the splitting pairs every root with its
//! nearest conjugate partner. Repeated quadratics are separated first with a
//! square-free split via `gcd(N, N')`, which keeps multiple roots well
//! conditioned.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::Quaternion;
use crate::tolerance::{tolerance, REAL_ROOT_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("polynomial has a real root near t = {0}")]
    RealRootFound(f64),
    #[error("polynomial has odd degree {0}")]
    OddDegree(usize),
    #[error("leading coefficient must be positive")]
    NonPositiveLeading,
    #[error("zero polynomial")]
    Zero,
    #[error("quadratic factors reconstruct the input only to relative residual {0:e}")]
    Reconstruction(f64),
}

/// Real polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealPoly {
    coeffs: Vec<f64>,
}

impl RealPoly {
    /// Builds a polynomial, dropping exactly-zero leading coefficients.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        while p.coeffs.last() == Some(&0.0) {
            p.coeffs.pop();
        }
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Monic quadratic `t² + a t + b`.
    pub fn quadratic(a: f64, b: f64) -> Self {
        Self::new(vec![b, a, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the stored representation; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Removes leading coefficients of magnitude at most `cutoff`.
    pub fn trimmed(&self, cutoff: f64) -> Self {
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|v| v.abs() <= cutoff) {
            c.pop();
        }
        Self { coeffs: c }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn monic(&self) -> Self {
        let l = self.leading();
        if l == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / l)
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    /// Euclidean division `self = q·divisor + r`.
    pub fn div_rem(&self, divisor: &RealPoly) -> (RealPoly, RealPoly) {
        let Some(dd) = divisor.degree() else {
            panic!("division by the zero polynomial");
        };
        let Some(nd) = self.degree() else {
            return (Self::zero(), Self::zero());
        };
        if nd < dd {
            return (Self::zero(), self.clone());
        }
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let c = rem[k + dd] / lead;
            quot[k] = c;
            for (i, dc) in divisor.coeffs.iter().enumerate() {
                rem[k + i] -= c * dc;
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    /// Relative coefficient distance `max|a_i - b_i| / max(‖a‖∞, ‖b‖∞)`.
    pub fn relative_distance(&self, other: &RealPoly) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &RealPoly, i: usize| p.coeffs.get(i).copied().unwrap_or(0.0);
        let diff = (0..n).fold(0.0_f64, |m, i| m.max((get(self, i) - get(other, i)).abs()));
        let scale = self.max_abs().max(other.max_abs());
        if scale == 0.0 {
            0.0
        } else {
            diff / scale
        }
    }

    /// All complex roots, Newton-polished.
    pub fn roots(&self) -> Vec<Complex64> {
        let p = self.trimmed(0.0);
        match p.degree() {
            None | Some(0) => Vec::new(),
            Some(1) => vec![Complex64::new(-p.coeffs[0] / p.coeffs[1], 0.0)],
            Some(_) => aberth(&p.monic()),
        }
    }
}

fn aberth(p: &RealPoly) -> Vec<Complex64> {
    let n = p.degree().unwrap_or(0);
    let dp = p.derivative();
    // Cauchy bound on root moduli
    let radius = 1.0
        + p.coeffs[..n]
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius * 0.5, angle)
        })
        .collect();
    for _ in 0..500 {
        let mut max_step = 0.0_f64;
        for k in 0..n {
            let pk = p.eval_complex(z[k]);
            if pk == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = pk / dp.eval_complex(z[k]);
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| Complex64::new(1.0, 0.0) / (z[k] - z[j]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
            }
        }
        if max_step < 1e-16 {
            break;
        }
    }
    for root in &mut z {
        polish(p, &dp, root);
    }
    z
}

fn polish(p: &RealPoly, dp: &RealPoly, z: &mut Complex64) {
    let mut best = p.eval_complex(*z).norm();
    for _ in 0..4 {
        let d = dp.eval_complex(*z);
        if d.norm() == 0.0 {
            return;
        }
        let candidate = *z - p.eval_complex(*z) / d;
        let value = p.eval_complex(candidate).norm();
        if value < best && candidate.is_finite() {
            *z = candidate;
            best = value;
        } else {
            return;
        }
    }
}

impl fmt::Display for RealPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}t"),
                _ => format!("{c}t^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl Add for &RealPoly {
    type Output = RealPoly;
    fn add(self, o: &RealPoly) -> RealPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        RealPoly::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + o.coeffs.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }
}

impl Sub for &RealPoly {
    type Output = RealPoly;
    fn sub(self, o: &RealPoly) -> RealPoly {
        self + &(-o)
    }
}

impl Neg for &RealPoly {
    type Output = RealPoly;
    fn neg(self) -> RealPoly {
        self.scale(-1.0)
    }
}

impl Mul for &RealPoly {
    type Output = RealPoly;
    fn mul(self, o: &RealPoly) -> RealPoly {
        if self.is_zero() || o.is_zero() {
            return RealPoly::zero();
        }
        let mut c = vec![0.0; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        RealPoly::new(c)
    }
}

/// Monic quadratic `t² + a t + b` without real roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFactor {
    pub a: f64,
    pub b: f64,
}

impl QuadraticFactor {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// Quadratic with roots `z` and `z̄`.
    pub fn from_root(z: Complex64) -> Self {
        Self::new(-2.0 * z.re, z.norm_sqr())
    }

    pub fn discriminant(&self) -> f64 {
        self.a * self.a - 4.0 * self.b
    }

    pub fn poly(&self) -> RealPoly {
        RealPoly::quadratic(self.a, self.b)
    }

    pub fn approx_eq(&self, other: &QuadraticFactor, tol: f64) -> bool {
        let scale = 1.0 + self.a.abs().max(self.b.abs());
        (self.a - other.a).abs() <= tol * scale && (self.b - other.b).abs() <= tol * scale
    }
}

impl fmt::Display for QuadraticFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t^2 {:+}t {:+}", self.a, self.b)
    }
}

/// Splits `n` into `leading · ∏ (t² + a_i t + b_i)`, factors sorted by `(a, b)`.
pub fn quadratic_factorization(n: &RealPoly) -> Result<Vec<QuadraticFactor>, PolyError> {
    let n = n.trimmed(tolerance() * n.max_abs());
    let deg = n.degree().ok_or(PolyError::Zero)?;
    if deg % 2 == 1 {
        return Err(PolyError::OddDegree(deg));
    }
    if n.leading() <= 0.0 {
        return Err(PolyError::NonPositiveLeading);
    }
    let mut factors = split(&n.monic())?;
    factors.sort_by(|x, y| x.a.total_cmp(&y.a).then(x.b.total_cmp(&y.b)));
    let rebuilt = factors
        .iter()
        .fold(RealPoly::constant(n.leading()), |acc, q| &acc * &q.poly());
    let residual = rebuilt.relative_distance(&n);
    if residual > 1e-8 {
        return Err(PolyError::Reconstruction(residual));
    }
    Ok(factors)
}

fn split(monic: &RealPoly) -> Result<Vec<QuadraticFactor>, PolyError> {
    let deg = monic.degree().unwrap_or(0);
    if deg == 0 {
        return Ok(Vec::new());
    }
    if deg % 2 == 1 {
        let root = monic
            .roots()
            .into_iter()
            .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
            .map_or(0.0, |z| z.re);
        return Err(PolyError::RealRootFound(root));
    }
    let g = repeated_quadratic(monic);
    if g.degree().unwrap_or(0) >= 1 {
        let (squarefree, _) = monic.div_rem(&g);
        let mut out = split_squarefree(&squarefree.monic())?;
        out.extend(split(&g)?);
        return Ok(out);
    }
    split_squarefree(monic)
}

fn split_squarefree(monic: &RealPoly) -> Result<Vec<QuadraticFactor>, PolyError> {
    let roots = monic.roots();
    if let Some(z) = roots
        .iter()
        .find(|z| z.im.abs() < REAL_ROOT_THRESHOLD * (1.0 + z.re.abs()))
    {
        return Err(PolyError::RealRootFound(z.re));
    }
    let (upper, mut lower): (Vec<Complex64>, Vec<Complex64>) =
        roots.into_iter().partition(|z| z.im > 0.0);
    if upper.len() != lower.len() {
        let z = upper.first().or(lower.first()).copied().unwrap_or_default();
        return Err(PolyError::RealRootFound(z.re));
    }
    let mut out = Vec::with_capacity(upper.len());
    for z in upper {
        let (idx, _) = lower
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (w.conj() - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("paired root counts");
        let partner = lower.swap_remove(idx);
        // average the pair so the quadratic stays real
        let mean = (z + partner.conj()) * 0.5;
        out.push(QuadraticFactor::from_root(mean));
    }
    Ok(out)
}

/// Monic approximate gcd by Euclidean remainders on max-normalized inputs.
pub fn approximate_gcd(a: &RealPoly, b: &RealPoly) -> RealPoly {
    let cutoff = tolerance();
    let normalize = |p: &RealPoly| {
        let m = p.max_abs();
        if m == 0.0 {
            RealPoly::zero()
        } else {
            p.scale(1.0 / m).trimmed(cutoff)
        }
    };
    let mut x = normalize(a);
    let mut y = normalize(b);
    if x.degree() < y.degree() {
        std::mem::swap(&mut x, &mut y);
    }
    while !y.is_zero() {
        let (_, r) = x.div_rem(&y);
        x = y;
        // x and y both have unit max-norm here
        y = if r.max_abs() <= cutoff {
            RealPoly::zero()
        } else {
            normalize(&r)
        };
    }
    if x.is_zero() {
        x
    } else {
        x.monic()
    }
}

/// `gcd(N, N')`; degree ≥ 2 signals a repeated quadratic factor.
pub fn repeated_quadratic(n: &RealPoly) -> RealPoly {
    approximate_gcd(n, &n.derivative())
}

/// Real coordinate polynomials of a quaternion polynomial.
pub fn coordinate_polys(p: &[Quaternion]) -> [RealPoly; 4] {
    let coord = |f: fn(&Quaternion) -> f64| RealPoly::new(p.iter().map(f).collect());
    [
        coord(|q| q.w),
        coord(|q| q.x),
        coord(|q| q.y),
        coord(|q| q.z),
    ]
}

/// Monic gcd of the four coordinate polynomials of `p` (ascending
/// coefficients). Coordinates that vanish within tolerance are skipped;
/// the result is `1` for a generic primal part.
pub fn greatest_real_factor(p: &[Quaternion]) -> RealPoly {
    let scale = p.iter().fold(0.0_f64, |m, q| m.max(q.max_abs()));
    if scale == 0.0 {
        return RealPoly::zero();
    }
    coordinate_polys(p)
        .into_iter()
        .map(|c| c.scale(1.0 / scale).trimmed(tolerance()))
        .filter(|c| !c.is_zero())
        .reduce(|g, c| approximate_gcd(&g, &c))
        .map(|g| g.monic())
        .unwrap_or_else(RealPoly::zero)
}
