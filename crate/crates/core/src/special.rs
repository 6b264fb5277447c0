//! Factorizations outside the reach of the generic algorithm: circular and
//! elliptic translations, the multiplication trick, bracing of factor
//! chains and trajectory-preserving right multiplication.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{DualQuaternion, Quaternion};
use crate::bennett::{random_rotation, swap_factors};
use crate::factor::{linear_norm, Factorization};
use crate::linkage::{loop_residual, standard_sweep, Joint, Linkage, LoopEntry};
use crate::mpoly::{product_of_linear, DqPoly, MotionError, MotionPolynomial};
use crate::rpoly::RealPoly;
use crate::tolerance::tolerance;

/// Attempts at a random `m0` before bracing gives up.
pub const BRACE_RETRIES: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("semi-axes must satisfy a >= b > 0, got a = {a}, b = {b}")]
    InvalidSpec { a: f64, b: f64 },
    #[error("no factorization into two linear rotation factors exists for a = {a}, b = {b}")]
    NoQuadraticFactorization { a: f64, b: f64 },
    #[error("bracing failed at step {step}: {reason}")]
    BraceDegenerate { step: usize, reason: String },
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Elliptic translation `t² + 1 + ε(b j t + a i)` with semi-axes `a ≥ b > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslationSpec {
    pub a: f64,
    pub b: f64,
}

impl TranslationSpec {
    pub fn new(a: f64, b: f64) -> Result<Self, SpecialError> {
        if !(a.is_finite() && b.is_finite() && b > 0.0 && a >= b) {
            return Err(SpecialError::InvalidSpec { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn is_circular(&self) -> bool {
        (self.a - self.b).abs() < tolerance() * self.a.max(1.0)
    }
}

pub fn elliptic_translation(spec: TranslationSpec) -> MotionPolynomial {
    let TranslationSpec { a, b } = spec;
    MotionPolynomial::from_poly_unchecked(DqPoly::new(vec![
        DualQuaternion::new(Quaternion::ONE, Quaternion::I.scale(a)),
        DualQuaternion::from_dual(Quaternion::J.scale(b)),
        DualQuaternion::ONE,
    ]))
}

/// Factor pair of the circular translation with radius `a`:
/// `h1 = k + ε(λi + (μ - a)j)`, `h2 = -k - ε(λi + μj)`.
pub fn circular_translation_factors(a: f64, lambda: f64, mu: f64) -> (DualQuaternion, DualQuaternion) {
    let h1 = DualQuaternion::new(Quaternion::K, Quaternion::new(0.0, lambda, mu - a, 0.0));
    let h2 = DualQuaternion::new(-Quaternion::K, Quaternion::new(0.0, -lambda, -mu, 0.0));
    (h1, h2)
}

/// Solves `t² + 1 + ε(b j t + a i) = (t - h1)(t - h2)` for rotation
/// generators. The primal parts are `±u` with `u` a unit vector, and the
/// dual equations force `u = (0, 0, a/b)`, so solutions exist only for
/// `a = b`; the remaining freedom is the pair `(λ, μ)`.
pub fn two_factor_solution(a: f64, b: f64, lambda: f64, mu: f64) -> Result<(DualQuaternion, DualQuaternion), SpecialError> {
    if b == 0.0 {
        return Err(SpecialError::NoQuadraticFactorization { a, b });
    }
    let z = a / b;
    if (z * z - 1.0).abs() > tolerance().sqrt() {
        return Err(SpecialError::NoQuadraticFactorization { a, b });
    }
    let u = Quaternion::K.scale(z.signum());
    let d1 = Quaternion::new(0.0, lambda, mu - b, 0.0);
    let d2 = -(Quaternion::J.scale(b) + d1);
    Ok((DualQuaternion::new(u, d1), DualQuaternion::new(-u, d2)))
}

/// Four-factor factorization of `(t² + 1)·C` for an elliptic translation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicationTrick {
    pub factorization: Factorization,
    /// Coefficient residual of `∏ (t - h_i)` against `(t² + 1)·C`.
    pub residual: f64,
    /// `a = b`: the circular closed form also applies.
    pub circular: bool,
}

/// `(t² + 1)·C`.
pub fn quadratic_multiple(spec: TranslationSpec) -> DqPoly {
    let q = DqPoly::from_real(&RealPoly::quadratic(0.0, 1.0));
    &q * elliptic_translation(spec).as_poly()
}

fn trick(spec: TranslationSpec, factors: Vec<DualQuaternion>) -> MultiplicationTrick {
    let residual = product_of_linear(&factors).distance(&quadratic_multiple(spec));
    MultiplicationTrick {
        factorization: Factorization::from_factors(factors),
        residual,
        circular: spec.is_circular(),
    }
}

/// Planar factors, all axes parallel to the z-axis.
pub fn multiplication_trick_planar(spec: TranslationSpec) -> MultiplicationTrick {
    let TranslationSpec { a, b } = spec;
    let r = (a - b) / (a + b);
    let k = Quaternion::K;
    let factors = vec![
        DualQuaternion::new(k, Quaternion::new(0.0, -r, 0.0, 0.0)),
        DualQuaternion::new(-k, Quaternion::new(0.0, r, -(a + b) / 2.0, 0.0)),
        DualQuaternion::new(-k, Quaternion::new(0.0, -1.0, (a - b) / 2.0, 0.0)),
        DualQuaternion::new(k, Quaternion::I),
    ];
    trick(spec, factors)
}

/// Spatial factors; the first two and the last two axes are parallel.
pub fn multiplication_trick_spatial(spec: TranslationSpec) -> MultiplicationTrick {
    let TranslationSpec { a, b } = spec;
    let s = a * a + b * b;
    let d = a * a - b * b;
    let p = Quaternion::new(0.0, d / s, 0.0, -2.0 * a * b / s);
    let factors = vec![
        DualQuaternion::new(-p, Quaternion::J.scale(-d / s)),
        DualQuaternion::new(p, Quaternion::J.scale(-(s * s - 2.0 * b * d) / (2.0 * b * s))),
        DualQuaternion::new(-Quaternion::I, Quaternion::J.scale((d + 2.0 * b) / (2.0 * b))),
        DualQuaternion::new(Quaternion::I, -Quaternion::J),
    ];
    trick(spec, factors)
}

/// `C·H` for a quaternion polynomial `H` (ascending coefficients).
pub fn right_multiply(c: &MotionPolynomial, h: &[Quaternion]) -> Result<MotionPolynomial, SpecialError> {
    let hp = DqPoly::from_quaternions(h);
    Ok(MotionPolynomial::from_poly(c.as_poly() * &hp)?)
}

/// Motion with the trajectory of the origin of an elliptic translation,
/// factorizable into three rotations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DarbouxMotion {
    /// `C·H`.
    pub motion: MotionPolynomial,
    /// `H = t - h`.
    pub h: Quaternion,
    pub factorization: Factorization,
    pub residual: f64,
}

/// From the spatial factorization `(t² + 1)C = (t - k1)⋯(t - k4)` follows
/// `C·(t - k̄4) = (t - k1)(t - k2)(t - k3)`. Conjugating by the translation
/// `S` that moves the axis of `k̄4` through the origin keeps `C` and turns
/// `t - k̄4` into a quaternion polynomial.
pub fn darboux_motion(spec: TranslationSpec) -> Result<DarbouxMotion, SpecialError> {
    let ks = multiplication_trick_spatial(spec).factorization.factors;
    let k4 = ks[3].conj();
    let axis = k4.axis().map_err(MotionError::from)?;
    let s = DualQuaternion::translation(axis.foot().map(|x| -x));
    let s_inv = s.inverse().map_err(MotionError::from)?;
    let moved = s * k4 * s_inv;
    let h = moved.primal;
    let factors: Vec<DualQuaternion> = ks[..3].iter().map(|&k| s * k * s_inv).collect();
    let motion = right_multiply(&elliptic_translation(spec), &[-h, Quaternion::ONE])?;
    let residual = product_of_linear(&factors)
        .distance(motion.as_poly())
        .max(moved.dual.max_abs());
    Ok(DarbouxMotion {
        motion,
        h,
        factorization: Factorization::from_factors(factors),
        residual,
    })
}

/// Linkage from bracing a chain of rotations `h1, …, hn` with four-bar cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracedChain {
    pub linkage: Linkage,
    pub m: Vec<DualQuaternion>,
    pub k: Vec<DualQuaternion>,
    /// Loop residual of each cell on the standard sweep.
    pub cell_residuals: Vec<f64>,
    /// Link performing the motion `∏ (t - h_i)` relative to link 0.
    pub terminal_link: usize,
}

impl BracedChain {
    pub fn max_residual(&self) -> f64 {
        self.cell_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Braces the chain with cells `m_{i-1}, h_i, m_i, k_i` defined by
/// `(t - m̄_{i-1})(t - h_i) = (t - k_i)(t - m̄_i)`; the conjugate stands in
/// for the inverse, which only differs by a real factor.
///
/// Joints are ordered `h1..hn, k1..kn, m0..mn`. Links are
/// `L_0 = {m0, h1}`, `L_i = {h_i, m_i, h_{i+1}}`, `L_n = {h_n, m_n}` followed
/// by the same for the `k` chain, so `L_n` is the terminal link.
pub fn brace_chain(factors: &[DualQuaternion], m0: DualQuaternion) -> Result<BracedChain, SpecialError> {
    let n = factors.len();
    let mut ms = vec![m0];
    let mut ks = Vec::with_capacity(n);
    for (i, &h) in factors.iter().enumerate() {
        let (k, mbar, _) = swap_factors(ms[i].conj(), h).map_err(|e| SpecialError::BraceDegenerate {
            step: i + 1,
            reason: e.to_string(),
        })?;
        ks.push(k);
        ms.push(mbar.conj());
    }
    let hi = |i: usize| i - 1;
    let ki = |i: usize| n + i - 1;
    let mi = |i: usize| 2 * n + i;
    let mut joints = Vec::with_capacity(3 * n + 1);
    let make = |label: String, g: DualQuaternion, step: usize| {
        Joint::new(label, g).ok_or(SpecialError::BraceDegenerate {
            step,
            reason: "joint is not a rotation".into(),
        })
    };
    for (i, &h) in factors.iter().enumerate() {
        joints.push(make(format!("h{}", i + 1), h, i + 1)?);
    }
    for (i, &k) in ks.iter().enumerate() {
        joints.push(make(format!("k{}", i + 1), k, i + 1)?);
    }
    for (i, &m) in ms.iter().enumerate() {
        joints.push(make(format!("m{i}"), m, i)?);
    }
    let mut links = Vec::with_capacity(2 * n + 2);
    let chains: [&dyn Fn(usize) -> usize; 2] = [&hi, &ki];
    for chain in chains {
        links.push(vec![mi(0), chain(1)]);
        for i in 1..n {
            links.push(vec![chain(i), mi(i), chain(i + 1)]);
        }
        links.push(vec![chain(n), mi(n)]);
    }
    let loops = (1..=n)
        .map(|i| {
            vec![
                LoopEntry::new(mi(i - 1), true),
                LoopEntry::new(hi(i), false),
                LoopEntry::new(mi(i), false),
                LoopEntry::new(ki(i), true),
            ]
        })
        .collect();
    let linkage = Linkage {
        joints,
        links,
        loops,
        kind: "braced chain".into(),
    };
    let sweep = standard_sweep();
    let cell_residuals = (0..n)
        .map(|i| loop_residual(&linkage, i, &sweep).unwrap_or(f64::INFINITY))
        .collect();
    Ok(BracedChain {
        linkage,
        m: ms,
        k: ks,
        cell_residuals,
        terminal_link: n,
    })
}

/// Rotation about a random axis parallel to the z-axis.
pub fn random_planar_rotation<R: Rng + ?Sized>(rng: &mut R) -> DualQuaternion {
    let w = rng.random_range(-1.0..=1.0);
    let c = rng.random_range(0.5..=1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let x = rng.random_range(-1.0..=1.0);
    let y = rng.random_range(-1.0..=1.0);
    DualQuaternion::new(Quaternion::new(w, 0.0, 0.0, c), Quaternion::new(0.0, x, y, 0.0))
}

/// `true` when every factor is a rotation about an axis parallel to z.
pub fn is_planar_chain(factors: &[DualQuaternion]) -> bool {
    factors.iter().all(|h| {
        let p = h.primal;
        let scale = h.max_abs();
        p.x.abs() <= tolerance() * scale && p.y.abs() <= tolerance() * scale && h.dual.z.abs() <= tolerance() * scale
    })
}

/// Bracing with a random `m0`, planar for planar chains, retried on failure.
pub fn random_brace<R: Rng + ?Sized>(factors: &[DualQuaternion], rng: &mut R) -> Result<BracedChain, SpecialError> {
    let planar = is_planar_chain(factors);
    let mut last = SpecialError::BraceDegenerate {
        step: 0,
        reason: "no attempt".into(),
    };
    for _ in 0..BRACE_RETRIES {
        let m0 = if planar { random_planar_rotation(rng) } else { random_rotation(rng) };
        if factors.iter().any(|h| linear_norm(*h).approx_eq(&linear_norm(m0), 1e-6)) {
            continue;
        }
        match brace_chain(factors, m0) {
            Ok(b) if b.max_residual() < 1e-8 => return Ok(b),
            Ok(b) => {
                last = SpecialError::BraceDegenerate {
                    step: 0,
                    reason: format!("cell residual {:e}", b.max_residual()),
                }
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::trajectory;
    use crate::mpoly::Param;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dq(h: [f64; 8]) -> DualQuaternion {
        DualQuaternion::from_array(h)
    }

    #[test]
    fn spec_validation() {
        assert!(TranslationSpec::new(1.0, 2.0).is_err());
        assert!(TranslationSpec::new(1.0, 0.0).is_err());
        assert!(TranslationSpec::new(1.0, 1.0).unwrap().is_circular());
        let c = elliptic_translation(TranslationSpec::new(2.0, 1.0).unwrap());
        assert_eq!(c.coeffs()[0], dq([1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0]));
        assert_eq!(c.coeffs()[1], dq([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]));
        assert!(!c.is_generic());
    }

    #[test]
    fn circular_pair() {
        let (h1, h2) = circular_translation_factors(1.0, 0.0, 0.0);
        assert_eq!(h1, dq([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0]));
        assert_eq!(h2, dq([0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0]));
        let (g1, g2) = two_factor_solution(1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(g1.distance(h1) < 1e-15 && g2.distance(h2) < 1e-15);
        assert!(matches!(two_factor_solution(2.0, 1.0, 0.0, 0.0), Err(SpecialError::NoQuadraticFactorization { .. })));
    }

    #[test]
    fn planar_trick_values() {
        let t = multiplication_trick_planar(TranslationSpec::new(2.0, 1.0).unwrap());
        let f = &t.factorization.factors;
        assert!(f[0].distance(dq([0.0, 0.0, 0.0, 1.0, 0.0, -1.0 / 3.0, 0.0, 0.0])) < 1e-15);
        assert!(f[1].distance(dq([0.0, 0.0, 0.0, -1.0, 0.0, 2.0 / 6.0, -9.0 / 6.0, 0.0])) < 1e-15);
        assert!(f[2].distance(dq([0.0, 0.0, 0.0, -1.0, 0.0, -1.0, 0.5, 0.0])) < 1e-15);
        assert!(t.residual < 1e-12);
        assert!(!t.circular);
    }

    #[test]
    fn spatial_trick_values() {
        let t = multiplication_trick_spatial(TranslationSpec::new(2.0, 1.0).unwrap());
        let f = &t.factorization.factors;
        assert!(f[0].distance(dq([0.0, -0.6, 0.0, 0.8, 0.0, 0.0, -0.6, 0.0])) < 1e-15);
        assert!(f[3].distance(dq([0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0])) < 1e-15);
        assert!(t.residual < 1e-12);
    }

    #[test]
    fn darboux_factors_and_trajectory() {
        let spec = TranslationSpec::new(2.0, 1.0).unwrap();
        let d = darboux_motion(spec).unwrap();
        assert!(d.residual < 1e-12, "{}", d.residual);
        assert_eq!(d.motion.degree(), 3);
        let c = elliptic_translation(spec);
        let ts: Vec<Param> = (0..20).map(|i| Param::Finite(-3.0 + 0.3 * i as f64)).chain([Param::Infinity]).collect();
        let a = trajectory(&c, [0.0; 3], &ts).unwrap();
        let b = trajectory(&d.motion, [0.0; 3], &ts).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((0..3).all(|i| (x[i] - y[i]).abs() < 1e-12));
        }
    }

    #[test]
    fn right_multiply_by_t_minus_k_is_not_generic() {
        let c = elliptic_translation(TranslationSpec::new(2.0, 1.0).unwrap());
        let ch = right_multiply(&c, &[-Quaternion::K, Quaternion::ONE]).unwrap();
        assert_eq!(ch.degree(), 3);
        assert_eq!(ch.primal_real_factor().degree(), Some(2));
        let same = right_multiply(&c, &[Quaternion::ONE]).unwrap();
        assert_eq!(same.as_poly(), c.as_poly());
    }

    #[test]
    fn brace_planar_chain() {
        let t = multiplication_trick_planar(TranslationSpec::new(2.0, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = random_brace(&t.factorization.factors, &mut rng).unwrap();
        assert_eq!(b.linkage.joints.len(), 13);
        assert_eq!(b.linkage.links.len(), 10);
        assert!(b.max_residual() < 1e-8);
        b.linkage.validate().unwrap();
        assert!(is_planar_chain(&b.k) && is_planar_chain(&b.m));
    }

    #[test]
    fn single_cell() {
        let h = dq([0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        let m0 = dq([0.3, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0]);
        let b = brace_chain(&[h], m0).unwrap();
        assert_eq!(b.linkage.joints.len(), 4);
        assert!(b.max_residual() < 1e-10);
    }

    #[test]
    fn brace_darboux_chain() {
        let d = darboux_motion(TranslationSpec::new(2.0, 1.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_brace(&d.factorization.factors, &mut rng).unwrap();
        assert_eq!(b.linkage.joints.len(), 10);
        assert_eq!(b.linkage.links.len(), 8);
        assert!(b.max_residual() < 1e-8);
        b.linkage.validate().unwrap();
    }
}
