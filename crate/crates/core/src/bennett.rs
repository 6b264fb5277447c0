//! Bennett linkages through three poses, their degenerate cases, the
//! line-symmetric motion family, Bennett flips and 6R/5R replacement
//! linkages.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{dot3, DualQuaternion, GeneratorKind, Quaternion};
use crate::factor::{factor_with_order, factor_with_quadratics, linear_norm, Factorization, FactorError};
use crate::linkage::{loop_residual, standard_sweep, Joint, Linkage, LoopEntry};
use crate::mpoly::{product_of_linear, DqPoly, MotionError, MotionPolynomial, Param};
use crate::rpoly::{quadratic_factorization, repeated_quadratic, PolyError, QuadraticFactor, RealPoly};
use crate::tolerance::{tolerance, LOOP_TOLERANCE};

/// Number of random choices of `p` tried before giving up on a flip.
pub const FLIP_RETRIES: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BennettError {
    #[error("pose {0} is not a rigid displacement")]
    InvalidPose(usize),
    #[error("poses are not pairwise distinct")]
    CoincidentPoses,
    #[error("no quadratic interpolant: {0}")]
    NoSolution(String),
    #[error("interpolants form a two-parameter family")]
    FamilyOfSolutions,
    #[error("only degenerate interpolants with lambda = {lambda}, mu = {mu}")]
    DegenerateZeroParameter { lambda: f64, mu: f64 },
    #[error("Bennett flip failed for this p: {0}")]
    FlipDegenerate(String),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Quadratic motion through three poses: `C(0) ≡ p0`, `C(1) ≡ p1`, `C(∞) ≡ p2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interpolant {
    pub motion: MotionPolynomial,
    pub lambda: f64,
    pub mu: f64,
}

fn check_pose(p: DualQuaternion, index: usize) -> Result<(), BennettError> {
    let scale = p.max_abs();
    if scale == 0.0 || p.primal.max_abs() <= tolerance() * scale || !p.satisfies_study_condition() {
        return Err(BennettError::InvalidPose(index));
    }
    Ok(())
}

/// Number of linearly independent vectors among `vs`, by Gram-Schmidt on
/// unit-scaled copies.
fn rank(vs: &[[f64; 8]], tol: f64) -> usize {
    let mut basis: Vec<[f64; 8]> = Vec::new();
    for v in vs {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            continue;
        }
        let mut w = v.map(|x| x / n);
        for b in &basis {
            let d: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in w.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let m = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if m > tol {
            basis.push(w.map(|x| x / m));
        }
    }
    basis.len()
}

/// Reduced poses `p0 p2⁻¹`, `p1 p2⁻¹` after validation.
fn reduce(p0: DualQuaternion, p1: DualQuaternion, p2: DualQuaternion) -> Result<(DualQuaternion, DualQuaternion), BennettError> {
    for (i, p) in [p0, p1, p2].into_iter().enumerate() {
        check_pose(p, i)?;
    }
    let inv = p2.inverse().map_err(|_| BennettError::InvalidPose(2))?;
    let a = p0 * inv;
    let b = p1 * inv;
    let tol = tolerance().sqrt();
    let one = DualQuaternion::ONE.to_array();
    if rank(&[one, a.to_array()], tol) < 2 || rank(&[one, b.to_array()], tol) < 2 || rank(&[a.to_array(), b.to_array()], tol) < 2 {
        return Err(BennettError::CoincidentPoses);
    }
    Ok((a, b))
}

/// `true` when `1`, `p0 p2⁻¹` and `p1 p2⁻¹` are linearly dependent, i.e.
/// the poses lie on a straight line of the Study quadric.
pub fn poses_on_line(p0: DualQuaternion, p1: DualQuaternion, p2: DualQuaternion) -> Result<bool, BennettError> {
    let (a, b) = reduce(p0, p1, p2)?;
    Ok(rank(&[DualQuaternion::ONE.to_array(), a.to_array(), b.to_array()], tolerance().sqrt()) < 3)
}

/// Quadratic interpolant `C = (t² + (λB - 1 - μA)t + μA)·p2` with
/// `A = p0 p2⁻¹`, `B = p1 p2⁻¹`. With `a`, `b` the dual scalar parts of
/// `A`, `B` and `s = A_p·B_d + A_d·B_p`, the dual part of the norm
/// vanishes iff `λb = μa`, `μ(λs - a) = 0` and `λμs + λb = 2μa`, which
/// for `s ≠ 0` gives `λ = a/s`, `μ = b/s`.
pub fn interpolate_poses(p0: DualQuaternion, p1: DualQuaternion, p2: DualQuaternion) -> Result<Interpolant, BennettError> {
    let (ra, rb) = reduce(p0, p1, p2)?;
    let a = ra.dual.w;
    let b = rb.dual.w;
    let s = ra.primal.dot(rb.dual) + ra.dual.dot(rb.primal);
    let scale = ra.max_abs() * rb.max_abs();
    let zero = |x: f64| x.abs() <= tolerance() * scale.max(1.0);
    if zero(a) && zero(b) && zero(s) {
        return Err(BennettError::FamilyOfSolutions);
    }
    if zero(s) || zero(a) || zero(b) {
        // the remaining solutions all have λ = 0 or μ = 0
        let (lambda, mu) = if zero(s) { (0.0, 0.0) } else { (a / s, b / s) };
        return Err(BennettError::DegenerateZeroParameter { lambda, mu });
    }
    let (lambda, mu) = (a / s, b / s);
    let eqs = [
        lambda * b - mu * a,
        mu * (lambda * s - a),
        lambda * mu * s + lambda * b - 2.0 * mu * a,
    ];
    let worst = eqs.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    if worst > tolerance().sqrt() * (1.0 + lambda.abs() + mu.abs()) * scale.max(1.0) {
        return Err(BennettError::NoSolution(format!("equation residual {worst:e}")));
    }
    let reduced = DqPoly::new(vec![ra * mu, rb * lambda - DualQuaternion::ONE - ra * mu, DualQuaternion::ONE]);
    let poly = reduced.right_mul(p2);
    let motion = MotionPolynomial::from_poly(poly)?;
    Ok(Interpolant { motion, lambda, mu })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosisKind {
    Bennett4R,
    CoincidentDyads,
    Rprp,
    CurvilinearTranslation,
    LineMotion,
    PlanarOrSphericalFamily,
    NoSolution,
}

/// Bennett 4R mechanism through three poses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BennettLinkage {
    pub interpolant: Interpolant,
    pub norms: Vec<QuadraticFactor>,
    /// `C = (t - h1)(t - h2)` up to the leading coefficient.
    pub h: Factorization,
    /// `C = (t - k1)(t - k2)`.
    pub k: Factorization,
    pub linkage: Linkage,
    /// Real polynomial the loop product reduces to.
    pub closure: RealPoly,
    pub residual: f64,
}

/// Outcome of synthesizing a Bennett linkage; exactly one case applies.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum SynthesisDiagnosis {
    Bennett4R(Box<BennettLinkage>),
    /// Both orders give the same 2R dyad.
    CoincidentDyads {
        interpolant: Interpolant,
        norm_factor: QuadraticFactor,
        factorization: Factorization,
    },
    /// Primal part has one linear real factor; factorizations found by
    /// running the algorithm regardless, if any.
    Rprp {
        interpolant: Interpolant,
        real_factor: RealPoly,
        factorizations: Vec<Factorization>,
    },
    CurvilinearTranslation { interpolant: Interpolant },
    LineMotion,
    PlanarOrSphericalFamily,
    NoSolution { reason: String },
}

impl SynthesisDiagnosis {
    pub fn kind(&self) -> DiagnosisKind {
        match self {
            Self::Bennett4R(_) => DiagnosisKind::Bennett4R,
            Self::CoincidentDyads { .. } => DiagnosisKind::CoincidentDyads,
            Self::Rprp { .. } => DiagnosisKind::Rprp,
            Self::CurvilinearTranslation { .. } => DiagnosisKind::CurvilinearTranslation,
            Self::LineMotion => DiagnosisKind::LineMotion,
            Self::PlanarOrSphericalFamily => DiagnosisKind::PlanarOrSphericalFamily,
            Self::NoSolution { .. } => DiagnosisKind::NoSolution,
        }
    }
}

/// Interpolates the poses and classifies the result, building the 4R
/// linkage `(h1, h2, k̄2, k̄1)` in the generic case.
pub fn synthesize_bennett(p0: DualQuaternion, p1: DualQuaternion, p2: DualQuaternion) -> Result<SynthesisDiagnosis, BennettError> {
    if poses_on_line(p0, p1, p2)? {
        return Ok(SynthesisDiagnosis::LineMotion);
    }
    let interpolant = match interpolate_poses(p0, p1, p2) {
        Ok(i) => i,
        Err(BennettError::FamilyOfSolutions) => return Ok(SynthesisDiagnosis::PlanarOrSphericalFamily),
        Err(e @ (BennettError::NoSolution(_) | BennettError::DegenerateZeroParameter { .. })) => {
            return Ok(SynthesisDiagnosis::NoSolution { reason: e.to_string() })
        }
        Err(e) => return Err(e),
    };
    let c = &interpolant.motion;
    let g = c.primal_real_factor();
    match g.degree() {
        Some(2) => return Ok(SynthesisDiagnosis::CurvilinearTranslation { interpolant }),
        Some(1) => {
            let factorizations = rprp_factorizations(c).unwrap_or_default();
            return Ok(SynthesisDiagnosis::Rprp {
                interpolant,
                real_factor: g,
                factorizations,
            });
        }
        _ => {}
    }
    let norm = c.make_monic()?.poly.norm()?;
    let rep = repeated_quadratic(&norm);
    if rep.degree().unwrap_or(0) >= 2 {
        let factorization = factor_with_order(c, &[0, 1])?;
        let norm_factor = factorization.norms[0];
        return Ok(SynthesisDiagnosis::CoincidentDyads {
            interpolant,
            norm_factor,
            factorization,
        });
    }
    let h = factor_with_order(c, &[0, 1])?;
    let k = factor_with_order(c, &[1, 0])?;
    let joints = [
        ("h1", h.factors[0]),
        ("h2", h.factors[1]),
        ("conj(k2)", k.factors[1].conj()),
        ("conj(k1)", k.factors[0].conj()),
    ]
    .into_iter()
    .map(|(l, g)| Joint::new(l, g).ok_or(BennettError::Factor(FactorError::ResidualTooLarge(f64::INFINITY))))
    .collect::<Result<Vec<_>, _>>()?;
    let linkage = Linkage::closed_chain("Bennett 4R", joints);
    let residual = loop_residual(&linkage, 0, &standard_sweep()).unwrap_or(f64::INFINITY);
    let closure = RealPoly::new(
        linkage
            .loop_polynomial(0)
            .map(|p| p.coeffs().iter().map(|c| c.primal.w).collect())
            .unwrap_or_default(),
    );
    Ok(SynthesisDiagnosis::Bennett4R(Box::new(BennettLinkage {
        interpolant,
        norms: h.norms.clone(),
        h,
        k,
        linkage,
        closure,
        residual,
    })))
}

/// Both factorizations of a quadratic motion polynomial whose primal part
/// has exactly one linear real factor `t - t0`. The norm splits as
/// `(t - t0)² M`; the algorithm is run with `(t - t0)²` in place of an
/// irreducible quadratic.
pub fn rprp_factorizations(c: &MotionPolynomial) -> Result<Vec<Factorization>, FactorError> {
    let g = c.primal_real_factor();
    if g.degree() != Some(1) {
        return Err(FactorError::NonGeneric(g));
    }
    let g = g.monic();
    let t0 = -g.coeffs()[0];
    let norm = c.make_monic()?.poly.norm()?;
    let g2 = &g * &g;
    let (rest, _) = norm.div_rem(&g2);
    let mut quads = quadratic_factorization(&rest)?;
    quads.push(QuadraticFactor::new(-2.0 * t0, t0 * t0));
    let mut out = Vec::new();
    for order in [[0, 1], [1, 0]] {
        let ordered: Vec<QuadraticFactor> = order.iter().map(|&i| quads[i]).collect();
        let factors = factor_with_quadratics(c, &ordered)?;
        let f = Factorization {
            factors,
            norms: ordered,
            leading: c.leading(),
        };
        if crate::factor::verify_factorization(c, &f) > crate::factor::RECONSTRUCTION_TOLERANCE {
            return Err(FactorError::ResidualTooLarge(crate::factor::verify_factorization(c, &f)));
        }
        out.push(f);
    }
    Ok(out)
}

/// Line-symmetric motion with respect to the rulings of the hyperboloid
/// `x²b²c² + y²a²c² - z²a²b² = a²b²c²`.
pub fn line_symmetric_motion(a: f64, b: f64, c: f64) -> MotionPolynomial {
    let c0 = DualQuaternion::new(
        Quaternion::new(c * c - b * b, 2.0 * b * c, 0.0, 0.0),
        Quaternion::new(-4.0 * a * b * c, -2.0 * a * (b * b - c * c), 0.0, 0.0),
    );
    let c1 = DualQuaternion::new(
        Quaternion::new(0.0, 0.0, 2.0 * a * c, 2.0 * a * b),
        Quaternion::new(0.0, 0.0, -2.0 * a * a * b + 2.0 * b * c * c, 2.0 * a * a * c + 2.0 * b * b * c),
    );
    let c2 = DualQuaternion::real(b * b + c * c);
    MotionPolynomial::from_poly_unchecked(DqPoly::new(vec![c0, c1, c2]))
}

/// Discriminant of the norm of [`line_symmetric_motion`]:
/// `4096 (b²+c²)⁸ (a²+c²)² (a+b)² (a-b)²`.
pub fn line_symmetric_discriminant(a: f64, b: f64, c: f64) -> f64 {
    4096.0 * (b * b + c * c).powi(8) * (a * a + c * c).powi(2) * (a + b).powi(2) * (a - b).powi(2)
}

/// `true` when the norm polynomial is the square of one quadratic.
pub fn has_repeated_norm_factor(c: &MotionPolynomial) -> Result<bool, PolyError> {
    let norm = c.norm().map_err(|_| PolyError::Zero)?;
    Ok(repeated_quadratic(&norm).degree().unwrap_or(0) >= 2)
}

/// Result of a Bennett flip:
/// `(t - h1)(t - p) = (t - f)(t - g)` and `(t - h̄2)(t - p) = (t - q)(t - r̄)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flip {
    pub p: DualQuaternion,
    pub f: DualQuaternion,
    pub g: DualQuaternion,
    pub r: DualQuaternion,
    pub q: DualQuaternion,
    pub residual: f64,
}

/// Swaps `t - x` and `t - p` in `(t - x)(t - p)`: returns `(u, v)` with
/// `(t - x)(t - p) = (t - u)(t - v)`, `u` having the norm of `p`.
pub fn swap_factors(x: DualQuaternion, p: DualQuaternion) -> Result<(DualQuaternion, DualQuaternion, f64), BennettError> {
    let degenerate = |m: String| BennettError::FlipDegenerate(m);
    let mx = linear_norm(x);
    let mp = linear_norm(p);
    if mx.approx_eq(&mp, tolerance().sqrt()) {
        return Err(degenerate("p has the same norm polynomial as the factor it is swapped with".into()));
    }
    let prod = product_of_linear(&[x, p]);
    let c = MotionPolynomial::from_poly(prod.clone()).map_err(|e| degenerate(e.to_string()))?;
    if !c.is_generic() {
        return Err(degenerate("product is not generic".into()));
    }
    let uv = factor_with_quadratics(&c, &[mp, mx]).map_err(|e| degenerate(e.to_string()))?;
    let residual = product_of_linear(&uv).relative_distance(&prod);
    if residual > 1e-9 {
        return Err(degenerate(format!("swap residual {residual:e}")));
    }
    Ok((uv[0], uv[1], residual))
}

pub fn bennett_flip(h1: DualQuaternion, h2: DualQuaternion, p: DualQuaternion) -> Result<Flip, BennettError> {
    if p.classify_generator() != GeneratorKind::Rotation {
        return Err(BennettError::FlipDegenerate("p is not a rotation".into()));
    }
    let (f, g, e1) = swap_factors(h1, p)?;
    let (q, rbar, e2) = swap_factors(h2.conj(), p)?;
    Ok(Flip {
        p,
        f,
        g,
        r: rbar.conj(),
        q,
        residual: e1.max(e2),
    })
}

/// Rotation generator with coordinates uniform in `[-1, 1]`, projected
/// onto the rotation conditions (zero dual scalar, dual vector orthogonal
/// to the primal vector).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> DualQuaternion {
    loop {
        let mut h = [0.0; 8];
        for x in h.iter_mut() {
            *x = rng.random_range(-1.0..=1.0);
        }
        h[4] = 0.0;
        let v = [h[1], h[2], h[3]];
        let vv = dot3(v, v);
        if vv < 1e-4 {
            continue;
        }
        let k = dot3(v, [h[5], h[6], h[7]]) / vv;
        for i in 0..3 {
            h[5 + i] -= k * v[i];
        }
        return DualQuaternion::from_array(h);
    }
}

/// Flip with a random `p`, retried on [`BennettError::FlipDegenerate`].
pub fn random_flip<R: Rng + ?Sized>(h1: DualQuaternion, h2: DualQuaternion, rng: &mut R) -> Result<Flip, BennettError> {
    let mut last = BennettError::FlipDegenerate("no attempt".into());
    for _ in 0..FLIP_RETRIES {
        match bennett_flip(h1, h2, random_rotation(rng)) {
            Ok(f) => return Ok(f),
            Err(e @ BennettError::FlipDegenerate(_)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Replacement linkage of a Bennett motion `(t - h1)(t - h2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplacementLinkage {
    pub flip: Flip,
    pub linkage: Linkage,
    /// Link connecting `h2` and `q`; it performs the motion `(t - h1)(t - h2)`.
    pub motion_link: usize,
    /// `g` and `r` coincide, so the 6R loop collapses to 5R.
    pub merged: bool,
    pub residual: f64,
}

/// Assembles `h1, h2, q, r̄, ḡ, f̄` into a closed 6R chain, merging the
/// `r̄`, `ḡ` joints into one when `g = r`.
pub fn build_replacement_linkage(h1: DualQuaternion, h2: DualQuaternion, p: DualQuaternion) -> Result<ReplacementLinkage, BennettError> {
    let flip = bennett_flip(h1, h2, p)?;
    Ok(assemble_replacement(flip, h1, h2))
}

/// As [`build_replacement_linkage`] with the flip computed from a random `p`.
pub fn random_replacement_linkage<R: Rng + ?Sized>(h1: DualQuaternion, h2: DualQuaternion, rng: &mut R) -> Result<ReplacementLinkage, BennettError> {
    let flip = random_flip(h1, h2, rng)?;
    Ok(assemble_replacement(flip, h1, h2))
}

fn assemble_replacement(flip: Flip, h1: DualQuaternion, h2: DualQuaternion) -> ReplacementLinkage {
    let joint = |l: &str, g: DualQuaternion| Joint::new(l, g).expect("flip factors are rotations");
    let same_axis = match (flip.g.axis(), flip.r.axis()) {
        (Ok(a), Ok(b)) => a.coincides(&b, 1e-9),
        _ => false,
    };
    let merged = same_axis && flip.g.distance(flip.r) <= 1e-9 * (1.0 + flip.g.max_abs());
    let linkage = if merged {
        let joints = vec![
            joint("h1", h1),
            joint("h2", h2),
            joint("q", flip.q),
            joint("conj(r)", flip.r.conj()),
            joint("conj(f)", flip.f.conj()),
        ];
        let mut l = Linkage::closed_chain("Goldberg 5R", joints);
        l.loops = vec![[0, 1, 2, 3, 3, 4].into_iter().map(|j| LoopEntry::new(j, false)).collect()];
        l
    } else {
        let joints = vec![
            joint("h1", h1),
            joint("h2", h2),
            joint("q", flip.q),
            joint("conj(r)", flip.r.conj()),
            joint("conj(g)", flip.g.conj()),
            joint("conj(f)", flip.f.conj()),
        ];
        Linkage::closed_chain("Waldron double Bennett hybrid 6R", joints)
    };
    let residual = loop_residual(&linkage, 0, &standard_sweep()).unwrap_or(f64::INFINITY);
    ReplacementLinkage {
        flip,
        linkage,
        motion_link: 2,
        merged,
        residual,
    }
}

/// `true` when the replacement loop closes on the standard sweep.
pub fn closes(r: &ReplacementLinkage) -> bool {
    r.residual < LOOP_TOLERANCE
}

/// Poses `C(0)`, `C(1)`, `C(∞)` of a motion.
pub fn sample_poses(c: &MotionPolynomial) -> [DualQuaternion; 3] {
    [
        c.eval_param(Param::Finite(0.0)),
        c.eval_param(Param::Finite(1.0)),
        c.eval_param(Param::Infinity),
    ]
}
