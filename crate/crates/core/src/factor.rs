//! Factorization of generic motion polynomials into linear rotation factors.
//!
//! The quadratic factors `M_1, …, M_n` of the norm polynomial label the
//! factorizations: for an ordering of them, the last linear factor is the
//! unique zero of the remainder of `C` modulo the last quadratic, it is
//! divided off on the right, and the procedure repeats on the quotient.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{DualQuaternion, GeneratorKind};
use crate::mpoly::{product_of_linear, DqPoly, MotionError, MotionPolynomial};
use crate::rpoly::{quadratic_factorization, PolyError, QuadraticFactor, RealPoly};
use crate::tolerance::tolerance;

/// Reconstruction bound for a successful factorization.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error("motion polynomial is not generic: primal part has the real factor {0}")]
    NonGeneric(RealPoly),
    #[error("remainder {remainder} has a non-invertible leading coefficient at step {step}")]
    RemainderNotInvertible { step: usize, remainder: DqPoly },
    #[error("factorization reconstructs the input only to residual {0:e}")]
    ResidualTooLarge(f64),
    #[error("order {0:?} is not a permutation of the norm factors")]
    InvalidOrder(Vec<usize>),
    #[error(transparent)]
    Norm(#[from] PolyError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// `C = leading · (t - h_1)⋯(t - h_n)` with `(t - h_i)(t - h̄_i) = norms[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub factors: Vec<DualQuaternion>,
    pub norms: Vec<QuadraticFactor>,
    pub leading: DualQuaternion,
}

impl Factorization {
    /// Monic factorization with norms read off the factors.
    pub fn from_factors(factors: Vec<DualQuaternion>) -> Self {
        let norms = factors.iter().map(|h| linear_norm(*h)).collect();
        Self {
            factors,
            norms,
            leading: DualQuaternion::ONE,
        }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// `leading · ∏ (t - h_i)`.
    pub fn product(&self) -> DqPoly {
        product_of_linear(&self.factors).left_mul(self.leading)
    }

    pub fn kinds(&self) -> Vec<GeneratorKind> {
        self.factors.iter().map(|h| h.classify_generator()).collect()
    }

    /// Element-wise equality after sign canonicalization.
    pub fn same_as(&self, other: &Factorization, tol: f64) -> bool {
        self.factors.len() == other.factors.len()
            && self
                .factors
                .iter()
                .zip(&other.factors)
                .all(|(a, b)| a.canonical().distance(b.canonical()) <= tol)
    }
}

/// Norm `(t - h)(t - h̄) = t² - (h + h̄)t + h h̄` as a quadratic.
pub fn linear_norm(h: DualQuaternion) -> QuadraticFactor {
    QuadraticFactor::new(-2.0 * h.primal.w, h.primal.norm())
}

/// Quadratic factors of the norm polynomial of `c`, sorted by `(a, b)`.
pub fn norm_factors(c: &MotionPolynomial) -> Result<Vec<QuadraticFactor>, FactorError> {
    Ok(quadratic_factorization(&c.norm()?)?)
}

/// Runs the factorization loop for a monic `c` and an ordered list of
/// quadratics; does not check genericity, so it can be attempted on
/// non-generic input. Returns `[h_1, …, h_n]`.
pub fn factor_with_quadratics(
    c: &MotionPolynomial,
    quadratics: &[QuadraticFactor],
) -> Result<Vec<DualQuaternion>, FactorError> {
    let monic = c.make_monic()?;
    let mut rest = monic.poly.into_poly();
    let mut factors = VecDeque::with_capacity(quadratics.len());
    for (step, q) in quadratics.iter().enumerate().rev() {
        let m = DqPoly::from_real(&q.poly());
        let (_, r) = rest.div_rem(&m)?;
        let r0 = r.coeffs().first().copied().unwrap_or_default();
        let r1 = r.coeffs().get(1).copied().unwrap_or_default();
        let scale = r.max_abs();
        if scale == 0.0 || r1.primal.max_abs() <= tolerance().sqrt() * scale {
            return Err(FactorError::RemainderNotInvertible { step, remainder: r });
        }
        let inv = r1
            .inverse()
            .map_err(|_| FactorError::RemainderNotInvertible { step, remainder: r.clone() })?;
        let h = -(inv * r0);
        let (quot, _) = rest.div_rem(&DqPoly::linear(h))?;
        rest = quot;
        factors.push_front(h);
    }
    Ok(factors.into())
}

fn check_generic(c: &MotionPolynomial) -> Result<(), FactorError> {
    let g = c.primal_real_factor();
    if g.degree().unwrap_or(0) > 0 {
        return Err(FactorError::NonGeneric(g));
    }
    Ok(())
}

/// Factorization of a generic motion polynomial for one ordering of its
/// norm factors. `order[i]` indexes the sorted list from [`norm_factors`]
/// and selects the quadratic of the `i`-th linear factor.
pub fn factor_with_order(c: &MotionPolynomial, order: &[usize]) -> Result<Factorization, FactorError> {
    check_generic(c)?;
    let quadratics = norm_factors(c)?;
    factor_with_sorted_quadratics(c, &quadratics, order)
}

fn factor_with_sorted_quadratics(
    c: &MotionPolynomial,
    quadratics: &[QuadraticFactor],
    order: &[usize],
) -> Result<Factorization, FactorError> {
    if !is_permutation(order, quadratics.len()) {
        return Err(FactorError::InvalidOrder(order.to_vec()));
    }
    let ordered: Vec<QuadraticFactor> = order.iter().map(|&i| quadratics[i]).collect();
    let factors = factor_with_quadratics(c, &ordered)?;
    let f = Factorization {
        factors,
        norms: ordered,
        leading: c.leading(),
    };
    let residual = verify_factorization(c, &f);
    if residual > RECONSTRUCTION_TOLERANCE {
        return Err(FactorError::ResidualTooLarge(residual));
    }
    Ok(f)
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n
        && order.iter().all(|&i| {
            if i >= n || seen[i] {
                false
            } else {
                seen[i] = true;
                true
            }
        })
}

/// Outcome of sweeping all orderings of the norm factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationSet {
    pub norms: Vec<QuadraticFactor>,
    /// Distinct factorizations with the ordering that produced them.
    pub factorizations: Vec<(Vec<usize>, Factorization)>,
    /// Orderings that failed, with the reason.
    pub failures: Vec<(Vec<usize>, FactorError)>,
    /// Some norm factors coincide, so different orderings collapse.
    pub coincident: bool,
}

/// All factorizations of a generic motion polynomial, orderings visited in
/// lexicographic order and duplicates dropped.
pub fn all_factorizations(c: &MotionPolynomial) -> Result<FactorizationSet, FactorError> {
    check_generic(c)?;
    let norms = norm_factors(c)?;
    let coincident = norms
        .windows(2)
        .any(|w| w[0].approx_eq(&w[1], 1e-6));
    let mut order: Vec<usize> = (0..norms.len()).collect();
    let mut factorizations: Vec<(Vec<usize>, Factorization)> = Vec::new();
    let mut failures = Vec::new();
    loop {
        match factor_with_sorted_quadratics(c, &norms, &order) {
            Ok(f) => {
                if !factorizations.iter().any(|(_, g)| g.same_as(&f, 1e-8)) {
                    factorizations.push((order.clone(), f));
                }
            }
            Err(e) => failures.push((order.clone(), e)),
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    Ok(FactorizationSet {
        norms,
        factorizations,
        failures,
        coincident,
    })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot successor");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Largest coefficient deviation of `∏ (t - h_i)` from the monic form of
/// `c`, relative to its size, together with the deviation of each factor's
/// norm from its recorded quadratic.
pub fn verify_factorization(c: &MotionPolynomial, f: &Factorization) -> f64 {
    let monic = match c.make_monic() {
        Ok(m) => m.poly.into_poly(),
        Err(_) => return f64::INFINITY,
    };
    let product = product_of_linear(&f.factors);
    let scale = monic.max_abs().max(1.0);
    let coeff = product.distance(&monic) / scale;
    let norm_dev = f
        .factors
        .iter()
        .zip(&f.norms)
        .map(|(h, q)| {
            let n = linear_norm(*h);
            let s = 1.0 + q.a.abs().max(q.b.abs());
            (n.a - q.a).abs().max((n.b - q.b).abs()) / s
        })
        .fold(0.0_f64, f64::max);
    coeff.max(norm_dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Quaternion;

    fn dq(h: [f64; 8]) -> DualQuaternion {
        DualQuaternion::from_array(h)
    }

    fn bennett_c() -> MotionPolynomial {
        MotionPolynomial::new(vec![
            dq([1.0, -1.0, -1.0, -1.0, 1.0, 0.0, 0.0, 1.0]),
            dq([1.0, 0.0, -1.0, 0.0, 0.0, -1.0, 1.0, 1.0]),
            DualQuaternion::ONE,
        ])
        .unwrap()
    }

    #[test]
    fn permutations_are_lexicographic() {
        let mut p = vec![0, 1, 2];
        let mut seen = vec![p.clone()];
        while next_permutation(&mut p) {
            seen.push(p.clone());
        }
        assert_eq!(
            seen,
            vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]]
        );
    }

    #[test]
    fn linear_polynomial_factors_trivially() {
        let h = dq([0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        let c = MotionPolynomial::from_poly(DqPoly::linear(h)).unwrap();
        let f = factor_with_order(&c, &[0]).unwrap();
        assert!(f.factors[0].distance(h) < 1e-14);
    }

    #[test]
    fn bennett_orders() {
        let c = bennett_c();
        let f = factor_with_order(&c, &[0, 1]).unwrap();
        assert!(f.factors[0].distance(dq([0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, -1.0])) < 1e-12);
        assert!(f.factors[1].distance(dq([-1.0, 0.0, 0.0, -1.0, 0.0, 0.0, -2.0, 0.0])) < 1e-12);
        let g = factor_with_order(&c, &[1, 0]).unwrap();
        assert!(g.factors[0].distance(dq([-1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0])) < 1e-12);
        assert!(g.factors[1].distance(dq([0.0, 1.0, 1.0, 0.0, 0.0, 1.0, -1.0, 0.0])) < 1e-12);
        assert!(verify_factorization(&c, &f) < 1e-12);
    }

    #[test]
    fn bad_order_is_rejected() {
        assert!(matches!(factor_with_order(&bennett_c(), &[0, 0]), Err(FactorError::InvalidOrder(_))));
        assert!(matches!(factor_with_order(&bennett_c(), &[0]), Err(FactorError::InvalidOrder(_))));
    }

    #[test]
    fn non_generic_is_rejected() {
        // (t² + 1) + ε(j t + 2 i)
        let c = MotionPolynomial::new(vec![
            DualQuaternion::new(Quaternion::ONE, Quaternion::I.scale(2.0)),
            DualQuaternion::from_dual(Quaternion::J),
            DualQuaternion::ONE,
        ])
        .unwrap();
        assert!(matches!(factor_with_order(&c, &[0, 1]), Err(FactorError::NonGeneric(_))));
    }

    #[test]
    fn perturbed_factor_shows_in_residual() {
        let c = bennett_c();
        let mut f = factor_with_order(&c, &[0, 1]).unwrap();
        f.factors[0].dual.x += 1e-3;
        let r = verify_factorization(&c, &f);
        assert!(r > 1e-4 && r < 1e-2, "{r}");
        let one = MotionPolynomial::new(vec![DualQuaternion::ONE]).unwrap();
        assert_eq!(verify_factorization(&one, &Factorization::from_factors(vec![])), 0.0);
    }

    #[test]
    fn both_bennett_factorizations() {
        let set = all_factorizations(&bennett_c()).unwrap();
        assert_eq!(set.factorizations.len(), 2);
        assert!(set.failures.is_empty());
        assert!(!set.coincident);
    }
}
