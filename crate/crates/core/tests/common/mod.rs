#![allow(dead_code)]

use motion_factor::bennett::random_rotation;
use motion_factor::factor::linear_norm;
use motion_factor::mpoly::product_of_linear;
use motion_factor::{DualQuaternion, MotionPolynomial};
use rand::Rng;

pub fn dq(h: [f64; 8]) -> DualQuaternion {
    DualQuaternion::from_array(h)
}

/// Random rotation generator whose axis part is not tiny, so the norm
/// quadratic stays away from having a double real root.
pub fn rotation<R: Rng>(rng: &mut R) -> DualQuaternion {
    loop {
        let h = random_rotation(rng);
        let v = h.primal.vec();
        if (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() >= 0.3 {
            return h;
        }
    }
}

/// Product of `d` random rotation factors with pairwise well separated
/// norm quadratics.
pub fn generic_product<R: Rng>(rng: &mut R, d: usize) -> (Vec<DualQuaternion>, MotionPolynomial) {
    'outer: loop {
        let hs: Vec<DualQuaternion> = (0..d).map(|_| rotation(rng)).collect();
        let norms: Vec<_> = hs.iter().map(|h| linear_norm(*h)).collect();
        for i in 0..d {
            for j in 0..i {
                if norms[i].approx_eq(&norms[j], 0.1) {
                    continue 'outer;
                }
            }
        }
        let c = MotionPolynomial::from_poly(product_of_linear(&hs)).expect("products of rotations are motions");
        if c.is_generic() {
            return (hs, c);
        }
    }
}
