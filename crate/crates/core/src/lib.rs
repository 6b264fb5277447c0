//! Factorization of rational motions given by motion polynomials over dual
//! quaternions, and synthesis of over-constrained linkages from the
//! factorizations.

pub mod algebra;
pub mod bennett;
pub mod factor;
pub mod linkage;
pub mod mpoly;
pub mod rpoly;
pub mod special;
pub mod tolerance;

pub use algebra::{DualQuaternion, GeneratorKind, Line, Quaternion};
pub use factor::{all_factorizations, factor_with_order, verify_factorization, Factorization};
pub use linkage::{Joint, Linkage, LoopEntry};
pub use mpoly::{DqPoly, MotionPolynomial, Param};
pub use rpoly::{QuadraticFactor, RealPoly};
