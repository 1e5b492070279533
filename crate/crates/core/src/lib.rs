//! Bäcklund transforms of real doubly ruled quadrics, computed and checked.
//!
//! The crate evaluates the confocal families of one-sheeted hyperboloids and
//! hyperbolic paraboloids, the Ivory affinity between their members, and the
//! static identities that produce the Ivory rigid motion. On top of that it
//! rolls a quadric patch over an isometric seed, extracts the flat connection
//! form of the rolling, and integrates the Riccati transport that builds a
//! Bäcklund leaf. Every identity is checked numerically, with residuals
//! normalized by the magnitudes involved.
//!
//! A small separate module reconstructs Archimedes' balance factorization for
//! the parabola, the discrete counterpart of the factorization identity of the
//! tangency configuration.
//!
//! Module map:
//!
//! * [`confocal`]: parametrizations, jets, rulings, implicit forms, Ivory map.
//! * [`ivory`]: point pairs, Bianchi I residuals, the Ivory rigid motion.
//! * [`tangency`]: tangency solve, m-fields, reflection/factorization/integrability.
//! * [`rolling`]: rolling fields, connection forms, structure equations.
//! * [`bending`]: isometric bendings of the quadric as a ruled surface.
//! * [`backlund`]: Riccati transport, leaf assembly and leaf verification.
//! * [`archimedes`]: balance ledger, segment quadrature and centroid.
//! * [`run`]: configuration-driven drivers behind the `backlund` binary.

pub mod archimedes;
pub mod backlund;
pub mod bending;
pub mod confocal;
pub mod error;
pub mod ivory;
pub mod linalg;
pub mod motion;
pub mod ode;
pub mod rolling;
pub mod run;
pub mod sampling;
pub mod tangency;

pub use error::{Error, Result};
pub use motion::RigidMotion;

/// Column vectors in the ambient Euclidean space.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 real matrices.
pub type Mat3 = nalgebra::Matrix3<f64>;
