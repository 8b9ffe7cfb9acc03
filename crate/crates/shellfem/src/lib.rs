//! Mixed C^1-spline solver for the singularly perturbed fourth-order
//! two-point boundary value problem
//!
//! ```text
//!     eps^4 u'''' + 4 u = f   on (0, 1),    u, u' given at both ends,
//! ```
//!
//! discretized through the first-order splitting v = eps^(3/2) u'' and a
//! least-squares-type bilinear form whose natural norm is balanced: every
//! boundary-layer component of (u, v) has O(1) weight in it, so measured
//! errors actually see the layers. Shishkin meshes condensing near the
//! endpoints recover full convergence orders uniformly in eps.
//!
//! The crate is generic over the scalar type via [`scalar::Real`]; `f64`
//! aliases for the main types are exported at the root, and the bundled
//! `shellfem` binary drives convergence studies in `f64`.

pub mod analysis;
mod legendre;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod scalar;
pub mod spline;
pub mod study;
pub mod system;

pub use mesh::{Mesh, MeshError, MeshKind};
pub use quadrature::{QuadError, QuadRule};
pub use scalar::{EpsPowers, Real};
pub use spline::{Constraint, DiscreteFunction, SplineError, SplineSpace};

/// `f64` aliases for the concrete solver stack.
pub type Mesh64 = Mesh<f64>;
pub type QuadRule64 = QuadRule<f64>;
pub type SplineSpace64 = SplineSpace<f64>;
pub type DiscreteFunction64 = DiscreteFunction<f64>;
pub type ProblemConfig64 = system::ProblemConfig<f64>;
pub type DiscreteSolution64 = system::DiscreteSolution<f64>;
pub type ExactSolution64 = analysis::ExactSolution<f64>;
pub type ErrorReport64 = analysis::ErrorReport<f64>;
