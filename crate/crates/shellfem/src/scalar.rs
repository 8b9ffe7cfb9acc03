//! Scalar abstraction for the numerical core.
//!
//! Everything downstream (meshes, quadrature, splines, assembly) is generic
//! over [`Real`] so the same code runs in `f32` or `f64`. The convergence
//! studies and the CLI pin `f64`; see the aliases at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Floating-point scalar used by the solver core.
pub trait Real:
    Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless for `f64`, rounded for narrower types.
    fn of(x: f64) -> Self;

    fn of_usize(n: usize) -> Self;

    fn to_f64(self) -> f64;

    /// `self^(3/2)` for nonnegative `self`; the eps powers in the scheme
    /// are built from this to avoid `powf` in hot paths.
    fn sqrt32(self) -> Self {
        self * self.sqrt()
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }

    fn of_usize(n: usize) -> Self {
        n as f64
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }

    fn of_usize(n: usize) -> Self {
        n as f32
    }

    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

/// Powers of the perturbation parameter used throughout assembly and the
/// norm computations. Precomputed once per problem.
#[derive(Debug, Clone, Copy)]
pub struct EpsPowers<T> {
    pub eps: T,
    /// eps^(3/2)
    pub e32: T,
    /// eps^(5/2)
    pub e52: T,
    /// eps^2
    pub e2: T,
    /// eps^3
    pub e3: T,
    /// eps^4
    pub e4: T,
}

impl<T: Real> EpsPowers<T> {
    pub fn new(eps: T) -> Self {
        let e32 = eps.sqrt32();
        EpsPowers {
            eps,
            e32,
            e52: eps * e32,
            e2: eps * eps,
            e3: eps * eps * eps,
            e4: eps * eps * eps * eps,
        }
    }
}
