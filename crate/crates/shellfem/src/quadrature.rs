//! Gauss-Legendre quadrature on [-1, 1].
//!
//! Nodes are found by Newton iteration on P_n starting from the Chebyshev
//! angle guesses; weights use w = 2 / ((1 - x^2) P_n'(x)^2). Rules up to
//! n = 64 are supported, which is far beyond what the assembly needs, and
//! the `f64` rules are cached behind a one-time initialization guard.

use std::sync::OnceLock;

use thiserror::Error;

use crate::scalar::Real;

pub const MAX_POINTS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuadError {
    #[error("quadrature order {0} out of range 1..={MAX_POINTS}")]
    OrderOutOfRange(usize),
}

/// A quadrature rule on the reference interval [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> QuadRule<T> {
    /// Gauss-Legendre rule with `n` points, exact for polynomials of
    /// degree 2n - 1.
    pub fn gauss_legendre(n: usize) -> Result<Self, QuadError> {
        if n == 0 || n > MAX_POINTS {
            return Err(QuadError::OrderOutOfRange(n));
        }
        let mut points = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let tol = T::epsilon() * T::of(4.0);
        for i in 1..=n.div_ceil(2) {
            // Chebyshev-angle initial guess for the i-th root (descending)
            let theta = (T::of_usize(4 * i - 1) / T::of_usize(4 * n + 2)) * T::of(std::f64::consts::PI);
            let mut z = theta.cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= tol {
                    let (_, d) = legendre_with_deriv(n, z);
                    dp = d;
                    break;
                }
            }
            if 2 * i - 1 == n {
                // middle root of an odd rule is exactly zero
                z = T::zero();
                let (_, d) = legendre_with_deriv(n, z);
                dp = d;
            }
            let w = (T::one() + T::one()) / ((T::one() - z * z) * dp * dp);
            points[i - 1] = -z;
            points[n - i] = z;
            weights[i - 1] = w;
            weights[n - i] = w;
        }
        Ok(QuadRule { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Iterate over (point, weight) pairs mapped to the element [a, b].
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::of(0.5);
        let mid = (a + b) * T::of(0.5);
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }

    /// Integrate `f` over [a, b].
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// (P_n(x), P_n'(x)) by the standard recurrence; the derivative uses
/// n (x P_n - P_{n-1}) / (x^2 - 1), safe here because Newton iterates
/// stay strictly inside (-1, 1).
fn legendre_with_deriv<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for m in 1..n {
        let p2 = (T::of_usize(2 * m + 1) * x * p1 - T::of_usize(m) * p0) / T::of_usize(m + 1);
        p0 = p1;
        p1 = p2;
    }
    let d = T::of_usize(n) * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Cached `f64` rules, built on first use and shared thereafter.
pub fn cached(n: usize) -> Result<&'static QuadRule<f64>, QuadError> {
    static CACHE: OnceLock<Vec<OnceLock<QuadRule<f64>>>> = OnceLock::new();
    if n == 0 || n > MAX_POINTS {
        return Err(QuadError::OrderOutOfRange(n));
    }
    let slots = CACHE.get_or_init(|| (0..MAX_POINTS).map(|_| OnceLock::new()).collect());
    Ok(slots[n - 1].get_or_init(|| {
        QuadRule::gauss_legendre(n).expect("order checked above")
    }))
}
