//! Reference solutions, error norms, and convergence-order estimation.
//!
//! The characteristic roots of eps^4 r^4 + 4 = 0 are (+-1 +- i)/eps, so the
//! homogeneous solutions are products of exponentials and oscillations on
//! the layer scale eps. Two reference solutions are provided: a manufactured
//! one with a known closed form, and a semi-analytic oracle for polynomial
//! plus exponential loads built from the decaying fundamental system.

use std::sync::Arc;

use num_complex::Complex;
use thiserror::Error;

use crate::linalg::{self, LinalgError};
use crate::quadrature::{QuadError, QuadRule};
use crate::scalar::{EpsPowers, Real};
use crate::spline::DiscreteFunction;
use crate::system::BoundaryData;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("order estimation needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("order estimation needs positive finite errors, got {0}")]
    NonPositiveError(f64),
    #[error("mesh sizes must be strictly increasing")]
    NotIncreasing,
    #[error("got {ns} mesh sizes but {errors} errors")]
    LengthMismatch { ns: usize, errors: usize },
    #[error("polynomial load must have degree at most 3, got {0}")]
    PolyDegreeTooHigh(usize),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("boundary coefficient solve failed: {0}")]
    Boundary(#[from] LinalgError),
    #[error("discrete functions live on different meshes")]
    MeshMismatch,
}

/// A known solution of eps^4 u'''' + 4 u = f together with its derivatives
/// up to fourth order; v = eps^(3/2) u'' is derived from it.
#[derive(Clone)]
pub struct ExactSolution<T> {
    pw: EpsPowers<T>,
    u_deriv: Arc<dyn Fn(usize, T) -> T + Send + Sync>,
    load: Arc<dyn Fn(T) -> T + Send + Sync>,
}

impl<T: Real> ExactSolution<T> {
    /// `u_deriv(k, x)` must return the k-th derivative of u at x for
    /// k = 0..=4, and `load` the right-hand side f.
    pub fn new(
        eps: T,
        u_deriv: Arc<dyn Fn(usize, T) -> T + Send + Sync>,
        load: Arc<dyn Fn(T) -> T + Send + Sync>,
    ) -> Self {
        ExactSolution {
            pw: EpsPowers::new(eps),
            u_deriv,
            load,
        }
    }

    pub fn eps(&self) -> T {
        self.pw.eps
    }

    pub fn u(&self, x: T) -> T {
        (self.u_deriv)(0, x)
    }

    pub fn du(&self, x: T) -> T {
        (self.u_deriv)(1, x)
    }

    pub fn d2u(&self, x: T) -> T {
        (self.u_deriv)(2, x)
    }

    pub fn d3u(&self, x: T) -> T {
        (self.u_deriv)(3, x)
    }

    pub fn d4u(&self, x: T) -> T {
        (self.u_deriv)(4, x)
    }

    pub fn v(&self, x: T) -> T {
        self.pw.e32 * self.d2u(x)
    }

    pub fn dv(&self, x: T) -> T {
        self.pw.e32 * self.d3u(x)
    }

    pub fn d2v(&self, x: T) -> T {
        self.pw.e32 * self.d4u(x)
    }

    pub fn f(&self, x: T) -> T {
        (self.load)(x)
    }

    pub fn load_fn(&self) -> Arc<dyn Fn(T) -> T + Send + Sync> {
        Arc::clone(&self.load)
    }

    pub fn bc(&self) -> BoundaryData<T> {
        BoundaryData {
            u0: self.u(T::zero()),
            du0: self.du(T::zero()),
            u1: self.u(T::one()),
            du1: self.du(T::one()),
        }
    }

    /// Largest |eps^4 u'''' + 4u - f| over n uniformly spaced sample points.
    pub fn max_ode_residual(&self, n: usize) -> T {
        let four = T::of(4.0);
        let mut worst = T::zero();
        for i in 0..n {
            let x = T::of_usize(i) / T::of_usize(n - 1);
            let r = self.pw.e4 * self.d4u(x) + four * self.u(x) - self.f(x);
            worst = worst.max(r.abs());
        }
        worst
    }
}

/// Manufactured solution u = Re exp(-(1+i)x/eps) + e^x. The layer part
/// solves the homogeneous equation exactly, so f = (4 + eps^4) e^x.
pub fn manufactured_solution<T: Real>(eps: T) -> ExactSolution<T> {
    let a = Complex::new(-T::one(), -T::one()) / eps;
    let u_deriv = move |k: usize, x: T| {
        let layer = ((a * x).exp() * a.powu(k as u32)).re;
        layer + x.exp()
    };
    let e4 = eps * eps * eps * eps;
    let load = move |x: T| (T::of(4.0) + e4) * x.exp();
    ExactSolution::new(eps, Arc::new(u_deriv), Arc::new(load))
}

/// The bare layer function u = Re exp(-(1+i)x/eps), a homogeneous solution.
/// Useful for measuring how norms of the layer itself scale with eps.
pub fn boundary_layer<T: Real>(eps: T) -> ExactSolution<T> {
    let a = Complex::new(-T::one(), -T::one()) / eps;
    let u_deriv = move |k: usize, x: T| ((a * x).exp() * a.powu(k as u32)).re;
    ExactSolution::new(eps, Arc::new(u_deriv), Arc::new(|_| T::zero()))
}

/// Load of the form f(x) = poly(x) + exp_coeff * e^x with deg poly <= 3.
#[derive(Debug, Clone)]
pub struct PolyExpLoad<T> {
    /// coefficients in ascending powers: poly[k] multiplies x^k
    pub poly: Vec<T>,
    pub exp_coeff: T,
}

impl<T: Real> PolyExpLoad<T> {
    pub fn constant(c: T) -> Self {
        PolyExpLoad {
            poly: vec![c],
            exp_coeff: T::zero(),
        }
    }
}

/// Exact solution for a polynomial-plus-exponential load with arbitrary
/// Dirichlet data, via the decaying fundamental system.
///
/// A particular solution is poly/4 + exp_coeff/(4 + eps^4) e^x; a cubic is
/// annihilated by the fourth derivative and e^x maps to (4 + eps^4) e^x.
/// The homogeneous correction uses the basis
///
///   Re E_L, Im E_L with E_L = exp(-(1-i)x/eps), decaying from x = 0,
///   Re E_R, Im E_R with E_R = exp(-(1-i)(1-x)/eps), decaying from x = 1,
///
/// whose coefficients solve a well-conditioned 4x4 system because each pair
/// is negligibly small at the opposite endpoint.
pub fn analytic_clamped_solution<T: Real>(
    eps: T,
    load: PolyExpLoad<T>,
    bc: BoundaryData<T>,
) -> Result<ExactSolution<T>, AnalysisError> {
    if load.poly.len() > 4 {
        return Err(AnalysisError::PolyDegreeTooHigh(load.poly.len() - 1));
    }
    let e4 = eps * eps * eps * eps;
    let four = T::of(4.0);
    let exp_amp = load.exp_coeff / (four + e4);
    let poly = load.poly.clone();

    let part_deriv = move |k: usize, x: T| {
        let mut val = exp_amp * x.exp();
        for (j, &c) in poly.iter().enumerate() {
            if j >= k {
                let mut fac = T::one();
                for m in 0..k {
                    fac *= T::of_usize(j - m);
                }
                val += c / four * fac * x.powi((j - k) as i32);
            }
        }
        val
    };

    let al = Complex::new(-T::one(), T::one()) / eps;
    let ar = Complex::new(T::one(), -T::one()) / eps;
    let homog = move |k: usize, x: T| -> [T; 4] {
        let el = (al * x).exp() * al.powu(k as u32);
        let er = (ar * (x - T::one())).exp() * ar.powu(k as u32);
        [el.re, el.im, er.re, er.im]
    };

    let mut rows = Vec::with_capacity(4);
    let mut rhs = Vec::with_capacity(4);
    for (k, x, data) in [
        (0, T::zero(), bc.u0),
        (1, T::zero(), bc.du0),
        (0, T::one(), bc.u1),
        (1, T::one(), bc.du1),
    ] {
        rows.push(homog(k, x).to_vec());
        rhs.push(data - part_deriv(k, x));
    }
    let c = linalg::solve_dense(rows, rhs)?;
    let c: [T; 4] = [c[0], c[1], c[2], c[3]];

    let u_deriv = move |k: usize, x: T| {
        let h = homog(k, x);
        let mut val = part_deriv(k, x);
        for i in 0..4 {
            val += c[i] * h[i];
        }
        val
    };
    let poly = load.poly;
    let exp_coeff = load.exp_coeff;
    let load_fn = move |x: T| {
        let mut val = exp_coeff * x.exp();
        for (j, &cj) in poly.iter().enumerate() {
            val += cj * x.powi(j as i32);
        }
        val
    };
    Ok(ExactSolution::new(
        eps,
        Arc::new(u_deriv),
        Arc::new(load_fn),
    ))
}

/// Error norms of a discrete pair against a reference solution. All L2
/// integrals use a Gauss rule with degree + 6 points per mesh element.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport<T> {
    /// ||u - u_h||
    pub err_u_l2: T,
    /// eps^(3/2) ||(u - u_h)''||
    pub err_u_dd: T,
    /// ||v - v_h||
    pub err_v_l2: T,
    /// eps^2 ||(v - v_h)''||
    pub err_v_dd: T,
    /// root sum of squares of the four components above
    pub balanced: T,
    /// standard energy norm: sqrt(eps^4 ||(u - u_h)''||^2 + 4 ||u - u_h||^2)
    pub energy_standard: T,
}

pub fn error_norms<T: Real>(
    u_h: &DiscreteFunction<T>,
    v_h: &DiscreteFunction<T>,
    exact: &ExactSolution<T>,
) -> Result<ErrorReport<T>, AnalysisError> {
    let mesh = u_h.space().mesh();
    if v_h.space().mesh() != mesh {
        return Err(AnalysisError::MeshMismatch);
    }
    let p = u_h.space().degree().max(v_h.space().degree());
    let rule: QuadRule<T> = QuadRule::gauss_legendre(p + 6)?;
    let pw = EpsPowers::new(exact.eps());

    let mut u_sq = T::zero();
    let mut ddu_sq = T::zero();
    let mut v_sq = T::zero();
    let mut ddv_sq = T::zero();
    for e in 0..mesh.n_elements() {
        let (a, b, _) = mesh.element(e);
        for (x, w) in rule.mapped(a, b) {
            let du = exact.u(x) - u_h.eval_in_element(e, x, 0);
            let ddu = exact.d2u(x) - u_h.eval_in_element(e, x, 2);
            let dv = exact.v(x) - v_h.eval_in_element(e, x, 0);
            let ddv = exact.d2v(x) - v_h.eval_in_element(e, x, 2);
            u_sq += w * du * du;
            ddu_sq += w * ddu * ddu;
            v_sq += w * dv * dv;
            ddv_sq += w * ddv * ddv;
        }
    }
    let err_u_l2 = u_sq.sqrt();
    let err_u_dd = (pw.e3 * ddu_sq).sqrt();
    let err_v_l2 = v_sq.sqrt();
    let err_v_dd = (pw.e4 * ddv_sq).sqrt();
    let balanced = (u_sq + pw.e3 * ddu_sq + v_sq + pw.e4 * ddv_sq).sqrt();
    let energy_standard = (pw.e4 * ddu_sq + T::of(4.0) * u_sq).sqrt();
    Ok(ErrorReport {
        err_u_l2,
        err_u_dd,
        err_v_l2,
        err_v_dd,
        balanced,
        energy_standard,
    })
}

/// Convergence model for order estimation: errors behave like
/// (N^-1 ln N)^k or N^-k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateModel {
    NLogN,
    N,
}

impl RateModel {
    fn g(self, n: usize) -> f64 {
        match self {
            RateModel::NLogN => (n as f64).ln() / n as f64,
            RateModel::N => 1.0 / n as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrderEstimate<T> {
    /// order from each consecutive pair of mesh sizes
    pub per_step: Vec<T>,
    /// least-squares slope of ln(error) against ln(g(N))
    pub slope: T,
}

pub fn estimate_orders<T: Real>(
    ns: &[usize],
    errors: &[T],
    model: RateModel,
) -> Result<OrderEstimate<T>, AnalysisError> {
    if ns.len() != errors.len() {
        return Err(AnalysisError::LengthMismatch {
            ns: ns.len(),
            errors: errors.len(),
        });
    }
    if ns.len() < 3 {
        return Err(AnalysisError::TooFewSamples(ns.len()));
    }
    if !ns.windows(2).all(|w| w[0] < w[1]) {
        return Err(AnalysisError::NotIncreasing);
    }
    for &e in errors {
        if e <= T::zero() || !e.is_finite() {
            return Err(AnalysisError::NonPositiveError(e.to_f64()));
        }
    }

    let gs: Vec<T> = ns.iter().map(|&n| T::of(model.g(n))).collect();
    let per_step = errors
        .windows(2)
        .zip(gs.windows(2))
        .map(|(e, g)| (e[0] / e[1]).ln() / (g[0] / g[1]).ln())
        .collect();

    let xs: Vec<T> = gs.iter().map(|g| g.ln()).collect();
    let ys: Vec<T> = errors.iter().map(|e| e.ln()).collect();
    let n = T::of_usize(ns.len());
    let xbar = xs.iter().copied().sum::<T>() / n;
    let ybar = ys.iter().copied().sum::<T>() / n;
    let mut num = T::zero();
    let mut den = T::zero();
    for (x, y) in xs.iter().zip(&ys) {
        num += (*x - xbar) * (*y - ybar);
        den += (*x - xbar) * (*x - xbar);
    }
    Ok(OrderEstimate {
        per_step,
        slope: num / den,
    })
}
