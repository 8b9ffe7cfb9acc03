//! C^1 spline spaces of degree p >= 3 on a mesh of [0, 1].
//!
//! Each interior node carries two shared degrees of freedom (value and
//! physical slope), each element carries p - 3 internal bubbles, and the two
//! boundary nodes carry a value/slope pair each, for N(p-1) + 2 degrees of
//! freedom in total. The local basis on the reference element [0, 1] is the
//! cubic Hermite quartet plus bubbles t^2 (1-t)^2 L_{j-1}(2t - 1) built on
//! Legendre polynomials L. Slope DOFs store physical derivatives, so the
//! slope basis functions scale with the element width.
//!
//! Numbering interleaves node pairs and element bubbles in ascending spatial
//! order, which keeps the assembled matrices banded with a width independent
//! of N.

use std::sync::Arc;

use thiserror::Error;

use crate::legendre;
use crate::mesh::Mesh;
use crate::quadrature::QuadRule;
use crate::scalar::Real;
use crate::linalg::{self, LinalgError};

#[derive(Debug, Error, PartialEq)]
pub enum SplineError {
    #[error("spline degree must be at least 3, got {0}")]
    DegreeTooLow(usize),
    #[error("coefficient vector length {got} does not match space dimension {want}")]
    CoeffLength { got: usize, want: usize },
    #[error("derivative order {0} not available; splines here are C^1 with piecewise second derivatives")]
    DerivOrder(usize),
    #[error("element index {index} out of range for {n_elements} elements")]
    ElementOutOfRange { index: usize, n_elements: usize },
    #[error("functions live on different spaces")]
    SpaceMismatch,
    #[error("bubble collocation system failed: {0}")]
    Collocation(#[from] LinalgError),
}

/// Boundary treatment of the scalar spline space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Value and slope pinned at both ends (4 constrained DOFs).
    Clamped,
    /// No essential constraints.
    Unconstrained,
}

#[derive(Debug)]
pub struct SplineSpace<T> {
    mesh: Mesh<T>,
    degree: usize,
    n_dofs: usize,
    dof_map: Vec<Vec<usize>>,
    bc_mask: Vec<usize>,
}

impl<T: Real> SplineSpace<T> {
    pub fn new(mesh: Mesh<T>, degree: usize, constraint: Constraint) -> Result<Self, SplineError> {
        if degree < 3 {
            return Err(SplineError::DegreeTooLow(degree));
        }
        let n = mesh.n_elements();
        let stride = degree - 1;
        let n_dofs = n * stride + 2;
        let n_bubbles = degree - 3;
        let mut dof_map = Vec::with_capacity(n);
        for e in 0..n {
            let left = e * stride;
            let right = (e + 1) * stride;
            let mut dofs = Vec::with_capacity(degree + 1);
            dofs.push(left);
            dofs.push(left + 1);
            dofs.push(right);
            dofs.push(right + 1);
            for b in 0..n_bubbles {
                dofs.push(left + 2 + b);
            }
            dof_map.push(dofs);
        }
        let bc_mask = match constraint {
            Constraint::Clamped => vec![0, 1, n_dofs - 2, n_dofs - 1],
            Constraint::Unconstrained => Vec::new(),
        };
        Ok(SplineSpace {
            mesh,
            degree,
            n_dofs,
            dof_map,
            bc_mask,
        })
    }

    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.degree + 1
    }

    /// Global DOF indices of element `e`, ordered like [`eval_basis`]:
    /// left value, left slope, right value, right slope, bubbles.
    pub fn dof_map(&self, e: usize) -> &[usize] {
        &self.dof_map[e]
    }

    /// Indices of essentially constrained DOFs (empty when unconstrained).
    pub fn bc_mask(&self) -> &[usize] {
        &self.bc_mask
    }

    /// Global index of the value DOF at mesh node `i`.
    pub fn node_value_dof(&self, i: usize) -> usize {
        i * (self.degree - 1)
    }

    /// Global index of the slope DOF at mesh node `i`.
    pub fn node_slope_dof(&self, i: usize) -> usize {
        i * (self.degree - 1) + 1
    }

    /// All p + 1 local basis functions of element `e` at reference
    /// coordinate `t` in [0, 1]: rows of (value, d/dx, d2/dx2) with the
    /// chain factors for the physical element applied.
    pub fn eval_basis(&self, e: usize, t: T) -> Result<Vec<[T; 3]>, SplineError> {
        let n = self.mesh.n_elements();
        if e >= n {
            return Err(SplineError::ElementOutOfRange {
                index: e,
                n_elements: n,
            });
        }
        let (_, _, h) = self.mesh.element(e);
        let mut out = Vec::with_capacity(self.degree + 1);
        let inv_h = T::one() / h;
        let inv_h2 = inv_h * inv_h;

        let one = T::one();
        let two = T::of(2.0);
        let three = T::of(3.0);
        let four = T::of(4.0);
        let six = T::of(6.0);
        let twelve = T::of(12.0);
        let t2 = t * t;
        let t3 = t2 * t;

        // Hermite quartet: value-type entries carry 1/h chain factors,
        // slope-type entries are scaled by h so the DOF is the physical slope.
        let h00 = [one - three * t2 + two * t3, six * (t2 - t), twelve * t - six];
        let h10 = [t - two * t2 + t3, one - four * t + three * t2, six * t - four];
        let h01 = [three * t2 - two * t3, six * (t - t2), six - twelve * t];
        let h11 = [t3 - t2, three * t2 - two * t, six * t - two];
        out.push([h00[0], h00[1] * inv_h, h00[2] * inv_h2]);
        out.push([h * h10[0], h10[1], h10[2] * inv_h]);
        out.push([h01[0], h01[1] * inv_h, h01[2] * inv_h2]);
        out.push([h * h11[0], h11[1], h11[2] * inv_h]);

        let n_bubbles = self.degree - 3;
        if n_bubbles > 0 {
            // g = t^2 (1-t)^2 vanishes to first order at both endpoints
            let u = t - t2;
            let g = u * u;
            let dg = two * u * (one - two * t);
            let ddg = two * (one - two * t) * (one - two * t) - four * u;
            let s = two * t - one;
            let leg = legendre::values_d1_d2(s, n_bubbles - 1);
            for row in leg.iter().take(n_bubbles) {
                let [p, dp, ddp] = *row;
                // d/dt of P(2t-1) brings factors of 2
                let val = g * p;
                let d1 = dg * p + g * two * dp;
                let d2 = ddg * p + two * dg * two * dp + g * four * ddp;
                out.push([val, d1 * inv_h, d2 * inv_h2]);
            }
        }
        Ok(out)
    }
}

/// A spline in a [`SplineSpace`], stored by global coefficients.
#[derive(Debug, Clone)]
pub struct DiscreteFunction<T> {
    space: Arc<SplineSpace<T>>,
    coeffs: Vec<T>,
}

impl<T: Real> DiscreteFunction<T> {
    pub fn new(space: Arc<SplineSpace<T>>, coeffs: Vec<T>) -> Result<Self, SplineError> {
        if coeffs.len() != space.n_dofs() {
            return Err(SplineError::CoeffLength {
                got: coeffs.len(),
                want: space.n_dofs(),
            });
        }
        Ok(DiscreteFunction { space, coeffs })
    }

    pub fn zero(space: Arc<SplineSpace<T>>) -> Self {
        let n = space.n_dofs();
        DiscreteFunction {
            space,
            coeffs: vec![T::zero(); n],
        }
    }

    pub fn space(&self) -> &Arc<SplineSpace<T>> {
        &self.space
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    /// Evaluate the function or one of its first two derivatives. Mesh nodes
    /// resolve to the element on their right; x = 1 uses the last element.
    pub fn eval(&self, x: T, deriv: usize) -> Result<T, SplineError> {
        if deriv > 2 {
            return Err(SplineError::DerivOrder(deriv));
        }
        let e = self.space.mesh().element_containing(x);
        Ok(self.eval_in_element(e, x, deriv))
    }

    /// Evaluate inside a known element (used by quadrature loops; `x` should
    /// lie in element `e`, although any value is accepted and extrapolates
    /// the local polynomial).
    pub fn eval_in_element(&self, e: usize, x: T, deriv: usize) -> T {
        debug_assert!(deriv <= 2);
        let (a, _, h) = self.space.mesh().element(e);
        let t = (x - a) / h;
        let basis = self
            .space
            .eval_basis(e, t)
            .expect("element index is in range");
        let mut acc = T::zero();
        for (row, &g) in basis.iter().zip(self.space.dof_map(e)) {
            acc += row[deriv] * self.coeffs[g];
        }
        acc
    }

    /// self += s * other (same space required).
    pub fn add_scaled(&mut self, other: &DiscreteFunction<T>, s: T) -> Result<(), SplineError> {
        if !Arc::ptr_eq(&self.space, &other.space) && self.space.mesh() != other.space.mesh() {
            return Err(SplineError::SpaceMismatch);
        }
        if self.coeffs.len() != other.coeffs.len() {
            return Err(SplineError::SpaceMismatch);
        }
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += s * *o;
        }
        Ok(())
    }
}

/// Interpolation data computed per element: the Legendre coefficients of the
/// projected second derivative.
struct LocalProjection<T> {
    coeffs: Vec<T>,
}

fn project_second_derivative<T: Real, F2: FnMut(T) -> T>(
    a: T,
    h: T,
    degree: usize,
    rule: &QuadRule<T>,
    d2w: &mut F2,
) -> LocalProjection<T> {
    let n_modes = degree - 1; // modes 0..=p-2
    let mut coeffs = vec![T::zero(); n_modes];
    let half = T::of(0.5);
    for (&xi, &wq) in rule.points.iter().zip(&rule.weights) {
        let x = a + h * half * (xi + T::one());
        let val = d2w(x);
        let p = legendre::values(xi, n_modes - 1);
        for (m, c) in coeffs.iter_mut().enumerate() {
            *c += wq * val * p[m];
        }
    }
    for (m, c) in coeffs.iter_mut().enumerate() {
        *c *= T::of_usize(2 * m + 1) * half;
    }
    LocalProjection { coeffs }
}

impl<T: Real> LocalProjection<T> {
    /// Value of the locally integrated interpolant at reference xi, given
    /// the left-endpoint data (w(a), w'(a)).
    fn value(&self, wa: T, dwa: T, h: T, xi: T) -> T {
        let half_h = h * T::of(0.5);
        let g = legendre::antiderivatives2(xi, self.coeffs.len() - 1);
        let series: T = self
            .coeffs
            .iter()
            .zip(&g)
            .map(|(&c, &gm)| c * gm)
            .sum();
        wa + dwa * half_h * (xi + T::one()) + half_h * half_h * series
    }

    /// Value and physical slope at the right endpoint (xi = 1); closed form
    /// because the integrated Legendre tails vanish there.
    fn right_endpoint(&self, wa: T, dwa: T, h: T) -> (T, T) {
        let c0 = self.coeffs[0];
        let c1 = if self.coeffs.len() > 1 {
            self.coeffs[1]
        } else {
            T::zero()
        };
        let two = T::of(2.0);
        let third = T::of(1.0 / 3.0);
        let quarter_h2 = h * h * T::of(0.25);
        let value = wa + dwa * h + quarter_h2 * (two * c0 - two * third * c1);
        let slope = dwa + h * c0;
        (value, slope)
    }
}

/// Interpolate a C^2 function into the space: node DOFs take the function's
/// value and slope, and each element's internal part reproduces the L2
/// projection of w'' onto polynomials of degree p - 2. For w in P_p this
/// reproduces w exactly (up to rounding).
pub fn interpolate<T, F0, F1, F2>(
    space: &Arc<SplineSpace<T>>,
    mut w: F0,
    mut dw: F1,
    mut d2w: F2,
) -> Result<DiscreteFunction<T>, SplineError>
where
    T: Real,
    F0: FnMut(T) -> T,
    F1: FnMut(T) -> T,
    F2: FnMut(T) -> T,
{
    let mesh = space.mesh();
    let p = space.degree();
    let mut coeffs = vec![T::zero(); space.n_dofs()];
    for (i, &x) in mesh.nodes().iter().enumerate() {
        coeffs[space.node_value_dof(i)] = w(x);
        coeffs[space.node_slope_dof(i)] = dw(x);
    }
    let n_bubbles = p - 3;
    if n_bubbles > 0 {
        let proj_rule = QuadRule::gauss_legendre(p + 3).expect("p + 3 <= 64 for supported degrees");
        let colloc = QuadRule::gauss_legendre(n_bubbles).expect("within range");
        let half = T::of(0.5);
        for e in 0..mesh.n_elements() {
            let (a, _, h) = mesh.element(e);
            let proj = project_second_derivative(a, h, p, &proj_rule, &mut d2w);
            let dofs = space.dof_map(e);
            let node_data = [coeffs[dofs[0]], coeffs[dofs[1]], coeffs[dofs[2]], coeffs[dofs[3]]];
            // collocate the bubble remainder at interior Gauss points
            let mut mat = vec![vec![T::zero(); n_bubbles]; n_bubbles];
            let mut rhs = vec![T::zero(); n_bubbles];
            for (c, &xi) in colloc.points.iter().enumerate() {
                let t = half * (xi + T::one());
                let basis = space.eval_basis(e, t)?;
                let target = proj.value(node_data[0], node_data[1], h, xi);
                let hermite: T = (0..4).map(|k| node_data[k] * basis[k][0]).sum();
                rhs[c] = target - hermite;
                for j in 0..n_bubbles {
                    mat[c][j] = basis[4 + j][0];
                }
            }
            let beta = linalg::solve_dense(mat, rhs)?;
            for (j, b) in beta.into_iter().enumerate() {
                coeffs[dofs[4 + j]] = b;
            }
        }
    }
    DiscreteFunction::new(Arc::clone(space), coeffs)
}

/// Per-element mismatch between the one-sided local interpolant (built only
/// from left-endpoint data and the second-derivative projection) and the
/// function at the element's right endpoint: rows of (value defect,
/// slope defect).
///
/// Exactly this mismatch vanishing is what makes the piecewise construction
/// glue into a C^1 spline, so it is worth measuring on its own.
pub fn endpoint_defects<T, F0, F1, F2>(
    space: &SplineSpace<T>,
    mut w: F0,
    mut dw: F1,
    mut d2w: F2,
) -> Vec<[T; 2]>
where
    T: Real,
    F0: FnMut(T) -> T,
    F1: FnMut(T) -> T,
    F2: FnMut(T) -> T,
{
    let mesh = space.mesh();
    let p = space.degree();
    let rule = QuadRule::gauss_legendre(p + 3).expect("p + 3 <= 64 for supported degrees");
    let mut out = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let (a, b, h) = mesh.element(e);
        let proj = project_second_derivative(a, h, p, &rule, &mut d2w);
        let (val, slope) = proj.right_endpoint(w(a), dw(a), h);
        out.push([val - w(b), slope - dw(b)]);
    }
    out
}
