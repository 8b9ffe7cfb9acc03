//! Assembly and solution of the mixed scheme.
//!
//! With v = eps^(3/2) u'' as an independent unknown, the weighted weak form
//!
//!   B((u,v),(u*,v*)) = lambda <v - eps^(3/2) u'', v* - eps^(3/2) u*''>
//!                    + <eps^(5/2) v'' + 4u, eps^(3/2) v*'' + 4u*>
//!
//! is assembled exactly as written (no integration by parts), over the
//! clamped u-space and the unconstrained v-space on the same mesh. The
//! right-hand side is F(u*,v*) = <f, eps^(3/2) v*'' + 4u*>. For lambda >= 3
//! the form is coercive with constant 1 in the balanced norm
//!
//!   |||(u,v)|||^2 = ||u||^2 + eps^3 ||u''||^2 + ||v||^2 + eps^4 ||v''||^2,
//!
//! and continuous with constant 2 lambda + 25 over clamped pairs.
//!
//! Unknowns interleave u and v per spatial DOF slot, so the monolithic
//! matrix is banded with width independent of N; it is factored by banded
//! LU with partial pivoting. Inhomogeneous boundary data enters through a
//! lifting spline supported on the boundary DOFs.

use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{self, BandMatrix, LinalgError};
use crate::mesh::Mesh;
use crate::quadrature::{QuadError, QuadRule};
use crate::scalar::{EpsPowers, Real};
use crate::spline::{Constraint, DiscreteFunction, SplineError, SplineSpace};

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("stabilization parameter lambda must be at least 3, got {0}")]
    LambdaTooSmall(f64),
    #[error("perturbation parameter must lie in (0, 1], got {0}")]
    EpsOutOfRange(f64),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("linear solve failed: {0}")]
    Solve(#[from] LinalgError),
    #[error("discrete functions live on different meshes")]
    MeshMismatch,
}

/// Dirichlet data for u at the two endpoints; v carries no essential
/// conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData<T> {
    pub u0: T,
    pub du0: T,
    pub u1: T,
    pub du1: T,
}

impl<T: Real> BoundaryData<T> {
    pub fn homogeneous() -> Self {
        BoundaryData {
            u0: T::zero(),
            du0: T::zero(),
            u1: T::zero(),
            du1: T::zero(),
        }
    }
}

/// Everything needed to pose one discrete problem.
#[derive(Clone)]
pub struct ProblemConfig<T> {
    pub mesh: Mesh<T>,
    pub degree: usize,
    pub eps: T,
    pub lambda: T,
    pub load: Arc<dyn Fn(T) -> T + Send + Sync>,
    pub bc: BoundaryData<T>,
    /// Extra Gauss points for the load term on top of the p + 2 matrix rule.
    pub load_quad_extra: usize,
}

impl<T: Real> ProblemConfig<T> {
    pub fn new(
        mesh: Mesh<T>,
        degree: usize,
        eps: T,
        lambda: T,
        load: Arc<dyn Fn(T) -> T + Send + Sync>,
        bc: BoundaryData<T>,
    ) -> Result<Self, SystemError> {
        if eps <= T::zero() || eps > T::one() || !eps.is_finite() {
            return Err(SystemError::EpsOutOfRange(eps.to_f64()));
        }
        if lambda < T::of(3.0) || !lambda.is_finite() {
            return Err(SystemError::LambdaTooSmall(lambda.to_f64()));
        }
        Ok(ProblemConfig {
            mesh,
            degree,
            eps,
            lambda,
            load,
            bc,
            load_quad_extra: 4,
        })
    }

    pub fn with_load_quad_extra(mut self, extra: usize) -> Self {
        self.load_quad_extra = extra;
        self
    }
}

/// Assembled monolithic system plus the bookkeeping to scatter solutions
/// back into spline coefficients.
pub struct BandedSystem<T> {
    matrix: BandMatrix<T>,
    rhs: Vec<T>,
    u_space: Arc<SplineSpace<T>>,
    v_space: Arc<SplineSpace<T>>,
    /// combined index of each free u DOF (None on the constrained mask)
    u_index: Vec<Option<usize>>,
    /// combined index of each v DOF
    v_index: Vec<usize>,
    bandwidth: usize,
}

impl<T: Real> BandedSystem<T> {
    pub fn n_unknowns(&self) -> usize {
        self.rhs.len()
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn u_space(&self) -> &Arc<SplineSpace<T>> {
        &self.u_space
    }

    pub fn v_space(&self) -> &Arc<SplineSpace<T>> {
        &self.v_space
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats<T> {
    /// Relative algebraic residual ||A x - b|| / ||b|| of the banded solve.
    pub residual: T,
    /// Pivot-ratio conditioning proxy from the elimination.
    pub cond_est: T,
    pub n_unknowns: usize,
    pub bandwidth: usize,
}

#[derive(Debug, Clone)]
pub struct DiscreteSolution<T> {
    pub u_h: DiscreteFunction<T>,
    pub v_h: DiscreteFunction<T>,
    pub stats: SolveStats<T>,
}

/// The lifting spline: zero except for the four boundary DOFs of the
/// u-space, which carry the Dirichlet data exactly.
pub fn lifting<T: Real>(
    u_space: &Arc<SplineSpace<T>>,
    bc: &BoundaryData<T>,
) -> DiscreteFunction<T> {
    let mut lift = DiscreteFunction::zero(Arc::clone(u_space));
    let n = u_space.n_dofs();
    lift.coeffs_mut()[0] = bc.u0;
    lift.coeffs_mut()[1] = bc.du0;
    lift.coeffs_mut()[n - 2] = bc.u1;
    lift.coeffs_mut()[n - 1] = bc.du1;
    lift
}

pub fn assemble<T: Real>(
    config: &ProblemConfig<T>,
) -> Result<(BandedSystem<T>, DiscreteFunction<T>), SystemError> {
    let u_space = Arc::new(SplineSpace::new(
        config.mesh.clone(),
        config.degree,
        Constraint::Clamped,
    )?);
    let v_space = Arc::new(SplineSpace::new(
        config.mesh.clone(),
        config.degree,
        Constraint::Unconstrained,
    )?);
    let n_dofs = u_space.n_dofs();
    let mut constrained = vec![false; n_dofs];
    for &d in u_space.bc_mask() {
        constrained[d] = true;
    }

    // interleave u and v unknowns in ascending slot order
    let mut u_index = vec![None; n_dofs];
    let mut v_index = vec![0usize; n_dofs];
    let mut next = 0usize;
    for s in 0..n_dofs {
        if !constrained[s] {
            u_index[s] = Some(next);
            next += 1;
        }
        v_index[s] = next;
        next += 1;
    }
    let n_sys = next;

    let n_el = config.mesh.n_elements();
    let mut bandwidth = 0usize;
    for e in 0..n_el {
        let mut lo = usize::MAX;
        let mut hi = 0usize;
        for &g in u_space.dof_map(e) {
            if let Some(i) = u_index[g] {
                lo = lo.min(i);
                hi = hi.max(i);
            }
            let i = v_index[g];
            lo = lo.min(i);
            hi = hi.max(i);
        }
        bandwidth = bandwidth.max(hi - lo);
    }

    let lift = lifting(&u_space, &config.bc);
    let lift_coeffs = lift.coeffs().to_vec();

    let pw = EpsPowers::new(config.eps);
    let lam = config.lambda;
    let four = T::of(4.0);
    let sixteen = T::of(16.0);
    let half = T::of(0.5);

    let p = config.degree;
    let n_local = p + 1;
    let rule: QuadRule<T> = QuadRule::gauss_legendre(p + 2)?;
    let load_rule: QuadRule<T> = QuadRule::gauss_legendre(p + 2 + config.load_quad_extra)?;

    let mut matrix = BandMatrix::new(n_sys, bandwidth, bandwidth);
    let mut rhs = vec![T::zero(); n_sys];

    // local blocks: uu, uv (u test row, v trial col), vu, vv
    let mut uu = vec![T::zero(); n_local * n_local];
    let mut uv = vec![T::zero(); n_local * n_local];
    let mut vu = vec![T::zero(); n_local * n_local];
    let mut vv = vec![T::zero(); n_local * n_local];

    for e in 0..n_el {
        let (a, _, h) = config.mesh.element(e);
        let jac = h * half;
        for x in [&mut uu, &mut uv, &mut vu, &mut vv] {
            x.iter_mut().for_each(|v| *v = T::zero());
        }
        for (&xi, &wq) in rule.points.iter().zip(&rule.weights) {
            let t = half * (xi + T::one());
            let basis = u_space.eval_basis(e, t)?;
            let w = wq * jac;
            for (i, bi) in basis.iter().enumerate() {
                let vi = bi[0];
                let di = bi[2];
                for (j, bj) in basis.iter().enumerate() {
                    let vj = bj[0];
                    let dj = bj[2];
                    let k = i * n_local + j;
                    // trial (u_j, v_j), test (u_i, v_i); defining form expanded
                    uu[k] += w * (lam * pw.e3 * di * dj + sixteen * vi * vj);
                    uv[k] += w * (four * pw.e52 * dj * vi - lam * pw.e32 * vj * di);
                    vu[k] += w * (four * pw.e32 * vj * di - lam * pw.e32 * dj * vi);
                    vv[k] += w * (lam * vi * vj + pw.e4 * di * dj);
                }
            }
        }

        let dofs = u_space.dof_map(e);
        for (i, &gi) in dofs.iter().enumerate() {
            let row_u = u_index[gi];
            let row_v = v_index[gi];
            for (j, &gj) in dofs.iter().enumerate() {
                let k = i * n_local + j;
                match u_index[gj] {
                    Some(col_u) => {
                        if let Some(ru) = row_u {
                            matrix.add(ru, col_u, uu[k]);
                        }
                        matrix.add(row_v, col_u, vu[k]);
                    }
                    None => {
                        // trial DOF carries lifting data: move to the rhs
                        let g = lift_coeffs[gj];
                        if g != T::zero() {
                            if let Some(ru) = row_u {
                                rhs[ru] -= uu[k] * g;
                            }
                            rhs[row_v] -= vu[k] * g;
                        }
                    }
                }
                let col_v = v_index[gj];
                if let Some(ru) = row_u {
                    matrix.add(ru, col_v, uv[k]);
                }
                matrix.add(row_v, col_v, vv[k]);
            }
        }

        // load functional F(u*, v*) = <f, eps^(3/2) v*'' + 4 u*>
        for (&xi, &wq) in load_rule.points.iter().zip(&load_rule.weights) {
            let t = half * (xi + T::one());
            let x = a + h * t;
            let basis = u_space.eval_basis(e, t)?;
            let w = wq * jac;
            let fx = (config.load)(x);
            for i in 0..n_local {
                let gi = dofs[i];
                if let Some(ru) = u_index[gi] {
                    rhs[ru] += w * four * fx * basis[i][0];
                }
                rhs[v_index[gi]] += w * pw.e32 * fx * basis[i][2];
            }
        }
    }

    Ok((
        BandedSystem {
            matrix,
            rhs,
            u_space,
            v_space,
            u_index,
            v_index,
            bandwidth,
        },
        lift,
    ))
}

pub fn solve<T: Real>(
    system: &BandedSystem<T>,
    lift: &DiscreteFunction<T>,
) -> Result<DiscreteSolution<T>, SystemError> {
    // Symmetric Jacobi equilibration. The unknowns mix value, slope, and
    // bubble coefficients whose natural scales differ by powers of h and
    // eps; scaling to a unit diagonal keeps the pivot spread (and the
    // round-off floor of the factorization) independent of that spread.
    let a = &system.matrix;
    let n = a.order();
    let (kl, ku) = a.bandwidths();
    let mut scale = vec![T::one(); n];
    for (i, s) in scale.iter_mut().enumerate() {
        let d = a.get(i, i).abs();
        if d.is_finite() && d > T::zero() {
            *s = T::one() / d.sqrt();
        }
    }
    let mut scaled = BandMatrix::new(n, kl, ku);
    for i in 0..n {
        let lo = i.saturating_sub(kl);
        let hi = (i + ku).min(n - 1);
        for j in lo..=hi {
            let v = a.get(i, j);
            if v != T::zero() {
                scaled.add(i, j, v * scale[i] * scale[j]);
            }
        }
    }
    let scaled_rhs: Vec<T> = system.rhs.iter().zip(&scale).map(|(b, s)| *b * *s).collect();
    let (y, band_stats) = linalg::solve_banded(&scaled, &scaled_rhs)?;
    let x: Vec<T> = y.iter().zip(&scale).map(|(yi, s)| *yi * *s).collect();

    let ax = system.matrix.matvec(&x);
    let mut rr = T::zero();
    let mut bb = T::zero();
    for (ai, bi) in ax.iter().zip(&system.rhs) {
        let d = *ai - *bi;
        rr += d * d;
        bb += *bi * *bi;
    }
    let residual = if bb > T::zero() {
        (rr / bb).sqrt()
    } else {
        rr.sqrt()
    };

    let mut u = DiscreteFunction::zero(Arc::clone(&system.u_space));
    for (s, idx) in system.u_index.iter().enumerate() {
        if let Some(i) = idx {
            u.coeffs_mut()[s] = x[*i];
        }
    }
    u.add_scaled(lift, T::one())?;
    let mut v = DiscreteFunction::zero(Arc::clone(&system.v_space));
    for (s, &i) in system.v_index.iter().enumerate() {
        v.coeffs_mut()[s] = x[i];
    }

    Ok(DiscreteSolution {
        u_h: u,
        v_h: v,
        stats: SolveStats {
            residual,
            cond_est: band_stats.cond_est,
            n_unknowns: system.n_unknowns(),
            bandwidth: system.bandwidth,
        },
    })
}

pub fn solve_bvp<T: Real>(config: &ProblemConfig<T>) -> Result<DiscreteSolution<T>, SystemError> {
    let (system, lift) = assemble(config)?;
    solve(&system, &lift)
}

/// The bilinear form B evaluated by element-wise Gauss quadrature, exact for
/// the piecewise-polynomial integrands involved. All four functions must
/// live on the same mesh.
pub fn bilinear_form<T: Real>(
    trial: (&DiscreteFunction<T>, &DiscreteFunction<T>),
    test: (&DiscreteFunction<T>, &DiscreteFunction<T>),
    eps: T,
    lambda: T,
) -> Result<T, SystemError> {
    let mesh = trial.0.space().mesh();
    for f in [trial.1, test.0, test.1] {
        if f.space().mesh() != mesh {
            return Err(SystemError::MeshMismatch);
        }
    }
    let p = [trial.0, trial.1, test.0, test.1]
        .iter()
        .map(|f| f.space().degree())
        .max()
        .unwrap();
    let rule: QuadRule<T> = QuadRule::gauss_legendre(p + 2)?;
    let pw = EpsPowers::new(eps);
    let four = T::of(4.0);
    let mut acc = T::zero();
    for e in 0..mesh.n_elements() {
        let (a, b, _) = mesh.element(e);
        acc += rule.integrate(a, b, |x| {
            let u = trial.0.eval_in_element(e, x, 0);
            let ddu = trial.0.eval_in_element(e, x, 2);
            let v = trial.1.eval_in_element(e, x, 0);
            let ddv = trial.1.eval_in_element(e, x, 2);
            let us = test.0.eval_in_element(e, x, 0);
            let ddus = test.0.eval_in_element(e, x, 2);
            let vs = test.1.eval_in_element(e, x, 0);
            let ddvs = test.1.eval_in_element(e, x, 2);
            lambda * (v - pw.e32 * ddu) * (vs - pw.e32 * ddus)
                + (pw.e52 * ddv + four * u) * (pw.e32 * ddvs + four * us)
        });
    }
    Ok(acc)
}

/// Squared components of the balanced norm of a discrete pair.
#[derive(Debug, Clone, Copy)]
pub struct BalancedNormSq<T> {
    /// ||u||^2
    pub u_sq: T,
    /// eps^3 ||u''||^2
    pub u_dd_sq: T,
    /// ||v||^2
    pub v_sq: T,
    /// eps^4 ||v''||^2
    pub v_dd_sq: T,
}

impl<T: Real> BalancedNormSq<T> {
    pub fn total(&self) -> T {
        self.u_sq + self.u_dd_sq + self.v_sq + self.v_dd_sq
    }

    pub fn norm(&self) -> T {
        self.total().sqrt()
    }
}

pub fn balanced_norm_sq<T: Real>(
    u: &DiscreteFunction<T>,
    v: &DiscreteFunction<T>,
    eps: T,
) -> Result<BalancedNormSq<T>, SystemError> {
    let mesh = u.space().mesh();
    if v.space().mesh() != mesh {
        return Err(SystemError::MeshMismatch);
    }
    let p = u.space().degree().max(v.space().degree());
    let rule: QuadRule<T> = QuadRule::gauss_legendre(p + 2)?;
    let pw = EpsPowers::new(eps);
    let mut out = BalancedNormSq {
        u_sq: T::zero(),
        u_dd_sq: T::zero(),
        v_sq: T::zero(),
        v_dd_sq: T::zero(),
    };
    for e in 0..mesh.n_elements() {
        let (a, b, _) = mesh.element(e);
        for (x, w) in rule.mapped(a, b) {
            let uu = u.eval_in_element(e, x, 0);
            let du = u.eval_in_element(e, x, 2);
            let vv = v.eval_in_element(e, x, 0);
            let dv = v.eval_in_element(e, x, 2);
            out.u_sq += w * uu * uu;
            out.u_dd_sq += w * pw.e3 * du * du;
            out.v_sq += w * vv * vv;
            out.v_dd_sq += w * pw.e4 * dv * dv;
        }
    }
    Ok(out)
}
