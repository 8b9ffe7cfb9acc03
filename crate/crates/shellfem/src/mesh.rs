//! Layer-adapted meshes on [0, 1].
//!
//! Besides the uniform mesh there are two Shishkin variants: a one-sided
//! mesh condensing at x = 0 (transition point tau = min{1/2, sigma eps ln N})
//! and a two-sided mesh condensing at both ends
//! (tau = min{1/4, sigma eps ln N}). When the min clamps, the mesh
//! degenerates to uniform spacing but keeps its kind, so downstream code can
//! still report the transition parameter it was built with.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Uniform,
    ShishkinOneSided,
    ShishkinTwoSided,
}

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh needs at least {required} elements, got {n}")]
    TooFewElements { n: usize, required: usize },
    #[error("element count {n} must be divisible by {divisor} for this mesh kind")]
    NotDivisible { n: usize, divisor: usize },
    #[error("perturbation parameter must lie in (0, 1], got {0}")]
    EpsOutOfRange(f64),
    #[error("mesh grading sigma must be positive and finite, got {0}")]
    BadSigma(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    nodes: Vec<T>,
    kind: MeshKind,
    tau: T,
}

impl<T: Real> Mesh<T> {
    /// Uniform mesh with `n` elements.
    pub fn uniform(n: usize) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::TooFewElements { n, required: 1 });
        }
        Ok(Mesh {
            nodes: uniform_nodes(n),
            kind: MeshKind::Uniform,
            tau: T::zero(),
        })
    }

    /// One-sided Shishkin mesh: N/2 elements on [0, tau], N/2 on [tau, 1],
    /// tau = min{1/2, sigma eps ln N}. `n` must be even and >= 2.
    pub fn shishkin_one_sided(n: usize, sigma: T, eps: T) -> Result<Self, MeshError> {
        check_params(sigma, eps)?;
        if n < 2 {
            return Err(MeshError::TooFewElements { n, required: 2 });
        }
        if !n.is_multiple_of(2) {
            return Err(MeshError::NotDivisible { n, divisor: 2 });
        }
        let half = T::of(0.5);
        let candidate = sigma * eps * T::of_usize(n).ln();
        if candidate >= half {
            return Ok(Mesh {
                nodes: uniform_nodes(n),
                kind: MeshKind::ShishkinOneSided,
                tau: half,
            });
        }
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(T::zero());
        push_block(&mut nodes, T::zero(), candidate, n / 2);
        push_block(&mut nodes, candidate, T::one(), n / 2);
        Ok(Mesh {
            nodes,
            kind: MeshKind::ShishkinOneSided,
            tau: candidate,
        })
    }

    /// Two-sided Shishkin mesh: N/4 elements on [0, tau], N/2 on
    /// [tau, 1 - tau], N/4 on [1 - tau, 1], tau = min{1/4, sigma eps ln N}.
    /// `n` must be divisible by 4.
    pub fn shishkin_two_sided(n: usize, sigma: T, eps: T) -> Result<Self, MeshError> {
        check_params(sigma, eps)?;
        if n < 4 {
            return Err(MeshError::TooFewElements { n, required: 4 });
        }
        if !n.is_multiple_of(4) {
            return Err(MeshError::NotDivisible { n, divisor: 4 });
        }
        let quarter = T::of(0.25);
        let candidate = sigma * eps * T::of_usize(n).ln();
        if candidate >= quarter {
            return Ok(Mesh {
                nodes: uniform_nodes(n),
                kind: MeshKind::ShishkinTwoSided,
                tau: quarter,
            });
        }
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(T::zero());
        push_block(&mut nodes, T::zero(), candidate, n / 4);
        push_block(&mut nodes, candidate, T::one() - candidate, n / 2);
        push_block(&mut nodes, T::one() - candidate, T::one(), n / 4);
        Ok(Mesh {
            nodes,
            kind: MeshKind::ShishkinTwoSided,
            tau: candidate,
        })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    /// Transition parameter. Zero for a plainly uniform mesh; the clamp
    /// value (1/2 or 1/4) for a degenerate Shishkin mesh.
    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    /// (left node, right node, width) of element `i`.
    pub fn element(&self, i: usize) -> (T, T, T) {
        let a = self.nodes[i];
        let b = self.nodes[i + 1];
        (a, b, b - a)
    }

    pub fn max_width(&self) -> T {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), |m, h| if h > m { h } else { m })
    }

    /// Index of the element containing `x`; nodes resolve to the element on
    /// their right, except x = 1 which belongs to the last element.
    pub fn element_containing(&self, x: T) -> usize {
        let n = self.n_elements();
        // first node strictly greater than x, minus one
        let idx = self.nodes.partition_point(|&node| node <= x);
        idx.saturating_sub(1).min(n - 1)
    }
}

fn check_params<T: Real>(sigma: T, eps: T) -> Result<(), MeshError> {
    if eps <= T::zero() || eps > T::one() || !eps.is_finite() {
        return Err(MeshError::EpsOutOfRange(eps.to_f64()));
    }
    if sigma <= T::zero() || !sigma.is_finite() {
        return Err(MeshError::BadSigma(sigma.to_f64()));
    }
    Ok(())
}

fn uniform_nodes<T: Real>(n: usize) -> Vec<T> {
    let mut nodes: Vec<T> = (0..n).map(|i| T::of_usize(i) / T::of_usize(n)).collect();
    nodes.push(T::one());
    nodes
}

/// Append the interior and right nodes of a block subdivided into `count`
/// equal elements; `start` is assumed present already and `end` is inserted
/// exactly.
fn push_block<T: Real>(nodes: &mut Vec<T>, start: T, end: T, count: usize) {
    let width = end - start;
    for j in 1..count {
        nodes.push(start + width * T::of_usize(j) / T::of_usize(count));
    }
    nodes.push(end);
}
