//! Banded Gaussian elimination with partial pivoting, plus a small dense
//! solver for the 4x4 and collocation systems that appear in the oracle and
//! interpolant constructions.
//!
//! The band storage keeps, for row i, the columns i-kl .. i+ku+kl; the extra
//! kl slots on the right absorb the fill produced by pivoting, so row swaps
//! never leave the allocation.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix numerically singular at elimination column {column}")]
    Singular { column: usize },
    #[error("dimension mismatch: matrix order {n}, vector length {len}")]
    DimensionMismatch { n: usize, len: usize },
}

#[derive(Debug, Clone)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if j + self.kl < i || j > i + self.ku + self.kl {
            return T::zero();
        }
        self.data[i * self.width + (j + self.kl - i)]
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + self.kl).min(self.n - 1);
            let row = &self.data[i * self.width + (lo + self.kl - i)..];
            *yi = row.iter().zip(&x[lo..=hi]).map(|(&a, &b)| a * b).sum();
        }
        y
    }

    fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }
}

/// Solution of a banded system together with a cheap conditioning proxy
/// (ratio of largest to smallest pivot met during elimination).
#[derive(Debug, Clone, Copy)]
pub struct BandSolve<T> {
    pub cond_est: T,
}

/// Solve `a x = b` by banded LU with partial pivoting. `a` is consumed as a
/// working copy by cloning internally; callers keep the original for
/// residual checks.
pub fn solve_banded<T: Real>(a: &BandMatrix<T>, b: &[T]) -> Result<(Vec<T>, BandSolve<T>), LinalgError> {
    if b.len() != a.n {
        return Err(LinalgError::DimensionMismatch { n: a.n, len: b.len() });
    }
    let n = a.n;
    let kl = a.kl;
    let ku = a.ku;
    let width = a.width;
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    let tol = a.max_abs() * T::epsilon() * T::of_usize(n.max(4));

    let mut piv_max = T::zero();
    let mut piv_min = T::infinity();

    let idx = |i: usize, j: usize| i * width + (j + kl - i);

    for k in 0..n {
        let last_row = (k + kl).min(n - 1);
        let mut pr = k;
        let mut pv = m[idx(k, k)].abs();
        for r in (k + 1)..=last_row {
            let v = m[idx(r, k)].abs();
            if v > pv {
                pv = v;
                pr = r;
            }
        }
        if pv <= tol || !pv.is_finite() {
            return Err(LinalgError::Singular { column: k });
        }
        piv_max = if pv > piv_max { pv } else { piv_max };
        piv_min = if pv < piv_min { pv } else { piv_min };

        let last_col = (k + ku + kl).min(n - 1);
        if pr != k {
            for j in k..=last_col {
                m.swap(idx(k, j), idx(pr, j));
            }
            x.swap(k, pr);
        }
        let pivot = m[idx(k, k)];
        for r in (k + 1)..=last_row {
            let factor = m[idx(r, k)] / pivot;
            if factor == T::zero() {
                continue;
            }
            for j in k..=last_col {
                let v = m[idx(k, j)] * factor;
                m[idx(r, j)] -= v;
            }
            let v = x[k] * factor;
            x[r] -= v;
        }
    }

    for k in (0..n).rev() {
        let last_col = (k + ku + kl).min(n - 1);
        let mut acc = x[k];
        for j in (k + 1)..=last_col {
            acc -= m[idx(k, j)] * x[j];
        }
        x[k] = acc / m[idx(k, k)];
    }

    Ok((
        x,
        BandSolve {
            cond_est: piv_max / piv_min,
        },
    ))
}

/// Dense Gaussian elimination with partial pivoting for small systems.
/// `a` is row-major `n x n`.
#[allow(clippy::needless_range_loop)] // elimination touches two rows per index
pub fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>, LinalgError> {
    let n = a.len();
    if b.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(LinalgError::DimensionMismatch { n, len: b.len() });
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m });
    let tol = scale * T::epsilon() * T::of_usize(n.max(4));
    for k in 0..n {
        let mut pr = k;
        for r in (k + 1)..n {
            if a[r][k].abs() > a[pr][k].abs() {
                pr = r;
            }
        }
        let pv = a[pr][k].abs();
        if pv <= tol || !pv.is_finite() {
            return Err(LinalgError::Singular { column: k });
        }
        a.swap(k, pr);
        b.swap(k, pr);
        let pivot = a[k][k];
        for r in (k + 1)..n {
            let f = a[r][k] / pivot;
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                let v = a[k][j] * f;
                a[r][j] -= v;
            }
            let v = b[k] * f;
            b[r] -= v;
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in (k + 1)..n {
            acc -= a[k][j] * b[j];
        }
        b[k] = acc / a[k][k];
    }
    Ok(b)
}
