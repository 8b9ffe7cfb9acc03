//! Legendre polynomial evaluation on [-1, 1].
//!
//! All routines use forward recurrences that stay finite at the endpoints;
//! nothing here divides by 1 - x^2.

use crate::scalar::Real;

/// P_0(x) .. P_n(x) via the three-term recurrence
/// (m+1) P_{m+1} = (2m+1) x P_m - m P_{m-1}.
pub fn values<T: Real>(x: T, n: usize) -> Vec<T> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(T::one());
    if n == 0 {
        return p;
    }
    p.push(x);
    for m in 1..n {
        let a = T::of_usize(2 * m + 1) * x * p[m];
        let b = T::of_usize(m) * p[m - 1];
        p.push((a - b) / T::of_usize(m + 1));
    }
    p
}

/// (P_m, P_m', P_m'') for m = 0..=n at a single point.
///
/// Derivatives come from P'_{m+1} = P'_{m-1} + (2m+1) P_m and its
/// differentiated form, which are valid at x = +-1 as well.
pub fn values_d1_d2<T: Real>(x: T, n: usize) -> Vec<[T; 3]> {
    let p = values(x, n);
    let mut out = vec![[T::zero(); 3]; n + 1];
    out[0] = [p[0], T::zero(), T::zero()];
    if n == 0 {
        return out;
    }
    out[1] = [p[1], T::one(), T::zero()];
    for m in 1..n {
        let c = T::of_usize(2 * m + 1);
        let d1 = out[m - 1][1] + c * p[m];
        let d2 = out[m - 1][2] + c * out[m][1];
        out[m + 1] = [p[m + 1], d1, d2];
    }
    out
}

/// First antiderivatives F_m(x) = integral of P_m from -1 to x, for m = 0..=n.
///
/// F_0 = x + 1 and F_m = (P_{m+1} - P_{m-1}) / (2m+1) for m >= 1, so
/// F_m(1) = 0 for every m >= 1.
pub fn antiderivatives<T: Real>(x: T, n: usize) -> Vec<T> {
    let p = values(x, n + 1);
    let mut f = Vec::with_capacity(n + 1);
    f.push(x + T::one());
    for m in 1..=n {
        f.push((p[m + 1] - p[m - 1]) / T::of_usize(2 * m + 1));
    }
    f
}

/// Second antiderivatives G_m(x) = double integral of P_m from -1, with
/// G_m(-1) = G_m'(-1) = 0, for m = 0..=n.
///
/// Integrating the F_m recurrence once more gives
/// G_m = (F_{m+1} - F_{m-1}) / (2m+1) for m >= 1; both F terms vanish at
/// -1, so no integration constant appears.
pub fn antiderivatives2<T: Real>(x: T, n: usize) -> Vec<T> {
    let f = antiderivatives(x, n + 1);
    let xp1 = x + T::one();
    let mut g = Vec::with_capacity(n + 1);
    g.push(xp1 * xp1 / T::of(2.0));
    for m in 1..=n {
        g.push((f[m + 1] - f[m - 1]) / T::of_usize(2 * m + 1));
    }
    g
}
