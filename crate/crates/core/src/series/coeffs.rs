//! Unbiased estimates `u[k]` of `(m/x0 - 1)^k` from `r` i.i.d. draws, and the
//! gradient analogues `w[k]` of `(m/x0 - 1)^(k-1) dm/dtheta`.
//!
//! All routines take the raw draws and the expansion point and work on the
//! centred values `y_i = x_i/x0 - 1`. `u[0] = 1` always.

use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientKind {
    /// Product of the first `k` centred draws.
    Simple,
    /// Average of the simple product over the `r` circular shifts.
    Cycling,
    /// Average over all `k`-subsets (U-statistic).
    Mvue,
}

impl CoefficientKind {
    pub const ALL: [CoefficientKind; 3] = [CoefficientKind::Simple, CoefficientKind::Cycling, CoefficientKind::Mvue];

    pub fn name(self) -> &'static str {
        match self {
            CoefficientKind::Simple => "simple",
            CoefficientKind::Cycling => "cycling",
            CoefficientKind::Mvue => "mvue",
        }
    }

    pub fn coeffs<T: Scalar>(self, xs: &[T], x0: T) -> Vec<T> {
        match self {
            CoefficientKind::Simple => simple_coeffs(xs, x0),
            CoefficientKind::Cycling => cycling_coeffs(xs, x0),
            CoefficientKind::Mvue => mvue_coeffs(xs, x0),
        }
    }
}

impl std::str::FromStr for CoefficientKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(CoefficientKind::Simple),
            "cycling" => Ok(CoefficientKind::Cycling),
            "mvue" => Ok(CoefficientKind::Mvue),
            other => Err(format!("unknown estimator '{other}' (expected simple, cycling or mvue)")),
        }
    }
}

pub fn centred<T: Scalar>(xs: &[T], x0: T) -> Vec<T> {
    xs.iter().map(|&x| x / x0 - T::one()).collect()
}

/// `u[k] = prod_{i<=k} y_i`, one running product, `O(r)`.
pub fn simple_coeffs<T: Scalar>(xs: &[T], x0: T) -> Vec<T> {
    let mut u = Vec::with_capacity(xs.len() + 1);
    let mut prod = T::one();
    u.push(prod);
    for &x in xs {
        prod = prod * (x / x0 - T::one());
        u.push(prod);
    }
    u
}

/// `u[k] = (1/r) sum_s prod_{i=1..k} y_{(s+i-1) mod r}`, `O(r^2)`.
///
/// A shift stops early once its running product is exactly zero (from a zero
/// draw or underflow) and every `y` is finite; later terms are then exactly 0.
pub fn cycling_coeffs<T: Scalar>(xs: &[T], x0: T) -> Vec<T> {
    let r = xs.len();
    let mut acc = vec![T::zero(); r + 1];
    acc[0] = T::one();
    if r == 0 {
        return acc;
    }
    let ys = centred(xs, x0);
    let all_finite = ys.iter().all(|y| y.is_finite());
    for s in 0..r {
        let mut prod = T::one();
        let mut idx = s;
        for slot in acc.iter_mut().skip(1) {
            prod = prod * ys[idx];
            *slot = *slot + prod;
            if prod == T::zero() && all_finite {
                break;
            }
            idx += 1;
            if idx == r {
                idx = 0;
            }
        }
    }
    let inv_r = T::from_usize_lossy(r).recip();
    for a in acc.iter_mut().skip(1) {
        *a = *a * inv_r;
    }
    acc
}

/// `u[k] = S_{r,k} / C(r,k)` with `S_{r,k}` the elementary symmetric
/// polynomial of degree `k` in `y_1..y_r`, `O(r^2)`.
///
/// The recursion `S_{j,k} = S_{j-1,k} + y_j S_{j-1,k-1}` is carried out on
/// the normalised values `S_{j,k} / C(j,k)`, which keeps every intermediate
/// bounded by `max|y|^k` and needs no binomial coefficients. Alternating
/// signs still cancel catastrophically for large `r` (a few hundred) when
/// `|y|` is not small.
pub fn mvue_coeffs<T: Scalar>(xs: &[T], x0: T) -> Vec<T> {
    let r = xs.len();
    let mut u = vec![T::zero(); r + 1];
    u[0] = T::one();
    for (j0, &x) in xs.iter().enumerate() {
        let j = j0 + 1;
        let y = x / x0 - T::one();
        let jt = T::from_usize_lossy(j);
        for k in (1..=j).rev() {
            let kt = T::from_usize_lossy(k);
            let keep = T::from_usize_lossy(j - k) / jt;
            u[k] = keep * u[k] + (kt / jt) * y * u[k - 1];
        }
    }
    u
}

/// Simple gradient coefficients: row `k-1` (for `k = 1..=r`) holds
/// `w_k = g_k prod_{i<k} y_i`. `gs` is `r x dim`, row-major.
pub fn simple_gradient_coeffs<T: Scalar>(xs: &[T], gs: &[T], dim: usize, x0: T) -> Vec<T> {
    let r = xs.len();
    debug_assert_eq!(gs.len(), r * dim);
    let mut w = vec![T::zero(); r * dim];
    let mut prod = T::one();
    for k in 0..r {
        for d in 0..dim {
            w[k * dim + d] = prod * gs[k * dim + d];
        }
        prod = prod * (xs[k] / x0 - T::one());
    }
    w
}

/// Cycling gradient coefficients: row `k-1` holds the average over shifts
/// `s` of `g_{s+k-1} prod_{i=0}^{k-2} y_{s+i}` (indices mod `r`), i.e. each
/// window pairs the `g` at its last position with the `k-1` preceding `y`s.
pub fn cycling_gradient_coeffs<T: Scalar>(xs: &[T], gs: &[T], dim: usize, x0: T) -> Vec<T> {
    let r = xs.len();
    debug_assert_eq!(gs.len(), r * dim);
    let mut w = vec![T::zero(); r * dim];
    if r == 0 {
        return w;
    }
    let ys = centred(xs, x0);
    let all_finite = ys.iter().all(|y| y.is_finite()) && gs.iter().all(|g| g.is_finite());
    for s in 0..r {
        let mut prod = T::one();
        let mut idx = s;
        for k in 0..r {
            let g = &gs[idx * dim..(idx + 1) * dim];
            let row = &mut w[k * dim..(k + 1) * dim];
            for (acc, &gd) in row.iter_mut().zip(g) {
                *acc = *acc + prod * gd;
            }
            prod = prod * ys[idx];
            if prod == T::zero() && all_finite {
                break;
            }
            idx += 1;
            if idx == r {
                idx = 0;
            }
        }
    }
    let inv_r = T::from_usize_lossy(r).recip();
    for a in w.iter_mut() {
        *a = *a * inv_r;
    }
    w
}
