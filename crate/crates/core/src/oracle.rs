//! Closed-form moments, variance limits and bounds for the coefficient
//! estimators. Used as ground truth in tests and exposed for diagnostics.
//!
//! Powers of `rho` are evaluated through `rho^j m_tilde^(2j) = beta^(2j)` so
//! that `m = x0` (where `rho` is infinite) is handled without special cases.

use serde::{Deserialize, Serialize};

use crate::series::{pow_usize, Expansion, TruncationLaw};
use crate::{Error, Result, Scalar};

/// Moments of a single `X` relative to the expansion point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentParams<T> {
    pub m: T,
    pub var: T,
    pub x0: T,
}

impl<T: Scalar> MomentParams<T> {
    pub fn new(m: T, var: T, x0: T) -> Result<Self> {
        if x0 == T::zero() || !x0.is_finite() {
            return Err(Error::domain(format!("x0 must be finite and non-zero, got {x0}")));
        }
        if !(var >= T::zero()) || !m.is_finite() || !var.is_finite() {
            return Err(Error::domain(format!("need finite m and var >= 0, got m = {m}, var = {var}")));
        }
        Ok(Self { m, var, x0 })
    }

    /// `m / x0 - 1`.
    pub fn m_tilde(&self) -> T {
        self.m / self.x0 - T::one()
    }

    pub fn beta0(&self) -> T {
        self.m_tilde().abs()
    }

    /// `E[(X/x0 - 1)^2] = var / x0^2 + m_tilde^2`.
    pub fn beta2(&self) -> T {
        let mt = self.m_tilde();
        self.var / (self.x0 * self.x0) + mt * mt
    }

    pub fn beta(&self) -> T {
        self.beta2().sqrt()
    }

    /// `1 + var / (m - x0)^2`; infinite when `m = x0` and `var > 0`.
    pub fn rho(&self) -> T {
        if self.var == T::zero() {
            return T::one();
        }
        let d = self.m - self.x0;
        if d == T::zero() {
            T::infinity()
        } else {
            T::one() + self.var / (d * d)
        }
    }

    /// `m_tilde^(n) rho^j` written as `beta^(2j) m_tilde^(n - 2j)`.
    fn rho_term(&self, n: usize, j: usize) -> T {
        debug_assert!(n >= 2 * j);
        pow_usize(self.beta2(), j) * pow_usize(self.m_tilde(), n - 2 * j)
    }
}

/// Moments of the gradient sample `G` paired with `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradParams<T> {
    /// `E[G^2]`.
    pub s2: T,
    /// `E[G (X/x0 - 1)]`.
    pub t: T,
    /// `E[G]`, the gradient of the mean.
    pub grad_m: T,
}

fn check_order(r: usize, k: usize, l: usize) -> Result<()> {
    if !(1 <= k && k <= l && l <= r) {
        return Err(Error::domain(format!("need 1 <= k <= l <= r, got r = {r}, k = {k}, l = {l}")));
    }
    Ok(())
}

/// `cov(U^S_k, U^S_l) = beta^(2k) m_tilde^(l-k) - m_tilde^(k+l)` for `k <= l`.
pub fn simple_cross_moment<T: Scalar>(params: &MomentParams<T>, k: usize, l: usize) -> Result<T> {
    if k > l {
        return Err(Error::domain(format!("need k <= l, got k = {k}, l = {l}")));
    }
    let mt = params.m_tilde();
    Ok(params.rho_term(l + k, k) - pow_usize(mt, k + l))
}

/// `E[U^C_{r,k} U^C_{r,l}]` for `1 <= k <= l <= r`.
pub fn cycling_cross_moment<T: Scalar>(params: &MomentParams<T>, r: usize, k: usize, l: usize) -> Result<T> {
    check_order(r, k, l)?;
    let n = l + k;
    let term = |j: usize| params.rho_term(n, j);
    if r == l {
        return Ok(term(k));
    }
    let two = T::lit(2.0);
    let mut acc = T::from_usize_lossy(l - k + 1) * term(k);
    if r >= n {
        acc = acc + T::from_usize_lossy(r - n + 1) * term(0);
        for j in 1..k {
            acc = acc + two * term(j);
        }
    } else {
        let lo = n - r;
        for j in lo + 1..k {
            acc = acc + two * term(j);
        }
        acc = acc + T::from_usize_lossy(lo + 1) * term(lo);
    }
    Ok(acc / T::from_usize_lossy(r))
}

/// Upper bound on `cov(U^C_{r,k}, U^C_{r,l})`:
/// `|m_tilde|^(l+k)` times `rho^k (l+k)/r`, `rho^k + 1` or `rho^k - 1`
/// for `r >= l+k`, `r < l+k` and `r = l` respectively.
pub fn cycling_cov_bound<T: Scalar>(params: &MomentParams<T>, r: usize, k: usize, l: usize) -> Result<T> {
    check_order(r, k, l)?;
    let n = l + k;
    let rho_k = pow_usize(params.beta2(), k) * pow_usize(params.beta0(), l - k);
    let plain = pow_usize(params.beta0(), n);
    Ok(if r == l {
        rho_k - plain
    } else if r >= n {
        rho_k * T::from_usize_lossy(n) / T::from_usize_lossy(r)
    } else {
        rho_k + plain
    })
}

/// Limit of `E[var(f_hat^S | R)]` as `p -> 0` for the reciprocal expansion:
/// `(1/x0) (2/m - 1/x0) [1/(1-beta^2) - 1/(1-beta0^2)]`.
pub fn simple_variance_limit<T: Scalar>(params: &MomentParams<T>) -> Result<T> {
    let one = T::one();
    let b2 = params.beta2();
    if !(b2 < one) {
        return Err(Error::domain(format!("simple variance limit needs beta^2 < 1, got {b2}")));
    }
    if params.m == T::zero() {
        return Err(Error::domain("simple variance limit needs m != 0"));
    }
    let b02 = params.beta0() * params.beta0();
    let x0 = params.x0;
    Ok((T::lit(2.0) / params.m - one / x0) / x0 * (one / (one - b2) - one / (one - b02)))
}

fn check_p<T: Scalar>(p: T, upper: T) -> Result<()> {
    if !(p > T::zero() && p < upper) {
        return Err(Error::domain(format!("p = {p} outside admissible interval (0, {upper})")));
    }
    Ok(())
}

/// Bounds on `var[E[f_hat | R]]`:
/// `lower = (f_m - gamma0)^2 p/(1-p)`, `upper = c^2 beta0^2/(1-beta0)^2 p/(1-p-beta0^2)`.
pub fn prop1_bounds<T: Scalar>(p: T, beta0: T, c: T, f_m: T, gamma0: T) -> Result<(T, T)> {
    let one = T::one();
    let b02 = beta0 * beta0;
    if !(beta0 >= T::zero() && beta0 < one) {
        return Err(Error::domain(format!("beta0 must lie in [0, 1), got {beta0}")));
    }
    check_p(p, one - b02)?;
    let d = f_m - gamma0;
    let lower = d * d * p / (one - p);
    let upper = c * c * b02 / ((one - beta0) * (one - beta0)) * p / (one - p - b02);
    Ok((lower, upper))
}

/// Bound on `E[var(f_hat^S | R)]`: `c^2 (1+beta)/(1-beta) (1-p)/(1-p-beta^2)`.
pub fn prop2_bound<T: Scalar>(p: T, beta: T, c: T) -> Result<T> {
    let one = T::one();
    if !(beta >= T::zero() && beta < one) {
        return Err(Error::domain(format!("beta must lie in [0, 1), got {beta}")));
    }
    check_p(p, one - beta * beta)?;
    Ok(c * c * (one + beta) / (one - beta) * (one - p) / (one - p - beta * beta))
}

/// Bound on `E[var(f_hat^C | R)]`:
/// `4 c^2 p log(1/p) / (1-p-beta^2)^2 [beta^2 + 2 beta0 (1-p)/(1-beta0)^2]`.
pub fn prop3_bound<T: Scalar>(p: T, beta0: T, beta: T, c: T) -> Result<T> {
    let one = T::one();
    if !(beta0 >= T::zero() && beta0 <= beta && beta < one) {
        return Err(Error::domain(format!("need 0 <= beta0 <= beta < 1, got {beta0}, {beta}")));
    }
    let b2 = beta * beta;
    check_p(p, one - b2)?;
    let d = one - p - b2;
    let inner = b2 + T::lit(2.0) * beta0 * (one - p) / ((one - beta0) * (one - beta0));
    Ok(T::lit(4.0) * c * c * p * (one / p).ln() / (d * d) * inner)
}

/// `E[f_hat | R = r] = sum_{k<=r} gamma_k (m/x0 - 1)^k / P(R >= k)`.
pub fn conditional_expectation_given_r<T: Scalar>(
    expansion: &Expansion<T>,
    law: &TruncationLaw<T>,
    m: T,
    r: usize,
) -> Result<T> {
    let mt = m / expansion.x0() - T::one();
    let mut acc = T::zero();
    let mut pw = T::one();
    for k in 0..=r {
        if pw == T::zero() {
            break;
        }
        acc = acc + expansion.coefficient(k)? * pw / law.survival(k);
        pw = pw * mt;
    }
    Ok(acc)
}

/// `var[E[f_hat | R]]` by summing over the law of `R` until the remaining
/// mass drops below `1e-16` (or `law.r_max()` is reached).
pub fn conditional_expectation_variance<T: Scalar>(
    expansion: &Expansion<T>,
    law: &TruncationLaw<T>,
    m: T,
) -> Result<T> {
    let mt = m / expansion.x0() - T::one();
    let tiny = T::lit(1e-16);
    let (mut e, mut pw) = (T::zero(), T::one());
    let (mut s1, mut s2) = (T::zero(), T::zero());
    for r in 0..=law.r_max() {
        if pw != T::zero() {
            e = e + expansion.coefficient(r)? * pw / law.survival(r);
            pw = pw * mt;
        }
        let w = law.mass(r);
        s1 = s1 + w * e;
        s2 = s2 + w * e * e;
        if law.survival(r + 1) < tiny {
            break;
        }
    }
    Ok(s2 - s1 * s1)
}

/// `E[1/R | R >= k]` for the truncation law with parameter `p`, together
/// with the bound `p log(1/p) / (1-p)` (attained at `k = 1`).
pub fn reciprocal_tail_expectation(p: f64, k: usize) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p must lie in (0, 1), got {p}")));
    }
    if k == 0 {
        return Err(Error::domain("reciprocal tail expectation needs k >= 1"));
    }
    let q = 1.0 - p;
    let bound = p * (1.0 / p).ln() / q;
    // sum_{j>=0} p q^j / (k + j)
    let exact = if p >= 1e-4 || k > 64 {
        let mut acc = 0.0;
        let mut qj = 1.0;
        let mut j = 0usize;
        loop {
            let term = p * qj / (k + j) as f64;
            acc += term;
            if term < 1e-14 * acc * p || qj == 0.0 {
                break;
            }
            qj *= q;
            j += 1;
        }
        acc
    } else {
        // q^{-k} (-ln p - sum_{i<k} q^i / i)
        let mut head = 0.0;
        let mut qi = 1.0;
        for i in 1..k {
            qi *= q;
            head += qi / i as f64;
        }
        p * (-(p.ln()) - head) / q.powi(k as i32)
    };
    Ok((exact, bound))
}

/// `E[W^C_{r,k} W^C_{r,l}]` for the cycling gradient coefficients.
///
/// For `r >= k + l` this is the six-term closed form; below that the wrapped
/// windows overlap in ways the closed form ignores and the moment is
/// obtained by exact window-overlap counting.
pub fn gradient_cycling_cross_moment<T: Scalar>(
    params: &MomentParams<T>,
    grad: &GradParams<T>,
    r: usize,
    k: usize,
    l: usize,
) -> Result<T> {
    check_order(r, k, l)?;
    check_grad(params, grad)?;
    if r < k + l {
        return Ok(gradient_cycling_cross_moment_exact(params, grad, r, k, l));
    }
    let GradParams { s2, t, grad_m: gm } = *grad;
    let mt = params.m_tilde();
    let b2 = params.beta2();
    let pw = |x: T, n: usize| pow_usize(x, n);
    let mut acc;
    // 1a
    acc = if l > k { pw(b2, k - 1) * pw(mt, l - k - 1) * t * gm } else { pw(b2, k - 1) * s2 };
    // 1b: rho^(k-i) m_tilde^(k+l-3) t gm
    for i in 2..=k.min(r - l + 1) {
        acc = acc + pw(b2, k - i) * pw(mt, l + 2 * i - k - 3) * t * gm;
    }
    // 1c
    let lo = (k + 1).max(2);
    let hi = r - l + 1;
    if hi >= lo {
        acc = acc + T::from_usize_lossy(hi - lo + 1) * pw(mt, k + l - 2) * gm * gm;
    }
    // 2a: rho^(i-1) m_tilde^(k+l-3) t gm
    for i in 1..k {
        acc = acc + pw(b2, i - 1) * pw(mt, k + l - 2 * i - 1) * t * gm;
    }
    if l > k {
        // 2b
        acc = acc + pw(b2, k - 1) * s2 * pw(mt, l - k);
        // 2c
        let n2c = l - 1 - k;
        if n2c > 0 {
            acc = acc + T::from_usize_lossy(n2c) * pw(b2, k - 1) * pw(mt, l - k - 1) * t * gm;
        }
    }
    Ok(acc / T::from_usize_lossy(r))
}

/// Exact `E[W^C_{r,k} W^C_{r,l}]` by enumerating how the window `1..k`
/// overlaps each of the `r` cyclic windows of length `l`.
pub fn gradient_cycling_cross_moment_exact<T: Scalar>(
    params: &MomentParams<T>,
    grad: &GradParams<T>,
    r: usize,
    k: usize,
    l: usize,
) -> T {
    #[derive(Clone, Copy, PartialEq)]
    enum Role {
        None,
        Y,
        G,
    }
    let mt = params.m_tilde();
    let b2 = params.beta2();
    let factor = |a: Role, b: Role| -> T {
        match (a, b) {
            (Role::None, Role::None) => T::one(),
            (Role::Y, Role::None) | (Role::None, Role::Y) => mt,
            (Role::G, Role::None) | (Role::None, Role::G) => grad.grad_m,
            (Role::Y, Role::Y) => b2,
            (Role::Y, Role::G) | (Role::G, Role::Y) => grad.t,
            (Role::G, Role::G) => grad.s2,
        }
    };
    let window = |start: usize, len: usize, i: usize| -> Role {
        let off = (i + r - start) % r;
        if off + 1 == len {
            Role::G
        } else if off < len {
            Role::Y
        } else {
            Role::None
        }
    };
    let mut total = T::zero();
    for s in 0..r {
        let mut prod = T::one();
        for i in 0..r {
            prod = prod * factor(window(0, k, i), window(s, l, i));
        }
        total = total + prod;
    }
    total / T::from_usize_lossy(r)
}

fn check_grad<T: Scalar>(params: &MomentParams<T>, grad: &GradParams<T>) -> Result<()> {
    let slack = T::lit(1e-12) * (T::one() + grad.s2.abs());
    if grad.s2 + slack < grad.grad_m * grad.grad_m {
        return Err(Error::domain(format!("need s2 >= grad_m^2, got s2 = {}, grad_m = {}", grad.s2, grad.grad_m)));
    }
    if grad.t.abs() > (grad.s2 * params.beta2()).sqrt() + slack {
        return Err(Error::domain(format!(
            "need |t| <= sqrt(s2) beta, got t = {}, s2 = {}, beta^2 = {}",
            grad.t,
            grad.s2,
            params.beta2()
        )));
    }
    Ok(())
}

/// `2/r rho^(k-1) beta0^(k+l-3) max(beta0, 1) s2 (2l - 2)`, an upper bound on
/// `cov(W^C_{r,k}, W^C_{r,l})` once `k + l >= 3`.
pub fn gradient_cycling_cov_bound<T: Scalar>(
    params: &MomentParams<T>,
    grad: &GradParams<T>,
    r: usize,
    k: usize,
    l: usize,
) -> Result<T> {
    check_order(r, k, l)?;
    check_grad(params, grad)?;
    let beta0 = params.beta0();
    // rho^(k-1) beta0^(k+l-3) = beta^(2(k-1)) beta0^(l-k-1)
    let core = pow_usize(params.beta2(), k - 1) * beta0.powi(l as i32 - k as i32 - 1);
    Ok(T::lit(2.0) / T::from_usize_lossy(r) * core * beta0.max(T::one()) * grad.s2 * T::from_usize_lossy(2 * l - 2))
}
