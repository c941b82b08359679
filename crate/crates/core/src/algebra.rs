//! Closed-form scalar functions of the coupled system and the
//! parameter-regime predicates built on them.
//!
//! Everything here is a pure function of its arguments. Powers with a
//! possibly negative exponent are only ever taken of strictly positive
//! bases, so no complex branch is ever needed.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::roots;

/// Physical parameters `(s, p, N, μ₁, μ₂, β)` of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub s: f64,
    pub p: f64,
    #[serde(rename = "N")]
    pub dim: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
}

/// Half of the fractional critical Sobolev exponent, `2_s^*/2`
/// (`+∞` when `N ≤ 2s`).
pub fn critical_half_exponent(s: f64, dim: usize) -> f64 {
    let n = dim as f64;
    if n <= 2.0 * s {
        f64::INFINITY
    } else {
        n / (n - 2.0 * s)
    }
}

fn check_common(s: f64, p: f64, dim: usize) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParams(format!("s = {s} must lie in (0, 1]")));
    }
    if dim == 0 {
        return Err(Error::InvalidParams("N must be at least 1".into()));
    }
    let crit = critical_half_exponent(s, dim);
    if !(p > 1.0 && p < crit) {
        return Err(Error::InvalidParams(format!(
            "p = {p} must lie in (1, {crit}) for s = {s}, N = {dim}"
        )));
    }
    Ok(())
}

impl SystemParams {
    pub fn new(s: f64, p: f64, dim: usize, mu1: f64, mu2: f64, beta: f64) -> Result<Self> {
        check_common(s, p, dim)?;
        if !(mu2 > 0.0 && mu1 > mu2) {
            return Err(Error::InvalidParams(format!(
                "need μ₁ > μ₂ > 0, got μ₁ = {mu1}, μ₂ = {mu2}"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidParams("β must be finite".into()));
        }
        Ok(Self { s, p, dim, mu1, mu2, beta })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.s, self.p, self.dim, self.mu1, self.mu2, self.beta).map(|_| ())
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.s, self.p, self.dim, self.mu1, self.mu2, beta)
    }

    pub fn with_mu1(&self, mu1: f64) -> Result<Self> {
        Self::new(self.s, self.p, self.dim, mu1, self.mu2, self.beta)
    }

    /// Scales `(μ₁, μ₂, β)` by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.s, self.p, self.dim, c * self.mu1, c * self.mu2, c * self.beta)
    }

    pub fn normalize(&self) -> NormalizedParams {
        NormalizedParams {
            s: self.s,
            p: self.p,
            dim: self.dim,
            mu: self.mu1 / self.mu2,
            beta_tilde: self.beta / self.mu2,
        }
    }
}

/// Parameters after dividing the system by `μ₂`: `μ = μ₁/μ₂`, `β̃ = β/μ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedParams {
    pub s: f64,
    pub p: f64,
    #[serde(rename = "N")]
    pub dim: usize,
    pub mu: f64,
    pub beta_tilde: f64,
}

impl NormalizedParams {
    pub fn new(s: f64, p: f64, dim: usize, mu: f64, beta_tilde: f64) -> Result<Self> {
        check_common(s, p, dim)?;
        if !(mu > 1.0) {
            return Err(Error::InvalidParams(format!("μ = {mu} must exceed 1")));
        }
        Ok(Self { s, p, dim, mu, beta_tilde })
    }

    pub fn with_beta_tilde(&self, beta_tilde: f64) -> Self {
        Self { beta_tilde, ..*self }
    }

    /// Recovers `(μ₁, μ₂, β)` for a given `μ₂`.
    pub fn denormalize(&self, mu2: f64) -> Result<SystemParams> {
        SystemParams::new(self.s, self.p, self.dim, self.mu * mu2, mu2, self.beta_tilde * mu2)
    }

    /// The normalized system viewed as a system with `μ₂ = 1`.
    pub fn as_system(&self) -> SystemParams {
        SystemParams {
            s: self.s,
            p: self.p,
            dim: self.dim,
            mu1: self.mu,
            mu2: 1.0,
            beta: self.beta_tilde,
        }
    }
}

fn require_positive(tau: f64, what: &str) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} requires τ > 0, got {tau}")))
    }
}

/// `g(τ) = μ₁ + βτᵖ − μ₂τ^{2p−2} − βτ^{p−2}` without domain checks.
pub(crate) fn g_raw(pr: &SystemParams, tau: f64) -> f64 {
    let p = pr.p;
    pr.mu1 + pr.beta * tau.powf(p) - pr.mu2 * tau.powf(2.0 * p - 2.0) - pr.beta * tau.powf(p - 2.0)
}

/// `g′(τ)` in closed form, `τ^{p−3} h(τ)`.
pub(crate) fn g_prime_raw(pr: &SystemParams, tau: f64) -> f64 {
    tau.powf(pr.p - 3.0) * h_raw(pr, tau)
}

/// `h(τ) = βpτ² − 2μ₂(p−1)τᵖ − β(p−2)`.
pub(crate) fn h_raw(pr: &SystemParams, tau: f64) -> f64 {
    let p = pr.p;
    pr.beta * p * tau * tau - 2.0 * pr.mu2 * (p - 1.0) * tau.powf(p) - pr.beta * (p - 2.0)
}

/// `h′(τ) = 2pτ(β − μ₂(p−1)τ^{p−2})`.
pub(crate) fn h_prime_raw(pr: &SystemParams, tau: f64) -> f64 {
    let p = pr.p;
    2.0 * p * tau * (pr.beta - pr.mu2 * (p - 1.0) * tau.powf(p - 2.0))
}

/// `H(τ) = μ₁ + 2βτᵖ + μ₂τ^{2p}`, the denominator base of `f`.
pub(crate) fn big_h_raw(pr: &SystemParams, tau: f64) -> f64 {
    let p = pr.p;
    pr.mu1 + 2.0 * pr.beta * tau.powf(p) + pr.mu2 * tau.powf(2.0 * p)
}

pub fn eval_g(params: &SystemParams, tau: f64) -> Result<f64> {
    require_positive(tau, "g")?;
    Ok(g_raw(params, tau))
}

/// `g̃(τ) = μ + β̃τᵖ − β̃τ^{p−2} − τ^{2p−2}`.
pub fn eval_g_tilde(norm: &NormalizedParams, tau: f64) -> Result<f64> {
    require_positive(tau, "g̃")?;
    Ok(g_raw(&norm.as_system(), tau))
}

pub fn eval_h(params: &SystemParams, tau: f64) -> Result<f64> {
    require_positive(tau, "h")?;
    Ok(h_raw(params, tau))
}

pub fn eval_big_h(params: &SystemParams, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("H requires τ ≥ 0, got {tau}")));
    }
    Ok(big_h_raw(params, tau))
}

/// `g′(τ)` through the factorization `τ^{p−3}h(τ)`.
pub fn eval_g_prime(params: &SystemParams, tau: f64) -> Result<f64> {
    require_positive(tau, "g′")?;
    Ok(g_prime_raw(params, tau))
}

pub fn eval_h_prime(params: &SystemParams, tau: f64) -> Result<f64> {
    require_positive(tau, "h′")?;
    Ok(h_prime_raw(params, tau))
}

/// `f′(τ) = 2τ g(τ) / H(τ)^{1+1/p}`.
pub fn eval_f_prime(params: &SystemParams, tau: f64) -> Result<f64> {
    require_positive(tau, "f′")?;
    let h = big_h_raw(params, tau);
    if !(h > 0.0) {
        return Err(Error::Domain(format!("H(τ) = {h} ≤ 0 at τ = {tau}")));
    }
    Ok(2.0 * tau * g_raw(params, tau) / h.powf(1.0 + 1.0 / params.p))
}

/// `f(τ) = (1 + τ²) / (μ₁ + 2βτᵖ + μ₂τ^{2p})^{1/p}` for `τ ≥ 0`.
pub fn eval_f(params: &SystemParams, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("f requires τ ≥ 0, got {tau}")));
    }
    let den = big_h_raw(params, tau);
    if !(den > 0.0) {
        return Err(Error::Domain(format!(
            "denominator μ₁ + 2βτᵖ + μ₂τ^(2p) = {den} ≤ 0 at τ = {tau}"
        )));
    }
    Ok((1.0 + tau * tau) / den.powf(1.0 / params.p))
}

/// `ln(f(τ)/f(0))`, resolving differences far below the precision of `f`
/// itself when `τ` is tiny.
pub fn log_f_ratio(params: &SystemParams, tau: f64) -> Result<f64> {
    eval_f(params, tau)?;
    let p = params.p;
    let x = (2.0 * params.beta * tau.powf(p) + params.mu2 * tau.powf(2.0 * p)) / params.mu1;
    Ok((tau * tau).ln_1p() - x.ln_1p() / p)
}

/// `f` evaluated through the factorization `H = (1 + τ²)(μ₁ + βτᵖ)`,
/// valid only where `g(τ) = 0`.
pub fn eval_f_at_root(params: &SystemParams, tau: f64) -> Result<f64> {
    require_positive(tau, "f at a root of g")?;
    let amp = params.mu1 + params.beta * tau.powf(params.p);
    if !(amp > 0.0) {
        return Err(Error::Domain(format!("μ₁ + βτᵖ = {amp} ≤ 0")));
    }
    let p = params.p;
    Ok((1.0 + tau * tau).powf(1.0 - 1.0 / p) * amp.powf(-1.0 / p))
}

fn h1_raw(t: f64, p: f64) -> f64 {
    t * t / (p - 1.0)
        - (p - 2.0) / p * (p - 1.0).powf(-p / (p - 2.0)) * t.powf(2.0 * (p - 1.0) / (p - 2.0))
}

/// `H₁(t) = t²/(p−1) − ((p−2)/p)(p−1)^{−p/(p−2)} t^{2(p−1)/(p−2)}`, for `p > 2`.
pub fn eval_h1(t: f64, p: f64) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::Domain(format!("H₁ is only defined for p > 2, got {p}")));
    }
    require_positive(t, "H₁")?;
    Ok(h1_raw(t, p))
}

/// Maximizer of `H₁`, `p^{(p−2)/2}(p−1)^{(4−p)/2}`.
pub fn h1_maximizer(p: f64) -> f64 {
    p.powf((p - 2.0) / 2.0) * (p - 1.0).powf((4.0 - p) / 2.0)
}

/// `(F(τ), G(τ))` with `F = pτ^{2p−2} − 2β̃τᵖ` and
/// `G = 2(p−1)μ/p + β̃(p−2)τᵖ/p − β̃τ^{p−2}`.
pub fn eval_f_g(norm: &NormalizedParams, tau: f64) -> Result<(f64, f64)> {
    require_positive(tau, "F, G")?;
    let p = norm.p;
    let bt = norm.beta_tilde;
    let tp = tau.powf(p);
    let big_f = p * tau.powf(2.0 * p - 2.0) - 2.0 * bt * tp;
    let big_g = 2.0 * (p - 1.0) / p * norm.mu + bt * (p - 2.0) / p * tp - bt * tau.powf(p - 2.0);
    Ok((big_f, big_g))
}

/// Root-checking tolerance applied by [`eval_l`].
pub const L_ROOT_TOL: f64 = 1e-8;

/// `l(β̃) = (μ(2p−1) + β̃(p−1)τᵖ − β̃pτ^{p−2}) / (μ + β̃τᵖ)` at a root `τ` of `g̃`.
pub fn eval_l(norm: &NormalizedParams, tau: f64) -> Result<f64> {
    require_positive(tau, "l")?;
    let p = norm.p;
    let mu = norm.mu;
    let bt = norm.beta_tilde;
    let tp = tau.powf(p);
    let den = mu + bt * tp;
    let second = tau.powf(2.0 * p - 2.0) + bt * tau.powf(p - 2.0);
    if !(den > 0.0) || !(second > 0.0) {
        return Err(Error::ConstraintViolation(format!(
            "positivity fails at τ = {tau}: μ + β̃τᵖ = {den}, τ^(2p−2) + β̃τ^(p−2) = {second}"
        )));
    }
    let gt = g_raw(&norm.as_system(), tau);
    if gt.abs() > L_ROOT_TOL * mu.max(1.0) {
        return Err(Error::ConstraintViolation(format!(
            "τ = {tau} is not a root of g̃ (g̃ = {gt:e})"
        )));
    }
    Ok((mu * (2.0 * p - 1.0) + bt * (p - 1.0) * tp - bt * p * tau.powf(p - 2.0)) / den)
}

/// An interval of the positive half-line; `hi = +∞` is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

fn serialize_extended<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        debug_assert!(lo < hi);
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        if self.hi.is_finite() {
            write!(f, "{l}{}, {}{r}", self.lo, self.hi)
        } else {
            write!(f, "{l}{}, +∞)", self.lo)
        }
    }
}

fn region(p: f64, beta: f64, lower_threshold: f64, upper_threshold: f64) -> Interval {
    if p > 1.0 && p < 2.0 && lower_threshold > beta && beta > 0.0 {
        Interval::open(0.0, 1.0)
    } else if p > 2.0 && beta > upper_threshold {
        Interval::open(1.0, f64::INFINITY)
    } else {
        Interval::open(0.0, f64::INFINITY)
    }
}

/// Threshold `(p−1)μ₁^{(p−2)/(2(p−1))}μ₂^{p/(2(p−1))}` used by `D` and by A₄/A₆.
fn sub_quadratic_threshold(p: f64, mu1: f64, mu2: f64) -> f64 {
    (p - 1.0) * mu1.powf((p - 2.0) / (2.0 * (p - 1.0))) * mu2.powf(p / (2.0 * (p - 1.0)))
}

/// The region `D` in which roots of `g` are sought.
pub fn region_d(params: &SystemParams) -> Interval {
    let p = params.p;
    region(
        p,
        params.beta,
        sub_quadratic_threshold(p, params.mu1, params.mu2),
        (p - 1.0) * params.mu1,
    )
}

/// The region `D̃` for the normalized system.
pub fn region_d_tilde(norm: &NormalizedParams) -> Interval {
    let p = norm.p;
    region(p, norm.beta_tilde, sub_quadratic_threshold(p, norm.mu, 1.0), (p - 1.0) * norm.mu)
}

/// Which of the seven existence conditions (A) and seven no-solution
/// conditions (B) hold, plus the `H₁` crossing points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub a_flags: [bool; 7],
    pub b_flags: [bool; 7],
    /// Smaller root of `2(p−1)μ₁/(pμ₂) − H₁(β/μ₂) = 0`, in units of β.
    pub beta0: Option<f64>,
    pub beta1: Option<f64>,
    pub nonexistence_window: bool,
}

impl ConditionReport {
    pub fn any_a(&self) -> bool {
        self.a_flags.iter().any(|&f| f)
    }

    /// 1-based indices of the A-conditions that hold.
    pub fn a_indices(&self) -> Vec<usize> {
        (0..7).filter(|&i| self.a_flags[i]).map(|i| i + 1).collect()
    }

    pub fn b_indices(&self) -> Vec<usize> {
        (0..7).filter(|&i| self.b_flags[i]).map(|i| i + 1).collect()
    }
}

/// Roots `t₀ < t₁` of `level − H₁(t) = 0`, when `0 < level < max H₁`.
pub fn h1_level_roots(p: f64, level: f64) -> Option<(f64, f64)> {
    if !(p > 2.0) {
        return None;
    }
    let t_max = h1_maximizer(p);
    let h_max = h1_raw(t_max, p);
    if !(level > 0.0 && level < h_max) {
        return None;
    }
    let phi = |t: f64| level - h1_raw(t, p);
    let left = roots::bisect(phi, 0.0, t_max).ok()?;
    let mut hi = 2.0 * t_max;
    let cap = 2f64.powi(60);
    while phi(hi) < 0.0 {
        hi *= 2.0;
        if hi > cap {
            return None;
        }
    }
    let right = roots::bisect(phi, t_max, hi).ok()?;
    Some((left, right))
}

/// The threshold `½(p/(p−1))^{p−1}` separating A₂/A₃ (and B₂/B₃).
fn a2_threshold(p: f64) -> f64 {
    0.5 * (p / (p - 1.0)).powf(p - 1.0)
}

fn a5_cap(p: f64, mu1: f64, mu2: f64) -> f64 {
    let e = 2.0 * (p - 1.0);
    let first = (p * mu2 - mu1 * (2.0 - p)) / 2.0;
    let second = 2.0
        * (p - 1.0)
        * (2.0 - p).powf((2.0 - p) / e)
        * (1.0 / p).powf(p / e)
        * mu1.powf(p / e)
        * mu2.powf((p - 2.0) / e);
    first.min(second)
}

/// Evaluates A₁–A₇ on `(μ₁, μ₂, β)` and B₁–B₇ on `(μ, β̃)`.
pub fn classify_conditions(params: &SystemParams) -> ConditionReport {
    let SystemParams { p, mu1, mu2, beta, .. } = *params;
    let crit = critical_half_exponent(params.s, params.dim);
    let sup = p > 2.0 && p < crit;
    let sub = p > 1.0 && p < 2.0f64.min(crit);
    let quad = p == 2.0;

    // Crossing points of H₁, in units of β.
    let level = 2.0 * (p - 1.0) * mu1 / (p * mu2);
    let crossings = if sup && mu1 < mu2 * a2_threshold(p) {
        h1_level_roots(p, level).map(|(a, b)| (a * mu2, b * mu2))
    } else {
        None
    };
    let (beta0, beta1) = match crossings {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };

    let sub_thr = sub_quadratic_threshold(p, mu1, mu2);
    let mut a = [false; 7];
    a[0] = sup && beta > 0.0 && beta <= (p - 1.0) * mu1;
    a[1] = sup && mu1 >= mu2 * a2_threshold(p) && beta > (p - 1.0) * mu1;
    a[2] = sup
        && mu1 < mu2 * a2_threshold(p)
        && match (beta0, beta1) {
            (Some(b0), Some(b1)) => {
                ((p - 1.0) * mu1 <= beta && beta <= b0) || beta >= b1.max((p - 1.0) * mu1)
            }
            _ => false,
        };
    a[3] = sub && beta >= sub_thr;
    a[4] =
        sub && mu1 > 0.0 && mu1 < p * mu2 / (2.0 - p) && beta > 0.0 && beta <= a5_cap(p, mu1, mu2);
    a[5] = sub && ((p * mu2 - mu1 * (2.0 - p)) / 2.0).max(0.0) < beta && beta < sub_thr;
    a[6] = quad && ((beta > 0.0 && beta < mu2) || beta > mu1);

    let norm = params.normalize();
    let b = b_flags(&norm, beta0.map(|x| x / mu2), beta1.map(|x| x / mu2));

    ConditionReport {
        a_flags: a,
        b_flags: b,
        beta0,
        beta1,
        nonexistence_window: quad && mu2 <= beta && beta <= mu1,
    }
}

fn b_flags(norm: &NormalizedParams, bt0: Option<f64>, bt1: Option<f64>) -> [bool; 7] {
    let NormalizedParams { p, mu, beta_tilde: bt, .. } = *norm;
    let crit = critical_half_exponent(norm.s, norm.dim);
    let sup = p > 2.0 && p < crit;
    let sub = p > 1.0 && p < 2.0f64.min(crit);
    let mut b = [false; 7];
    if !(mu > 1.0 && bt > 0.0) {
        return b;
    }
    let sub_thr = sub_quadratic_threshold(p, mu, 1.0);
    b[0] = sup && bt <= (p - 1.0) * mu;
    b[1] = sup && mu >= a2_threshold(p) && bt >= (p - 1.0) * mu;
    b[2] = sup
        && mu < a2_threshold(p)
        && match (bt0, bt1) {
            (Some(b0), Some(b1)) => {
                ((p - 1.0) * mu <= bt && bt <= b0) || b1.max((p - 1.0) * mu) <= bt
            }
            _ => false,
        };
    b[3] = sub && bt >= sub_thr;
    b[4] = sub && mu < p / (2.0 - p) && bt <= a5_cap(p, mu, 1.0);
    b[5] = sub && ((p - mu * (2.0 - p)) / 2.0).max(0.0) < bt && bt < sub_thr;
    b[6] = p == 2.0;
    b
}

/// B₁–B₇ evaluated directly on normalized parameters.
pub fn classify_b_conditions(norm: &NormalizedParams) -> [bool; 7] {
    let p = norm.p;
    let (b0, b1) = if p > 2.0 && norm.mu < a2_threshold(p) {
        match h1_level_roots(p, 2.0 * (p - 1.0) * norm.mu / p) {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        }
    } else {
        (None, None)
    };
    b_flags(norm, b0, b1)
}

/// Roots `β̃₀ < β̃₁` of `2(p−1)μ/p − H₁(β̃) = 0` for the normalized system.
pub fn beta_tilde_crossings(norm: &NormalizedParams) -> Option<(f64, f64)> {
    let p = norm.p;
    if p > 2.0 && norm.mu < a2_threshold(p) {
        h1_level_roots(p, 2.0 * (p - 1.0) * norm.mu / p)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(p: f64, mu1: f64, mu2: f64, beta: f64) -> SystemParams {
        SystemParams::new(0.5, p, 1, mu1, mu2, beta).unwrap()
    }

    #[test]
    fn g_at_one_is_mu_difference() {
        let pr = sp(1.7, 2.0, 1.0, 7.3);
        assert!((eval_g(&pr, 1.0).unwrap() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn g_at_lemma_bracket_endpoint() {
        let pr = sp(2.0, 2.0, 1.0, -1.0);
        let g = eval_g(&pr, 1.0).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn g_vanishes_at_quadratic_closed_form() {
        let pr = sp(2.0, 2.0, 1.0, 3.0);
        let tau = 0.5f64.sqrt();
        assert!(eval_g(&pr, tau).unwrap().abs() < 1e-14);
        // independent bisection lands on the same point
        let r = roots::bisect(|t| g_raw(&pr, t), 0.1, 1.0).unwrap();
        assert!((r - tau).abs() < 1e-12);
    }

    #[test]
    fn g_rejects_nonpositive_tau() {
        let pr = sp(1.5, 2.0, 1.0, 1.0);
        assert!(matches!(eval_g(&pr, 0.0), Err(Error::Domain(_))));
        assert!(matches!(eval_g(&pr, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn f_at_zero_and_infinity() {
        let pr = sp(2.0, 4.0, 1.0, 0.3);
        assert!((eval_f(&pr, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let far = eval_f(&pr, 1e8).unwrap();
        assert!((far - 1.0).abs() < 1e-6);
        let pr = sp(1.5, 3.0, 2.0, 0.7);
        let far = eval_f(&pr, 1e10).unwrap();
        assert!((far - 2f64.powf(-1.0 / 1.5)).abs() < 1e-5);
    }

    #[test]
    fn f_dual_formula_at_root() {
        let pr = sp(2.0, 2.0, 1.0, 3.0);
        let tau = 0.5f64.sqrt();
        let a = eval_f(&pr, tau).unwrap();
        let b = eval_f_at_root(&pr, tau).unwrap();
        assert!((a - b).abs() < 1e-12);
        // H(√0.5) = 2 + 3 + 0.25, so f = 1.5/√5.25 = √(3/7)
        assert!((a - (3.0f64 / 7.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn f_negative_denominator_is_domain_error() {
        let pr = sp(2.0, 2.0, 1.0, -5.0);
        assert!(matches!(eval_f(&pr, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn h1_values() {
        let t = 6f64.sqrt();
        assert!((eval_h1(t, 3.0).unwrap() - 1.5).abs() < 1e-14);
        assert!((h1_maximizer(3.0) - t).abs() < 1e-14);
        assert!(eval_h1(1e-9, 3.0).unwrap().abs() < 1e-17);
        assert!((eval_h1(1.0, 3.0).unwrap() - 11.0 / 24.0).abs() < 1e-15);
        assert!(matches!(eval_h1(1.0, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn f_g_at_one_and_decoupled() {
        let n = NormalizedParams::new(0.5, 3.0, 1, 2.0, 1.3).unwrap();
        let (_, g1) = eval_f_g(&n, 1.0).unwrap();
        assert!((g1 - 2.0 / 3.0 * (2.0 * 2.0 - 1.3)).abs() < 1e-14);
        let n0 = n.with_beta_tilde(0.0);
        for tau in [0.3, 1.0, 2.7] {
            let (f, g) = eval_f_g(&n0, tau).unwrap();
            assert!((f - 3.0 * tau.powf(4.0)).abs() < 1e-12);
            assert!((g - 4.0 / 3.0 * 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn l_closed_form_value() {
        let n = NormalizedParams::new(0.5, 2.0, 1, 2.0, 3.0).unwrap();
        let l = eval_l(&n, 0.5f64.sqrt()).unwrap();
        assert!((l - 3.0 / 7.0).abs() < 1e-14);
        assert!(matches!(eval_l(&n, 1.0), Err(Error::ConstraintViolation(_))));
    }

    #[test]
    fn regions() {
        assert_eq!(region_d(&sp(3.0, 2.0, 1.0, 5.0)), Interval::open(1.0, f64::INFINITY));
        assert_eq!(region_d(&sp(2.0, 2.0, 1.0, 5.0)), Interval::open(0.0, f64::INFINITY));
        assert_eq!(region_d(&sp(1.5, 2.0, 1.0, -0.5)), Interval::open(0.0, f64::INFINITY));
        assert_eq!(region_d(&sp(1.5, 2.0, 1.0, 0.1)), Interval::open(0.0, 1.0));
        assert_eq!(region_d(&sp(3.0, 2.0, 1.0, 4.0)), Interval::open(0.0, f64::INFINITY));
    }

    #[test]
    fn nonexistence_window_and_a7() {
        let r = classify_conditions(&sp(2.0, 2.0, 1.0, 1.5));
        assert!(r.nonexistence_window);
        assert!(!r.any_a());
        let r = classify_conditions(&sp(2.0, 2.0, 1.0, 3.0));
        assert!(r.a_flags[6]);
        assert!(!r.nonexistence_window);
        for beta in [1.0, 2.0] {
            assert!(classify_conditions(&sp(2.0, 2.0, 1.0, beta)).nonexistence_window);
        }
    }

    #[test]
    fn a1_without_crossings() {
        let r = classify_conditions(&sp(3.0, 2.0, 1.0, 1.0));
        assert!(r.a_flags[0]);
        assert_eq!(r.beta0, None);
        assert_eq!(r.beta1, None);
        assert!((0.5 * 1.5f64.powi(2) - 1.125).abs() < 1e-15);
    }

    #[test]
    fn crossings_bracket_maximizer_and_solve() {
        // μ₁/μ₂ = 1.05 < 1.125 for p = 3
        let pr = sp(3.0, 1.05, 1.0, 1.0);
        let r = classify_conditions(&pr);
        let (b0, b1) = (r.beta0.unwrap(), r.beta1.unwrap());
        assert!(b0 < h1_maximizer(3.0) && h1_maximizer(3.0) < b1);
        let level = 2.0 * 2.0 * 1.05 / 3.0;
        assert!((level - eval_h1(b0, 3.0).unwrap()).abs() < 1e-10);
        assert!((level - eval_h1(b1, 3.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn normalize_round_trip() {
        let pr = sp(1.4, 3.7, 1.3, -0.8);
        let back = pr.normalize().denormalize(pr.mu2).unwrap();
        assert!((back.mu1 - pr.mu1).abs() <= 1e-14 * pr.mu1);
        assert!((back.beta - pr.beta).abs() <= 1e-14 * pr.beta.abs());
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(0.5, 1.5, 1, 1.0, 2.0, 1.0).is_err());
        assert!(SystemParams::new(0.0, 1.5, 1, 2.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, 0.9, 1, 2.0, 1.0, 1.0).is_err());
        // N = 3, s = 1: 2*/2 = 3
        assert!(SystemParams::new(1.0, 3.0, 3, 2.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, 2.9, 3, 2.0, 1.0, 1.0).is_ok());
        assert!(SystemParams::new(0.5, 10.0, 2, 2.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, 10.0, 2, 2.0, 1.0, 1.0).is_ok());
        assert!(SystemParams::new(1.0, 10.0, 1, 2.0, 1.0, 1.0).is_ok());
    }
}
