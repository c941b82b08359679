//! Proportional solutions `(k₁w, τ₀k₁w)` and the critical-point landscape
//! of `f(τ)`.
//!
//! All positive roots of `g` are located without a global scan: the
//! critical points of `g` are the roots of `h`, and `h` itself has at most
//! one positive critical point in closed form. Between consecutive critical
//! points `g` is monotone, so each piece holds at most one root and a sign
//! check decides whether to bisect it.

use serde::Serialize;

use crate::algebra::{
    eval_f, eval_l, g_prime_raw, g_raw, h_prime_raw, h_raw, log_f_ratio, region_d, Interval,
    NormalizedParams, SystemParams,
};
use crate::error::{Error, Result};
use crate::roots::{self, sign};

/// Tolerance on `|g(τ₀)|` for accepted roots and double roots at critical points.
pub const ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauSolution {
    pub tau0: f64,
    pub k1: f64,
    pub region: Interval,
    /// `(μ₁ + βτ₀ᵖ > 0, μ₂τ₀^{2p−2} + βτ₀^{p−2} > 0)`
    pub positivity_ok: (bool, bool),
}

impl TauSolution {
    fn build(params: &SystemParams, tau0: f64, region: Interval) -> Self {
        let p = params.p;
        let first = params.mu1 + params.beta * tau0.powf(p);
        let second = params.mu2 * tau0.powf(2.0 * p - 2.0) + params.beta * tau0.powf(p - 2.0);
        let k1 = if first > 0.0 { first.powf(-1.0 / (2.0 * p - 2.0)) } else { f64::NAN };
        Self { tau0, k1, region, positivity_ok: (first > 0.0, second > 0.0) }
    }

    /// The two amplitude relations `(μ₁+βτ₀ᵖ)k₁^{2p−2}` and
    /// `(μ₂τ₀^{2p−2}+βτ₀^{p−2})k₁^{2p−2}`, both equal to 1 for a solution.
    pub fn amplitude_relations(&self, params: &SystemParams) -> (f64, f64) {
        let p = params.p;
        let t = self.tau0;
        let kk = self.k1.powf(2.0 * p - 2.0);
        (
            (params.mu1 + params.beta * t.powf(p)) * kk,
            (params.mu2 * t.powf(2.0 * p - 2.0) + params.beta * t.powf(p - 2.0)) * kk,
        )
    }
}

/// Sign of `lim_{τ→0⁺} g(τ)`.
fn g_sign_at_zero(pr: &SystemParams) -> i8 {
    let p = pr.p;
    if p < 2.0 {
        if pr.beta != 0.0 {
            sign(-pr.beta)
        } else {
            sign(pr.mu1)
        }
    } else if p > 2.0 {
        sign(pr.mu1)
    } else {
        sign(pr.mu1 - pr.beta)
    }
}

/// Sign of `lim_{τ→∞} g(τ)`.
fn g_sign_at_infinity(pr: &SystemParams) -> i8 {
    let p = pr.p;
    if p > 2.0 {
        -1
    } else if p < 2.0 {
        if pr.beta != 0.0 {
            sign(pr.beta)
        } else {
            -1
        }
    } else if pr.beta != pr.mu2 {
        sign(pr.beta - pr.mu2)
    } else {
        sign(pr.mu1 - pr.beta)
    }
}

fn h_sign_at_infinity(pr: &SystemParams) -> i8 {
    let p = pr.p;
    if p > 2.0 {
        -1
    } else if p < 2.0 {
        if pr.beta != 0.0 {
            sign(pr.beta)
        } else {
            -1
        }
    } else {
        sign(pr.beta - pr.mu2)
    }
}

/// Pushes `x` outward (doubling) until `f(x)` carries the limiting sign `s`.
fn expand_to_sign<F: Fn(f64) -> f64>(f: F, mut x: f64, s: i8) -> f64 {
    for _ in 0..1100 {
        if sign(f(x)) == s || !x.is_finite() {
            break;
        }
        x *= 2.0;
    }
    x
}

/// Pulls `x` toward zero (halving) until `f(x)` carries the limiting sign `s`.
fn shrink_to_sign<F: Fn(f64) -> f64>(f: F, mut x: f64, s: i8) -> f64 {
    for _ in 0..1100 {
        if sign(f(x)) == s || x < f64::MIN_POSITIVE {
            break;
        }
        x *= 0.5;
    }
    x
}

/// Positive roots of `h`, in increasing order.
pub fn positive_roots_of_h(pr: &SystemParams) -> Vec<f64> {
    let p = pr.p;
    let hf = |t: f64| h_raw(pr, t);
    // h has a positive critical point only for β > 0, p ≠ 2.
    let crit = if pr.beta > 0.0 && p != 2.0 {
        Some((pr.beta / (pr.mu2 * (p - 1.0))).powf(1.0 / (p - 2.0)))
    } else {
        None
    };
    let h0 = -pr.beta * (p - 2.0);
    let s0 = sign(h0);
    let sinf = h_sign_at_infinity(pr);
    let mut out = Vec::new();
    let mut push_root = |lo: f64, hi: f64| {
        if let Ok(r) = roots::bracketed_root(hf, |t| h_prime_raw(pr, t), lo, hi) {
            out.push(r);
        }
    };
    match crit {
        Some(c) => {
            let hc = hf(c);
            let lo = shrink_to_sign(hf, c * 0.5, s0);
            if sign(hc) != s0 && s0 != 0 {
                push_root(lo, c);
            }
            let hi = expand_to_sign(hf, 2.0 * c.max(1.0), sinf);
            if sign(hc) != sinf && sinf != 0 {
                push_root(c, hi);
            }
            if hc == 0.0 {
                out.push(c);
            }
        }
        None => {
            if s0 != sinf && s0 != 0 && sinf != 0 {
                let lo = shrink_to_sign(hf, 0.5, s0);
                let hi = expand_to_sign(hf, 2.0, sinf);
                push_root(lo, hi);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Every positive root of `g`, in increasing order, found by bracketing
/// each monotone piece of `g`.
pub fn positive_roots_of_g(pr: &SystemParams) -> Vec<f64> {
    let gf = |t: f64| g_raw(pr, t);
    let gd = |t: f64| g_prime_raw(pr, t);
    let breaks = positive_roots_of_h(pr);

    let first = breaks.first().copied().unwrap_or(1.0).min(1.0);
    let last = breaks.last().copied().unwrap_or(1.0).max(1.0);
    let s0 = g_sign_at_zero(pr);
    let sinf = g_sign_at_infinity(pr);
    let lo = if s0 == 0 { first * 1e-8 } else { shrink_to_sign(gf, first * 0.5, s0) };
    let hi = if sinf == 0 { last * 1e8 } else { expand_to_sign(gf, last * 2.0, sinf) };

    let mut nodes = Vec::with_capacity(breaks.len() + 2);
    nodes.push(lo);
    nodes.extend(breaks.iter().copied());
    nodes.push(hi);

    let scale = pr.mu1.abs().max(pr.mu2.abs()).max(pr.beta.abs()).max(1.0);
    let mut out: Vec<f64> = Vec::new();
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (gf(a), gf(b));
        if sign(fa) != 0 && sign(fb) != 0 && sign(fa) != sign(fb) {
            if let Ok(r) = roots::bracketed_root(gf, gd, a, b) {
                out.push(r);
            }
        }
    }
    // tangential roots sitting exactly on a critical point of g
    for &c in &breaks {
        if gf(c).abs() <= ROOT_TOL * scale {
            out.push(c);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(b.abs()));
    out
}

/// Whether `(p, β)` lies in one of the windows where a root of `g` in `D`
/// with positive amplitudes is guaranteed.
pub fn in_existence_window(params: &SystemParams) -> bool {
    let b = params.beta;
    let neg = b < 0.0 && b > -(params.mu1 * params.mu2).sqrt();
    if params.p != 2.0 {
        neg || b > 0.0
    } else {
        neg || (b > 0.0 && b < params.mu2) || b > params.mu1
    }
}

/// Roots `τ₀ ∈ D` of `g` with their amplitudes `k₁`, ordered by `τ₀`.
pub fn solve_tau0(params: &SystemParams) -> Result<Vec<TauSolution>> {
    if !in_existence_window(params) {
        return Err(Error::NoRoot(format!(
            "β = {} lies outside the existence windows for p = {}",
            params.beta, params.p
        )));
    }
    let region = region_d(params);
    let p = params.p;
    let gf = |t: f64| g_raw(params, t);
    let gd = |t: f64| g_prime_raw(params, t);

    let taus: Vec<f64> = if p == 2.0 {
        vec![((params.mu1 - params.beta) / (params.mu2 - params.beta)).sqrt()]
    } else if params.beta < 0.0 {
        let a = params.beta.abs();
        let lo = (a / params.mu2).powf(1.0 / p);
        let hi = (params.mu1 / a).powf(1.0 / p);
        vec![roots::bracketed_root(gf, gd, lo, hi)?]
    } else {
        positive_roots_of_g(params)
    };

    let mut out = Vec::new();
    for t in taus {
        if !region.contains(t) || gf(t).abs() > ROOT_TOL {
            continue;
        }
        let sol = TauSolution::build(params, t, region);
        if !(sol.positivity_ok.0 && sol.positivity_ok.1) {
            return Err(Error::PositivityViolation { tau0: t });
        }
        out.push(sol);
    }
    if out.is_empty() {
        return Err(Error::NoRoot(format!("no root of g found in D = {region}")));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Min,
    Max,
    Inflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub tau: f64,
    pub kind: CriticalKind,
    pub f_value: f64,
}

/// Shape of `f` on `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LandscapeCase {
    /// Minimum at 0, a single interior maximum.
    MinAtZeroUniqueMax,
    /// Maximum at 0, a single interior minimum.
    MaxAtZeroUniqueMin,
    /// Minima at 0 and `τ₁`, maxima at `τ₂ < τ₁ < τ₃`.
    MinAtZeroTwoMaxima,
    /// Maxima at 0 and `τ₁`, minima at `τ₂ < τ₁ < τ₃`.
    MaxAtZeroTwoMinima,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Landscape {
    /// Critical points including the endpoint `τ = 0`, increasing in `τ`.
    pub critical_points: Vec<CriticalPoint>,
    pub tau_min: Option<f64>,
    pub k_min: Option<f64>,
    pub case_label: LandscapeCase,
}

impl Landscape {
    pub fn interior(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.critical_points.iter().filter(|c| c.tau > 0.0)
    }

    pub fn minima(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.critical_points.iter().filter(|c| c.kind == CriticalKind::Min)
    }
}

/// Critical-point census of `f` for `β > 0`.
pub fn classify_landscape(params: &SystemParams) -> Result<Landscape> {
    if !(params.beta > 0.0) {
        return Err(Error::Hypotheses(format!("landscape requires β > 0, got {}", params.beta)));
    }
    let gf = |t: f64| g_raw(params, t);
    let roots_g = positive_roots_of_g(params);
    let n_h = positive_roots_of_h(params).len();
    if roots_g.len() > n_h + 1 {
        return Err(Error::Unclassified(format!(
            "{} roots of g but only {} monotone pieces",
            roots_g.len(),
            n_h + 1
        )));
    }

    // sign of g (hence of f′) on each gap between consecutive roots
    let mut gap_signs = Vec::with_capacity(roots_g.len() + 1);
    let mut left = 0.0;
    for (i, &r) in roots_g.iter().enumerate() {
        let probe = if i == 0 { r * 0.5 } else { 0.5 * (left + r) };
        gap_signs.push(sign(gf(probe)));
        left = r;
    }
    gap_signs.push(sign(gf(if roots_g.is_empty() { 1.0 } else { 2.0 * left + 1.0 })));

    if gap_signs[0] != g_sign_at_zero(params) {
        return Err(Error::Unclassified("sign of f′ near 0 disagrees with its limit".into()));
    }
    if *gap_signs.last().unwrap() != g_sign_at_infinity(params) {
        return Err(Error::Unclassified("sign of f′ at infinity disagrees with its limit".into()));
    }

    let kind_of = |l: i8, r: i8| match (l, r) {
        (-1, 1) => CriticalKind::Min,
        (1, -1) => CriticalKind::Max,
        _ => CriticalKind::Inflection,
    };
    let mut points = vec![CriticalPoint {
        tau: 0.0,
        kind: if gap_signs[0] > 0 { CriticalKind::Min } else { CriticalKind::Max },
        f_value: eval_f(params, 0.0)?,
    }];
    for (i, &r) in roots_g.iter().enumerate() {
        points.push(CriticalPoint {
            tau: r,
            kind: kind_of(gap_signs[i], gap_signs[i + 1]),
            f_value: eval_f(params, r)?,
        });
    }

    let extrema: Vec<CriticalKind> =
        points.iter().map(|c| c.kind).filter(|&k| k != CriticalKind::Inflection).collect();
    if extrema.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Unclassified(format!("extrema do not alternate: {extrema:?}")));
    }
    use CriticalKind::{Max, Min};
    let case_label = match extrema.as_slice() {
        [Min, Max] => LandscapeCase::MinAtZeroUniqueMax,
        [Max, Min] => LandscapeCase::MaxAtZeroUniqueMin,
        [Min, Max, Min, Max] => LandscapeCase::MinAtZeroTwoMaxima,
        [Max, Min, Max, Min] => LandscapeCase::MaxAtZeroTwoMinima,
        other => return Err(Error::Unclassified(format!("unexpected extremum pattern {other:?}"))),
    };

    // compared through ln(f/f(0)), since a minimum near 0 can sit below
    // the resolution of f
    let mut best: Option<(f64, &CriticalPoint)> = None;
    for c in points.iter().filter(|c| c.kind == CriticalKind::Min && c.tau > 0.0) {
        let r = log_f_ratio(params, c.tau)?;
        if best.map_or(true, |(b, _)| r < b) {
            best = Some((r, c));
        }
    }
    let (tau_min, k_min) = match best {
        Some((r, c)) if r < 0.0 => {
            let amp = params.mu1 + params.beta * c.tau.powf(params.p);
            (Some(c.tau), Some(amp.powf(-1.0 / (2.0 * params.p - 2.0))))
        }
        _ => (None, None),
    };

    Ok(Landscape { critical_points: points, tau_min, k_min, case_label })
}

/// Output of [`tau_min_and_smu`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoupledConstant {
    pub tau_min: f64,
    pub k_min: f64,
    pub f_min: f64,
    pub s_mu: f64,
}

/// `S_{μ₁,μ₂} = f(τ_min)·S` from the global interior minimizer of `f`.
pub fn tau_min_and_smu(params: &SystemParams, sobolev_s: f64) -> Result<CoupledConstant> {
    let land = classify_landscape(params)?;
    let (tau_min, k_min) = match (land.tau_min, land.k_min) {
        (Some(t), Some(k)) => (t, k),
        _ => return Err(Error::SemitrivialMinimizer),
    };
    let stationarity = tau_min * g_raw(params, tau_min);
    if stationarity.abs() > ROOT_TOL * tau_min.max(1.0) {
        return Err(Error::ConstraintViolation(format!(
            "τ_min = {tau_min} fails stationarity (τg = {stationarity:e})"
        )));
    }
    let f_min = eval_f(params, tau_min)?;
    Ok(CoupledConstant { tau_min, k_min, f_min, s_mu: f_min * sobolev_s })
}

/// `(τ₀, l(β̃))` for `β̃ < 0` on the normalized system.
pub fn l_of_beta_tilde(norm: &NormalizedParams, beta_tilde: f64) -> Result<(f64, f64)> {
    let n = norm.with_beta_tilde(beta_tilde);
    let sol = solve_tau0(&n.as_system())?;
    let tau = sol[0].tau0;
    Ok((tau, eval_l(&n, tau)?))
}

/// Relative distance from `−√μ` and from 0 used as the search interval
/// for [`solve_beta_k`].
const BETA_EDGE: f64 = 1e-9;

/// Inverts the strictly decreasing map `β̃ ↦ l(β̃)` on `(−√μ, 0)`.
pub fn solve_beta_k(norm: &NormalizedParams, lambda_k: f64) -> Result<f64> {
    let root_mu = norm.mu.sqrt();
    let mut lo = -root_mu * (1.0 - BETA_EDGE);
    let mut hi = -root_mu * BETA_EDGE;
    let l_lo = l_of_beta_tilde(norm, lo)?.1;
    let l_hi = l_of_beta_tilde(norm, hi)?.1;
    if !(lambda_k > l_hi && lambda_k < l_lo) {
        return Err(Error::OutOfRange { target: lambda_k, lo: l_hi, hi: l_lo });
    }
    let tol = 1e-11 * lambda_k.abs().max(1.0);
    for _ in 0..roots::MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let l = l_of_beta_tilde(norm, mid)?.1;
        if (l - lambda_k).abs() <= tol {
            return Ok(mid);
        }
        // l decreases: l(mid) > λ means the target lies to the right
        if l > lambda_k {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= 1e-15 * root_mu {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(p: f64, mu1: f64, mu2: f64, beta: f64) -> SystemParams {
        SystemParams::new(0.5, p, 1, mu1, mu2, beta).unwrap()
    }

    #[test]
    fn quadratic_case_closed_form() {
        let pr = sp(2.0, 2.0, 1.0, 3.0);
        let sol = solve_tau0(&pr).unwrap();
        assert_eq!(sol.len(), 1);
        assert!((sol[0].tau0 - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((sol[0].k1 - (1.0f64 / 3.5).sqrt()).abs() < 1e-15);
        let bis = positive_roots_of_g(&pr);
        assert_eq!(bis.len(), 1);
        assert!((bis[0] - sol[0].tau0).abs() < 1e-12);
    }

    #[test]
    fn nonexistence_window_has_no_root() {
        assert!(matches!(solve_tau0(&sp(2.0, 2.0, 1.0, 1.5)), Err(Error::NoRoot(_))));
        assert!(matches!(solve_tau0(&sp(1.5, 2.0, 1.0, -2.0)), Err(Error::NoRoot(_))));
    }

    #[test]
    fn negative_beta_bracket_signs() {
        for &(p, beta) in &[(1.5, -0.7), (3.0, -1.2), (2.0, -0.3)] {
            let pr = sp(p, 2.0, 1.0, beta);
            let a = f64::abs(beta);
            let lo = (a / pr.mu2).powf(1.0 / p);
            let hi = (pr.mu1 / a).powf(1.0 / p);
            assert!(g_raw(&pr, lo) > 0.0);
            assert!(g_raw(&pr, hi) < 0.0);
            let sol = solve_tau0(&pr).unwrap();
            assert!(sol[0].tau0 > lo && sol[0].tau0 < hi);
            let (r1, r2) = sol[0].amplitude_relations(&pr);
            assert!((r1 - 1.0).abs() < 1e-10 && (r2 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn landscape_p3_small_beta() {
        let land = classify_landscape(&sp(3.0, 2.0, 1.0, 1.0)).unwrap();
        assert_eq!(land.case_label, LandscapeCase::MinAtZeroUniqueMax);
        assert_eq!(land.tau_min, None);
        let max = land.interior().next().unwrap();
        assert_eq!(max.kind, CriticalKind::Max);
        assert!(max.tau > 1.0);
    }

    #[test]
    fn landscape_quadratic_large_beta() {
        let pr = sp(2.0, 2.0, 1.0, 3.0);
        let land = classify_landscape(&pr).unwrap();
        assert_eq!(land.case_label, LandscapeCase::MaxAtZeroUniqueMin);
        let t = land.tau_min.unwrap();
        assert!((t - 0.5f64.sqrt()).abs() < 1e-12);
        // f'' > 0 at the minimizer
        let h = 1e-4;
        let f2 = eval_f(&pr, t + h).unwrap() - 2.0 * eval_f(&pr, t).unwrap()
            + eval_f(&pr, t - h).unwrap();
        assert!(f2 > 0.0);
    }

    #[test]
    fn semitrivial_minimizer() {
        let pr = sp(2.0, 2.0, 1.0, 0.5);
        assert!(matches!(tau_min_and_smu(&pr, 1.0), Err(Error::SemitrivialMinimizer)));
    }

    #[test]
    fn smu_for_quadratic_case() {
        let pr = sp(2.0, 2.0, 1.0, 3.0);
        let c = tau_min_and_smu(&pr, 2.0).unwrap();
        assert!((c.f_min - (3.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert!((c.s_mu - 2.0 * c.f_min).abs() < 1e-15);
    }

    #[test]
    fn beta_k_rejects_boundary_target() {
        let n = NormalizedParams::new(0.5, 1.5, 1, 2.0, -0.5).unwrap();
        assert!(matches!(solve_beta_k(&n, 2.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(solve_beta_k(&n, 1.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn beta_k_round_trip() {
        let n = NormalizedParams::new(0.5, 2.0, 1, 2.0, -0.5).unwrap();
        let (_, target) = l_of_beta_tilde(&n, -0.5).unwrap();
        let b = solve_beta_k(&n, target).unwrap();
        assert!((b + 0.5).abs() < 1e-9);
        let (_, back) = l_of_beta_tilde(&n, b).unwrap();
        assert!((back - target).abs() < 1e-10);
    }
}
