//! Direct minimization of the coupled quotient
//! `Q(u, v) = (⟨Lu,u⟩ + ⟨Lv,v⟩) / (∫μ₁|u|^{2p} + 2β|u|ᵖ|v|ᵖ + μ₂|v|^{2p})^{1/p}`,
//! residuals of the coupled system, and the `B′(μ₁)` identity.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::SystemParams;
use crate::error::{Error, Result};
use crate::ground_state::{recenter, GroundState};
use crate::spectral::{apply_l, apply_l_inverse, Field, Grid};
use crate::tau::classify_landscape;

/// Floor applied to the fields before fractional powers.
pub const FIELD_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy)]
pub struct DescentOptions {
    /// Relative decrease of `Q` over [`DescentOptions::window`] steps.
    pub tol: f64,
    pub window: usize,
    /// Preconditioned gradient norm, relative, below which the pair is
    /// taken as stationary.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { tol: 1e-8, window: 25, grad_tol: 1e-8, max_iter: 5000, restarts: 8, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct CoupledState {
    pub u: Field,
    pub v: Field,
    pub quotient_value: f64,
    pub energy_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateLog {
    pub label: String,
    pub quotient: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Minimization {
    pub best: CoupledState,
    pub candidates: Vec<CandidateLog>,
    /// Per-iteration quotient values of the best run.
    pub history: Vec<f64>,
}

struct Pieces {
    lu: Field,
    lv: Field,
    num: f64,
    den: f64,
    f1: Field,
    f2: Field,
}

fn floored(u: &Field) -> Field {
    u.map(|x| x.max(FIELD_FLOOR))
}

fn pieces(params: &SystemParams, u: &Field, v: &Field) -> Pieces {
    let SystemParams { s, p, mu1, mu2, beta, .. } = *params;
    let (uf, vf) = (u.map(|x| x.max(0.0)), v.map(|x| x.max(0.0)));
    let lu = apply_l(u, s);
    let lv = apply_l(v, s);
    let num = lu.inner(u) + lv.inner(v);
    let up = uf.map(|x| x.powf(p));
    let vp = vf.map(|x| x.powf(p));
    let den_density = up.zip_map(&vp, |a, b| mu1 * a * a + 2.0 * beta * a * b + mu2 * b * b);
    let den = den_density.integral();
    let f1 =
        uf.zip_map(&vf, |a, b| mu1 * a.powf(2.0 * p - 1.0) + beta * b.powf(p) * a.powf(p - 1.0));
    let f2 =
        uf.zip_map(&vf, |a, b| mu2 * b.powf(2.0 * p - 1.0) + beta * a.powf(p) * b.powf(p - 1.0));
    Pieces { lu, lv, num, den, f1, f2 }
}

/// `Q(u, v)`.
pub fn coupled_quotient(params: &SystemParams, u: &Field, v: &Field) -> Result<f64> {
    let pc = pieces(params, u, v);
    if !(pc.den > 0.0) {
        return Err(Error::Domain("quotient denominator is not positive".into()));
    }
    Ok(pc.num / pc.den.powf(1.0 / params.p))
}

/// `I(u, v) = ½(⟨Lu,u⟩+⟨Lv,v⟩) − (1/2p)∫(μ₁|u|^{2p} + 2β|u|ᵖ|v|ᵖ + μ₂|v|^{2p})`.
pub fn energy_functional(params: &SystemParams, u: &Field, v: &Field) -> f64 {
    let pc = pieces(params, u, v);
    0.5 * pc.num - pc.den / (2.0 * params.p)
}

/// Multiplies the pair by `t` with `t^{2p−2} = N/D`, which turns a critical
/// point of the quotient into a solution of the system.
pub fn euler_lagrange_rescale(params: &SystemParams, u: &Field, v: &Field) -> (Field, Field) {
    let pc = pieces(params, u, v);
    let t = (pc.num / pc.den).powf(1.0 / (2.0 * params.p - 2.0));
    (u.scale(t), v.scale(t))
}

fn zero_safe_ratio(num: f64, a: f64, b: f64) -> f64 {
    let den = a.max(b);
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Relative residuals of both equations after Euler–Lagrange rescaling.
pub fn vector_residual(params: &SystemParams, u: &Field, v: &Field) -> (f64, f64) {
    let (u, v) = euler_lagrange_rescale(params, u, v);
    let pc = pieces(params, &u, &v);
    let ru = pc.lu.axpy(-1.0, &pc.f1).norm_l2();
    let rv = pc.lv.axpy(-1.0, &pc.f2).norm_l2();
    (
        zero_safe_ratio(ru, pc.f1.norm_l2(), pc.lu.norm_l2()),
        zero_safe_ratio(rv, pc.f2.norm_l2(), pc.lv.norm_l2()),
    )
}

struct Run {
    u: Field,
    v: Field,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn log_quotient(pc: &Pieces, p: f64) -> f64 {
    pc.num.ln() - pc.den.ln() / p
}

/// Preconditioned descent on `log Q`. The gradient is taken in the metric
/// induced by `L`, so the first trial step `α = N/2` is a plain fixed-point
/// update `u ← (N/D)L⁻¹F₁`.
fn descend(params: &SystemParams, u0: Field, v0: Field, opts: &DescentOptions) -> Result<Run> {
    let (s, p) = (params.s, params.p);
    let mut u = floored(&u0);
    let mut v = floored(&v0);
    let mut pc = pieces(params, &u, &v);
    if !(pc.den > 0.0 && pc.num > 0.0) {
        return Err(Error::CollapseToZero);
    }
    let mut e = log_quotient(&pc, p);
    let mut history = vec![e.exp()];
    for it in 0..opts.max_iter {
        let gu = pc.lu.scale(2.0 / pc.num).axpy(-2.0 / pc.den, &pc.f1);
        let gv = pc.lv.scale(2.0 / pc.num).axpy(-2.0 / pc.den, &pc.f2);
        let du = apply_l_inverse(&gu, s);
        let dv = apply_l_inverse(&gv, s);
        let slope = gu.inner(&du) + gv.inner(&dv);
        if (slope * pc.num / 4.0).max(0.0).sqrt() < opts.grad_tol {
            return Ok(Run { u, v, history, iterations: it, converged: true });
        }
        let mut alpha = 0.5 * pc.num;
        let mut accepted = None;
        for _ in 0..40 {
            let nu = floored(&u.axpy(-alpha, &du));
            let nv = floored(&v.axpy(-alpha, &dv));
            let npc = pieces(params, &nu, &nv);
            if npc.den > 0.0 && npc.num > 0.0 {
                let ne = log_quotient(&npc, p);
                if ne <= e - 1e-4 * alpha * slope {
                    accepted = Some((nu, nv, npc, ne));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((nu, nv, npc, ne)) = accepted else {
            return Ok(Run { u, v, history, iterations: it, converged: true });
        };
        u = nu;
        v = nv;
        pc = npc;
        e = ne;
        history.push(e.exp());
        let k = history.len();
        if k > opts.window {
            let old = history[k - 1 - opts.window];
            if (old - history[k - 1]) <= opts.tol * history[k - 1] {
                return Ok(Run { u, v, history, iterations: it + 1, converged: true });
            }
        }
    }
    Ok(Run { u, v, history, iterations: opts.max_iter, converged: false })
}

/// Random positive seed: a sum of three Gaussians near the origin.
pub fn random_bump(grid: Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
    let bumps: Vec<(f64, [f64; 2], f64)> = (0..3)
        .map(|_| {
            let a = rng.gen_range(0.2..2.0);
            let c = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let sigma: f64 = rng.gen_range(0.5..3.0);
            (a, c, sigma)
        })
        .collect();
    let dim = grid.dim();
    Field::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|(a, c, sg)| {
                let mut r2 = (x[0] - c[0]).powi(2);
                if dim == 2 {
                    r2 += (x[1] - c[1]).powi(2);
                }
                a * (-0.5 * r2 / (sg * sg)).exp()
            })
            .sum()
    })
}

fn state_from(params: &SystemParams, u: &Field, v: &Field) -> Result<CoupledState> {
    let (u, v) = euler_lagrange_rescale(params, u, v);
    let quotient_value = coupled_quotient(params, &u, &v)?;
    let energy_value = energy_functional(params, &u, &v);
    Ok(CoupledState { u, v, quotient_value, energy_value })
}

/// Descent from `opts.restarts` random seeds plus the informed seed
/// `(w, τ_min·w)`, run in parallel; returns the lowest quotient.
pub fn minimize_quotient(
    params: &SystemParams,
    gs: &GroundState,
    opts: &DescentOptions,
) -> Result<Minimization> {
    if !(params.beta > 0.0) {
        return Err(Error::Hypotheses(format!("β = {} must be positive", params.beta)));
    }
    let grid = gs.w.grid().clone();
    let tau_min = classify_landscape(params)?.tau_min.unwrap_or(0.0);
    let mut seeds: Vec<(String, Field, Field)> =
        vec![("informed".into(), gs.w.clone(), gs.w.scale(tau_min))];
    for r in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
        let u = random_bump(grid.clone(), &mut rng);
        let v = random_bump(grid.clone(), &mut rng);
        seeds.push((format!("random-{r}"), u, v));
    }
    let runs: Vec<(String, Result<Run>)> = seeds
        .into_par_iter()
        .map(|(label, u, v)| {
            let run = descend(params, u, v, opts);
            (label, run)
        })
        .collect();

    let mut candidates = Vec::new();
    let mut best: Option<(f64, Run)> = None;
    let mut last_err = None;
    for (label, run) in runs {
        match run {
            Ok(run) => {
                let q = *run.history.last().unwrap();
                candidates.push(CandidateLog {
                    label,
                    quotient: q,
                    iterations: run.iterations,
                    converged: run.converged,
                });
                if run.converged && best.as_ref().map_or(true, |(bq, _)| q < *bq) {
                    best = Some((q, run));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((_, run)) = best else {
        return Err(last_err.unwrap_or(Error::NonConvergence {
            iterations: opts.max_iter,
            last_change: f64::NAN,
        }));
    };
    Ok(Minimization { best: state_from(params, &run.u, &run.v)?, candidates, history: run.history })
}

/// `‖v − τu‖₂ / ‖u‖₂`.
pub fn proportionality_error(state: &CoupledState, tau: f64) -> f64 {
    state.v.axpy(-tau, &state.u).norm_l2() / state.u.norm_l2()
}

/// Relative L² distance from `w` after recentering and matching amplitudes
/// at the peak.
pub fn profile_distance(field: &Field, w: &Field) -> f64 {
    let c = recenter(field).symmetrize_even();
    let scaled = c.scale(w.at_origin() / c.at_origin());
    scaled.axpy(-1.0, w).norm_l2() / w.norm_l2()
}

/// Rescaling `τ_n` with `τ_n^{2p}∫|u|^{2p} = ∫|v|^{2p}` and `z = v/τ_n`.
pub fn matched_rescaling(u: &Field, v: &Field, p: f64) -> (f64, Field) {
    let tau = (v.integral_abs_pow(2.0 * p) / u.integral_abs_pow(2.0 * p)).powf(1.0 / (2.0 * p));
    (tau, v.scale(1.0 / tau))
}

fn b_of_mu1(params: &SystemParams) -> Result<f64> {
    let land = classify_landscape(params)?;
    match (land.tau_min, land.k_min) {
        (Some(t), Some(k)) => Ok(k * k * (1.0 + t * t)),
        _ => Err(Error::SemitrivialMinimizer),
    }
}

fn bprime_hypotheses(params: &SystemParams) -> bool {
    let p = params.p;
    (p == 2.0 && params.beta > params.mu1) || (p > 1.0 && p < 2.0 && params.beta > 0.0)
}

/// `(lhs, rhs)`: centered difference of `B(μ₁) = k_min²(1+τ_min²)B₁` and
/// `−k_min^{2p}∫w^{2p}/(2p)`.
pub fn check_bprime(params: &SystemParams, gs: &GroundState, delta_mu: f64) -> Result<(f64, f64)> {
    if !bprime_hypotheses(params) {
        return Err(Error::Hypotheses(
            "requires β > μ₁ with p = 2, or β > 0 with 1 < p < 2".into(),
        ));
    }
    if !(1e-5..=1e-2).contains(&delta_mu) {
        return Err(Error::InvalidParams(format!("δ = {delta_mu:e} must lie in [1e−5, 1e−2]")));
    }
    let p = params.p;
    let plus = params.with_mu1(params.mu1 + delta_mu)?;
    let minus = params.with_mu1(params.mu1 - delta_mu)?;
    if !(bprime_hypotheses(&plus) && bprime_hypotheses(&minus)) {
        return Err(Error::Hypotheses("the stencil leaves the admissible region".into()));
    }
    let w2p = gs.w.integral_abs_pow(2.0 * p);
    let b1 = (p - 1.0) / (2.0 * p) * w2p;
    let lhs = (b_of_mu1(&plus)? - b_of_mu1(&minus)?) * b1 / (2.0 * delta_mu);
    let k = classify_landscape(params)?.k_min.ok_or(Error::SemitrivialMinimizer)?;
    let rhs = -k.powf(2.0 * p) * w2p / (2.0 * p);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::eval_f;
    use crate::ground_state::{solve_w, GsOptions};

    fn gs() -> GroundState {
        solve_w(1.0, 2.0, Grid::new(1, 512, 24.0).unwrap(), GsOptions::default()).unwrap()
    }

    fn params() -> SystemParams {
        SystemParams::new(1.0, 2.0, 1, 2.0, 1.0, 3.0).unwrap()
    }

    #[test]
    fn informed_seed_takes_no_steps() {
        let gs = gs();
        let pr = params();
        let t = 0.5f64.sqrt();
        let run = descend(&pr, gs.w.clone(), gs.w.scale(t), &DescentOptions::default()).unwrap();
        assert_eq!(run.iterations, 0);
        let q = run.history[0];
        let expect = eval_f(&pr, t).unwrap() * gs.s_value;
        assert!((q - expect).abs() / expect < 1e-9);
    }

    #[test]
    fn constructed_pair_has_small_residuals() {
        let gs = gs();
        let pr = params();
        let t = 0.5f64.sqrt();
        let k = (pr.mu1 + pr.beta * t * t).powf(-0.5);
        let (ru, rv) = vector_residual(&pr, &gs.w.scale(k), &gs.w.scale(k * t));
        assert!(ru <= 5.0 * gs.residual_norm && rv <= 5.0 * gs.residual_norm, "{ru} {rv}");
    }

    #[test]
    fn semitrivial_pair() {
        let gs = gs();
        let pr = params();
        let k = pr.mu1.powf(-0.5);
        let (ru, rv) = vector_residual(&pr, &gs.w.scale(k), &Field::zeros(gs.w.grid().clone()));
        assert!(ru <= 5.0 * gs.residual_norm);
        assert!(rv < 1e-12);
    }

    #[test]
    fn random_pair_is_not_a_solution() {
        let gs = gs();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_bump(gs.w.grid().clone(), &mut rng);
        let v = random_bump(gs.w.grid().clone(), &mut rng);
        let (ru, rv) = vector_residual(&params(), &u, &v);
        assert!(ru > 1e-4 && rv > 1e-4);
    }

    #[test]
    fn bprime_rejects_bad_inputs() {
        let gs = gs();
        let weak = SystemParams::new(1.0, 2.0, 1, 2.0, 1.0, 0.5).unwrap();
        assert!(matches!(check_bprime(&weak, &gs, 1e-3), Err(Error::Hypotheses(_))));
        assert!(check_bprime(&params(), &gs, 1e-1).is_err());
    }

    #[test]
    fn bprime_quadratic_fixture() {
        let gs = gs();
        let (lhs, rhs) = check_bprime(&params(), &gs, 1e-4).unwrap();
        assert!((lhs - rhs).abs() / rhs.abs() < 1e-3);
    }
}
