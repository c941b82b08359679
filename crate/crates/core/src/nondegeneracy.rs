//! Linearization at the proportional solution `(k₁w, τ₀k₁w)`: coefficient
//! algebra, the weighted eigenproblem `LΦ = λw^{2p−2}Φ`, and a numeric count
//! of the kernel of the two-component linearized operator.

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{eval_g_tilde, NormalizedParams};
use crate::eigen::{top_eigenpairs, EigOptions};
use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::spectral::{apply_l, apply_l_inverse, apply_l_power, Field, Grid};
use crate::tau::{TauSolution, ROOT_TOL};

pub const WEIGHT_FLOOR: f64 = 1e-10;
pub const MAX_CONDITIONING: f64 = 1e12;
pub const KERNEL_THRESHOLD: f64 = 1e-6;
pub const MIN_GAP: f64 = 100.0;
pub const CLAIM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearizationCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// Root `γ` with `a − bγ = 2p−1`; it equals `−τ₀`.
    pub branch: Branch,
    pub f_tilde: f64,
    pub theta: f64,
    pub tau0: f64,
    pub k1: f64,
}

impl LinearizationCoeffs {
    pub fn gamma(&self) -> f64 {
        match self.branch {
            Branch::Plus => self.gamma_plus,
            Branch::Minus => self.gamma_minus,
        }
    }
}

pub fn linearization_coeffs(
    norm: &NormalizedParams,
    sol: &TauSolution,
) -> Result<LinearizationCoeffs> {
    let NormalizedParams { p, mu, beta_tilde: bt, .. } = *norm;
    if bt == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let t = sol.tau0;
    let g = eval_g_tilde(norm, t)?;
    if g.abs() > ROOT_TOL * mu.max(1.0) {
        return Err(Error::ConstraintViolation(format!("g̃(τ₀) = {g:e} at τ₀ = {t}")));
    }
    let amp = mu + bt * t.powf(p);
    if !(amp > 0.0) {
        return Err(Error::PositivityViolation { tau0: t });
    }
    let kk = 1.0 / amp;
    let k1 = kk.powf(1.0 / (2.0 * p - 2.0));
    let a = (mu * (2.0 * p - 1.0) + bt * (p - 1.0) * t.powf(p)) * kk;
    let b = bt * p * t.powf(p - 1.0) * kk;
    let c = ((2.0 * p - 1.0) * t.powf(2.0 * p - 2.0) + bt * (p - 1.0) * t.powf(p - 2.0)) * kk;
    let disc = ((c - a).powi(2) + 4.0 * b * b).sqrt();
    // larger root without cancellation, the other from γ₊γ₋ = −1
    let (gamma_plus, gamma_minus) = if a >= c {
        let g = (a - c + disc) / (2.0 * b);
        (g, -1.0 / g)
    } else {
        let g = (a - c - disc) / (2.0 * b);
        (-1.0 / g, g)
    };
    let target = 2.0 * p - 1.0;
    let branch = if (a - b * gamma_plus - target).abs() <= (a - b * gamma_minus - target).abs() {
        Branch::Plus
    } else {
        Branch::Minus
    };
    let gamma = if branch == Branch::Plus { gamma_plus } else { gamma_minus };
    let f_tilde = b * gamma + c;
    let theta = gamma + (target - f_tilde) / b;
    Ok(LinearizationCoeffs {
        a,
        b,
        c,
        gamma_plus,
        gamma_minus,
        branch,
        f_tilde,
        theta,
        tau0: t,
        k1,
    })
}

/// `(f̃ ≠ 1, f̃ < 2p−1)` with margin [`CLAIM_TOL`].
pub fn check_claims(coeffs: &LinearizationCoeffs, norm: &NormalizedParams) -> (bool, bool) {
    let f = coeffs.f_tilde;
    ((f - 1.0).abs() > CLAIM_TOL, f < 2.0 * norm.p - 1.0 - CLAIM_TOL)
}

#[derive(Debug, Clone)]
pub struct WeightedSpectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Normalized by `∫w^{2p−2}Φ² = 1`.
    pub eigenfields: Vec<Field>,
    pub weight: Field,
    pub conditioning: f64,
    /// Smallest `|x|` among excluded nodes (∞ if none are excluded).
    pub exclusion_radius: f64,
}

impl WeightedSpectrum {
    /// Largest `|∫wΦ_kΦ_m|` for `k ≠ m`, normalized by the diagonal.
    pub fn max_weighted_overlap(&self) -> f64 {
        let f = &self.eigenfields;
        let gram = |i: usize, j: usize| self.weight.zip_map(&f[i], |m, a| m * a).inner(&f[j]);
        let mut worst = 0.0f64;
        for i in 0..f.len() {
            for j in 0..i {
                let v = gram(i, j).abs() / (gram(i, i) * gram(j, j)).sqrt();
                worst = worst.max(v);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    pub count: usize,
    pub weight_floor: f64,
    pub eig: EigOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            count: 6,
            weight_floor: WEIGHT_FLOOR,
            eig: EigOptions { block: 8, steps: 10, ..EigOptions::default() },
        }
    }
}

fn radius(grid: &Grid, idx: usize) -> f64 {
    let x = grid.point(idx);
    (x[0] * x[0] + x[1] * x[1]).sqrt()
}

pub fn weighted_spectrum(gs: &GroundState, opts: &SpectrumOptions) -> Result<WeightedSpectrum> {
    if opts.count == 0 || opts.count > 40 {
        return Err(Error::InvalidParams(format!("K = {} must lie in 1..=40", opts.count)));
    }
    let (s, p) = (gs.s, gs.p);
    let grid = gs.w.grid().clone();
    let weight = gs.w.map(|v| v.max(0.0).powf(2.0 * p - 2.0));
    let wmax = weight.max();
    let floor = opts.weight_floor * wmax;
    let mut wmin = f64::INFINITY;
    let mut exclusion_radius = f64::INFINITY;
    let sqrt_m: Vec<f64> = weight
        .values()
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            if m >= floor && m > 0.0 {
                wmin = wmin.min(m);
                m.sqrt()
            } else {
                exclusion_radius = exclusion_radius.min(radius(&grid, i));
                0.0
            }
        })
        .collect();
    let conditioning = wmax / wmin;
    if conditioning > MAX_CONDITIONING {
        return Err(Error::WeightFloorTooSmall { conditioning });
    }

    let op = |v: &[f64]| -> Vec<f64> {
        let x: Vec<f64> = v.iter().zip(&sqrt_m).map(|(a, m)| a * m).collect();
        let y = apply_l_inverse(&Field::from_vec(grid.clone(), x), s);
        y.values().iter().zip(&sqrt_m).map(|(a, m)| a * m).collect()
    };
    let pairs = top_eigenpairs(op, grid.len(), opts.count, &opts.eig)?;

    let mut eigenvalues = Vec::with_capacity(opts.count);
    let mut eigenfields = Vec::with_capacity(opts.count);
    for (theta, psi) in pairs.values.iter().zip(&pairs.vectors) {
        let lambda = 1.0 / theta;
        let x: Vec<f64> = psi.iter().zip(&sqrt_m).map(|(a, m)| a * m).collect();
        let phi = apply_l_inverse(&Field::from_vec(grid.clone(), x), s).scale(lambda);
        let wn = weight.zip_map(&phi, |m, a| m * a).inner(&phi).sqrt();
        let peak =
            phi.values().iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        let sign = if peak < 0.0 { -1.0 } else { 1.0 };
        eigenvalues.push(lambda);
        eigenfields.push(phi.scale(sign / wn));
    }
    Ok(WeightedSpectrum { eigenvalues, eigenfields, weight, conditioning, exclusion_radius })
}

/// Cosine similarity between two fields.
pub fn cosine_similarity(a: &Field, b: &Field) -> f64 {
    a.inner(b).abs() / (a.norm_l2() * b.norm_l2())
}

/// `max(|λ₁ − 1|, |λ_j − (2p−1)| for j = 2..N+1, ρ)`.
pub fn grid_tolerance(spec: &WeightedSpectrum, gs: &GroundState) -> f64 {
    let dim = gs.w.grid().dim();
    let target = 2.0 * gs.p - 1.0;
    let mut tol = (spec.eigenvalues[0] - 1.0).abs().max(gs.residual_norm);
    for l in spec.eigenvalues.iter().skip(1).take(dim) {
        tol = tol.max((l - target).abs());
    }
    tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Nondegenerate,
    Degenerate,
    Inconclusive,
}

/// Near-zero count of the preconditioned operator `I − K`.
#[derive(Debug, Clone, Serialize)]
pub struct KernelCount {
    /// Smallest singular values `|1 − κ|`, ascending.
    pub singular_values: Vec<f64>,
    pub kernel_dim: usize,
    pub kernel_gap: f64,
    /// False when an uncomputed eigenvalue could be closer to 1.
    pub complete: bool,
}

fn count_kernel(kappa: &[f64], wanted: usize) -> KernelCount {
    let mut sv: Vec<f64> = kappa.iter().map(|k| (1.0 - k).abs()).collect();
    sv.sort_by(f64::total_cmp);
    sv.truncate(wanted);
    let last_kappa = kappa.iter().copied().fold(f64::INFINITY, f64::min);
    let complete = 1.0 - last_kappa >= *sv.last().unwrap_or(&0.0);
    let largest = sv.last().copied().unwrap_or(0.0);
    let thr = KERNEL_THRESHOLD * largest;
    let kernel_dim = sv.iter().filter(|&&v| v < thr).count();
    let kernel_gap = if kernel_dim > 0 && kernel_dim < sv.len() {
        sv[kernel_dim] / sv[kernel_dim - 1]
    } else {
        f64::NAN
    };
    KernelCount { singular_values: sv, kernel_dim, kernel_gap, complete }
}

fn kernel_eig_options(dim: usize, count: usize) -> EigOptions {
    EigOptions {
        block: count,
        steps: if dim == 1 { 8 } else { 5 },
        tol: 1e-9,
        max_restarts: 200,
        ..EigOptions::default()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyReport {
    pub params: NormalizedParams,
    pub coeffs: LinearizationCoeffs,
    pub spectrum: Vec<f64>,
    pub distances: Vec<f64>,
    pub kernel_dim: usize,
    pub kernel_gap: f64,
    pub singular_values: Vec<f64>,
    pub grid_tol: f64,
    /// Largest `‖T(θ∂_jw, ∂_jw)‖ / ‖L(θ∂_jw, ∂_jw)‖`.
    pub basis_image_norm: f64,
    pub basis_validated: bool,
    /// Smallest fraction of a predicted kernel vector lying in the
    /// computed kernel.
    pub kernel_alignment: f64,
    pub verdict: Verdict,
}

fn split(grid: &Arc<Grid>, v: &[f64]) -> (Field, Field) {
    let n = grid.len();
    (Field::from_vec(grid.clone(), v[..n].to_vec()), Field::from_vec(grid.clone(), v[n..].to_vec()))
}

fn join(a: Field, b: Field) -> Vec<f64> {
    let mut v = a.into_values();
    v.extend(b.into_values());
    v
}

pub fn kernel_dimension(
    gs: &GroundState,
    sol: &TauSolution,
    norm: &NormalizedParams,
    spec_opts: &SpectrumOptions,
) -> Result<NondegeneracyReport> {
    let spectrum = weighted_spectrum(gs, spec_opts)?;
    kernel_dimension_with(gs, &spectrum, sol, norm)
}

/// As [`kernel_dimension`], reusing a computed spectrum.
pub fn kernel_dimension_with(
    gs: &GroundState,
    spectrum: &WeightedSpectrum,
    sol: &TauSolution,
    norm: &NormalizedParams,
) -> Result<NondegeneracyReport> {
    let coeffs = linearization_coeffs(norm, sol)?;
    let (s, p) = (gs.s, gs.p);
    let grid = gs.w.grid().clone();
    let dim = grid.dim();
    let m = gs.w.map(|v| v.max(0.0).powf(2.0 * p - 2.0));
    let (a, b, c) = (coeffs.a, coeffs.b, coeffs.c);

    let weight_apply = |phi: &Field, psi: &Field| -> (Field, Field) {
        let first = phi.zip_map(psi, |u, v| a * u + b * v).zip_map(&m, |u, w| u * w);
        let second = phi.zip_map(psi, |u, v| b * u + c * v).zip_map(&m, |u, w| u * w);
        (first, second)
    };
    let op = |v: &[f64]| -> Vec<f64> {
        let (phi, psi) = split(&grid, v);
        let (phi, psi) = (apply_l_power(&phi, s, -0.5), apply_l_power(&psi, s, -0.5));
        let (f, g) = weight_apply(&phi, &psi);
        join(apply_l_power(&f, s, -0.5), apply_l_power(&g, s, -0.5))
    };
    let wanted = 2 * dim + 4;
    let count = wanted + 6;
    let pairs = top_eigenpairs(op, 2 * grid.len(), count, &kernel_eig_options(dim, count))?;
    let kc = count_kernel(&pairs.values, wanted);

    // Predicted kernel (θ∂_jw, ∂_jw) and its image under T = L − W.
    let mut image_norm = 0.0f64;
    let mut predicted = Vec::with_capacity(dim);
    for axis in 0..dim {
        let dw = gs.w.derivative(axis);
        let phi = dw.scale(coeffs.theta);
        let (f, g) = weight_apply(&phi, &dw);
        let lphi = apply_l(&phi, s);
        let lpsi = apply_l(&dw, s);
        let num =
            (lphi.axpy(-1.0, &f).norm_l2().powi(2) + lpsi.axpy(-1.0, &g).norm_l2().powi(2)).sqrt();
        let den = (lphi.norm_l2().powi(2) + lpsi.norm_l2().powi(2)).sqrt();
        image_norm = image_norm.max(num / den);
        predicted.push(join(phi, dw));
    }

    // Computed kernel vectors z = L^{−1/2}y, orthonormalized.
    let mut order: Vec<usize> = (0..pairs.values.len()).collect();
    order.sort_by(|&i, &j| (1.0 - pairs.values[i]).abs().total_cmp(&(1.0 - pairs.values[j]).abs()));
    let mut kernel: Vec<Vec<f64>> = Vec::new();
    for &i in order.iter().take(kc.kernel_dim) {
        let (y1, y2) = split(&grid, &pairs.vectors[i]);
        let mut z = join(apply_l_power(&y1, s, -0.5), apply_l_power(&y2, s, -0.5));
        for q in &kernel {
            let d: f64 = q.iter().zip(&z).map(|(x, y)| x * y).sum();
            z.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
        }
        let nz = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        z.iter_mut().for_each(|x| *x /= nz);
        kernel.push(z);
    }
    let kernel_alignment = predicted
        .iter()
        .map(|v| {
            let nv2: f64 = v.iter().map(|x| x * x).sum();
            let proj2: f64 = kernel
                .iter()
                .map(|q| q.iter().zip(v).map(|(x, y)| x * y).sum::<f64>().powi(2))
                .sum();
            (proj2 / nv2).sqrt()
        })
        .fold(1.0f64, f64::min);

    let grid_tol = grid_tolerance(spectrum, gs);
    let distances: Vec<f64> =
        spectrum.eigenvalues.iter().map(|l| (coeffs.f_tilde - l).abs()).collect();
    let min_distance = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let gap_ok = kc.kernel_gap >= MIN_GAP;
    let verdict = if !kc.complete {
        Verdict::Inconclusive
    } else if kc.kernel_dim == dim && gap_ok && min_distance >= 10.0 * grid_tol {
        Verdict::Nondegenerate
    } else if kc.kernel_dim > dim && gap_ok {
        Verdict::Degenerate
    } else {
        Verdict::Inconclusive
    };
    Ok(NondegeneracyReport {
        params: *norm,
        coeffs,
        spectrum: spectrum.eigenvalues.clone(),
        distances,
        kernel_dim: kc.kernel_dim,
        kernel_gap: kc.kernel_gap,
        singular_values: kc.singular_values,
        grid_tol,
        basis_image_norm: image_norm,
        basis_validated: image_norm <= 10.0 * grid_tol,
        kernel_alignment,
        verdict,
    })
}

/// Kernel count of the scalar operator `L − (2p−1)w^{2p−2}` (the decoupled
/// case, one component at a time).
pub fn scalar_kernel(gs: &GroundState) -> Result<KernelCount> {
    let (s, p) = (gs.s, gs.p);
    let grid = gs.w.grid().clone();
    let dim = grid.dim();
    let mw = gs.w.map(|v| (2.0 * p - 1.0) * v.max(0.0).powf(2.0 * p - 2.0));
    let op = |v: &[f64]| -> Vec<f64> {
        let x = apply_l_power(&Field::from_vec(grid.clone(), v.to_vec()), s, -0.5);
        apply_l_power(&x.zip_map(&mw, |a, m| a * m), s, -0.5).into_values()
    };
    let wanted = dim + 3;
    let count = wanted + 4;
    let pairs = top_eigenpairs(op, grid.len(), count, &kernel_eig_options(dim, count))?;
    Ok(count_kernel(&pairs.values, wanted))
}
