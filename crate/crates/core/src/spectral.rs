//! Periodic-box discretization of ℝᴺ (N = 1 or 2) and Fourier-multiplier
//! operators.
//!
//! The box is `[−L, L)ᴺ` with `n` nodes per axis, `x_j = −L + j·dx`, and
//! angular wavenumbers `ξ_j = πj/L` for `j ∈ {−n/2, …, n/2−1}`. The origin
//! sits on node `n/2` of every axis. Integrals use the rectangle rule, which
//! is spectrally accurate for smooth periodic integrands.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct Grid {
    dim: usize,
    n: usize,
    half_length: f64,
    dx: f64,
    /// Per-axis angular wavenumbers in FFT bin order.
    wavenumbers: Vec<f64>,
    /// `|ξ|²` for every mode, in the same layout as the values.
    xi_sq: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("half_length", &self.half_length)
            .finish()
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_length: f64) -> Result<Arc<Self>> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidParams(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParams(format!("n = {n} must be a power of two ≥ 8")));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::InvalidParams(format!("L = {half_length} must be positive")));
        }
        let dx = 2.0 * half_length / n as f64;
        let wavenumbers: Vec<f64> = (0..n)
            .map(|m| {
                let j = if m < n / 2 { m as i64 } else { m as i64 - n as i64 };
                std::f64::consts::PI * j as f64 / half_length
            })
            .collect();
        let xi_sq = match dim {
            1 => wavenumbers.iter().map(|k| k * k).collect(),
            _ => {
                let mut v = Vec::with_capacity(n * n);
                for k0 in &wavenumbers {
                    for k1 in &wavenumbers {
                        v.push(k0 * k0 + k1 * k1);
                    }
                }
                v
            }
        };
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self { dim, n, half_length, dx, wavenumbers, xi_sq, fwd, inv }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Total number of nodes, `nᴺ`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of a single node, `dxᴺ`.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.dim as i32)
    }

    /// Node coordinate along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Flat index of the origin node.
    pub fn origin_index(&self) -> usize {
        match self.dim {
            1 => self.n / 2,
            _ => (self.n / 2) * self.n + self.n / 2,
        }
    }

    /// Point `x` of a flat index.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coord(idx), 0.0],
            _ => [self.coord(idx / self.n), self.coord(idx % self.n)],
        }
    }

    /// Flat index of the reflection `x → −x` (per axis, `j → n − j mod n`).
    pub fn reflect_index(&self, idx: usize) -> usize {
        let r = |j: usize| (self.n - j) % self.n;
        match self.dim {
            1 => r(idx),
            _ => r(idx / self.n) * self.n + r(idx % self.n),
        }
    }

    pub fn xi_sq(&self) -> &[f64] {
        &self.xi_sq
    }

    fn fft_rows(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        plan.process(data);
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        match self.dim {
            1 => self.fft_rows(data, inverse),
            _ => {
                let n = self.n;
                self.fft_rows(data, inverse);
                transpose_square(data, n);
                self.fft_rows(data, inverse);
                transpose_square(data, n);
            }
        }
    }

    /// Forward transform of real values (unnormalized DFT).
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    /// Inverse transform, normalized, keeping the real part.
    pub fn inverse_real(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut coeffs, true);
        let scale = 1.0 / self.len() as f64;
        coeffs.into_iter().map(|c| c.re * scale).collect()
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// A real-valued function sampled on a [`Grid`].
#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("grid", &self.grid).field("len", &self.values.len()).finish()
    }
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParams(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let len = grid.len();
        Self { grid, values: vec![0.0; len] }
    }

    /// Samples `f(x)` (with `x = [x₀, x₁]`, `x₁ = 0` in one dimension).
    pub fn from_fn<F: Fn([f64; 2]) -> f64>(grid: Arc<Grid>, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self::from_vec(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::from_vec(self.grid.clone(), values)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c·other`
    pub fn axpy(&self, c: f64, other: &Field) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn at_origin(&self) -> f64 {
        self.values[self.grid.origin_index()]
    }

    /// `∫ u` by the rectangle rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `⟨u, v⟩ = ∫ u v`.
    pub fn inner(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `∫ |u|^q`.
    pub fn integral_abs_pow(&self, q: f64) -> f64 {
        self.values.iter().map(|v| v.abs().powf(q)).sum::<f64>() * self.grid.cell_volume()
    }

    /// L² norm evaluated in coefficient space (Parseval).
    pub fn norm_l2_spectral(&self) -> f64 {
        let c = self.grid.forward(&self.values);
        let sum: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        (sum * self.grid.cell_volume() / self.grid.len() as f64).sqrt()
    }

    /// Applies the real Fourier multiplier `m(|ξ|²)`.
    pub fn apply_radial_multiplier<M: Fn(f64) -> f64>(&self, m: M) -> Self {
        let mut c = self.grid.forward(&self.values);
        for (z, &k2) in c.iter_mut().zip(self.grid.xi_sq()) {
            *z *= m(k2);
        }
        Self::from_vec(self.grid.clone(), self.grid.inverse_real(c))
    }

    /// Spectral partial derivative along `axis` (Nyquist mode dropped).
    pub fn derivative(&self, axis: usize) -> Self {
        let g = &self.grid;
        let n = g.n();
        let mut c = g.forward(&self.values);
        for (idx, z) in c.iter_mut().enumerate() {
            let m = match (g.dim(), axis) {
                (1, _) => idx,
                (_, 0) => idx / n,
                _ => idx % n,
            };
            if m == n / 2 {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= Complex64::new(0.0, g.wavenumbers()[m]);
            }
        }
        Self::from_vec(g.clone(), g.inverse_real(c))
    }

    /// Translates by `shift` (so the result is `u(x − shift)`) via a phase
    /// rotation in coefficient space.
    pub fn translate(&self, shift: [f64; 2]) -> Self {
        let g = &self.grid;
        let n = g.n();
        let k = g.wavenumbers();
        // the Nyquist mode cos(kx) shifts to cos(ka)·cos(kx) on the grid
        let factor = |j: usize, a: f64| {
            if j == n / 2 {
                Complex64::new((k[j] * a).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, -k[j] * a)
            }
        };
        let mut c = g.forward(&self.values);
        for (idx, z) in c.iter_mut().enumerate() {
            *z *= match g.dim() {
                1 => factor(idx, shift[0]),
                _ => factor(idx / n, shift[0]) * factor(idx % n, shift[1]),
            };
        }
        Self::from_vec(g.clone(), g.inverse_real(c))
    }

    /// Average of the field and its reflection `x → −x` through the origin node.
    pub fn symmetrize_even(&self) -> Self {
        let g = &self.grid;
        let values = (0..g.len())
            .map(|i| 0.5 * (self.values[i] + self.values[g.reflect_index(i)]))
            .collect();
        Self::from_vec(g.clone(), values)
    }

    /// Writes `x,value` rows (one-dimensional grids only).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        if self.grid.dim() != 1 {
            return Err(Error::InvalidParams("CSV export is only defined for N = 1".into()));
        }
        writeln!(out, "x,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e}", self.grid.coord(j), v)?;
        }
        Ok(())
    }

    /// Flat binary dump: a 32-byte header `(N: u64, n: u64, L: f64, s: f64)`
    /// followed by `nᴺ` values, all little-endian.
    pub fn write_binary<W: Write>(&self, s: f64, mut out: W) -> Result<()> {
        out.write_all(&(self.grid.dim() as u64).to_le_bytes())?;
        out.write_all(&(self.grid.n() as u64).to_le_bytes())?;
        out.write_all(&self.grid.half_length().to_le_bytes())?;
        out.write_all(&s.to_le_bytes())?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn save_binary(&self, s: f64, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_binary(s, &mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Reads a dump written by [`Field::write_binary`]; returns the field and `s`.
    pub fn read_binary<R: Read>(mut input: R) -> Result<(Self, f64)> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let dim = u64::from_le_bytes(next(&mut input)?) as usize;
        let n = u64::from_le_bytes(next(&mut input)?) as usize;
        let half_length = f64::from_le_bytes(next(&mut input)?);
        let s = f64::from_le_bytes(next(&mut input)?);
        let grid = Grid::new(dim, n, half_length)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            values.push(f64::from_le_bytes(next(&mut input)?));
        }
        Ok((Field::new(grid, values)?, s))
    }

    pub fn load_binary(path: &Path) -> Result<(Self, f64)> {
        Self::read_binary(BufReader::new(File::open(path)?))
    }
}

/// `(−Δ)ˢ u`: multiplier `|ξ|^{2s}`, zero on the constant mode.
pub fn frac_laplacian(u: &Field, s: f64) -> Field {
    u.apply_radial_multiplier(|k2| if k2 == 0.0 { 0.0 } else { k2.powf(s) })
}

/// `L u = (−Δ)ˢ u + u`.
pub fn apply_l(u: &Field, s: f64) -> Field {
    u.apply_radial_multiplier(|k2| 1.0 + k2.powf(s))
}

/// `L⁻¹ u`.
pub fn apply_l_inverse(u: &Field, s: f64) -> Field {
    u.apply_radial_multiplier(|k2| 1.0 / (1.0 + k2.powf(s)))
}

/// `Lᵃ u` for a real power `a` (e.g. `−½` for symmetric preconditioning).
pub fn apply_l_power(u: &Field, s: f64, a: f64) -> Field {
    u.apply_radial_multiplier(|k2| (1.0 + k2.powf(s)).powf(a))
}

/// `⟨L u, u⟩ = ∫ (1 + |ξ|^{2s}) |û|²`, evaluated in coefficient space.
pub fn energy(u: &Field, s: f64) -> f64 {
    let g = u.grid();
    let c = g.forward(u.values());
    let sum: f64 = c.iter().zip(g.xi_sq()).map(|(z, &k2)| (1.0 + k2.powf(s)) * z.norm_sqr()).sum();
    sum * g.cell_volume() / g.len() as f64
}

/// `∫(1+|ξ|^{2s})|û|² / (∫|u|^{2p})^{1/p}`.
pub fn sobolev_quotient(u: &Field, s: f64, p: f64) -> Result<f64> {
    let den = u.integral_abs_pow(2.0 * p);
    if !(den > 0.0) {
        return Err(Error::Domain("Sobolev quotient of the zero field".into()));
    }
    Ok(energy(u, s) / den.powf(1.0 / p))
}
