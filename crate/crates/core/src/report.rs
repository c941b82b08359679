//! Run configuration, orchestration of the analysis modes, and report files.
//!
//! Configuration is flat `key = value` text with `[section]` headers and `#`
//! comments. Keys before the first header belong to the top level.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{classify_conditions, eval_f, eval_g, eval_h, NormalizedParams, SystemParams};
use crate::eigen::EigOptions;
use crate::error::{Error, Result};
use crate::ground_state::{
    default_grid, solve_w, GroundState, GsOptions, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::least_energy::{
    minimize_quotient, proportionality_error, vector_residual, DescentOptions,
};
use crate::nondegeneracy::{
    kernel_dimension_with, linearization_coeffs, weighted_spectrum, NondegeneracyReport,
    SpectrumOptions, WeightedSpectrum,
};
use crate::spectral::Grid;
use crate::tau::{classify_landscape, solve_tau0, tau_min_and_smu, TauSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Analyze,
    GroundState,
    Landscape,
    Nondegen,
    Rayleigh,
    Sweep,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "analyze" => Mode::Analyze,
            "ground-state" => Mode::GroundState,
            "landscape" => Mode::Landscape,
            "nondegen" => Mode::Nondegen,
            "rayleigh" => Mode::Rayleigh,
            "sweep" => Mode::Sweep,
            _ => return Err(format!("unknown mode `{s}`")),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Analyze => "analyze",
            Mode::GroundState => "ground-state",
            Mode::Landscape => "landscape",
            Mode::Nondegen => "nondegen",
            Mode::Rayleigh => "rayleigh",
            Mode::Sweep => "sweep",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    S,
    P,
    Mu1,
    Mu2,
    Beta,
}

impl FromStr for SweepVar {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "s" => SweepVar::S,
            "p" => SweepVar::P,
            "mu1" => SweepVar::Mu1,
            "mu2" => SweepVar::Mu2,
            "beta" => SweepVar::Beta,
            _ => return Err(format!("unknown sweep variable `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepAxis {
    pub variable: SweepVar,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        (0..self.count)
            .map(|i| {
                let t = i as f64 / (self.count - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.lo + t * (self.hi - self.lo),
                    Spacing::Log => (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp(),
                }
            })
            .collect()
    }

    pub fn apply(&self, base: &SystemParams, x: f64) -> Result<SystemParams> {
        let mut pr = *base;
        match self.variable {
            SweepVar::S => pr.s = x,
            SweepVar::P => pr.p = x,
            SweepVar::Mu1 => pr.mu1 = x,
            SweepVar::Mu2 => pr.mu2 = x,
            SweepVar::Beta => pr.beta = x,
        }
        pr.validate()?;
        Ok(pr)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub params: SystemParams,
    pub grid_n: Option<usize>,
    pub grid_l: Option<f64>,
    pub gs_tol: f64,
    pub gs_max_iter: usize,
    pub eig_tol: f64,
    pub root_tol: f64,
    pub descent_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub spectrum_count: usize,
    pub landscape_tau_max: f64,
    pub landscape_points: usize,
    pub sweep: Option<SweepAxis>,
}

fn cfg_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>().map_err(|e| cfg_err(line, format!("bad value for `{key}`: {e}")))
}

fn positive(line: usize, key: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(cfg_err(line, format!("`{key}` must be positive, got {x}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut seen = HashSet::new();
        let mut mode = None;
        let (mut s, mut p, mut dim, mut mu1, mut mu2, mut beta) =
            (None, None, None, None, None, None);
        let mut grid_n = None;
        let mut grid_l = None;
        let mut gs_tol = DEFAULT_TOL;
        let mut gs_max_iter = DEFAULT_MAX_ITER;
        let mut eig_tol = 1e-10;
        let mut root_tol = crate::tau::ROOT_TOL;
        let mut descent_tol = 1e-8;
        let mut restarts = 8;
        let mut seed = 0;
        let mut spectrum_count = 6;
        let mut tau_max = 5.0;
        let mut points = 501;
        let (mut sv, mut slo, mut shi, mut scount, mut sspacing) =
            (None, None, None, None, Spacing::Linear);
        let mut sweep_line = 0;
        let mut params_line = 0;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| cfg_err(line, "unterminated section header"))?
                    .trim();
                match name {
                    "params" | "grid" | "tolerances" | "rayleigh" | "landscape" | "sweep"
                    | "spectrum" => {}
                    _ => return Err(cfg_err(line, format!("unknown section `[{name}]`"))),
                }
                if name == "sweep" {
                    sweep_line = line;
                }
                if name == "params" {
                    params_line = line;
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| cfg_err(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(format!("{section}.{key}")) {
                return Err(cfg_err(line, format!("duplicate key `{key}`")));
            }
            match (section.as_str(), key) {
                ("", "mode") => mode = Some(value.parse::<Mode>().map_err(|e| cfg_err(line, e))?),
                ("", "seed") => seed = parse_value(line, key, value)?,
                ("params", "s") => s = Some(parse_value::<f64>(line, key, value)?),
                ("params", "p") => p = Some(parse_value::<f64>(line, key, value)?),
                ("params", "N") => dim = Some(parse_value::<usize>(line, key, value)?),
                ("params", "mu1") => mu1 = Some(parse_value::<f64>(line, key, value)?),
                ("params", "mu2") => mu2 = Some(parse_value::<f64>(line, key, value)?),
                ("params", "beta") => beta = Some(parse_value::<f64>(line, key, value)?),
                ("grid", "n") => {
                    let n: usize = parse_value(line, key, value)?;
                    if n < 8 || !n.is_power_of_two() {
                        return Err(cfg_err(
                            line,
                            format!("`n` must be a power of two ≥ 8, got {n}"),
                        ));
                    }
                    grid_n = Some(n);
                }
                ("grid", "L") => {
                    grid_l = Some(positive(line, key, parse_value(line, key, value)?)?)
                }
                ("tolerances", "gs_tol") => {
                    gs_tol = positive(line, key, parse_value(line, key, value)?)?
                }
                ("tolerances", "gs_max_iter") => {
                    gs_max_iter = parse_value(line, key, value)?;
                    if gs_max_iter == 0 {
                        return Err(cfg_err(line, "gs_max_iter must be ≥ 1"));
                    }
                }
                ("tolerances", "eig_tol") => {
                    eig_tol = positive(line, key, parse_value(line, key, value)?)?
                }
                ("tolerances", "root_tol") => {
                    root_tol = positive(line, key, parse_value(line, key, value)?)?
                }
                ("rayleigh", "restarts") => restarts = parse_value(line, key, value)?,
                ("rayleigh", "descent_tol") => {
                    descent_tol = positive(line, key, parse_value(line, key, value)?)?
                }
                ("spectrum", "count") => spectrum_count = parse_value(line, key, value)?,
                ("landscape", "tau_max") => {
                    tau_max = positive(line, key, parse_value(line, key, value)?)?
                }
                ("landscape", "points") => points = parse_value(line, key, value)?,
                ("sweep", "variable") => {
                    sv = Some(value.parse::<SweepVar>().map_err(|e| cfg_err(line, e))?)
                }
                ("sweep", "lo") => slo = Some(parse_value::<f64>(line, key, value)?),
                ("sweep", "hi") => shi = Some(parse_value::<f64>(line, key, value)?),
                ("sweep", "count") => scount = Some(parse_value::<usize>(line, key, value)?),
                ("sweep", "spacing") => {
                    sspacing = match value {
                        "linear" => Spacing::Linear,
                        "log" => Spacing::Log,
                        _ => return Err(cfg_err(line, format!("unknown spacing `{value}`"))),
                    }
                }
                _ => {
                    let where_ = if section.is_empty() {
                        "top level".to_string()
                    } else {
                        format!("[{section}]")
                    };
                    return Err(cfg_err(line, format!("unknown key `{key}` in {where_}")));
                }
            }
        }

        let need = |v: Option<f64>, k: &str| {
            v.ok_or_else(|| cfg_err(params_line, format!("missing `{k}` in [params]")))
        };
        let params = SystemParams::new(
            need(s, "s")?,
            need(p, "p")?,
            dim.unwrap_or(1),
            need(mu1, "mu1")?,
            need(mu2, "mu2")?,
            need(beta, "beta")?,
        )
        .map_err(|e| cfg_err(params_line, e.to_string()))?;

        let sweep = match (sv, slo, shi, scount) {
            (None, None, None, None) => None,
            (Some(variable), Some(lo), Some(hi), Some(count)) => {
                if count == 0 || !(lo <= hi) {
                    return Err(cfg_err(sweep_line, "sweep needs lo ≤ hi and count ≥ 1"));
                }
                if sspacing == Spacing::Log && !(lo > 0.0) {
                    return Err(cfg_err(sweep_line, "log spacing needs lo > 0"));
                }
                let axis = SweepAxis { variable, lo, hi, count, spacing: sspacing };
                for x in axis.values() {
                    axis.apply(&params, x)
                        .map_err(|e| cfg_err(sweep_line, format!("sweep point {x}: {e}")))?;
                }
                Some(axis)
            }
            _ => return Err(cfg_err(sweep_line, "[sweep] needs variable, lo, hi and count")),
        };
        if spectrum_count < params.dim + 2 || spectrum_count > 40 {
            return Err(cfg_err(0, format!("spectrum count must lie in {}..=40", params.dim + 2)));
        }
        if points < 2 {
            return Err(cfg_err(0, "landscape points must be ≥ 2"));
        }
        Ok(Self {
            mode,
            params,
            grid_n,
            grid_l,
            gs_tol,
            gs_max_iter,
            eig_tol,
            root_tol,
            descent_tol,
            restarts,
            seed,
            spectrum_count,
            landscape_tau_max: tau_max,
            landscape_points: points,
            sweep,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        let def = default_grid(self.params.dim)?;
        Grid::new(
            self.params.dim,
            self.grid_n.unwrap_or(def.n()),
            self.grid_l.unwrap_or(def.half_length()),
        )
    }

    fn gs_options(&self) -> GsOptions {
        GsOptions { tol: self.gs_tol, max_iter: self.gs_max_iter }
    }

    fn spectrum_options(&self) -> SpectrumOptions {
        let d = SpectrumOptions::default();
        SpectrumOptions {
            count: self.spectrum_count,
            eig: EigOptions { tol: self.eig_tol, seed: self.seed, ..d.eig },
            ..d
        }
    }

    fn descent_options(&self) -> DescentOptions {
        DescentOptions {
            tol: self.descent_tol,
            restarts: self.restarts,
            seed: self.seed,
            ..DescentOptions::default()
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn error_json(e: &Error) -> Value {
    let kind = format!("{e:?}");
    let kind = kind.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("").to_string();
    json!({ "kind": kind, "message": e.to_string(), "exit_code": e.exit_code() })
}

fn gs_json(gs: &GroundState) -> Value {
    let g = gs.w.grid();
    json!({
        "s": gs.s,
        "p": gs.p,
        "N": g.dim(),
        "n": g.n(),
        "L": g.half_length(),
        "iterations": gs.iterations,
        "residual_norm": gs.residual_norm,
        "S": gs.s_value,
        "w0": gs.w.at_origin(),
        "min_value": gs.w.values().iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Files written by a run, plus the process exit code.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
    pub report: Value,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        let p = self.path(name);
        fs::write(p, serde_json::to_string_pretty(v)? + "\n")?;
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let p = self.path(name);
        let mut w = csv::Writer::from_path(p).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn base_report(cfg: &RunConfig, mode: Mode) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("mode".into(), json!(mode));
    m.insert("params".into(), json!(cfg.params));
    m.insert("normalized".into(), json!(cfg.params.normalize()));
    m.insert("seed".into(), json!(cfg.seed));
    m
}

/// Runs `mode` and writes its outputs into `out`. Failures after the
/// report has been started still write `report.json` with the error.
pub fn run(cfg: &RunConfig, mode: Mode, out: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(out)?;
    let mut w = Writer { dir: out.to_path_buf(), files: Vec::new() };
    let mut report = base_report(cfg, mode);
    let result = match mode {
        Mode::Analyze => analyze(cfg, &mut report),
        Mode::GroundState => ground_state_mode(cfg, &mut report, &mut w),
        Mode::Landscape => landscape_mode(cfg, &mut report, &mut w),
        Mode::Nondegen => nondegen_mode(cfg, &mut report),
        Mode::Rayleigh => rayleigh_mode(cfg, &mut report, &mut w),
        Mode::Sweep => sweep_mode(cfg, &mut report, &mut w),
    };
    let exit_code = match &result {
        Ok(()) => {
            report.insert("status".into(), json!("ok"));
            0
        }
        Err(e) => {
            report.insert("status".into(), json!("error"));
            report.insert("error".into(), error_json(e));
            e.exit_code()
        }
    };
    let report = Value::Object(report);
    w.json("report.json", &report)?;
    Ok(RunOutcome { files: w.files, exit_code, report })
}

fn first_solution(cfg: &RunConfig) -> Result<TauSolution> {
    let sols = solve_tau0(&cfg.params)?;
    let sol = sols[0];
    let g = eval_g(&cfg.params, sol.tau0)?;
    if g.abs() > cfg.root_tol * cfg.params.mu1.max(1.0) {
        return Err(Error::ConstraintViolation(format!("|g(τ₀)| = {g:e} exceeds root_tol")));
    }
    Ok(sol)
}

/// The normalized system has `μ₂ = 1`, so its root is the same `τ₀`.
fn normalized_solution(norm: &NormalizedParams) -> Result<TauSolution> {
    Ok(solve_tau0(&norm.as_system())?[0])
}

fn nondegen_report(
    cfg: &RunConfig,
    gs: &GroundState,
    spectrum: &WeightedSpectrum,
) -> Result<NondegeneracyReport> {
    let norm = cfg.params.normalize();
    let sol = normalized_solution(&norm)?;
    kernel_dimension_with(gs, spectrum, &sol, &norm)
}

fn analyze(cfg: &RunConfig, report: &mut serde_json::Map<String, Value>) -> Result<()> {
    let conditions = classify_conditions(&cfg.params);
    report.insert("conditions".into(), json!(conditions));
    if conditions.nonexistence_window {
        report.insert(
            "nonexistence".into(),
            json!(format!(
                "p = 2 with β ∈ [μ₂, μ₁] = [{}, {}]: no positive proportional solution",
                cfg.params.mu2, cfg.params.mu1
            )),
        );
    }
    let sols = solve_tau0(&cfg.params)?;
    report.insert("tau_solutions".into(), json!(sols));
    let sol = first_solution(cfg)?;
    if cfg.params.beta > 0.0 {
        let land = classify_landscape(&cfg.params)?;
        report.insert("landscape".into(), json!(land));
    }
    let gs = solve_w(cfg.params.s, cfg.params.p, cfg.grid()?, cfg.gs_options())?;
    report.insert("ground_state".into(), gs_json(&gs));
    let (ru, rv) =
        vector_residual(&cfg.params, &gs.w.scale(sol.k1), &gs.w.scale(sol.k1 * sol.tau0));
    report.insert(
        "vector_solution".into(),
        json!({
            "tau0": sol.tau0,
            "k1": sol.k1,
            "residual_u": ru,
            "residual_v": rv,
            "positive": sol.positivity_ok.0 && sol.positivity_ok.1,
        }),
    );
    if cfg.params.beta != 0.0 {
        let spectrum = weighted_spectrum(&gs, &cfg.spectrum_options())?;
        let nd = nondegen_report(cfg, &gs, &spectrum)?;
        report.insert("nondegeneracy".into(), json!(nd));
    }
    Ok(())
}

fn ground_state_mode(
    cfg: &RunConfig,
    report: &mut serde_json::Map<String, Value>,
    w: &mut Writer,
) -> Result<()> {
    let gs = solve_w(cfg.params.s, cfg.params.p, cfg.grid()?, cfg.gs_options())?;
    report.insert("ground_state".into(), gs_json(&gs));
    if gs.w.grid().dim() == 1 {
        let p = w.path("w_profile.csv");
        gs.w.write_csv(std::io::BufWriter::new(fs::File::create(p)?))?;
    }
    let p = w.path("w.bin");
    gs.w.save_binary(gs.s, &p)?;
    Ok(())
}

fn landscape_mode(
    cfg: &RunConfig,
    report: &mut serde_json::Map<String, Value>,
    w: &mut Writer,
) -> Result<()> {
    let pr = &cfg.params;
    report.insert("conditions".into(), json!(classify_conditions(pr)));
    let n = cfg.landscape_points;
    let rows: Vec<Vec<String>> = (1..=n)
        .map(|j| {
            let t = cfg.landscape_tau_max * j as f64 / n as f64;
            let f = eval_f(pr, t).map(fmt17).unwrap_or_default();
            let g = eval_g(pr, t).map(fmt17).unwrap_or_default();
            let h = eval_h(pr, t).map(fmt17).unwrap_or_default();
            vec![fmt17(t), f, g, h]
        })
        .collect();
    w.csv("landscape.csv", &["tau", "f", "g", "h"], &rows)?;
    if pr.beta > 0.0 {
        let land = classify_landscape(pr)?;
        report.insert("landscape".into(), json!(land));
    }
    Ok(())
}

fn nondegen_mode(cfg: &RunConfig, report: &mut serde_json::Map<String, Value>) -> Result<()> {
    let gs = solve_w(cfg.params.s, cfg.params.p, cfg.grid()?, cfg.gs_options())?;
    report.insert("ground_state".into(), gs_json(&gs));
    let spectrum = weighted_spectrum(&gs, &cfg.spectrum_options())?;
    let nd = nondegen_report(cfg, &gs, &spectrum)?;
    report.insert("nondegeneracy".into(), json!(nd));
    Ok(())
}

fn rayleigh_mode(
    cfg: &RunConfig,
    report: &mut serde_json::Map<String, Value>,
    w: &mut Writer,
) -> Result<()> {
    let pr = &cfg.params;
    let gs = solve_w(pr.s, pr.p, cfg.grid()?, cfg.gs_options())?;
    report.insert("ground_state".into(), gs_json(&gs));
    let cc = tau_min_and_smu(pr, gs.s_value)?;
    let m = minimize_quotient(pr, &gs, &cfg.descent_options())?;
    let q = m.best.quotient_value;
    let (ru, rv) = vector_residual(pr, &m.best.u, &m.best.v);
    report.insert(
        "rayleigh".into(),
        json!({
            "quotient": q,
            "predicted": cc.s_mu,
            "relative_error": (q - cc.s_mu) / cc.s_mu,
            "tau_min": cc.tau_min,
            "k_min": cc.k_min,
            "proportionality_error": proportionality_error(&m.best, cc.tau_min),
            "energy": m.best.energy_value,
            "residual_u": ru,
            "residual_v": rv,
            "candidates": m.candidates,
        }),
    );
    let rows: Vec<Vec<String>> =
        m.history.iter().enumerate().map(|(i, q)| vec![i.to_string(), fmt17(*q)]).collect();
    w.csv("descent_log.csv", &["iteration", "quotient"], &rows)?;
    let p = w.path("u.bin");
    m.best.u.save_binary(pr.s, &p)?;
    let p = w.path("v.bin");
    m.best.v.save_binary(pr.s, &p)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    value: f64,
    tau0: Option<f64>,
    k1: Option<f64>,
    f_tilde: Option<f64>,
    verdict: String,
    s_mu: Option<f64>,
}

fn sweep_point(
    cfg: &RunConfig,
    pr: &SystemParams,
    x: f64,
    shared: Option<&(GroundState, WeightedSpectrum)>,
) -> SweepRow {
    let mut row = SweepRow {
        value: x,
        tau0: None,
        k1: None,
        f_tilde: None,
        verdict: "none".into(),
        s_mu: None,
    };
    let sol = match solve_tau0(pr) {
        Ok(s) => s[0],
        Err(e) => {
            row.verdict = format!("error:{}", error_json(&e)["kind"].as_str().unwrap_or(""));
            return row;
        }
    };
    row.tau0 = Some(sol.tau0);
    row.k1 = Some(sol.k1);
    let norm = pr.normalize();
    if let Ok(nsol) = normalized_solution(&norm) {
        if let Ok(co) = linearization_coeffs(&norm, &nsol) {
            row.f_tilde = Some(co.f_tilde);
        }
    }
    let owned;
    let (gs, spectrum) = match shared {
        Some((g, s)) => (g, s),
        None => {
            let c = RunConfig { params: *pr, ..cfg.clone() };
            let built =
                c.grid().and_then(|g| solve_w(pr.s, pr.p, g, cfg.gs_options())).and_then(|gs| {
                    let sp = weighted_spectrum(&gs, &cfg.spectrum_options())?;
                    Ok((gs, sp))
                });
            match built {
                Ok(b) => {
                    owned = b;
                    (&owned.0, &owned.1)
                }
                Err(e) => {
                    row.verdict =
                        format!("error:{}", error_json(&e)["kind"].as_str().unwrap_or(""));
                    return row;
                }
            }
        }
    };
    if pr.beta != 0.0 {
        if let Ok(nsol) = normalized_solution(&norm) {
            row.verdict = match kernel_dimension_with(gs, spectrum, &nsol, &norm) {
                Ok(r) => serde_json::to_value(r.verdict)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
                Err(e) => format!("error:{}", error_json(&e)["kind"].as_str().unwrap_or("")),
            };
        }
    }
    if pr.beta > 0.0 {
        if let Ok(cc) = tau_min_and_smu(pr, gs.s_value) {
            row.s_mu = Some(cc.s_mu);
        }
    }
    row
}

fn sweep_mode(
    cfg: &RunConfig,
    report: &mut serde_json::Map<String, Value>,
    w: &mut Writer,
) -> Result<()> {
    let axis = cfg.sweep.ok_or_else(|| Error::Config {
        line: 0,
        message: "sweep mode needs a [sweep] section".into(),
    })?;
    let shared = match axis.variable {
        SweepVar::S | SweepVar::P => None,
        _ => {
            let gs = solve_w(cfg.params.s, cfg.params.p, cfg.grid()?, cfg.gs_options())?;
            let sp = weighted_spectrum(&gs, &cfg.spectrum_options())?;
            Some((gs, sp))
        }
    };
    let points: Vec<(f64, SystemParams)> = axis
        .values()
        .into_iter()
        .map(|x| Ok((x, axis.apply(&cfg.params, x)?)))
        .collect::<Result<_>>()?;
    let rows: Vec<SweepRow> =
        points.par_iter().map(|(x, pr)| sweep_point(cfg, pr, *x, shared.as_ref())).collect();
    let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt17(r.value),
                opt(r.tau0),
                opt(r.k1),
                opt(r.f_tilde),
                r.verdict.clone(),
                opt(r.s_mu),
            ]
        })
        .collect();
    w.csv("sweep.csv", &["param", "tau0", "k1", "f_tilde", "verdict", "s_mu"], &table)?;
    report.insert("sweep".into(), json!({ "axis": axis, "points": rows }));
    let nondeg = rows.iter().filter(|r| r.verdict == "nondegenerate").count();
    report.insert("sweep_summary".into(), json!({ "points": rows.len(), "nondegenerate": nondeg }));
    Ok(())
}
