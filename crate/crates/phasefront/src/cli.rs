//! Command-line front end.
//!
//! Every command reads an optional TOML config, applies `--set` overrides
//! and writes four files into the output directory: the resolved config
//! (`config.toml`), a CSV table, `report.json` and a matplotlib script
//! `plot.py` that renders the CSV.

use crate::bulk::{beta_c_closed_form, bulk_phases_fast, find_beta_c, LocalFreeEnergy};
use crate::convexity::{certify_critical_is_min, eval_joint_path_with, eval_path_with, random_monotone_profile, PathKind, PathReport, Selector, Tolerances};
use crate::error::{Error, Result};
use crate::functionals::{free_energy_1c, free_energy_1c_values, FunctionalConfig};
use crate::grid::{profile_to_density, Grid, MonotoneProfile};
use crate::kernels::{Kernel, RadialKernel, RadialShape, Stencil};
use crate::multidim::{solve_front_2d, Grid2D, Profile2D, Stencil2D};
use crate::potential::QuarticWell;
use crate::rearrange::monotone_rearrange;
use crate::report::{RunReport, Timings};
use crate::solvers::{
    check_derivative_el, front_bulk, mirror_symmetry_defect, odd_defect, solve_front_1c, solve_front_2c, step_pair, surface_tension, FrontSolution,
    SolveConfig,
};
use crate::transport::{displacement_interpolate, uniform_lambdas, wasserstein1};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// The window is `[-half_width, half_width)`.
    pub half_width: f64,
    pub h: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { half_width: 10.0, h: 0.02 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    Box,
    Triangle,
    Gaussian,
    Tabulated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub shape: KernelShape,
    pub range: f64,
    pub mass: f64,
    /// Gaussian width.
    pub sigma: f64,
    /// Two-column CSV for tabulated kernels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { shape: KernelShape::Box, range: 1.0, mass: 1.0, sigma: 0.5, path: None }
    }
}

/// `F(m) = scale (m - a)² (m - b)²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub a: f64,
    pub b: f64,
    pub scale: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig { a: -1.0, b: 1.0, scale: 0.25 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Step,
    Tanh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub components: usize,
    pub kappa: f64,
    /// Absolute inverse temperature; `beta_factor · β_c` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub beta_factor: f64,
    pub lambda: f64,
    pub init: InitKind,
    pub init_width: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { components: 1, kappa: 0.5, beta: None, beta_factor: 1.5, lambda: 1.0, init: InitKind::Step, init_width: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub damping: f64,
    pub max_iter: usize,
    pub residual_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { damping: 0.5, max_iter: 200_000, residual_tol: 1e-10 }
    }
}

/// A monotone profile between the model's asymptotes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Step { center: f64 },
    Tanh { center: f64, width: f64 },
    /// Seeded mixture of smoothsteps supported in `[-span, span]`.
    Random { span: f64 },
}

impl ProfileSpec {
    pub fn build<R: Rng>(&self, grid: &Grid, a: f64, b: f64, rng: &mut R) -> Result<MonotoneProfile> {
        match *self {
            ProfileSpec::Step { center } => MonotoneProfile::step(*grid, a, b, center),
            ProfileSpec::Tanh { center, width } => {
                if !(width > 0.0) {
                    return Err(Error::Config(format!("tanh width {width} must be positive")));
                }
                tanh_profile(grid, a, b, center, width)
            }
            ProfileSpec::Random { span } => {
                let half = 0.5 * (grid.x_max - grid.x_min);
                if !(span > 0.0 && span < half) {
                    return Err(Error::Config(format!("random span {span} must lie in (0, {half})")));
                }
                random_monotone_profile(grid, a, b, span, rng)
            }
        }
    }
}

fn tanh_profile(grid: &Grid, a: f64, b: f64, center: f64, width: f64) -> Result<MonotoneProfile> {
    let v = grid.nodes().iter().map(|x| a + 0.5 * (b - a) * (1.0 + ((x - center) / width).tanh())).collect();
    MonotoneProfile::with_tol(*grid, v, a, b, f64::INFINITY)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterpolateConfig {
    pub points: usize,
    pub mass_points: usize,
    pub from: ProfileSpec,
    pub to: ProfileSpec,
}

impl Default for InterpolateConfig {
    fn default() -> Self {
        InterpolateConfig {
            points: 11,
            mass_points: 4096,
            from: ProfileSpec::Tanh { center: -2.0, width: 1.0 },
            to: ProfileSpec::Tanh { center: 2.0, width: 0.5 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexityPath {
    Displacement,
    Linear,
    /// Componentwise displacement path of a binary pair, evaluating `𝒢`.
    Joint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvexityConfig {
    pub functional: Selector,
    pub path: ConvexityPath,
    pub points: usize,
    pub mass_points: usize,
    pub from: ProfileSpec,
    pub to: ProfileSpec,
    pub affine_tol: f64,
    pub convex_tol: f64,
    pub strict_rel: f64,
}

impl Default for ConvexityConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        ConvexityConfig {
            functional: Selector::Potential,
            path: ConvexityPath::Displacement,
            points: 21,
            mass_points: 4096,
            from: ProfileSpec::Tanh { center: -1.0, width: 1.0 },
            to: ProfileSpec::Tanh { center: 1.0, width: 0.5 },
            affine_tol: t.affine,
            convex_tol: t.convex,
            strict_rel: t.strict_rel,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseDiagramConfig {
    pub beta_min: f64,
    pub beta_max: f64,
    pub steps: usize,
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        PhaseDiagramConfig { beta_min: 1.0, beta_max: 6.0, steps: 26 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceTensionConfig {
    /// Competitors tested against the front; 0 skips the check.
    pub certify_trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultidimConfig {
    pub y_cells: usize,
    pub period: f64,
    /// Range of the quartic radial kernel `U(r) = scale (1 - r²/R²)²`.
    pub kernel_range: f64,
    pub kernel_scale: f64,
    /// Amplitude of the `y`-modulation of the initial front.
    pub amplitude: f64,
    /// Also solve the 1-D front with the reduced kernel and compare.
    pub compare_1d: bool,
}

impl Default for MultidimConfig {
    fn default() -> Self {
        MultidimConfig { y_cells: 16, period: 2.0, kernel_range: 1.0, kernel_scale: 1.0, amplitude: 0.4, compare_1d: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RearrangeConfig {
    /// Size of the seeded perturbation relative to `|b - a|`.
    pub amplitude: f64,
    pub modes: usize,
}

impl Default for RearrangeConfig {
    fn default() -> Self {
        RearrangeConfig { amplitude: 0.5, modes: 6 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    pub potential: PotentialConfig,
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub interpolate: InterpolateConfig,
    pub convexity: ConvexityConfig,
    pub phase_diagram: PhaseDiagramConfig,
    pub surface_tension: SurfaceTensionConfig,
    pub multidim: MultidimConfig,
    pub rearrange: RearrangeConfig,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("{name} = {v} must be positive")));
    }
    Ok(())
}

impl RunConfig {
    /// Parses TOML and applies `key.path=value` overrides.
    pub fn load(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        positive("grid.half_width", self.grid.half_width)?;
        positive("grid.h", self.grid.h)?;
        positive("kernel.range", self.kernel.range)?;
        positive("kernel.mass", self.kernel.mass)?;
        positive("model.kappa", self.model.kappa)?;
        positive("model.init_width", self.model.init_width)?;
        positive("potential.scale", self.potential.scale)?;
        if self.potential.a == self.potential.b {
            return Err(Error::Config("potential wells coincide".into()));
        }
        if !matches!(self.model.components, 1 | 2) {
            return Err(Error::Config(format!("model.components = {} must be 1 or 2", self.model.components)));
        }
        if let Some(b) = self.model.beta {
            positive("model.beta", b)?;
        }
        positive("model.beta_factor", self.model.beta_factor)?;
        if self.kernel.shape == KernelShape::Tabulated && self.kernel.path.is_none() {
            return Err(Error::Config("tabulated kernel needs kernel.path".into()));
        }
        self.solve_config(1).validate()?;
        if self.interpolate.points < 2 {
            return Err(Error::Config("interpolate.points must be at least 2".into()));
        }
        if self.convexity.points < 5 {
            return Err(Error::Config("convexity.points must be at least 5".into()));
        }
        if self.interpolate.mass_points < 2 || self.convexity.mass_points < 2 {
            return Err(Error::Config("mass_points must be at least 2".into()));
        }
        let pd = &self.phase_diagram;
        positive("phase_diagram.beta_min", pd.beta_min)?;
        if !(pd.beta_max > pd.beta_min) || pd.steps < 2 {
            return Err(Error::Config("phase diagram needs beta_max > beta_min and at least 2 steps".into()));
        }
        let md = &self.multidim;
        if md.y_cells == 0 || md.y_cells > 64 {
            return Err(Error::Config(format!("multidim.y_cells = {} must lie in 1..=64", md.y_cells)));
        }
        positive("multidim.period", md.period)?;
        positive("multidim.kernel_range", md.kernel_range)?;
        positive("multidim.kernel_scale", md.kernel_scale)?;
        if !(self.rearrange.amplitude >= 0.0) {
            return Err(Error::Config("rearrange.amplitude must be non-negative".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let half = (self.grid.half_width / self.grid.h).round();
        if half < 4.0 || half > 1e7 {
            return Err(Error::Config(format!("window of {half} half-cells")));
        }
        Grid::centered_cells(half as usize, self.grid.h)
    }

    pub fn kernel(&self) -> Result<Kernel> {
        let k = &self.kernel;
        match k.shape {
            KernelShape::Box => Kernel::box_kernel(k.range, k.mass),
            KernelShape::Triangle => Kernel::triangle(k.range, k.mass),
            KernelShape::Gaussian => Kernel::truncated_gaussian(k.range, k.sigma, k.mass),
            KernelShape::Tabulated => Kernel::from_csv(k.path.as_deref().expect("validated")),
        }
    }

    pub fn potential(&self) -> QuarticWell {
        QuarticWell::new(self.potential.a, self.potential.b, self.potential.scale)
    }

    pub fn solve_config(&self, components: usize) -> SolveConfig {
        let base = if components == 2 { SolveConfig::two_component() } else { SolveConfig::default() };
        SolveConfig {
            damping: self.solver.damping,
            max_iter: self.solver.max_iter,
            residual_tol: self.solver.residual_tol,
            functional: FunctionalConfig { kappa: self.model.kappa },
            ..base
        }
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances { affine: self.convexity.affine_tol, convex: self.convexity.convex_tol, strict_rel: self.convexity.strict_rel }
    }

    fn beta(&self, jhat: f64) -> Result<(f64, f64)> {
        let beta_c = find_beta_c(self.model.lambda, jhat)?;
        Ok((self.model.beta.unwrap_or(self.model.beta_factor * beta_c), beta_c))
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item.split_once('=').ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| Error::Config(format!("`{p}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[derive(Parser, Debug)]
#[command(name = "phasefront", version, about = "Nonlocal phase-field fronts and surface tension")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve a one- or two-component front.
    SolveFront(RunArgs),
    /// Solve a two-component front.
    SolveBinary(RunArgs),
    /// Displacement interpolation between two profiles.
    Interpolate(RunArgs),
    /// Evaluate a functional along an interpolation path.
    CheckConvexity(RunArgs),
    /// Bulk densities over a sweep of β.
    PhaseDiagram(RunArgs),
    /// Solve a front and report its surface tension.
    SurfaceTension(RunArgs),
    /// Solve a front on a line times a periodic interval.
    #[command(name = "solve-2d")]
    Solve2d(RunArgs),
    /// Monotone rearrangement of a rough profile.
    Rearrange(RunArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// TOML config file; defaults apply when absent.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config value, e.g. `--set grid.h=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    pub out: PathBuf,
    /// Record wall-clock time in the report.
    #[arg(long)]
    pub timings: bool,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolveFront(_) => "solve-front",
            Command::SolveBinary(_) => "solve-binary",
            Command::Interpolate(_) => "interpolate",
            Command::CheckConvexity(_) => "check-convexity",
            Command::PhaseDiagram(_) => "phase-diagram",
            Command::SurfaceTension(_) => "surface-tension",
            Command::Solve2d(_) => "solve-2d",
            Command::Rearrange(_) => "rearrange",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::SolveFront(a)
            | Command::SolveBinary(a)
            | Command::Interpolate(a)
            | Command::CheckConvexity(a)
            | Command::PhaseDiagram(a)
            | Command::SurfaceTension(a)
            | Command::Solve2d(a)
            | Command::Rearrange(a) => a,
        }
    }
}

/// A CSV table; the first column is the abscissa.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new<S: ToString>(header: &[S]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
        w.write_record(&self.header).map_err(|e| Error::Io(e.into()))?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v}"))).map_err(|e| Error::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// What a command produced before files are written.
pub struct Outcome {
    pub csv_name: &'static str,
    pub table: Table,
    pub outputs: Value,
}

pub fn plot_script(csv_name: &str, command: &str) -> String {
    let png = csv_name.replace(".csv", ".png");
    format!(
        r#"#!/usr/bin/env python3
# Renders {csv_name} written by `phasefront {command}`.
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "{csv_name}"), newline="") as fh:
    rows = list(csv.reader(fh))
header, data = rows[0], [[float(v) for v in r] for r in rows[1:]]
x = [r[0] for r in data]
fig, ax = plt.subplots(figsize=(7, 4))
for j, name in enumerate(header[1:], start=1):
    ax.plot(x, [r[j] for r in data], label=name, lw=1)
ax.set_xlabel(header[0])
ax.set_title("{command}")
if len(header) <= 12:
    ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(os.path.join(here, "{png}"), dpi=150)
"#
    )
}

fn profile_table(profiles: &[&MonotoneProfile], names: &[&str]) -> Table {
    let mut t = Table::new(&[&["x"], names].concat());
    let g = profiles[0].grid;
    for i in 0..g.n {
        let mut row = vec![g.x(i)];
        row.extend(profiles.iter().map(|p| p.values[i]));
        t.rows.push(row);
    }
    t
}

fn solve(cfg: &RunConfig, components: usize) -> Result<(FrontSolution, Value)> {
    let grid = cfg.grid()?;
    let kernel = cfg.kernel()?;
    let scfg = cfg.solve_config(components);
    if components == 1 {
        let f = cfg.potential();
        let (a, b) = (f.a, f.b);
        let init = match cfg.model.init {
            InitKind::Step => MonotoneProfile::step(grid, a, b, 0.0)?,
            InitKind::Tanh => tanh_profile(&grid, a, b, 0.0, cfg.model.init_width)?,
        };
        let front = solve_front_1c(Arc::new(f), &kernel, &init, &scfg)?;
        let stencil = Stencil::new(&kernel, grid.h)?;
        let step = free_energy_1c(&MonotoneProfile::step(grid, a, b, 0.0)?, &f, &stencil, &scfg.functional)?;
        let extra = json!({
            "symmetry_defect": odd_defect(&front.profiles[0]),
            "step_energy": step.total,
        });
        Ok((front, extra))
    } else {
        let jhat = Stencil::new(&kernel, grid.h)?.jhat;
        let (beta, beta_c) = cfg.beta(jhat)?;
        let bulk = front_bulk(beta, cfg.model.lambda, jhat)?;
        let (m, n) = match cfg.model.init {
            InitKind::Step => step_pair(grid, &bulk, 0.0)?,
            InitKind::Tanh => (
                tanh_profile(&grid, bulk.rho_minus, bulk.rho_plus, 0.0, cfg.model.init_width)?,
                tanh_profile(&grid, bulk.rho_plus, bulk.rho_minus, 0.0, cfg.model.init_width)?,
            ),
        };
        let front = solve_front_2c(beta, cfg.model.lambda, &kernel, (&m, &n), &scfg)?;
        let extra = json!({
            "beta": beta,
            "beta_c": beta_c,
            "rho_minus": bulk.rho_minus,
            "rho_plus": bulk.rho_plus,
            "symmetry_defect": mirror_symmetry_defect(&front.profiles[0], &front.profiles[1]),
            "derivative_el_residual": check_derivative_el(&front)?,
        });
        Ok((front, extra))
    }
}

fn front_outcome(cfg: &RunConfig, components: usize, certify: usize) -> Result<Outcome> {
    let (front, extra) = solve(cfg, components)?;
    let sigma = surface_tension(&front)?;
    let mut out = json!({
        "components": components,
        "residual": front.residual,
        "iterations": front.iterations,
        "converged": front.converged,
        "energy": front.breakdown,
        "surface_tension": sigma,
        "mu": front.mu,
        "decay": front.decay,
    });
    let obj = out.as_object_mut().expect("object");
    for (k, v) in extra.as_object().expect("object") {
        obj.insert(k.clone(), v.clone());
    }
    if certify > 0 {
        let c = certify_critical_is_min(&front, certify, cfg.seed)?;
        obj.insert("certification".into(), json!({"trials": certify, "min_gap": c.min_gap, "min_derivative": c.min_derivative}));
    }
    let table = if components == 1 {
        profile_table(&[&front.profiles[0]], &["m"])
    } else {
        profile_table(&[&front.profiles[0], &front.profiles[1]], &["m", "n"])
    };
    Ok(Outcome { csv_name: "profile.csv", table, outputs: out })
}

fn interpolate(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let (a, b) = (cfg.potential.a, cfg.potential.b);
    let ic = &cfg.interpolate;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let p0 = ic.from.build(&grid, a, b, &mut rng)?;
    let p1 = ic.to.build(&grid, a, b, &mut rng)?;
    let lambdas = uniform_lambdas(ic.points);
    let path = displacement_interpolate(&p0, &p1, &lambdas, ic.mass_points)?;
    let names: Vec<String> = (0..ic.points).map(|j| format!("m_{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let profs: Vec<&MonotoneProfile> = path.profiles.iter().collect();
    let table = profile_table(&profs, &refs);
    let w1 = wasserstein1(&profile_to_density(&p0)?, &profile_to_density(&p1)?);
    let end = path.profiles[0].sup_diff(&p0).max(path.profiles[ic.points - 1].sup_diff(&p1));
    let means: Vec<f64> = path.quantiles.iter().map(|q| q.mean()).collect();
    let outputs = json!({
        "lambdas": lambdas,
        "wasserstein1": w1,
        "endpoint_error": end,
        "quantile_means": means,
    });
    Ok(Outcome { csv_name: "profile.csv", table, outputs })
}

fn check_convexity(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let kernel = cfg.kernel()?;
    let stencil = Stencil::new(&kernel, grid.h)?;
    let cc = &cfg.convexity;
    let tol = cfg.tolerances();
    let lambdas = uniform_lambdas(cc.points);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let report: PathReport = match cc.path {
        ConvexityPath::Joint => {
            let (beta, _) = cfg.beta(stencil.jhat)?;
            let bulk = front_bulk(beta, cfg.model.lambda, stencil.jhat)?;
            let (lo, hi) = (bulk.rho_minus, bulk.rho_plus);
            let m0 = cc.from.build(&grid, lo, hi, &mut rng)?;
            let n0 = cc.from.build(&grid, hi, lo, &mut rng)?;
            let m1 = cc.to.build(&grid, lo, hi, &mut rng)?;
            let n1 = cc.to.build(&grid, hi, lo, &mut rng)?;
            eval_joint_path_with((&m0, &n0), (&m1, &n1), &bulk, &stencil, &lambdas, cc.mass_points, &tol)?
        }
        kind => {
            let f = cfg.potential();
            let p0 = cc.from.build(&grid, f.a, f.b, &mut rng)?;
            let p1 = cc.to.build(&grid, f.a, f.b, &mut rng)?;
            let model = crate::solvers::Model::OneComponent {
                potential: Arc::new(f),
                stencil,
                functional: FunctionalConfig { kappa: cfg.model.kappa },
            };
            let pk = if kind == ConvexityPath::Linear { PathKind::Linear } else { PathKind::Displacement };
            eval_path_with(&model, cc.functional, &p0, &p1, pk, &lambdas, cc.mass_points, &tol)?
        }
    };
    let mut table = Table::new(&["lambda", "value"]);
    for (l, v) in report.lambdas.iter().zip(&report.values) {
        table.rows.push(vec![*l, *v]);
    }
    let outputs = json!({
        "functional": if cc.path == ConvexityPath::Joint { json!("joint_free_energy") } else { json!(cc.functional) },
        "path": cc.path,
        "verdict": report.verdict,
        "min_second_difference": report.min_second_difference,
        "max_affinity_defect": report.max_affinity_defect,
        "range": report.range,
    });
    Ok(Outcome { csv_name: "path.csv", table, outputs })
}

fn phase_diagram(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let jhat = Stencil::new(&cfg.kernel()?, grid.h)?.jhat;
    let lambda = cfg.model.lambda;
    let pd = &cfg.phase_diagram;
    let beta_c = find_beta_c(lambda, jhat)?;
    let mut table = Table::new(&["beta", "rho_minus", "rho_plus", "g", "c_tail"]);
    for i in 0..pd.steps {
        let beta = pd.beta_min + (pd.beta_max - pd.beta_min) * i as f64 / (pd.steps - 1) as f64;
        let bp = bulk_phases_fast(&LocalFreeEnergy::new(beta, lambda, jhat)?)?;
        table.rows.push(vec![beta, bp.rho_minus, bp.rho_plus, bp.g, bp.c_tail]);
    }
    let outputs = json!({
        "beta_c": beta_c,
        "beta_c_closed_form": beta_c_closed_form(lambda, jhat),
        "jhat": jhat,
        "lambda": lambda,
        "rows": pd.steps,
    });
    Ok(Outcome { csv_name: "phase_diagram.csv", table, outputs })
}

fn solve_2d(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let md = &cfg.multidim;
    let f = cfg.potential();
    let g2 = Grid2D::new(grid, md.y_cells, md.period)?;
    let u = RadialKernel { shape: RadialShape::Quartic, range: md.kernel_range, scale: md.kernel_scale };
    let st = Stencil2D::new(&u, &g2)?;
    let (a, b, w, amp, l) = (f.a, f.b, cfg.model.init_width, md.amplitude, md.period);
    let init = Profile2D::from_fn(g2, a, b, |x, y| a + 0.5 * (b - a) * (1.0 + ((x - amp * (2.0 * PI * y / l).sin()) / w).tanh()))?;
    let scfg = cfg.solve_config(1);
    let fr = solve_front_2d(&f, &st, &init, &scfg)?;
    let mut out = json!({
        "residual": fr.residual,
        "iterations": fr.iterations,
        "energy": fr.energy,
        "energy_per_length": fr.energy.total / md.period,
        "flatness": fr.profile.flatness(),
        "y_cells": md.y_cells,
    });
    if md.compare_1d {
        let jbar = Kernel::reduce_dimension(&u, 2)?;
        let init1 = tanh_profile(&grid, a, b, 0.0, w)?;
        let f1 = solve_front_1c(Arc::new(f), &jbar, &init1, &scfg)?;
        let d = (0..md.y_cells)
            .map(|j| fr.profile.slice(j).iter().zip(&f1.profiles[0].values).fold(0.0, |m: f64, (p, q)| m.max((p - q).abs())))
            .fold(0.0, f64::max);
        let obj = out.as_object_mut().expect("object");
        obj.insert("reduced_front_sup_diff".into(), json!(d));
        obj.insert("reduced_front_energy".into(), json!(f1.energy));
    }
    let mut header = vec!["x".to_string()];
    header.extend((0..md.y_cells).map(|j| format!("m_y{j}")));
    let mut table = Table::new(&header);
    for i in 0..grid.n {
        let mut row = vec![grid.x(i)];
        row.extend((0..md.y_cells).map(|j| fr.profile.slice(j)[i]));
        table.rows.push(row);
    }
    Ok(Outcome { csv_name: "profile.csv", table, outputs: out })
}

fn rearrange(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let f = cfg.potential();
    let (a, b) = (f.a, f.b);
    let rc = &cfg.rearrange;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let modes: Vec<(f64, f64, f64)> = (0..rc.modes).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..6.0), rng.gen_range(0.0..2.0 * PI))).collect();
    let half = 0.5 * (grid.x_max - grid.x_min);
    let rough: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| {
            let base = a + 0.5 * (b - a) * (1.0 + x.tanh());
            // the perturbation vanishes in the outer half of the window
            let env = 1.0 - crate::convexity::smoothstep(2.0 * x.abs() / half - 1.0);
            let noise: f64 = modes.iter().map(|(c, k, ph)| c * (k * x + ph).sin()).sum();
            base + rc.amplitude * (b - a) * env * noise / (rc.modes.max(1) as f64).sqrt()
        })
        .collect();
    let sorted = monotone_rearrange(&grid, &rough, a, b)?;
    let stencil = Stencil::new(&cfg.kernel()?, grid.h)?;
    let fc = FunctionalConfig { kappa: cfg.model.kappa };
    let before = free_energy_1c_values(&rough, grid.h, a, b, &f, &stencil, &fc)?;
    let after = free_energy_1c(&sorted, &f, &stencil, &fc)?;
    let s = if b >= a { 1.0 } else { -1.0 };
    let was_monotone = rough.windows(2).all(|w| s * (w[1] - w[0]) >= 0.0);
    let mut table = Table::new(&["x", "rough", "rearranged"]);
    for i in 0..grid.n {
        table.rows.push(vec![grid.x(i), rough[i], sorted.values[i]]);
    }
    let outputs = json!({
        "energy_before": before,
        "energy_after": after,
        "decrease": before.total - after.total,
        "input_monotone": was_monotone,
    });
    Ok(Outcome { csv_name: "profile.csv", table, outputs })
}

/// Runs one command and writes its files; returns the report.
pub fn execute(command: &Command) -> Result<RunReport> {
    let args = command.args();
    let start = Instant::now();
    let text = match &args.config {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let cfg = RunConfig::load(&text, &args.set)?;
    fs::create_dir_all(&args.out)?;
    let echo = toml::to_string(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(args.out.join("config.toml"), echo)?;
    let outcome = match command {
        Command::SolveFront(_) => front_outcome(&cfg, cfg.model.components, 0)?,
        Command::SolveBinary(_) => front_outcome(&cfg, 2, 0)?,
        Command::SurfaceTension(_) => front_outcome(&cfg, cfg.model.components, cfg.surface_tension.certify_trials)?,
        Command::Interpolate(_) => interpolate(&cfg)?,
        Command::CheckConvexity(_) => check_convexity(&cfg)?,
        Command::PhaseDiagram(_) => phase_diagram(&cfg)?,
        Command::Solve2d(_) => solve_2d(&cfg)?,
        Command::Rearrange(_) => rearrange(&cfg)?,
    };
    outcome.table.write(&args.out.join(outcome.csv_name))?;
    fs::write(args.out.join("plot.py"), plot_script(outcome.csv_name, command.name()))?;
    let inputs = serde_json::to_value(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    let mut report = RunReport::new(command.name(), cfg.seed, inputs, outcome.outputs);
    report.artifacts = vec!["config.toml".into(), outcome.csv_name.into(), "report.json".into(), "plot.py".into()];
    if args.timings {
        report.timings = Some(Timings { total_seconds: start.elapsed().as_secs_f64() });
    }
    fs::write(args.out.join("report.json"), report.to_json())?;
    Ok(report)
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
