//! Damped fixed-point solvers for one- and two-component fronts.

use crate::bulk::{bulk_phases, bulk_phases_fast, find_beta_c, BulkPhases, LocalFreeEnergy};
use crate::error::{Error, Result};
use crate::functionals::{free_energy_1c, gradient_1c, gradient_2c, grand_excess_2c, EnergyBreakdown, FunctionalConfig};
use crate::grid::{Grid, MonotoneProfile, Orientation};
use crate::kernels::{Kernel, Stencil};
use crate::potential::Potential;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pinning {
    /// The `(a+b)/2` level of the first component sits at 0.
    MidpointAtZero,
    /// The two components cross at 0.
    CrossingAtZero,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveConfig {
    pub damping: f64,
    pub max_iter: usize,
    pub residual_tol: f64,
    pub pinning: Pinning,
    pub clamp: bool,
    pub functional: FunctionalConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            damping: 0.5,
            max_iter: 200_000,
            residual_tol: 1e-10,
            pinning: Pinning::MidpointAtZero,
            clamp: true,
            functional: FunctionalConfig::default(),
        }
    }
}

impl SolveConfig {
    pub fn two_component() -> Self {
        SolveConfig { pinning: Pinning::CrossingAtZero, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping {} outside (0, 1]", self.damping)));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config("residual_tol must be positive".into()));
        }
        if !(self.functional.kappa > 0.0) {
            return Err(Error::Config("kappa must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// The discrete functional a front is stationary for.
#[derive(Clone)]
pub enum Model {
    OneComponent { potential: Arc<dyn Potential>, stencil: Stencil, functional: FunctionalConfig },
    TwoComponent { bulk: BulkPhases, stencil: Stencil },
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Model::OneComponent { functional, .. } => write!(f, "OneComponent(kappa = {})", functional.kappa),
            Model::TwoComponent { bulk, .. } => write!(f, "TwoComponent(beta = {}, lambda = {})", bulk.beta, bulk.lambda),
        }
    }
}

impl Model {
    pub fn components(&self) -> usize {
        match self {
            Model::OneComponent { .. } => 1,
            Model::TwoComponent { .. } => 2,
        }
    }

    pub fn stencil(&self) -> &Stencil {
        match self {
            Model::OneComponent { stencil, .. } | Model::TwoComponent { stencil, .. } => stencil,
        }
    }

    /// `ℱ` for one component, the grand potential `Ω` for two.
    pub fn energy(&self, p: &[MonotoneProfile]) -> Result<EnergyBreakdown> {
        match self {
            Model::OneComponent { potential, stencil, functional } => free_energy_1c(&p[0], potential.as_ref(), stencil, functional),
            Model::TwoComponent { bulk, stencil } => grand_excess_2c(&p[0], &p[1], bulk, stencil),
        }
    }

    /// Per-node stationarity defects, one vector per component.
    pub fn gradient(&self, p: &[MonotoneProfile]) -> Vec<Vec<f64>> {
        match self {
            Model::OneComponent { potential, stencil, functional } => vec![gradient_1c(&p[0], potential.as_ref(), stencil, functional)],
            Model::TwoComponent { bulk, stencil } => {
                let (r1, r2) = gradient_2c(&p[0], &p[1], bulk, stencil);
                vec![r1, r2]
            }
        }
    }

    pub fn residual(&self, p: &[MonotoneProfile]) -> f64 {
        sup(&self.gradient(p))
    }
}

fn sup(r: &[Vec<f64>]) -> f64 {
    r.iter().flatten().fold(0.0, |m: f64, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub component: usize,
    pub side: TailSide,
    pub decay_rate: f64,
    pub fit_window: (f64, f64),
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Clone, Debug)]
pub struct FrontSolution {
    pub model: Model,
    pub profiles: Vec<MonotoneProfile>,
    pub residual: f64,
    pub iterations: usize,
    pub energy: f64,
    pub breakdown: EnergyBreakdown,
    /// Chemical potential of a two-component front.
    pub mu: Option<f64>,
    /// Tail fits with `r² ≥ 0.95`.
    pub decay: Vec<DecayFit>,
    pub converged: bool,
}

/// Cell-midpoint position where `d` (increasing) crosses 0.
fn zero_crossing(d: &[f64], grid: &Grid) -> Option<f64> {
    for i in 0..d.len() - 1 {
        if d[i] < 0.0 && d[i + 1] >= 0.0 {
            return Some(grid.x(i) + grid.h * (0.5 + d[i] / (d[i] - d[i + 1])));
        }
    }
    None
}

/// Values at `x_i + s`, linear between nodes and constant outside.
fn shifted(v: &[f64], a: f64, b: f64, s: f64, h: f64) -> Vec<f64> {
    let n = v.len() as i64;
    let at = |j: i64| {
        if j < 0 {
            a
        } else if j >= n {
            b
        } else {
            v[j as usize]
        }
    };
    let r = s / h;
    let k = r.floor();
    let t = r - k;
    let k = k as i64;
    (0..n).map(|i| if t == 0.0 { at(i + k) } else { (1.0 - t) * at(i + k) + t * at(i + k + 1) }).collect()
}

fn pin_offset(p: &[MonotoneProfile], pinning: Pinning) -> Result<f64> {
    let g = &p[0].grid;
    let d: Vec<f64> = match pinning {
        Pinning::None => return Ok(0.0),
        Pinning::MidpointAtZero => {
            let (a, b) = (p[0].a, p[0].b);
            let s = if b >= a { 1.0 } else { -1.0 };
            p[0].values.iter().map(|v| s * (v - 0.5 * (a + b))).collect()
        }
        Pinning::CrossingAtZero => {
            if p.len() < 2 {
                return Err(Error::Config("crossing pinning needs two components".into()));
            }
            let s = if p[0].orientation == Orientation::Increasing { 1.0 } else { -1.0 };
            p[0].values.iter().zip(&p[1].values).map(|(v, u)| s * (v - u)).collect()
        }
    };
    zero_crossing(&d, g).ok_or_else(|| Error::DivergedOutOfWindow("pinning level not crossed inside the window".into()))
}

/// Clamp, sort and re-pin one sweep's output.
fn normalize_sweep(p: &mut [MonotoneProfile], cfg: &SolveConfig) -> Result<()> {
    for q in p.iter_mut() {
        let (lo, hi) = if q.a <= q.b { (q.a, q.b) } else { (q.b, q.a) };
        if q.values.iter().any(|x| !x.is_finite()) {
            return Err(Error::DivergedOutOfWindow("non-finite values".into()));
        }
        if cfg.clamp {
            for x in q.values.iter_mut() {
                *x = x.clamp(lo, hi);
            }
        }
        q.values.sort_by(f64::total_cmp);
        if q.orientation == Orientation::Decreasing {
            q.values.reverse();
        }
    }
    let c = pin_offset(p, cfg.pinning)?;
    let g = p[0].grid;
    if c.abs() > 0.5 * (g.x_max - g.x_min) {
        return Err(Error::DivergedOutOfWindow("pinning shift exceeds half the window".into()));
    }
    if c != 0.0 {
        for q in p.iter_mut() {
            q.values = shifted(&q.values, q.a, q.b, c, g.h);
        }
    }
    Ok(())
}

struct Damping {
    theta: f64,
    prev: f64,
    rises: usize,
}

impl Damping {
    fn new(theta: f64) -> Self {
        Damping { theta, prev: f64::INFINITY, rises: 0 }
    }

    fn observe(&mut self, res: f64) {
        if res > self.prev {
            self.rises += 1;
            if self.rises >= 3 {
                self.theta *= 0.5;
                self.rises = 0;
            }
        } else {
            self.rises = 0;
        }
        self.prev = res;
    }
}

fn finish(model: Model, profiles: Vec<MonotoneProfile>, residual: f64, iterations: usize, converged: bool) -> Result<FrontSolution> {
    let breakdown = model.energy(&profiles)?;
    let mu = match &model {
        Model::TwoComponent { bulk, .. } => Some(bulk.lambda - 1.0),
        _ => None,
    };
    let mut s = FrontSolution { model, profiles, residual, iterations, energy: breakdown.total, breakdown, mu, decay: vec![], converged };
    if converged {
        s.decay = tail_fits(&s).into_iter().filter_map(|f| f.ok()).filter(|f| f.r_squared >= 0.95).collect();
    }
    Ok(s)
}

fn run(model: Model, init: Vec<MonotoneProfile>, cfg: &SolveConfig) -> Result<FrontSolution> {
    cfg.validate()?;
    let mut p = init;
    normalize_sweep(&mut p, cfg)?;
    let mut damp = Damping::new(cfg.damping);
    let mut best: Option<(f64, Vec<MonotoneProfile>, usize)> = None;
    for it in 0..cfg.max_iter {
        let res = model.residual(&p);
        if !res.is_finite() {
            return Err(Error::DivergedOutOfWindow("non-finite values".into()));
        }
        if best.as_ref().is_none_or(|b| res < b.0) {
            best = Some((res, p.clone(), it));
        }
        if res <= cfg.residual_tol {
            return finish(model, p, res, it, true);
        }
        damp.observe(res);
        sweep(&model, &mut p, damp.theta);
        normalize_sweep(&mut p, cfg)?;
    }
    let (res, p, _) = best.expect("at least one sweep");
    finish(model, p, res, cfg.max_iter, false)
}

fn sweep(model: &Model, p: &mut [MonotoneProfile], theta: f64) {
    match model {
        Model::OneComponent { potential, stencil, functional } => {
            let r = gradient_1c(&p[0], potential.as_ref(), stencil, functional);
            let c = theta / (4.0 * functional.kappa * stencil.jhat);
            for (v, r) in p[0].values.iter_mut().zip(&r) {
                *v -= c * r;
            }
        }
        Model::TwoComponent { bulk, stencil } => {
            let mu = bulk.lambda - 1.0;
            let (lo, hi) = (bulk.rho_minus, bulk.rho_plus);
            for (me, other) in [(0usize, 1usize), (1, 0)] {
                let o = &p[other];
                let conv = stencil.convolve(&o.values, o.a, o.b);
                for (v, c) in p[me].values.iter_mut().zip(&conv) {
                    let target = (mu - bulk.beta * c).exp().clamp(lo, hi);
                    *v = (1.0 - theta) * *v + theta * target;
                }
            }
        }
    }
}

/// Runs the one-component iteration and returns the best iterate, converged or not.
pub fn iterate_front_1c(f: Arc<dyn Potential>, k: &Kernel, init: &MonotoneProfile, cfg: &SolveConfig) -> Result<FrontSolution> {
    let stencil = Stencil::new(k, init.grid.h)?;
    crate::functionals::check_normalized(f.as_ref(), init.a, init.b)?;
    if init.a == init.b {
        return Err(Error::DegenerateProfile);
    }
    let model = Model::OneComponent { potential: f, stencil, functional: cfg.functional };
    let mut init = init.clone();
    init.values = init.values.iter().map(|v| v.clamp(init.a.min(init.b), init.a.max(init.b))).collect();
    run(model, vec![init], cfg)
}

pub fn solve_front_1c(f: Arc<dyn Potential>, k: &Kernel, init: &MonotoneProfile, cfg: &SolveConfig) -> Result<FrontSolution> {
    let s = iterate_front_1c(f, k, init, cfg)?;
    if !s.converged {
        return Err(Error::MaxIterExceeded { iterations: s.iterations, residual: s.residual });
    }
    Ok(s)
}

/// Bulk phases for a front, rejecting `β ≤ β_c`.
pub fn front_bulk(beta: f64, lambda: f64, jhat: f64) -> Result<BulkPhases> {
    let beta_c = find_beta_c(lambda, jhat)?;
    if beta <= beta_c {
        return Err(Error::SubcriticalBeta { beta, beta_c });
    }
    let lfe = LocalFreeEnergy::new(beta, lambda, jhat)?;
    // the grid oracle cannot resolve the quartic flatness right above β_c
    if beta > 1.05 * beta_c {
        bulk_phases(&lfe)
    } else {
        bulk_phases_fast(&lfe)
    }
}

/// Bulk step pair `(ρ- → ρ+, ρ+ → ρ-)` at `x0`.
pub fn step_pair(grid: Grid, bulk: &BulkPhases, x0: f64) -> Result<(MonotoneProfile, MonotoneProfile)> {
    Ok((
        MonotoneProfile::step(grid, bulk.rho_minus, bulk.rho_plus, x0)?,
        MonotoneProfile::step(grid, bulk.rho_plus, bulk.rho_minus, x0)?,
    ))
}

/// Two-component iteration returning the best iterate, converged or not.
pub fn iterate_front_2c(beta: f64, lambda: f64, k: &Kernel, init: (&MonotoneProfile, &MonotoneProfile), cfg: &SolveConfig) -> Result<FrontSolution> {
    if !k.even {
        return Err(Error::InvalidKernel("two-component fronts need an even kernel".into()));
    }
    let stencil = Stencil::new(k, init.0.grid.h)?;
    let bulk = front_bulk(beta, lambda, stencil.jhat)?;
    let (m, n) = init;
    if !m.grid.same_as(&n.grid) {
        return Err(Error::InvalidProfile("components live on different grids".into()));
    }
    let mut m = m.clone();
    let mut n = n.clone();
    if m.orientation != Orientation::Increasing || n.orientation != Orientation::Decreasing {
        return Err(Error::InvalidProfile("first component must increase, second decrease".into()));
    }
    // start from the exact bulk asymptotes
    for (q, a, b) in [(&mut m, bulk.rho_minus, bulk.rho_plus), (&mut n, bulk.rho_plus, bulk.rho_minus)] {
        let (lo, hi) = (a.min(b), a.max(b));
        let v = q.values.iter().map(|x| x.clamp(lo, hi)).collect();
        *q = MonotoneProfile::with_tol(q.grid, v, a, b, f64::INFINITY)?;
    }
    run(Model::TwoComponent { bulk, stencil }, vec![m, n], cfg)
}

pub fn solve_front_2c(beta: f64, lambda: f64, k: &Kernel, init: (&MonotoneProfile, &MonotoneProfile), cfg: &SolveConfig) -> Result<FrontSolution> {
    let s = iterate_front_2c(beta, lambda, k, init, cfg)?;
    if !s.converged {
        return Err(Error::MaxIterExceeded { iterations: s.iterations, residual: s.residual });
    }
    Ok(s)
}

/// Energy of a converged front.
pub fn surface_tension(front: &FrontSolution) -> Result<f64> {
    if !front.converged {
        return Err(Error::NotConverged);
    }
    Ok(front.energy)
}

fn central_difference(v: &[f64], a: f64, b: f64, h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let l = if i == 0 { a } else { v[i - 1] };
            let r = if i + 1 == n { b } else { v[i + 1] };
            (r - l) / (2.0 * h)
        })
        .collect()
}

/// Sup norm of `w1'/w1 + β J*w2'` and its mirror, with central differences.
pub fn check_derivative_el(front: &FrontSolution) -> Result<f64> {
    let Model::TwoComponent { bulk, stencil } = &front.model else {
        return Err(Error::InvalidProfile("derivative check applies to two-component fronts".into()));
    };
    let h = front.profiles[0].grid.h;
    let d: Vec<Vec<f64>> = front.profiles.iter().map(|p| central_difference(&p.values, p.a, p.b, h)).collect();
    let mut worst: f64 = 0.0;
    for (me, other) in [(0usize, 1usize), (1, 0)] {
        let conv = stencil.convolve(&d[other], 0.0, 0.0);
        for ((dv, v), c) in d[me].iter().zip(&front.profiles[me].values).zip(&conv) {
            worst = worst.max((dv / v + bulk.beta * c).abs());
        }
    }
    Ok(worst)
}

/// Least-squares exponential fit on one tail of one profile.
pub fn fit_tail(p: &MonotoneProfile, side: TailSide) -> Result<(f64, (f64, f64), f64, usize)> {
    let g = &p.grid;
    let bulk = match side {
        TailSide::Left => p.a,
        TailSide::Right => p.b,
    };
    let scale = (p.b - p.a).abs().max(f64::MIN_POSITIVE);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let idx: Vec<usize> = match side {
        TailSide::Left => (0..g.n / 2).collect(),
        TailSide::Right => (g.n / 2..g.n).collect(),
    };
    for i in idx {
        let dev = (p.values[i] - bulk).abs() / scale;
        if (1e-12..=1e-3).contains(&dev) {
            xs.push(g.x(i));
            ys.push(dev.ln());
        }
    }
    if xs.len() < 20 {
        return Err(Error::InsufficientTail(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rate = match side {
        TailSide::Left => slope,
        TailSide::Right => -slope,
    };
    Ok((rate, (lo, hi), r2, xs.len()))
}

fn tail_fits(front: &FrontSolution) -> Vec<Result<DecayFit>> {
    let mut out = Vec::new();
    for (c, p) in front.profiles.iter().enumerate() {
        for side in [TailSide::Left, TailSide::Right] {
            out.push(fit_tail(p, side).map(|(decay_rate, fit_window, r_squared, points)| DecayFit {
                component: c,
                side,
                decay_rate,
                fit_window,
                r_squared,
                points,
            }));
        }
    }
    out
}

/// Exponential fits on every tail of the front.
pub fn fit_decay(front: &FrontSolution) -> Result<Vec<DecayFit>> {
    tail_fits(front).into_iter().collect()
}

/// `sup |m(x) + m(-x) - (a + b)|` over cells mirrored about the origin.
pub fn odd_defect(p: &MonotoneProfile) -> f64 {
    mirror_defect(&p.values, &p.values, &p.grid, p.a + p.b)
}

/// `sup |w1(x) - w2(-x)|` over mirrored cells.
pub fn mirror_symmetry_defect(w1: &MonotoneProfile, w2: &MonotoneProfile) -> f64 {
    let neg: Vec<f64> = w2.values.iter().map(|v| -v).collect();
    mirror_defect(&w1.values, &neg, &w1.grid, 0.0)
}

/// `sup |u(x) + v(-x) - c|`; cell `[x_i, x_i + h)` mirrors onto `[-x_i - h, -x_i)`.
fn mirror_defect(u: &[f64], v: &[f64], g: &Grid, c: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, ui) in u.iter().enumerate() {
        let xm = -g.x(i) - g.h;
        if let Some(j) = g.node_index(xm) {
            worst = worst.max((ui + v[j] - c).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::QuarticWell;

    #[test]
    fn one_component_box_front() {
        let g = Grid::centered_cells(300, 0.02).unwrap();
        let k = Kernel::box_kernel(1.0, 1.0).unwrap();
        let init = MonotoneProfile::step(g, -1.0, 1.0, 0.0).unwrap();
        let cfg = SolveConfig { residual_tol: 1e-10, ..Default::default() };
        let s = solve_front_1c(Arc::new(QuarticWell::symmetric()), &k, &init, &cfg).unwrap();
        eprintln!("iters {} res {} energy {}", s.iterations, s.residual, s.energy);
        assert!(s.energy < 1.0);
        assert!(odd_defect(&s.profiles[0]) < 1e-8);
    }

    #[test]
    fn two_component_box_front() {
        let g = Grid::centered_cells(400, 0.025).unwrap();
        let k = Kernel::box_kernel(1.0, 1.0).unwrap();
        let lambda = 1.0;
        let beta = 1.5 * crate::bulk::beta_c_closed_form(lambda, 1.0);
        let bulk = front_bulk(beta, lambda, 1.0).unwrap();
        let (m, n) = step_pair(g, &bulk, 0.0).unwrap();
        let cfg = SolveConfig { residual_tol: 1e-12, ..SolveConfig::two_component() };
        let s = solve_front_2c(beta, lambda, &k, (&m, &n), &cfg).unwrap();
        eprintln!("iters {} res {} energy {} decay {:?}", s.iterations, s.residual, s.energy, s.decay);
        assert!(mirror_symmetry_defect(&s.profiles[0], &s.profiles[1]) < 1e-8);
        assert!(s.energy > 0.0);
    }
}

