//! Fronts on a line times a periodic cell, `d = 2`.

use crate::convexity::{PathReport, Tolerances};
use crate::error::{Error, Result};
use crate::functionals::{check_normalized, potential_mass_space, EnergyBreakdown, FunctionalConfig};
use crate::grid::{Grid, MonotoneProfile, QuantileFunction};
use crate::kernels::{ConvexTable, RadialKernel};
use crate::potential::Potential;
use crate::quad::Rule;
use crate::solvers::SolveConfig;
use crate::transport::{displacement_interpolate, uniform_lambdas};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    pub x_grid: Grid,
    /// Number of cells across the period.
    pub y_cells: usize,
    /// Period in `y`.
    pub period: f64,
}

impl Grid2D {
    pub fn new(x_grid: Grid, y_cells: usize, period: f64) -> Result<Self> {
        if y_cells == 0 || !(period > 0.0) {
            return Err(Error::InvalidGrid(format!("{y_cells} cells over period {period}")));
        }
        Ok(Grid2D { x_grid, y_cells, period })
    }

    pub fn dy(&self) -> f64 {
        self.period / self.y_cells as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy()
    }
}

/// Values stored slice by slice: `values[j * n + i]` is `m(x_i, y_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub monotone_in_x: bool,
}

impl Profile2D {
    pub fn new(grid: Grid2D, values: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        let n = grid.x_grid.n;
        if values.len() != n * grid.y_cells {
            return Err(Error::InvalidProfile(format!("{} values for a {}x{} grid", values.len(), n, grid.y_cells)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite value".into()));
        }
        let s = if b >= a { 1.0 } else { -1.0 };
        let monotone_in_x = values.chunks(n).all(|c| c.windows(2).all(|w| s * (w[1] - w[0]) >= 0.0));
        Ok(Profile2D { grid, values, a, b, monotone_in_x })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Grid2D, a: f64, b: f64, f: F) -> Result<Self> {
        let g = grid.x_grid;
        let mut v = Vec::with_capacity(g.n * grid.y_cells);
        for j in 0..grid.y_cells {
            let y = grid.y(j);
            v.extend(g.nodes().iter().map(|&x| f(x, y)));
        }
        Profile2D::new(grid, v, a, b)
    }

    /// The same 1-D profile in every slice.
    pub fn extend_flat(p: &MonotoneProfile, y_cells: usize, period: f64) -> Result<Self> {
        let grid = Grid2D::new(p.grid, y_cells, period)?;
        Profile2D::new(grid, p.values.repeat(y_cells), p.a, p.b)
    }

    pub fn slice(&self, j: usize) -> &[f64] {
        let n = self.grid.x_grid.n;
        &self.values[j * n..(j + 1) * n]
    }

    pub fn slice_profile(&self, j: usize) -> Result<MonotoneProfile> {
        MonotoneProfile::with_tol(self.grid.x_grid, self.slice(j).to_vec(), self.a, self.b, f64::INFINITY)
    }

    /// Average over `y` at each `x`.
    pub fn y_mean(&self) -> Vec<f64> {
        let n = self.grid.x_grid.n;
        let mut m = vec![0.0; n];
        for c in self.values.chunks(n) {
            for (mi, v) in m.iter_mut().zip(c) {
                *mi += v;
            }
        }
        let p = self.grid.y_cells as f64;
        m.iter_mut().for_each(|v| *v /= p);
        m
    }

    /// `max_i (max_j m(x_i, y_j) - min_j m(x_i, y_j))`.
    pub fn flatness(&self) -> f64 {
        let n = self.grid.x_grid.n;
        (0..n)
            .map(|i| {
                let col = self.values.iter().skip(i).step_by(n);
                let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    /// Cyclic shift by `k` cells in `y`.
    pub fn shift_y(&self, k: usize) -> Profile2D {
        let p = self.grid.y_cells;
        let mut v = Vec::with_capacity(self.values.len());
        for j in 0..p {
            v.extend_from_slice(self.slice((j + p - k % p) % p));
        }
        Profile2D { values: v, ..self.clone() }
    }
}

/// Cell-pair weights of `J(t, s) = U(√(t² + s²))` on the slab, wrapped in `y`.
#[derive(Clone, Debug)]
pub struct Stencil2D {
    pub h: f64,
    pub dy: f64,
    pub kx: usize,
    pub y_cells: usize,
    /// `w[(k + kx) * y_cells + l]` for `k ∈ [-kx, kx]`, `l ∈ [0, y_cells)`.
    w: Vec<f64>,
    /// Discrete total mass `Σ w / (h dy)`.
    pub jhat: f64,
    pub u: RadialKernel,
}

/// `∫∫ f` over a rectangle, with `pieces²` sub-rectangles.
fn rect_integral<F: Fn(f64, f64) -> f64>(x0: f64, x1: f64, y0: f64, y1: f64, pieces: usize, r: &Rule, f: &F) -> f64 {
    let mut s = 0.0;
    let (dx, dy) = ((x1 - x0) / pieces as f64, (y1 - y0) / pieces as f64);
    for a in 0..pieces {
        let (xa, xb) = (x0 + a as f64 * dx, x0 + (a + 1) as f64 * dx);
        for b in 0..pieces {
            let (ya, yb) = (y0 + b as f64 * dy, y0 + (b + 1) as f64 * dy);
            s += r.integrate(xa, xb, |x| r.integrate(ya, yb, |y| f(x, y)));
        }
    }
    s
}

impl Stencil2D {
    pub fn new(u: &RadialKernel, grid: &Grid2D) -> Result<Self> {
        let h = grid.x_grid.h;
        let dy = grid.dy();
        let range = u.range;
        if h > range / 2.0 || dy > range / 2.0 {
            return Err(Error::InvalidGrid(format!("cells ({h}, {dy}) too coarse for kernel range {range}")));
        }
        let kx = (range / h).ceil() as usize + 1;
        let ly = (range / dy).ceil() as i64 + 1;
        let p = grid.y_cells;
        let rule = Rule::new(10);
        let rows: Vec<Vec<f64>> = (-(kx as i64)..=kx as i64)
            .into_par_iter()
            .map(|k| {
                let mut row = vec![0.0; p];
                let cx = k as f64 * h;
                for l in -ly..=ly {
                    let cy = l as f64 * dy;
                    let near = (cx.abs() - h).max(0.0).hypot((cy.abs() - dy).max(0.0));
                    if near >= range {
                        continue;
                    }
                    let far = (cx.abs() + h).hypot(cy.abs() + dy);
                    let pieces = if far > range { 6 } else { 1 };
                    let f = |t: f64, s: f64| u.eval(t.hypot(s)) * (h - (t - cx).abs()) * (dy - (s - cy).abs());
                    // split at the tent peaks
                    let q = rect_integral(cx - h, cx, cy - dy, cy, pieces, &rule, &f)
                        + rect_integral(cx, cx + h, cy - dy, cy, pieces, &rule, &f)
                        + rect_integral(cx - h, cx, cy, cy + dy, pieces, &rule, &f)
                        + rect_integral(cx, cx + h, cy, cy + dy, pieces, &rule, &f);
                    row[l.rem_euclid(p as i64) as usize] += q;
                }
                row
            })
            .collect();
        let w: Vec<f64> = rows.concat();
        let jhat = w.iter().sum::<f64>() / (h * dy);
        Ok(Stencil2D { h, dy, kx, y_cells: p, w, jhat, u: u.clone() })
    }

    #[inline]
    pub fn weight(&self, k: i64, l: usize) -> f64 {
        let i = k + self.kx as i64;
        if i < 0 || i as usize > 2 * self.kx {
            0.0
        } else {
            self.w[i as usize * self.y_cells + l]
        }
    }

    /// `Σ_l w(k, l) / dy`, the weight the slab sees for flat profiles.
    pub fn reduced(&self, k: i64) -> f64 {
        (0..self.y_cells).map(|l| self.weight(k, l)).sum::<f64>() / self.dy
    }

    fn check(&self, g: &Grid2D) -> Result<()> {
        if (self.h - g.x_grid.h).abs() > 1e-12 * self.h || self.y_cells != g.y_cells || (self.dy - g.dy()).abs() > 1e-12 * self.dy {
            return Err(Error::InvalidGrid("stencil built for a different grid".into()));
        }
        Ok(())
    }

    /// `(J ⊛ v)` at every cell, `x` padded with the asymptotes.
    pub fn convolve(&self, p: &Profile2D) -> Vec<f64> {
        let n = p.grid.x_grid.n;
        let pc = self.y_cells;
        let km = self.kx as i64;
        let scale = 1.0 / (self.h * self.dy);
        let at = |i: i64, j: usize| {
            if i < 0 {
                p.a
            } else if i >= n as i64 {
                p.b
            } else {
                p.values[j * n + i as usize]
            }
        };
        (0..pc)
            .into_par_iter()
            .flat_map_iter(|j| {
                (0..n).map(move |i| {
                    let mut s = 0.0;
                    for k in -km..=km {
                        for l in 0..pc {
                            let w = self.weight(k, l);
                            if w != 0.0 {
                                s += w * at(i as i64 + k, (j + l) % pc);
                            }
                        }
                    }
                    s * scale
                })
            })
            .collect()
    }
}

/// Interaction `∬∬ (m(z) - m(z'))² J(z - z')` over one period.
pub fn interaction_2d(p: &Profile2D, st: &Stencil2D) -> Result<f64> {
    st.check(&p.grid)?;
    let n = p.grid.x_grid.n as i64;
    let pc = st.y_cells;
    let km = st.kx as i64;
    let at = |i: i64, j: usize| {
        if i < 0 {
            p.a
        } else if i >= n {
            p.b
        } else {
            p.values[j * n as usize + i as usize]
        }
    };
    // ordered pairs with at least one cell in the window
    let total: f64 = (0..pc)
        .into_par_iter()
        .map(|j| {
            let mut s = 0.0;
            for i in -km..n + km {
                let v = at(i, j);
                for k in -km..=km {
                    let i2 = i + k;
                    if (i < 0 || i >= n) && (i2 < 0 || i2 >= n) {
                        continue;
                    }
                    for l in 0..pc {
                        let w = st.weight(k, l);
                        if w != 0.0 {
                            let d = v - at(i2, (j + l) % pc);
                            s += w * d * d;
                        }
                    }
                }
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total)
}

/// `∫F(m) + κ ∬∬ (m(z) - m(z'))² J(z - z')` per period.
pub fn free_energy_2d<P: Potential + ?Sized>(p: &Profile2D, f: &P, st: &Stencil2D, cfg: &FunctionalConfig) -> Result<EnergyBreakdown> {
    check_normalized(f, p.a, p.b)?;
    let cell = st.h * st.dy;
    let pot = cell * p.values.iter().map(|&v| f.f(v)).sum::<f64>();
    let inter = cfg.kappa * interaction_2d(p, st)?;
    Ok(EnergyBreakdown { potential_term: pot, interaction_term: inter, total: pot + inter, quadrature_error_estimate: 0.0 })
}

/// Stationarity defect per cell, divided by the cell area.
pub fn gradient_2d<P: Potential + ?Sized>(p: &Profile2D, f: &P, st: &Stencil2D, cfg: &FunctionalConfig) -> Vec<f64> {
    let conv = st.convolve(p);
    p.values.iter().zip(&conv).map(|(&v, &c)| f.df(v) + 4.0 * cfg.kappa * (st.jhat * v - c)).collect()
}

#[derive(Clone, Debug)]
pub struct Front2D {
    pub profile: Profile2D,
    pub residual: f64,
    pub iterations: usize,
    pub energy: EnergyBreakdown,
}

fn sort_and_pin(p: &mut Profile2D) -> Result<()> {
    let n = p.grid.x_grid.n;
    let h = p.grid.x_grid.h;
    let (a, b) = (p.a, p.b);
    let (lo, hi) = (a.min(b), a.max(b));
    for c in p.values.chunks_mut(n) {
        for v in c.iter_mut() {
            *v = v.clamp(lo, hi);
        }
        c.sort_by(f64::total_cmp);
        if b < a {
            c.reverse();
        }
    }
    let s = if b >= a { 1.0 } else { -1.0 };
    let d: Vec<f64> = p.y_mean().iter().map(|v| s * (v - 0.5 * (a + b))).collect();
    let g = p.grid.x_grid;
    let mut c = None;
    for i in 0..n - 1 {
        if d[i] < 0.0 && d[i + 1] >= 0.0 {
            c = Some(g.x(i) + h * (0.5 + d[i] / (d[i] - d[i + 1])));
            break;
        }
    }
    let c = c.ok_or_else(|| Error::DivergedOutOfWindow("mean profile does not cross its midpoint".into()))?;
    if c != 0.0 {
        let r = c / h;
        let k0 = r.floor();
        let t = r - k0;
        let k0 = k0 as i64;
        for col in p.values.chunks_mut(n) {
            let old = col.to_vec();
            let at = |j: i64| {
                if j < 0 {
                    a
                } else if j >= n as i64 {
                    b
                } else {
                    old[j as usize]
                }
            };
            for (i, v) in col.iter_mut().enumerate() {
                let i = i as i64;
                *v = (1.0 - t) * at(i + k0) + t * at(i + k0 + 1);
            }
        }
    }
    p.monotone_in_x = true;
    Ok(())
}

/// Damped fixed-point iteration with per-slice sorting and mean-crossing pinning.
pub fn solve_front_2d<P: Potential + ?Sized>(f: &P, st: &Stencil2D, init: &Profile2D, cfg: &SolveConfig) -> Result<Front2D> {
    cfg.validate()?;
    st.check(&init.grid)?;
    check_normalized(f, init.a, init.b)?;
    let fc = cfg.functional;
    let mut p = init.clone();
    sort_and_pin(&mut p)?;
    let step = 1.0 / (4.0 * fc.kappa * st.jhat);
    let mut theta = cfg.damping;
    let (mut prev, mut rises) = (f64::INFINITY, 0);
    for it in 0..cfg.max_iter {
        let r = gradient_2d(&p, f, st, &fc);
        let res = r.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        if !res.is_finite() {
            return Err(Error::DivergedOutOfWindow("non-finite residual".into()));
        }
        if res <= cfg.residual_tol {
            let energy = free_energy_2d(&p, f, st, &fc)?;
            return Ok(Front2D { profile: p, residual: res, iterations: it, energy });
        }
        if res > prev {
            rises += 1;
            if rises >= 3 {
                theta *= 0.5;
                rises = 0;
            }
        } else {
            rises = 0;
        }
        prev = res;
        for (v, r) in p.values.iter_mut().zip(&r) {
            *v -= theta * step * r;
        }
        sort_and_pin(&mut p)?;
    }
    Err(Error::MaxIterExceeded { iterations: cfg.max_iter, residual: prev })
}

/// `W_l` for the y-lag kernel `K_l(t) = ∫ J(t, s) tent_dy(s - l dy) ds`, wrapped in `y`.
fn lag_table(u: &RadialKernel, grid: &Grid2D, l: usize, nodes: usize) -> ConvexTable {
    let range = u.range;
    let dy = grid.dy();
    let p = grid.y_cells as i64;
    let ly = (range / dy).ceil() as i64 + 1;
    let rule = Rule::new(10);
    let delta = range / nodes as f64;
    let k: Vec<f64> = (0..=nodes)
        .map(|i| {
            let t = i as f64 * delta;
            let cut = (range * range - t * t).max(0.0).sqrt();
            let mut acc = 0.0;
            for img in (-ly..=ly).filter(|img| img.rem_euclid(p) == l as i64) {
                let cy = img as f64 * dy;
                let f = |s: f64| u.eval(t.hypot(s)) * (dy - (s - cy).abs());
                acc += rule.integrate_split(cy - dy, cy, &[-cut, cut], f) + rule.integrate_split(cy, cy + dy, &[-cut, cut], f);
            }
            acc
        })
        .collect();
    ConvexTable::from_samples(&k, range)
}

/// The 2-D interaction along slicewise displacement interpolation.
///
/// For asymptotes `-b, b` each ordered slice pair at y-lag `l` contributes
/// `K̂_l [∫(m_j² - b²) + ∫(m_j'² - b²)] + 8 b² ∬ W_l dρ_j dρ_j' - 8 b² α_l`:
/// the first moments drop out, the local terms are affine along the path and
/// `W_l` is convex, so the evaluation is exactly convex. Values agree with
/// [`interaction_2d`] of the resampled profiles up to the grid error.
pub fn joint_slice_convexity(p0: &Profile2D, p1: &Profile2D, st: &Stencil2D, k: usize, mass_points: usize, tol: &Tolerances) -> Result<PathReport> {
    if p0.grid != p1.grid || p0.a != p1.a || p0.b != p1.b {
        return Err(Error::InvalidProfile("profiles differ in grid or asymptotes".into()));
    }
    if !p0.monotone_in_x || !p1.monotone_in_x {
        return Err(Error::InvalidProfile("slices must be monotone in x".into()));
    }
    if (p0.a + p0.b).abs() > 1e-12 * p0.b.abs() {
        return Err(Error::InvalidProfile("asymptotes must be -a and a".into()));
    }
    if k < 5 {
        return Err(Error::Config(format!("K = {k} < 5 path points")));
    }
    st.check(&p0.grid)?;
    let lambdas = uniform_lambdas(k);
    let pc = p0.grid.y_cells;
    let paths = (0..pc)
        .into_par_iter()
        .map(|j| displacement_interpolate(&p0.slice_profile(j)?, &p1.slice_profile(j)?, &lambdas, mass_points))
        .collect::<Result<Vec<_>>>()?;
    let lags: Vec<ConvexTable> = (0..pc).into_par_iter().map(|l| lag_table(&st.u, &p0.grid, l, LAG_TABLE)).collect();
    let (a, b) = (p0.a, p0.b);
    let b2 = b * b;
    let values = (0..k)
        .into_par_iter()
        .map(|t| {
            let qs: Vec<&QuantileFunction> = paths.iter().map(|path| &path.quantiles[t]).collect();
            let local: Vec<f64> = qs.iter().map(|q| potential_mass_space(q, a, b, |m| m * m)).collect();
            let cells: Vec<(Vec<f64>, Vec<f64>)> = qs.iter().map(|q| q.cells()).collect();
            let mut s = 0.0;
            for j in 0..pc {
                for (l, lag) in lags.iter().enumerate() {
                    let j2 = (j + l) % pc;
                    s += 2.0 * lag.half_mass * (local[j] + local[j2]) + 8.0 * b2 * (lag.pair_sum(&cells[j], &cells[j2]) - lag.alpha());
                }
            }
            s
        })
        .collect::<Vec<f64>>();
    Ok(PathReport::from_values(lambdas, values, tol))
}

const LAG_TABLE: usize = 4096;
