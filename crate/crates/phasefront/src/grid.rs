//! Grids, monotone profiles, densities and quantile functions.
//!
//! A profile is read as a right-continuous step function: `m(x) = v_i` on
//! `[x_i, x_i + h)`, `a` to the left of the window and `b` from `x_max + h` on.
//! Its measure is a set of atoms at the nodes, plus the right edge defect at
//! `x_max + h`. Quantiles interpolate linearly between nodes.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidGrid(format!("n = {n} < 8")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!("bad window [{x_min}, {x_max}]")));
        }
        let h = (x_max - x_min) / (n - 1) as f64;
        Ok(Grid { x_min, x_max, n, h })
    }

    /// Grid with spacing `h` whose node `i0` sits exactly at the origin.
    pub fn centered(half_nodes: usize, h: f64) -> Result<Self> {
        let n = 2 * half_nodes + 1;
        let x_min = -(half_nodes as f64) * h;
        let mut g = Grid::new(x_min, -x_min, n)?;
        g.h = h;
        Ok(g)
    }

    /// Grid of `2 half_cells` nodes from `-half_cells h` to `(half_cells - 1) h`,
    /// so that the cells tile a window symmetric about the origin.
    pub fn centered_cells(half_cells: usize, h: f64) -> Result<Self> {
        let x_min = -(half_cells as f64) * h;
        let mut g = Grid::new(x_min, (half_cells as f64 - 1.0) * h, 2 * half_cells)?;
        g.h = h;
        Ok(g)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Index of the node nearest to `x`, if `x` is a node up to rounding.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let r = (x - self.x_min) / self.h;
        let k = r.round();
        if (r - k).abs() < 1e-9 && k >= 0.0 && (k as usize) < self.n {
            Some(k as usize)
        } else {
            None
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n
            && (self.x_min - other.x_min).abs() <= 1e-12 * self.h
            && (self.h - other.h).abs() <= 1e-12 * self.h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Increasing,
    Decreasing,
}

impl Orientation {
    pub fn of(a: f64, b: f64) -> Self {
        if b >= a {
            Orientation::Increasing
        } else {
            Orientation::Decreasing
        }
    }
}

pub fn default_boundary_tol(a: f64, b: f64) -> f64 {
    1e-6 * (b - a).abs()
}

#[derive(Clone, Debug)]
pub struct MonotoneProfile {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub orientation: Orientation,
}

impl MonotoneProfile {
    pub fn new(grid: Grid, values: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        Self::with_tol(grid, values, a, b, default_boundary_tol(a, b))
    }

    pub fn with_tol(grid: Grid, values: Vec<f64>, a: f64, b: f64, tol: f64) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidProfile(format!(
                "{} values for {} nodes",
                values.len(),
                grid.n
            )));
        }
        let orientation = Orientation::of(a, b);
        let (lo, hi) = (a.min(b), a.max(b));
        let slack = 1e-12 * (hi - lo).max(1.0);
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < lo - slack || v > hi + slack {
                return Err(Error::InvalidProfile(format!("value {v} at node {i} outside [{lo}, {hi}]")));
            }
        }
        let sign = if orientation == Orientation::Increasing { 1.0 } else { -1.0 };
        for (i, w) in values.windows(2).enumerate() {
            if sign * (w[1] - w[0]) < -slack {
                return Err(Error::InvalidProfile(format!("not monotone at node {i}")));
            }
        }
        if (values[0] - a).abs() > tol || (values[grid.n - 1] - b).abs() > tol {
            return Err(Error::InvalidProfile(format!(
                "edge values ({}, {}) do not reach asymptotes ({a}, {b})",
                values[0],
                values[grid.n - 1]
            )));
        }
        let values = values.into_iter().map(|v| v.clamp(lo, hi)).collect();
        Ok(MonotoneProfile { grid, values, a, b, orientation })
    }

    /// Samples `f` on the grid.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid, a: f64, b: f64, f: F) -> Result<Self> {
        let v = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, v, a, b)
    }

    /// Sharp step from `a` to `b` at the node nearest `x0`.
    pub fn step(grid: Grid, a: f64, b: f64, x0: f64) -> Result<Self> {
        let v = grid.nodes().into_iter().map(|x| if x >= x0 - 0.5 * grid.h { b } else { a }).collect();
        Self::new(grid, v, a, b)
    }

    /// Normalized values `(v - a)/(b - a)`, non-decreasing in [0, 1].
    pub fn normalized(&self) -> Result<Vec<f64>> {
        if self.a == self.b {
            return Err(Error::DegenerateProfile);
        }
        let d = self.b - self.a;
        Ok(self.values.iter().map(|v| ((v - self.a) / d).clamp(0.0, 1.0)).collect())
    }

    /// Piecewise linear evaluation with the boundary-value extension.
    pub fn eval_linear(&self, x: f64) -> f64 {
        let g = &self.grid;
        let r = (x - g.x_min) / g.h;
        if r <= 0.0 {
            return if r < 0.0 { self.a } else { self.values[0] };
        }
        if r >= (g.n - 1) as f64 {
            return if x > g.x_max { self.b } else { self.values[g.n - 1] };
        }
        let i = r.floor() as usize;
        let t = r - i as f64;
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    /// Translate by `delta`; whole-node shifts are exact, otherwise linear interpolation.
    pub fn translate(&self, delta: f64) -> MonotoneProfile {
        let g = &self.grid;
        let r = delta / g.h;
        let k = r.round();
        let values = if (r - k).abs() < 1e-9 {
            let k = k as i64;
            (0..g.n as i64)
                .map(|i| {
                    let j = i - k;
                    if j < 0 {
                        self.a
                    } else if j >= g.n as i64 {
                        self.b
                    } else {
                        self.values[j as usize]
                    }
                })
                .collect()
        } else {
            g.nodes().into_iter().map(|x| self.eval_linear(x - delta)).collect()
        };
        MonotoneProfile { grid: *g, values, a: self.a, b: self.b, orientation: self.orientation }
    }

    /// Position where the profile crosses `level`, by linear interpolation.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let s = if self.orientation == Orientation::Increasing { 1.0 } else { -1.0 };
        let v = &self.values;
        for i in 0..v.len() - 1 {
            let (p, q) = (s * (v[i] - level), s * (v[i + 1] - level));
            if p < 0.0 && q >= 0.0 {
                return Some(self.grid.x(i) + self.grid.h * p / (p - q));
            }
        }
        None
    }

    pub fn sup_diff(&self, other: &MonotoneProfile) -> f64 {
        self.values.iter().zip(&other.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct ProbabilityDensity {
    pub grid: Grid,
    pub weights: Vec<f64>,
}

/// Atom masses of the normalized profile; the right edge defect is added to the last cell.
pub fn profile_to_density(p: &MonotoneProfile) -> Result<ProbabilityDensity> {
    let u = p.normalized()?;
    let n = u.len();
    let mut w = Vec::with_capacity(n);
    w.push(u[0]);
    for i in 1..n {
        w.push(u[i] - u[i - 1]);
    }
    w[n - 1] += 1.0 - u[n - 1];
    Ok(ProbabilityDensity { grid: p.grid, weights: w })
}

pub fn density_to_profile(d: &ProbabilityDensity, a: f64, b: f64) -> Result<MonotoneProfile> {
    let mut acc = 0.0;
    let mut v = Vec::with_capacity(d.weights.len());
    for &w in &d.weights {
        if w < 0.0 {
            return Err(Error::InvalidProfile("negative weight".into()));
        }
        acc += w;
        v.push(a + (b - a) * acc.min(1.0));
    }
    MonotoneProfile::new(d.grid, v, a, b)
}

#[derive(Clone, Debug)]
pub struct QuantileFunction {
    pub m_grid: Vec<f64>,
    pub x_of_m: Vec<f64>,
}

pub fn mass_grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| (j as f64 + 0.5) / m as f64).collect()
}

impl QuantileFunction {
    pub fn len(&self) -> usize {
        self.x_of_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_of_m.is_empty()
    }

    /// Knots of the continuous quantile: the samples plus linear
    /// extrapolation to mass 0 and mass 1.
    pub fn knots(&self) -> (Vec<f64>, Vec<f64>) {
        let q = &self.x_of_m;
        let m = q.len();
        let mut mm = Vec::with_capacity(m + 2);
        let mut xx = Vec::with_capacity(m + 2);
        mm.push(0.0);
        xx.push(if m > 1 { q[0] - 0.5 * (q[1] - q[0]) } else { q[0] });
        mm.extend_from_slice(&self.m_grid);
        xx.extend_from_slice(q);
        mm.push(1.0);
        xx.push(if m > 1 { q[m - 1] + 0.5 * (q[m - 1] - q[m - 2]) } else { q[0] });
        (mm, xx)
    }

    /// Continuous quantile at mass `s` in [0, 1].
    pub fn eval(&self, s: f64) -> f64 {
        let (mm, xx) = self.knots();
        let s = s.clamp(0.0, 1.0);
        let k = mm.partition_point(|&t| t <= s).clamp(1, mm.len() - 1);
        let t = (s - mm[k - 1]) / (mm[k] - mm[k - 1]);
        xx[k - 1] + t * (xx[k] - xx[k - 1])
    }

    /// Integral of the continuous quantile over mass, i.e. the mean position.
    pub fn mean(&self) -> f64 {
        let (mm, xx) = self.knots();
        mm.windows(2).zip(xx.windows(2)).map(|(m, x)| 0.5 * (m[1] - m[0]) * (x[0] + x[1])).sum()
    }

    /// Knot intervals as atoms: masses and midpoints.
    pub fn cells(&self) -> (Vec<f64>, Vec<f64>) {
        let (mm, xx) = self.knots();
        (mm.windows(2).map(|m| m[1] - m[0]).collect(), xx.windows(2).map(|x| 0.5 * (x[0] + x[1])).collect())
    }

    pub fn shifted(&self, delta: f64) -> QuantileFunction {
        QuantileFunction { m_grid: self.m_grid.clone(), x_of_m: self.x_of_m.iter().map(|x| x + delta).collect() }
    }
}

/// `x(m) = inf{x : u(x) > m}` for the linearly interpolated normalized profile.
pub fn quantile(p: &MonotoneProfile, m: usize) -> Result<QuantileFunction> {
    let u = p.normalized()?;
    let g = &p.grid;
    let m_grid = mass_grid(m);
    let x_of_m = m_grid
        .iter()
        .map(|&s| {
            let i = u.partition_point(|&v| v <= s);
            if i == 0 {
                g.x(0)
            } else if i >= u.len() {
                g.x(g.n - 1)
            } else {
                let (u0, u1) = (u[i - 1], u[i]);
                g.x(i - 1) + (s - u0) / (u1 - u0) * g.h
            }
        })
        .collect();
    Ok(QuantileFunction { m_grid, x_of_m })
}

/// `u(x) = inf{m : x(m) > x}` for the continuous quantile, sampled on `grid`.
pub fn profile_from_quantile(q: &QuantileFunction, grid: &Grid, a: f64, b: f64) -> Result<MonotoneProfile> {
    let (mm, xx) = q.knots();
    let slack = 1e-9 * (grid.x_max - grid.x_min);
    if xx[0] < grid.x_min - slack || xx[xx.len() - 1] > grid.x_max + slack {
        return Err(Error::WindowTooSmall(format!(
            "quantile spans [{}, {}], window is [{}, {}]",
            xx[0],
            xx[xx.len() - 1],
            grid.x_min,
            grid.x_max
        )));
    }
    let values = grid
        .nodes()
        .into_iter()
        .map(|x| {
            let k = xx.partition_point(|&t| t <= x);
            let s = if k == 0 {
                0.0
            } else if k >= xx.len() {
                1.0
            } else {
                mm[k - 1] + (x - xx[k - 1]) / (xx[k] - xx[k - 1]) * (mm[k] - mm[k - 1])
            };
            a + (b - a) * s
        })
        .collect();
    MonotoneProfile::with_tol(*grid, values, a, b, f64::INFINITY)
}
