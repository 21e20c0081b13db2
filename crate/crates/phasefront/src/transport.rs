//! One-dimensional optimal transport between monotone profiles.

use crate::error::{Error, Result};
use crate::grid::{profile_from_quantile, quantile, Grid, MonotoneProfile, ProbabilityDensity, QuantileFunction};
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct MonotoneMap {
    pub grid: Grid,
    pub t_values: Vec<f64>,
    /// Displacement `S = T - id`.
    pub s_values: Vec<f64>,
}

fn check_pair(p0: &MonotoneProfile, p1: &MonotoneProfile) -> Result<()> {
    if !p0.grid.same_as(&p1.grid) {
        return Err(Error::InvalidProfile("profiles live on different grids".into()));
    }
    if p0.a != p1.a || p0.b != p1.b {
        return Err(Error::InvalidProfile(format!(
            "asymptotes differ: ({}, {}) vs ({}, {})",
            p0.a, p0.b, p1.a, p1.b
        )));
    }
    if p0.a == p0.b {
        return Err(Error::DegenerateProfile);
    }
    Ok(())
}

/// `T(x_i) = x_1(u_0(x_i))`, the quantile of `p1` at the mass level of `p0`.
pub fn monotone_map(p0: &MonotoneProfile, p1: &MonotoneProfile, m: usize) -> Result<MonotoneMap> {
    check_pair(p0, p1)?;
    let u0 = p0.normalized()?;
    let q1 = quantile(p1, m)?;
    let t_values: Vec<f64> = u0.iter().map(|&u| q1.eval(u)).collect();
    let s_values = t_values.iter().enumerate().map(|(i, t)| t - p0.grid.x(i)).collect();
    Ok(MonotoneMap { grid: p0.grid, t_values, s_values })
}

/// Moves each cell mass to its image, split linearly between the two nearest nodes.
pub fn push_forward(d: &ProbabilityDensity, t: &MonotoneMap) -> Result<ProbabilityDensity> {
    let g = &d.grid;
    if !g.same_as(&t.grid) {
        return Err(Error::InvalidProfile("map and density live on different grids".into()));
    }
    let tol = 1e-9 * (g.x_max - g.x_min);
    let mut out = vec![0.0; g.n];
    for (w, &y) in d.weights.iter().zip(&t.t_values) {
        if *w == 0.0 {
            continue;
        }
        if y < g.x_min - tol || y > g.x_max + tol {
            return Err(Error::WindowTooSmall(format!("image {y} outside the window")));
        }
        let r = ((y - g.x_min) / g.h).clamp(0.0, (g.n - 1) as f64);
        let i = (r.floor() as usize).min(g.n - 2);
        let s = r - i as f64;
        out[i] += w * (1.0 - s);
        out[i + 1] += w * s;
    }
    Ok(ProbabilityDensity { grid: *g, weights: out })
}

/// `W1` distance of two densities on the same grid: the L1 norm of the CDF difference.
pub fn wasserstein1(d0: &ProbabilityDensity, d1: &ProbabilityDensity) -> f64 {
    let mut c = 0.0;
    let mut s = 0.0;
    for (a, b) in d0.weights.iter().zip(&d1.weights) {
        c += a - b;
        s += c.abs();
    }
    s * d0.grid.h
}

#[derive(Clone, Debug)]
pub struct InterpolationPath {
    pub lambdas: Vec<f64>,
    pub profiles: Vec<MonotoneProfile>,
    /// Quantile of each interpolant; the profiles are resampled from these.
    pub quantiles: Vec<QuantileFunction>,
}

/// `K` equispaced points of `[0, 1]`.
pub fn uniform_lambdas(k: usize) -> Vec<f64> {
    (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
}

/// `x_λ(m) = (1-λ) x_0(m) + λ x_1(m)`, resampled onto the grid.
pub fn displacement_interpolate(p0: &MonotoneProfile, p1: &MonotoneProfile, lambdas: &[f64], m: usize) -> Result<InterpolationPath> {
    check_pair(p0, p1)?;
    let q0 = quantile(p0, m)?;
    let q1 = quantile(p1, m)?;
    let quantiles: Vec<QuantileFunction> = lambdas
        .iter()
        .map(|&l| QuantileFunction {
            m_grid: q0.m_grid.clone(),
            x_of_m: q0.x_of_m.iter().zip(&q1.x_of_m).map(|(a, b)| (1.0 - l) * a + l * b).collect(),
        })
        .collect();
    let profiles = quantiles
        .par_iter()
        .map(|q| profile_from_quantile(q, &p0.grid, p0.a, p0.b))
        .collect::<Result<Vec<_>>>()?;
    Ok(InterpolationPath { lambdas: lambdas.to_vec(), profiles, quantiles })
}

/// Componentwise displacement interpolation of two profile pairs.
pub fn interpolate_pair(
    pair0: (&MonotoneProfile, &MonotoneProfile),
    pair1: (&MonotoneProfile, &MonotoneProfile),
    lambdas: &[f64],
    m: usize,
) -> Result<(InterpolationPath, InterpolationPath)> {
    Ok((displacement_interpolate(pair0.0, pair1.0, lambdas, m)?, displacement_interpolate(pair0.1, pair1.1, lambdas, m)?))
}

/// Pointwise average `(1-λ) p0 + λ p1`.
pub fn linear_interpolate(p0: &MonotoneProfile, p1: &MonotoneProfile, lambdas: &[f64]) -> Result<Vec<MonotoneProfile>> {
    check_pair(p0, p1)?;
    lambdas
        .iter()
        .map(|&l| {
            let v = p0.values.iter().zip(&p1.values).map(|(a, b)| (1.0 - l) * a + l * b).collect();
            MonotoneProfile::with_tol(p0.grid, v, p0.a, p0.b, f64::INFINITY)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::profile_to_density;

    fn ramp(g: Grid, w: f64) -> MonotoneProfile {
        MonotoneProfile::from_fn(g, 0.0, 1.0, |x| (x / w).clamp(0.0, 1.0)).unwrap()
    }

    #[test]
    fn ramp_map_doubles() {
        let g = Grid::new(-1.0, 3.0, 801).unwrap();
        let t = monotone_map(&ramp(g, 1.0), &ramp(g, 2.0), 4096).unwrap();
        for i in 0..g.n {
            let x = g.x(i);
            if x > 0.01 && x < 0.99 {
                assert!((t.t_values[i] - 2.0 * x).abs() < 1e-9, "{x} {}", t.t_values[i]);
            }
        }
    }

    #[test]
    fn identity_and_shift_maps() {
        let g = Grid::new(-4.0, 4.0, 801).unwrap();
        let p = MonotoneProfile::from_fn(g, 0.0, 1.0, |x| 0.5 + 0.5 * (3.0 * x).tanh()).unwrap();
        let p = MonotoneProfile::new(g, { let mut v = p.values.clone(); v[0] = 0.0; v[g.n - 1] = 1.0; v }, 0.0, 1.0).unwrap();
        let t = monotone_map(&p, &p, 4096).unwrap();
        let t2 = monotone_map(&p, &p.translate(0.5), 4096).unwrap();
        for i in 0..g.n {
            if p.values[i] > 0.01 && p.values[i] < 0.99 {
                assert!(t.s_values[i].abs() < 1e-4);
                assert!((t2.s_values[i] - 0.5).abs() < 1e-4);
            }
        }
        let d = profile_to_density(&p).unwrap();
        let pd = push_forward(&d, &t2).unwrap();
        assert!((pd.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stretch_push_forward() {
        let g = Grid::new(-1.0, 3.0, 2049).unwrap();
        let p0 = ramp(g, 1.0);
        let t = monotone_map(&p0, &ramp(g, 2.0), 4096).unwrap();
        let pd = push_forward(&profile_to_density(&p0).unwrap(), &t).unwrap();
        let target = profile_to_density(&ramp(g, 2.0)).unwrap();
        assert!(wasserstein1(&pd, &target) < 2.0 * g.h);
    }

    #[test]
    fn ramps_interpolate_to_ramps() {
        let g = Grid::new(-1.0, 3.0, 801).unwrap();
        let path = displacement_interpolate(&ramp(g, 1.0), &ramp(g, 2.0), &uniform_lambdas(5), 4096).unwrap();
        for (l, p) in path.lambdas.iter().zip(&path.profiles) {
            assert!(p.sup_diff(&ramp(g, 1.0 + l)) < 2.0 * g.h);
        }
    }

    #[test]
    fn steps_interpolate_to_steps() {
        let g = Grid::new(-2.0, 3.0, 501).unwrap();
        let s0 = MonotoneProfile::step(g, 0.0, 1.0, 0.0).unwrap();
        let s1 = MonotoneProfile::step(g, 0.0, 1.0, 1.0).unwrap();
        let path = displacement_interpolate(&s0, &s1, &uniform_lambdas(11), 256).unwrap();
        for (l, p) in path.lambdas.iter().zip(&path.profiles) {
            assert!(p.sup_diff(&s0.translate(*l)) < 1e-9);
        }
    }
}
