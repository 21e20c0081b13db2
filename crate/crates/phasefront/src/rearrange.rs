//! Monotone rearrangement and the reflection rearrangements about a point.

use crate::error::{Error, Result};
use crate::grid::{default_boundary_tol, Grid, MonotoneProfile, Orientation};
use crate::kernels::Kernel;

/// Sorts the clamped values of an arbitrary profile into monotone order.
///
/// This coincides with the level-set rearrangement only when the profile
/// reaches its asymptotes at the window edges, which is checked.
pub fn monotone_rearrange(grid: &Grid, values: &[f64], a: f64, b: f64) -> Result<MonotoneProfile> {
    if values.len() != grid.n {
        return Err(Error::InvalidProfile(format!("{} values on a grid of {} nodes", values.len(), grid.n)));
    }
    let tol = 10.0 * default_boundary_tol(a, b);
    let (first, last) = (values[0], values[values.len() - 1]);
    if (first - a).abs() > tol || (last - b).abs() > tol {
        return Err(Error::BoundaryNotAttained(format!("edges ({first}, {last}) vs asymptotes ({a}, {b})")));
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut v: Vec<f64> = values.iter().map(|x| x.clamp(lo, hi)).collect();
    v.sort_by(f64::total_cmp);
    if Orientation::of(a, b) == Orientation::Decreasing {
        v.reverse();
    }
    MonotoneProfile::with_tol(*grid, v, a, b, f64::INFINITY)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReflectionPair {
    pub x0: f64,
    /// Larger value on the right of `x0`.
    pub g_star: Vec<f64>,
    /// Larger value on the left of `x0`.
    pub h_star: Vec<f64>,
}

/// Half-width in nodes of the largest window symmetric about node `i0`.
fn half_width(n: usize, i0: usize) -> usize {
    i0.min(n - 1 - i0)
}

/// Applies `R+` to `g` and `R-` to `h` about the node `i0`; nodes outside the
/// largest symmetric sub-window are left alone.
pub fn reflect_rearrange(grid: &Grid, g: &[f64], h: &[f64], i0: usize) -> Result<ReflectionPair> {
    if g.len() != grid.n || h.len() != grid.n || i0 >= grid.n {
        return Err(Error::InvalidProfile("reflection arrays do not match the grid".into()));
    }
    let mut gs = g.to_vec();
    let mut hs = h.to_vec();
    for k in 1..=half_width(grid.n, i0) {
        let (r, l) = (i0 + k, i0 - k);
        gs[r] = g[r].max(g[l]);
        gs[l] = g[r].min(g[l]);
        hs[r] = h[r].min(h[l]);
        hs[l] = h[r].max(h[l]);
    }
    Ok(ReflectionPair { x0: grid.x(i0), g_star: gs, h_star: hs })
}

/// `a*₁b*₁ + a*₂b*₂ - a₁b₁ - a₂b₂` with `a*` sorted down and `b*` sorted up; never positive.
pub fn hardy_delta(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (a1, a2) = (a[0].max(a[1]), a[0].min(a[1]));
    let (b1, b2) = (b[0].min(b[1]), b[0].max(b[1]));
    a1 * b1 + a2 * b2 - a[0] * b[0] - a[1] * b[1]
}

fn check_kernel(k: &Kernel) -> Result<()> {
    if !k.even || !k.decreasing {
        return Err(Error::KernelNotDecreasing);
    }
    Ok(())
}

fn pair_sum(g: &[f64], h: &[f64], jk: &[f64], lo: usize, hi: usize, dx: f64) -> f64 {
    let mut s = 0.0;
    for i in lo..=hi {
        for j in lo..=hi {
            s += g[i] * jk[i.abs_diff(j)] * h[j];
        }
    }
    s * dx * dx
}

fn sampled_kernel(k: &Kernel, grid: &Grid, w: usize) -> Vec<f64> {
    (0..=2 * w).map(|d| k.eval(d as f64 * grid.h)).collect()
}

/// `∬ g J h - ∬ g* J h*` over the window symmetric about node `i0`.
pub fn interaction_monotonicity_gap(grid: &Grid, g: &[f64], h: &[f64], i0: usize, k: &Kernel) -> Result<f64> {
    check_kernel(k)?;
    let r = reflect_rearrange(grid, g, h, i0)?;
    let w = half_width(grid.n, i0);
    let jk = sampled_kernel(k, grid, w);
    let (lo, hi) = (i0 - w, i0 + w);
    Ok(pair_sum(g, h, &jk, lo, hi, grid.h) - pair_sum(&r.g_star, &r.h_star, &jk, lo, hi, grid.h))
}

/// The same gap assembled from the pairwise terms `-Δ (J(x - y) - J(x - Ty))`.
pub fn monotonicity_gap_termwise(grid: &Grid, g: &[f64], h: &[f64], i0: usize, k: &Kernel) -> Result<f64> {
    check_kernel(k)?;
    let w = half_width(grid.n, i0);
    let jk = sampled_kernel(k, grid, w);
    let mut s = 0.0;
    for p in 1..=w {
        for q in 1..=w {
            let d = hardy_delta([g[i0 + p], g[i0 - p]], [h[i0 + q], h[i0 - q]]);
            s += -d * (jk[p.abs_diff(q)] - jk[p + q]);
        }
    }
    Ok(s * grid.h * grid.h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_input_is_fixed() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let v: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        assert_eq!(monotone_rearrange(&g, &v, 0.0, 1.0).unwrap().values, v);
    }

    #[test]
    fn dip_removed() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let mut v: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        v[5] = 0.05;
        let p = monotone_rearrange(&g, &v, 0.0, 1.0).unwrap();
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(p.values, sorted);
    }

    #[test]
    fn decreasing_orientation() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let v: Vec<f64> = (0..11).map(|i| if i == 0 { 1.0 } else if i == 10 { 0.0 } else { ((i * 7) % 10) as f64 / 10.0 }).collect();
        let p = monotone_rearrange(&g, &v, 1.0, 0.0).unwrap();
        assert!(p.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn edges_must_be_attained() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let v = vec![0.5; 11];
        assert!(matches!(monotone_rearrange(&g, &v, 0.0, 1.0), Err(Error::BoundaryNotAttained(_))));
    }

    #[test]
    fn hardy_scalar() {
        assert_eq!(hardy_delta([1.0, 3.0], [2.0, 4.0]), -4.0);
    }

    #[test]
    fn arranged_pair_unchanged() {
        let g = Grid::new(-1.0, 1.0, 21).unwrap();
        let up: Vec<f64> = g.nodes().iter().map(|x| x.tanh()).collect();
        let down: Vec<f64> = up.iter().map(|x| -x).collect();
        let r = reflect_rearrange(&g, &up, &down, 7).unwrap();
        assert_eq!(r.g_star, up);
        assert_eq!(r.h_star, down);
        let k = Kernel::box_kernel(0.3, 1.0).unwrap();
        assert!(interaction_monotonicity_gap(&g, &up, &down, 7, &k).unwrap().abs() < 1e-14);
    }

    #[test]
    fn swapped_pair_has_positive_gap() {
        let g = Grid::new(-1.0, 1.0, 41).unwrap();
        let up: Vec<f64> = g.nodes().to_vec();
        let k = Kernel::box_kernel(0.5, 1.0).unwrap();
        let gap = interaction_monotonicity_gap(&g, &up, &up, 20, &k).unwrap();
        let tw = monotonicity_gap_termwise(&g, &up, &up, 20, &k).unwrap();
        assert!(gap > 1e-3);
        assert!((gap - tw).abs() < 1e-12 * gap);
    }

    #[test]
    fn increasing_kernel_rejected() {
        let g = Grid::new(-1.0, 1.0, 21).unwrap();
        let k = Kernel::tabulated(vec![0.0, 0.5, 1.0], vec![0.1, 1.0, 0.0]).unwrap();
        let v = vec![0.0; 21];
        assert!(matches!(interaction_monotonicity_gap(&g, &v, &v, 10, &k), Err(Error::KernelNotDecreasing)));
    }
}
