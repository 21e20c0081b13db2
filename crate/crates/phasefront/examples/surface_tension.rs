//! Surface tension under grid refinement, certified against competitors.

use phasefront::convexity::certify_critical_is_min;
use phasefront::solvers::{solve_front_1c, surface_tension, SolveConfig};
use phasefront::{Grid, Kernel, MonotoneProfile, QuarticWell};
use std::sync::Arc;

fn main() -> phasefront::Result<()> {
    let kernel = Kernel::box_kernel(1.0, 1.0)?;
    let mut last = None;
    for h in [0.04, 0.02, 0.01] {
        let grid = Grid::centered_cells((10.0 / h) as usize, h)?;
        let init = MonotoneProfile::step(grid, -1.0, 1.0, 0.0)?;
        let front = solve_front_1c(Arc::new(QuarticWell::symmetric()), &kernel, &init, &SolveConfig::default())?;
        let sigma = surface_tension(&front)?;
        let change = last.map(|s: f64| format!("{:.2e}", (sigma - s).abs() / s)).unwrap_or_default();
        println!("h = {h:<5} σ = {sigma:.10} {change}");
        if h == 0.04 {
            let cert = certify_critical_is_min(&front, 50, 7)?;
            println!("  50 competitors: min gap {:.3e}, min derivative {:.3e}", cert.min_gap, cert.min_derivative);
        }
        last = Some(sigma);
    }
    Ok(())
}
