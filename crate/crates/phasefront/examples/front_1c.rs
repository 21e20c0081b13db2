//! One-component front for the quartic well with a box kernel.

use phasefront::solvers::{fit_decay, odd_defect, solve_front_1c, SolveConfig};
use phasefront::{Grid, Kernel, MonotoneProfile, QuarticWell};
use std::sync::Arc;

fn main() -> phasefront::Result<()> {
    let grid = Grid::centered_cells(500, 0.02)?;
    let kernel = Kernel::box_kernel(1.0, 1.0)?;
    let well = QuarticWell::symmetric();
    let init = MonotoneProfile::step(grid, -1.0, 1.0, 0.0)?;
    let front = solve_front_1c(Arc::new(well), &kernel, &init, &SolveConfig::default())?;

    println!("sweeps        {}", front.iterations);
    println!("residual      {:.3e}", front.residual);
    println!("energy        {:.10}", front.energy);
    println!("odd defect    {:.3e}", odd_defect(&front.profiles[0]));
    for fit in fit_decay(&front).unwrap_or_default() {
        println!("tail {:?}: rate {:.4} (r² = {:.5})", fit.side, fit.decay_rate, fit.r_squared);
    }
    for x in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
        println!("m({x:+.1}) = {:+.6}", front.profiles[0].eval_linear(x));
    }
    Ok(())
}
