//! Two-component front of a binary mixture above the critical temperature ratio.

use phasefront::bulk::find_beta_c;
use phasefront::solvers::{check_derivative_el, fit_decay, front_bulk, mirror_symmetry_defect, solve_front_2c, step_pair, SolveConfig};
use phasefront::{Grid, Kernel};

fn main() -> phasefront::Result<()> {
    let grid = Grid::centered_cells(400, 0.025)?;
    let kernel = Kernel::box_kernel(1.0, 1.0)?;
    let lambda = 1.0;
    let beta = 1.5 * find_beta_c(lambda, kernel.total_mass)?;
    let bulk = front_bulk(beta, lambda, kernel.total_mass)?;
    println!("β = {beta:.6}, ρ- = {:.8}, ρ+ = {:.8}", bulk.rho_minus, bulk.rho_plus);

    let (m, n) = step_pair(grid, &bulk, 0.0)?;
    let front = solve_front_2c(beta, lambda, &kernel, (&m, &n), &SolveConfig::two_component())?;
    println!("sweeps {}, residual {:.3e}", front.iterations, front.residual);
    println!("grand excess energy {:.10}", front.energy);
    println!("w1(x) - w2(-x): {:.3e}", mirror_symmetry_defect(&front.profiles[0], &front.profiles[1]));
    println!("derivative equation residual {:.3e}", check_derivative_el(&front)?);
    for f in fit_decay(&front)? {
        println!("component {} {:?} tail: rate {:.4}, r² {:.6}", f.component, f.side, f.decay_rate, f.r_squared);
    }
    Ok(())
}
