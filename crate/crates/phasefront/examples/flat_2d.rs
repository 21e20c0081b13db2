//! A wavy front on a line times a periodic interval relaxes to a flat one.

use phasefront::multidim::{solve_front_2d, Grid2D, Profile2D, Stencil2D};
use phasefront::solvers::SolveConfig;
use phasefront::{Grid, QuarticWell, RadialKernel, RadialShape};

fn main() -> phasefront::Result<()> {
    let g2 = Grid2D::new(Grid::centered_cells(100, 0.05)?, 16, 2.0)?;
    let u = RadialKernel { shape: RadialShape::Quartic, range: 1.0, scale: 1.0 };
    let st = Stencil2D::new(&u, &g2)?;
    let init = Profile2D::from_fn(g2, -1.0, 1.0, |x, y| (x - 0.5 * (std::f64::consts::PI * y).sin()).tanh())?;
    println!("initial oscillation across y: {:.3e}", init.flatness());
    let fr = solve_front_2d(&QuarticWell::symmetric(), &st, &init, &SolveConfig::default())?;
    println!("sweeps {}, residual {:.3e}", fr.iterations, fr.residual);
    println!("final oscillation across y:   {:.3e}", fr.profile.flatness());
    println!("energy per unit length        {:.10}", fr.energy.total / g2.period);
    Ok(())
}
