//! The W potentials of the box kernel and the measure form of the
//! two-component interaction.

use phasefront::functionals::{interaction_2c, interaction_measure_form_2c};
use phasefront::{Grid, Kernel, MonotoneProfile, Stencil, WPotential};

fn main() -> phasefront::Result<()> {
    let k = Kernel::box_kernel(1.0, 1.0)?;
    let w1 = WPotential::one_component(&k);
    let w2 = WPotential::two_component(&k)?;
    for u in [0.0, 0.25, 0.5, 1.0, 2.0] {
        println!("u = {u:<4}  W_one = {:.6}  W_two = {:.6}", w1.eval(u), w2.eval(u));
    }
    println!("tail constant {:.6}", w2.w_offset);

    let g = Grid::centered_cells(600, 0.025)?;
    let m = MonotoneProfile::with_tol(g, g.nodes().iter().map(|x| 0.5 * (1.0 + (x - 0.3).tanh())).collect(), 0.0, 1.0, f64::INFINITY)?;
    let n = MonotoneProfile::with_tol(g, g.nodes().iter().map(|x| 2.0 - 0.5 * (1.0 + (2.0 * x).tanh())).collect(), 2.0, 1.0, f64::INFINITY)?;
    let direct = interaction_2c(&m, &n, &Stencil::new(&k, g.h)?)?;
    let form = interaction_measure_form_2c(&m, &n, &w2)?;
    println!("direct {direct:.8}, measure form {:.8}", form.total);
    Ok(())
}
