//! Monotone and reflection rearrangements lower the nonlocal energy.

use phasefront::functionals::{free_energy_1c, free_energy_1c_values, FunctionalConfig};
use phasefront::rearrange::{hardy_delta, interaction_monotonicity_gap, monotone_rearrange};
use phasefront::{Grid, Kernel, QuarticWell, Stencil};

fn main() -> phasefront::Result<()> {
    let g = Grid::centered_cells(500, 0.02)?;
    let rough: Vec<f64> = g.nodes().iter().map(|&x| (x.tanh() + 0.4 * (7.0 * x).sin() * (-x * x).exp()).clamp(-1.0, 1.0)).collect();
    let sorted = monotone_rearrange(&g, &rough, -1.0, 1.0)?;
    let k = Kernel::box_kernel(1.0, 1.0)?;
    let st = Stencil::new(&k, g.h)?;
    let f = QuarticWell::symmetric();
    let cfg = FunctionalConfig::default();
    let before = free_energy_1c_values(&rough, g.h, -1.0, 1.0, &f, &st, &cfg)?.total;
    let after = free_energy_1c(&sorted, &f, &st, &cfg)?.total;
    println!("energy {before:.6} -> {after:.6}");

    println!("scalar rearrangement gain {}", hardy_delta([1.0, 3.0], [2.0, 4.0]));
    let up: Vec<f64> = g.nodes().iter().map(|x| x.tanh()).collect();
    let gap = interaction_monotonicity_gap(&g, &up, &up, g.n / 2, &k)?;
    println!("reflection gap for two rising profiles {gap:.6}");
    Ok(())
}
