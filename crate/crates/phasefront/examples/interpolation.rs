//! Displacement interpolation between two fronts and its pushed-forward measures.

use phasefront::grid::profile_to_density;
use phasefront::transport::{displacement_interpolate, monotone_map, push_forward, uniform_lambdas, wasserstein1};
use phasefront::{Grid, MonotoneProfile};

fn tanh_front(g: Grid, c: f64, w: f64) -> phasefront::Result<MonotoneProfile> {
    MonotoneProfile::with_tol(g, g.nodes().iter().map(|x| ((x - c) / w).tanh()).collect(), -1.0, 1.0, f64::INFINITY)
}

fn main() -> phasefront::Result<()> {
    let g = Grid::centered_cells(512, 0.02)?;
    let p0 = tanh_front(g, -2.0, 1.0)?;
    let p1 = tanh_front(g, 3.0, 0.4)?;

    let t = monotone_map(&p0, &p1, 4096)?;
    let pushed = push_forward(&profile_to_density(&p0)?, &t)?;
    println!("W1(T#μ0, μ1) = {:.3e}", wasserstein1(&pushed, &profile_to_density(&p1)?));

    let path = displacement_interpolate(&p0, &p1, &uniform_lambdas(6), 4096)?;
    for (l, (p, q)) in path.lambdas.iter().zip(path.profiles.iter().zip(&path.quantiles)) {
        println!("λ = {l:.1}: crossing at {:+.4}, quantile mean {:+.4}", p.crossing(0.0).unwrap_or(f64::NAN), q.mean());
    }
    Ok(())
}
