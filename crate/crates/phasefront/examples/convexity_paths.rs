//! The potential term is affine along displacement paths but not along
//! linear ones; the interaction term is convex along displacement paths.

use phasefront::convexity::{eval_path, PathKind, Selector, Tolerances};
use phasefront::functionals::FunctionalConfig;
use phasefront::solvers::Model;
use phasefront::{Grid, Kernel, MonotoneProfile, QuarticWell, Stencil};
use std::sync::Arc;

fn main() -> phasefront::Result<()> {
    let g = Grid::centered_cells(256, 0.04)?;
    let front = |c: f64, w: f64| MonotoneProfile::with_tol(g, g.nodes().iter().map(|x| ((x - c) / w).tanh()).collect(), -1.0, 1.0, f64::INFINITY);
    let (p0, p1) = (front(-1.5, 1.0)?, front(1.0, 0.3)?);
    let model = Model::OneComponent {
        potential: Arc::new(QuarticWell::symmetric()),
        stencil: Stencil::new(&Kernel::box_kernel(1.0, 1.0)?, g.h)?,
        functional: FunctionalConfig::default(),
    };
    let tol = Tolerances::default();
    for (sel, kind) in [
        (Selector::Potential, PathKind::Displacement),
        (Selector::Potential, PathKind::Linear),
        (Selector::Interaction, PathKind::Displacement),
        (Selector::FreeEnergy, PathKind::Displacement),
    ] {
        let r = eval_path(&model, sel, &p0, &p1, kind, 21, &tol)?;
        println!(
            "{sel:?} along {kind:?}: {:?} (min Δ² = {:+.3e}, affinity defect {:.3e})",
            r.verdict, r.min_second_difference, r.max_affinity_defect
        );
    }
    Ok(())
}
