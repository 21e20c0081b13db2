//! Functionals along interpolation paths: convexity, affinity and strictness.

use crate::bulk::BulkPhases;
use crate::error::{Error, Result};
use crate::functionals::{interaction_1c, interaction_mass_space, interaction_mass_space_2c, potential_mass_space};
use crate::grid::{Grid, MonotoneProfile};
use crate::kernels::{ConvexTable, Stencil, WPotential};
use crate::solvers::{FrontSolution, Model};
use crate::transport::{displacement_interpolate, linear_interpolate, monotone_map, uniform_lambdas};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Affine,
    Convex,
    StrictlyConvex,
    Nonconvex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Displacement,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Potential,
    Interaction,
    FreeEnergy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Largest chord deviation still called affine.
    pub affine: f64,
    /// Most negative second difference still called convex.
    pub convex: f64,
    /// Smallest second difference, relative to the value range, called strict.
    pub strict_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { affine: 1e-8, convex: 1e-8, strict_rel: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathReport {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    /// Smallest undivided second difference `v[j-1] - 2 v[j] + v[j+1]`.
    pub min_second_difference: f64,
    pub max_affinity_defect: f64,
    pub range: f64,
    pub verdict: Verdict,
}

impl PathReport {
    pub fn from_values(lambdas: Vec<f64>, values: Vec<f64>, tol: &Tolerances) -> Self {
        let k = values.len();
        let min_d2 = values.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::INFINITY, f64::min);
        let (l0, l1) = (lambdas[0], lambdas[k - 1]);
        let defect = lambdas
            .iter()
            .zip(&values)
            .map(|(l, v)| {
                let t = (l - l0) / (l1 - l0);
                (v - ((1.0 - t) * values[0] + t * values[k - 1])).abs()
            })
            .fold(0.0, f64::max);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let range = hi - lo;
        let verdict = if defect <= tol.affine {
            Verdict::Affine
        } else if min_d2 < -tol.convex {
            Verdict::Nonconvex
        } else if min_d2 >= tol.strict_rel * range {
            Verdict::StrictlyConvex
        } else {
            Verdict::Convex
        };
        PathReport { lambdas, values, min_second_difference: min_d2, max_affinity_defect: defect, range, verdict }
    }
}

/// Default quantile resolution for interpolation.
pub const DEFAULT_MASS_POINTS: usize = 4096;

/// Evaluates a one-component functional along a path from `p0` to `p1`.
///
/// On displacement paths both terms are computed in mass coordinates from
/// the interpolated quantile. Resampling onto the grid would add noise of
/// order `h²` that does not vary smoothly with `λ`.
pub fn eval_path(
    model: &Model,
    selector: Selector,
    p0: &MonotoneProfile,
    p1: &MonotoneProfile,
    kind: PathKind,
    k: usize,
    tol: &Tolerances,
) -> Result<PathReport> {
    eval_path_with(model, selector, p0, p1, kind, &uniform_lambdas(check_k(k)?), DEFAULT_MASS_POINTS, tol)
}

fn check_k(k: usize) -> Result<usize> {
    if k < 5 {
        return Err(Error::Config(format!("K = {k} < 5 path points")));
    }
    Ok(k)
}

#[allow(clippy::too_many_arguments)]
pub fn eval_path_with(
    model: &Model,
    selector: Selector,
    p0: &MonotoneProfile,
    p1: &MonotoneProfile,
    kind: PathKind,
    lambdas: &[f64],
    mass_points: usize,
    tol: &Tolerances,
) -> Result<PathReport> {
    let Model::OneComponent { potential, stencil, functional } = model else {
        return Err(Error::Config("eval_path takes a one-component model".into()));
    };
    crate::functionals::check_normalized(potential.as_ref(), p0.a, p0.b)?;
    let kappa = functional.kappa;
    let h = p0.grid.h;
    let grid_pot = |p: &MonotoneProfile| h * p.values.iter().map(|&v| potential.f(v)).sum::<f64>();
    let values: Vec<f64> = match kind {
        PathKind::Displacement => {
            let path = displacement_interpolate(p0, p1, lambdas, mass_points)?;
            let w = match selector {
                Selector::Potential => None,
                _ => Some(WPotential::one_component(&stencil.kernel)),
            };
            path.profiles
                .par_iter()
                .zip(&path.quantiles)
                .map(|(p, q)| {
                    let pot = || potential_mass_space(q, p.a, p.b, |m| potential.f(m));
                    let int = || kappa * interaction_mass_space(q, p.a, p.b, w.as_ref().unwrap());
                    match selector {
                        Selector::Potential => pot(),
                        Selector::Interaction => int(),
                        Selector::FreeEnergy => pot() + int(),
                    }
                })
                .collect()
        }
        PathKind::Linear => {
            let ps = linear_interpolate(p0, p1, lambdas)?;
            ps.par_iter()
                .map(|p| match selector {
                    Selector::Potential => grid_pot(p),
                    Selector::Interaction => kappa * interaction_1c(p, stencil),
                    Selector::FreeEnergy => grid_pot(p) + kappa * interaction_1c(p, stencil),
                })
                .collect()
        }
    };
    Ok(PathReport::from_values(lambdas.to_vec(), values, tol))
}

fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `𝒢` along the componentwise displacement interpolation of two binary pairs.
pub fn eval_joint_path(
    pair0: (&MonotoneProfile, &MonotoneProfile),
    pair1: (&MonotoneProfile, &MonotoneProfile),
    bulk: &BulkPhases,
    stencil: &Stencil,
    k: usize,
    tol: &Tolerances,
) -> Result<PathReport> {
    eval_joint_path_with(pair0, pair1, bulk, stencil, &uniform_lambdas(check_k(k)?), DEFAULT_MASS_POINTS, tol)
}

/// The interaction is evaluated in mass coordinates with
/// [`interaction_mass_space_2c`].
pub fn eval_joint_path_with(
    pair0: (&MonotoneProfile, &MonotoneProfile),
    pair1: (&MonotoneProfile, &MonotoneProfile),
    bulk: &BulkPhases,
    stencil: &Stencil,
    lambdas: &[f64],
    mass_points: usize,
    tol: &Tolerances,
) -> Result<PathReport> {
    let pm = displacement_interpolate(pair0.0, pair1.0, lambdas, mass_points)?;
    let pn = displacement_interpolate(pair0.1, pair1.1, lambdas, mass_points)?;
    let w = ConvexTable::two_component(&stencil.kernel, 1 << 14)?;
    let (a, b, c, d) = (pair0.0.a, pair0.0.b, pair0.1.a, pair0.1.b);
    let values = (0..lambdas.len())
        .into_par_iter()
        .map(|j| {
            let (qm, qn) = (&pm.quantiles[j], &pn.quantiles[j]);
            let local = potential_mass_space(qm, a, b, xlnx) + potential_mass_space(qn, c, d, xlnx);
            local + bulk.beta * interaction_mass_space_2c(qm, qn, (a, b), (c, d), &w)
        })
        .collect::<Vec<f64>>();
    Ok(PathReport::from_values(lambdas.to_vec(), values, tol))
}

/// `a + (b - a) S` with `S` a convex combination of quintic smoothsteps
/// supported in `[-span, span]`.
pub fn random_monotone_profile<R: Rng>(grid: &Grid, a: f64, b: f64, span: f64, rng: &mut R) -> Result<MonotoneProfile> {
    let parts = rng.gen_range(1..=3);
    let mut w: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    // each step lives inside [-span, span]
    let steps: Vec<(f64, f64)> = (0..parts).map(|_| (rng.gen_range(-0.5 * span..0.5 * span), rng.gen_range(0.1 * span..0.5 * span))).collect();
    let v = grid
        .nodes()
        .iter()
        .map(|&x| {
            let s: f64 = w.iter().zip(&steps).map(|(wi, &(c, hw))| wi * smoothstep((x - c) / hw)).sum();
            a + (b - a) * s
        })
        .collect();
    MonotoneProfile::with_tol(*grid, v, a, b, f64::INFINITY)
}

/// Quintic smoothstep from 0 at `t = -1` to 1 at `t = 1`.
pub fn smoothstep(t: f64) -> f64 {
    let u = ((t + 1.0) * 0.5).clamp(0.0, 1.0);
    u * u * u * (u * (6.0 * u - 15.0) + 10.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompetitorKind {
    Itself,
    Translate,
    SharpStep,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompetitorResult {
    pub index: usize,
    pub kind: CompetitorKind,
    pub energy: f64,
    /// `energy - front energy`.
    pub gap: f64,
    /// One-sided derivative of the energy at the front along the path.
    pub derivative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    pub seed: u64,
    pub front_energy: f64,
    pub min_gap: f64,
    pub min_derivative: f64,
    pub competitors: Vec<CompetitorResult>,
}

fn competitor_for(p: &MonotoneProfile, kind: CompetitorKind, span: f64, rng: &mut ChaCha8Rng) -> Result<MonotoneProfile> {
    match kind {
        CompetitorKind::Itself => Ok(p.clone()),
        CompetitorKind::Translate => {
            let k = rng.gen_range(-5i64..=5);
            Ok(p.translate(k as f64 * p.grid.h))
        }
        CompetitorKind::SharpStep => MonotoneProfile::step(p.grid, p.a, p.b, 0.0),
        CompetitorKind::Random => random_monotone_profile(&p.grid, p.a, p.b, span, rng),
    }
}

/// `d/dλ` of the energy at `λ = 0` along the displacement path to `q`:
/// `h Σ r_i dv_i` with `dv = -m' S`.
fn path_derivative(p: &MonotoneProfile, q: &MonotoneProfile, r: &[f64]) -> Result<f64> {
    let t = monotone_map(p, q, DEFAULT_MASS_POINTS)?;
    let g = &p.grid;
    let n = g.n;
    let mut s = 0.0;
    for i in 0..n {
        let l = if i == 0 { p.a } else { p.values[i - 1] };
        let rr = if i + 1 == n { p.b } else { p.values[i + 1] };
        let dm = (rr - l) / (2.0 * g.h);
        s += r[i] * (-dm * t.s_values[i]);
    }
    Ok(s * g.h)
}

/// Tests the converged front against `trials` competitors: itself, a
/// translate, a sharp step and random monotone profiles.
pub fn certify_critical_is_min(front: &FrontSolution, trials: usize, seed: u64) -> Result<CertificationReport> {
    if !front.converged {
        return Err(Error::NotConverged);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e0 = front.model.energy(&front.profiles)?.total;
    let grad = front.model.gradient(&front.profiles);
    let g = front.profiles[0].grid;
    let span = 0.25 * (g.x_max - g.x_min);
    let mut competitors = Vec::with_capacity(trials);
    let mut failures = Vec::new();
    for idx in 0..trials {
        let kind = match idx {
            0 => CompetitorKind::Itself,
            1 => CompetitorKind::Translate,
            2 => CompetitorKind::SharpStep,
            _ => CompetitorKind::Random,
        };
        let comp: Vec<MonotoneProfile> = front.profiles.iter().map(|p| competitor_for(p, kind, span, &mut rng)).collect::<Result<_>>()?;
        let comp = if kind == CompetitorKind::Translate && comp.len() == 2 {
            // both components move together
            let shift = comp[0].crossing(0.5 * (comp[0].a + comp[0].b)).unwrap_or(0.0)
                - front.profiles[0].crossing(0.5 * (front.profiles[0].a + front.profiles[0].b)).unwrap_or(0.0);
            let k = (shift / g.h).round() * g.h;
            front.profiles.iter().map(|p| p.translate(k)).collect()
        } else {
            comp
        };
        let energy = front.model.energy(&comp)?.total;
        let mut derivative = 0.0;
        for (c, (p, q)) in front.profiles.iter().zip(&comp).enumerate() {
            derivative += path_derivative(p, q, &grad[c])?;
        }
        let gap = energy - e0;
        if gap < -1e-9 || derivative < -1e-6 {
            failures.push(idx);
        }
        competitors.push(CompetitorResult { index: idx, kind, energy, gap, derivative });
    }
    if !failures.is_empty() {
        return Err(Error::CertificationFailure(failures));
    }
    let min_gap = competitors.iter().map(|c| c.gap).fold(f64::INFINITY, f64::min);
    let min_derivative = competitors.iter().map(|c| c.derivative).fold(f64::INFINITY, f64::min);
    Ok(CertificationReport { seed, front_energy: e0, min_gap, min_derivative, competitors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Kernel;
    use crate::potential::QuarticWell;
    use std::sync::Arc;

    fn model(h: f64) -> Model {
        let k = Kernel::box_kernel(1.0, 1.0).unwrap();
        Model::OneComponent {
            potential: Arc::new(QuarticWell::symmetric()),
            stencil: Stencil::new(&k, h).unwrap(),
            functional: Default::default(),
        }
    }

    #[test]
    fn verdicts_from_values() {
        let l = uniform_lambdas(5);
        let t = Tolerances::default();
        assert_eq!(PathReport::from_values(l.clone(), vec![1.0, 2.0, 3.0, 4.0, 5.0], &t).verdict, Verdict::Affine);
        assert_eq!(PathReport::from_values(l.clone(), vec![0.0, 0.0625, 0.25, 0.5625, 1.0], &t).verdict, Verdict::StrictlyConvex);
        assert_eq!(PathReport::from_values(l, vec![0.0, 1.0, 0.0, 1.0, 0.0], &t).verdict, Verdict::Nonconvex);
    }

    #[test]
    fn potential_affine_along_displacement() {
        let g = Grid::new(-8.0, 8.0, 1025).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p0 = random_monotone_profile(&g, -1.0, 1.0, 3.0, &mut rng).unwrap();
        let p1 = random_monotone_profile(&g, -1.0, 1.0, 3.0, &mut rng).unwrap();
        let m = model(g.h);
        let r = eval_path(&m, Selector::Potential, &p0, &p1, PathKind::Displacement, 11, &Tolerances::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Affine, "{r:?}");
        let r = eval_path(&m, Selector::Interaction, &p0, &p1, PathKind::Displacement, 11, &Tolerances::default()).unwrap();
        assert!(r.min_second_difference > 0.0, "{r:?}");
    }

    #[test]
    fn linear_path_of_double_well_is_nonconvex() {
        let g = Grid::new(-8.0, 8.0, 801).unwrap();
        let p0 = MonotoneProfile::step(g, -1.0, 1.0, -2.0).unwrap();
        let p1 = MonotoneProfile::step(g, -1.0, 1.0, 2.0).unwrap();
        let r = eval_path(&model(g.h), Selector::Potential, &p0, &p1, PathKind::Linear, 11, &Tolerances::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Nonconvex);
        assert!(r.min_second_difference < -1e-4);
    }
}
