//! Energy functionals on step profiles and their measure-space forms.
//!
//! Potential terms are lumped (`h Σ F(v_i)`), which is exact for step
//! profiles. Interaction terms use the cell-pair weights of [`Stencil`], so
//! they are exact as well; the only quadrature error left is the one in the
//! stencil itself.

use crate::bulk::BulkPhases;
use crate::error::{Error, Result};
use crate::grid::{profile_to_density, MonotoneProfile, QuantileFunction};
use crate::kernels::{ConvexTable, Stencil, WPotential, WVariant};
use crate::potential::Potential;
use crate::quad::Rule;
use serde::Serialize;
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub potential_term: f64,
    pub interaction_term: f64,
    pub total: f64,
    pub quadrature_error_estimate: f64,
}

impl EnergyBreakdown {
    fn new(potential_term: f64, interaction_term: f64, err: f64) -> Self {
        EnergyBreakdown { potential_term, interaction_term, total: potential_term + interaction_term, quadrature_error_estimate: err }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalConfig {
    /// Prefactor of the interaction term.
    pub kappa: f64,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        FunctionalConfig { kappa: 0.5 }
    }
}

#[inline]
fn at(v: &[f64], i: i64, a: f64, b: f64) -> f64 {
    if i < 0 {
        a
    } else if i as usize >= v.len() {
        b
    } else {
        v[i as usize]
    }
}

pub fn check_normalized<P: Potential + ?Sized>(f: &P, a: f64, b: f64) -> Result<()> {
    let (fa, fb) = (f.f(a), f.f(b));
    if fa.abs() > 1e-12 || fb.abs() > 1e-12 {
        return Err(Error::UnnormalizedPotential { fa, fb });
    }
    Ok(())
}

/// `∫ (m(x) - m(y))² J(x - y) dx dy` for the step profile.
pub fn interaction_1c(p: &MonotoneProfile, st: &Stencil) -> f64 {
    interaction_1c_values(&p.values, p.a, p.b, st)
}

/// [`interaction_1c`] for an arbitrary, not necessarily monotone, array.
pub fn interaction_1c_values(v: &[f64], a: f64, b: f64, st: &Stencil) -> f64 {
    let n = v.len() as i64;
    let km = st.k_max as i64;
    let w: Vec<f64> = (1..=km).map(|k| 2.0 * st.qs(k)).collect();
    let mut s = 0.0;
    for i in -km..n {
        let vi = at(v, i, a, b);
        for k in 1..=km {
            let d = vi - at(v, i + k, a, b);
            s += w[(k - 1) as usize] * d * d;
        }
    }
    s
}

/// One-component free energy `∫F(m) + κ ∬(m(x) - m(y))² J`.
pub fn free_energy_1c<P: Potential + ?Sized>(p: &MonotoneProfile, f: &P, st: &Stencil, cfg: &FunctionalConfig) -> Result<EnergyBreakdown> {
    free_energy_1c_values(&p.values, p.grid.h, p.a, p.b, f, st, cfg)
}

/// [`free_energy_1c`] for an arbitrary array on a grid of spacing `h`.
pub fn free_energy_1c_values<P: Potential + ?Sized>(
    v: &[f64],
    h: f64,
    a: f64,
    b: f64,
    f: &P,
    st: &Stencil,
    cfg: &FunctionalConfig,
) -> Result<EnergyBreakdown> {
    check_normalized(f, a, b)?;
    let fv: Vec<f64> = v.iter().map(|&x| f.f(x)).collect();
    let pot = h * fv.iter().sum::<f64>();
    let inter = cfg.kappa * interaction_1c_values(v, a, b, st);
    Ok(EnergyBreakdown::new(pot, inter, (simpson(&fv, h) - pot).abs()))
}

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 3 {
        return h * f.iter().sum::<f64>();
    }
    let m = if n % 2 == 1 { n } else { n - 1 };
    let mut s = f[0] + f[m - 1];
    for (i, v) in f.iter().enumerate().take(m - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let mut total = s * h / 3.0;
    if m < n {
        total += 0.5 * h * (f[n - 2] + f[n - 1]);
    }
    total
}

/// Discrete variational derivative of [`free_energy_1c`], divided by `h`.
pub fn gradient_1c<P: Potential + ?Sized>(p: &MonotoneProfile, f: &P, st: &Stencil, cfg: &FunctionalConfig) -> Vec<f64> {
    let conv = st.convolve(&p.values, p.a, p.b);
    p.values
        .iter()
        .zip(&conv)
        .map(|(&v, &c)| f.df(v) + 4.0 * cfg.kappa * (st.jhat * v - c))
        .collect()
}

/// Atoms `(position, mass)` of the step profile's measure, unnormalized.
fn atoms(p: &MonotoneProfile) -> Vec<(f64, f64)> {
    let g = &p.grid;
    let v = &p.values;
    let mut out = Vec::with_capacity(v.len() + 1);
    out.push((g.x(0), v[0] - p.a));
    for i in 1..v.len() {
        out.push((g.x(i), v[i] - v[i - 1]));
    }
    out.push((g.x(g.n - 1) + g.h, p.b - v[v.len() - 1]));
    out
}

/// `∬ W(z - w) dμ(z) dμ(w)` with the one-component `W`.
pub fn interaction_measure_form_1c(p: &MonotoneProfile, w: &WPotential) -> f64 {
    assert_eq!(w.variant, WVariant::OneComponent);
    let at = atoms(p);
    let h = p.grid.h;
    let reach = (w.range / h).ceil() as usize + 1;
    let wk: Vec<f64> = (0..=reach).map(|k| w.eval(k as f64 * h)).collect();
    let mut s = 0.0;
    for i in 0..at.len() {
        let mi = at[i].1;
        if mi == 0.0 {
            continue;
        }
        s += wk[0] * mi * mi;
        for k in 1..=reach.min(at.len() - 1 - i) {
            s += 2.0 * wk[k] * mi * at[i + k].1;
        }
    }
    s
}

fn check_tail(x: f64, scale: f64) -> Result<()> {
    if x.abs() > 1e-8 * scale.max(1.0) {
        return Err(Error::TailNotClosed(x));
    }
    Ok(())
}

fn same_grid(m: &MonotoneProfile, n: &MonotoneProfile) -> Result<()> {
    if !m.grid.same_as(&n.grid) {
        return Err(Error::InvalidProfile("components live on different grids".into()));
    }
    Ok(())
}

/// Window-clamped position of the reference jump at 0.
fn jump_split(m: &MonotoneProfile) -> (f64, f64) {
    let g = &m.grid;
    let x0 = g.x(0);
    let xn = g.x(g.n - 1) + g.h;
    let c = 0.0f64.clamp(x0, xn);
    (c - x0, xn - c)
}

/// `∫ [ m (J*n) - Ĵ m̂ n̂ ] dx` with `m̂, n̂` the steps at 0 between the asymptotes.
pub fn interaction_2c(m: &MonotoneProfile, n: &MonotoneProfile, st: &Stencil) -> Result<f64> {
    same_grid(m, n)?;
    let (v, u) = (&m.values, &n.values);
    let len = v.len() as i64;
    let km = st.k_max as i64;
    let (a, b, c, d) = (m.a, m.b, n.a, n.b);
    let mut s = 0.0;
    for i in -km..len + km {
        let vi = at(v, i, a, b);
        let ui = at(u, i, c, d);
        let mut inner = 0.0;
        for k in -km..=km {
            let diff = at(u, i + k, c, d) - ui;
            if diff != 0.0 {
                inner += st.q(k) * diff;
            }
        }
        s += vi * inner;
    }
    let h = m.grid.h;
    let prod: f64 = v.iter().zip(u).map(|(x, y)| x * y).sum::<f64>() * h;
    let (left, right) = jump_split(m);
    s += st.jhat * (prod - a * c * left - b * d * right);
    // the integrand must have settled at both window edges
    let conv = st.convolve(u, c, d);
    let scale = (a.abs() + b.abs()) * (c.abs() + d.abs()) * st.jhat;
    check_tail(v[0] * conv[0] - st.jhat * a * c, scale)?;
    check_tail(v[v.len() - 1] * conv[v.len() - 1] - st.jhat * b * d, scale)?;
    Ok(s)
}

/// Pieces of the measure-space form of [`interaction_2c`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InteractionMeasureForm {
    /// `(a-b)(d-c) ∬ W ρ1 ρ2`.
    pub w_term: f64,
    /// `(b-a)(d-c) α`.
    pub constant_term: f64,
    /// `-(Ĵ/2) ∫ x [(b+a)(d-c) ρ2 + (b-a)(c+d) ρ1] dx`.
    pub moment_term: f64,
    pub total: f64,
    /// The constant `[2(b-a)(d-c) + bc + ad] α` as it appears in print.
    pub printed_constant_term: f64,
}

/// `∬ W(x - y) ρ1(x) ρ2(y)` for atomic densities on a common grid.
fn w_double_sum(x: &[f64], r1: &[f64], r2: &[f64], w: &WPotential, h: f64) -> f64 {
    let nat = x.len();
    let reach = (w.range / h).ceil() as usize + 1;
    let wk: Vec<f64> = (0..=reach).map(|k| w.eval(k as f64 * h)).collect();
    // prefix sums of ρ2 and x ρ2 for the linear far field
    let mut c0 = vec![0.0; nat + 1];
    let mut c1 = vec![0.0; nat + 1];
    for j in 0..nat {
        c0[j + 1] = c0[j] + r2[j];
        c1[j + 1] = c1[j] + x[j] * r2[j];
    }
    let (alpha, slope) = (w.w_offset, w.slope_at_infinity);
    let mut s = 0.0;
    for i in 0..nat {
        if r1[i] == 0.0 {
            continue;
        }
        let lo = i.saturating_sub(reach);
        let hi = (i + reach).min(nat - 1);
        let mut near = 0.0;
        for j in lo..=hi {
            near += wk[i.abs_diff(j)] * r2[j];
        }
        // j < lo: W = α + slope (x_i - x_j); j > hi: W = α + slope (x_j - x_i)
        let left = alpha * c0[lo] + slope * (x[i] * c0[lo] - c1[lo]);
        let right = alpha * (c0[nat] - c0[hi + 1]) + slope * ((c1[nat] - c1[hi + 1]) - x[i] * (c0[nat] - c0[hi + 1]));
        s += r1[i] * (near + left + right);
    }
    s
}

fn atom_density(p: &MonotoneProfile) -> Result<(Vec<f64>, Vec<f64>)> {
    if p.a == p.b {
        return Err(Error::DegenerateProfile);
    }
    let at = atoms(p);
    let d = p.b - p.a;
    Ok((at.iter().map(|t| t.0).collect(), at.iter().map(|t| t.1 / d).collect()))
}

pub fn interaction_measure_form_2c(m: &MonotoneProfile, n: &MonotoneProfile, w: &WPotential) -> Result<InteractionMeasureForm> {
    same_grid(m, n)?;
    if w.variant != WVariant::TwoComponent {
        return Err(Error::InvalidKernel("measure form needs the two-component W".into()));
    }
    let (x, r1) = atom_density(m)?;
    let (_, r2) = atom_density(n)?;
    let (a, b, c, d) = (m.a, m.b, n.a, n.b);
    let ww = w_double_sum(&x, &r1, &r2, w, m.grid.h);
    let m1: f64 = x.iter().zip(&r1).map(|(x, r)| x * r).sum();
    let m2: f64 = x.iter().zip(&r2).map(|(x, r)| x * r).sum();
    let jhat = 2.0 * w.slope_at_infinity;
    let w_term = (a - b) * (d - c) * ww;
    let constant_term = (b - a) * (d - c) * w.w_offset;
    let moment_term = -0.5 * jhat * ((b + a) * (d - c) * m2 + (b - a) * (c + d) * m1);
    let printed_constant_term = (2.0 * (b - a) * (d - c) + b * c + a * d) * w.w_offset;
    Ok(InteractionMeasureForm { w_term, constant_term, moment_term, total: w_term + constant_term + moment_term, printed_constant_term })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhiIdentity {
    /// `∬ J(x - y)[m(x) m(y) - m_β²]` by direct summation.
    pub direct: f64,
    /// `-4 m_β² ∬ W ρ ρ + 4 α m_β²`.
    pub measure_form: f64,
    /// The printed right side `-4 m_β² ∬ W ρ ρ - 6 α m_β²`.
    pub printed: f64,
}

/// Both sides of the odd-front identity for `m` rising from `-m_β` to `m_β`.
pub fn phi_identity_1c(m: &MonotoneProfile, st: &Stencil, w: &WPotential) -> Result<PhiIdentity> {
    let mb = m.b;
    if (m.a + mb).abs() > 1e-14 * mb.abs().max(1.0) {
        return Err(Error::InvalidProfile("asymptotes must be -m_β and m_β".into()));
    }
    if mb == 0.0 {
        return Ok(PhiIdentity { direct: 0.0, measure_form: 0.0, printed: 0.0 });
    }
    let neg = MonotoneProfile::with_tol(m.grid, m.values.iter().map(|v| -v).collect(), -m.a, -m.b, f64::INFINITY)?;
    let direct = -interaction_2c(m, &neg, st)?;
    let (x, r) = atom_density(m)?;
    let ww = w_double_sum(&x, &r, &r, w, m.grid.h);
    let mb2 = mb * mb;
    Ok(PhiIdentity { direct, measure_form: -4.0 * mb2 * ww + 4.0 * w.w_offset * mb2, printed: -4.0 * mb2 * ww - 6.0 * w.w_offset * mb2 })
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn check_binary(m: &MonotoneProfile, n: &MonotoneProfile, bulk: &BulkPhases) -> Result<()> {
    let (rm, rp) = (bulk.rho_minus, bulk.rho_plus);
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y.abs().max(1e-300);
    if !close(m.a, rm) || !close(m.b, rp) || !close(n.a, rp) || !close(n.b, rm) {
        return Err(Error::InvalidProfile(format!(
            "binary pair must run ρ- → ρ+ and ρ+ → ρ- with ρ± = ({rm}, {rp})"
        )));
    }
    Ok(())
}

/// `∫ [m ln m + n ln n + β m (J*n) - c_tail] dx`.
pub fn excess_free_energy_2c(m: &MonotoneProfile, n: &MonotoneProfile, bulk: &BulkPhases, st: &Stencil) -> Result<EnergyBreakdown> {
    same_grid(m, n)?;
    check_binary(m, n, bulk)?;
    let h = m.grid.h;
    let loc: Vec<f64> = m.values.iter().zip(&n.values).map(|(&v, &u)| xlnx(v) + xlnx(u)).collect();
    let tail = xlnx(bulk.rho_plus) + xlnx(bulk.rho_minus);
    let len = m.grid.n as f64 * h;
    let pot = h * loc.iter().sum::<f64>() - tail * len;
    let inter = bulk.beta * interaction_2c(m, n, st)?;
    let dev: Vec<f64> = loc.iter().map(|l| l - tail).collect();
    Ok(EnergyBreakdown::new(pot, inter, (simpson(&dev, h) - pot).abs()))
}

/// Tail value of the excess integrand when `g` is subtracted instead of `c_tail`.
pub fn literal_tail_value(bulk: &BulkPhases) -> f64 {
    bulk.c_tail - bulk.g
}

/// Grand potential `∫ [m ln m + n ln n - λ(m + n) + β m (J*n) - g] dx`.
pub fn grand_excess_2c(m: &MonotoneProfile, n: &MonotoneProfile, bulk: &BulkPhases, st: &Stencil) -> Result<EnergyBreakdown> {
    let e = excess_free_energy_2c(m, n, bulk, st)?;
    let h = m.grid.h;
    let mass: f64 = m.values.iter().zip(&n.values).map(|(v, u)| v + u - bulk.rho_plus - bulk.rho_minus).sum::<f64>() * h;
    let pot = e.potential_term - bulk.lambda * mass;
    Ok(EnergyBreakdown::new(pot, e.interaction_term, e.quadrature_error_estimate))
}

/// Residuals `ln m + β (J*n) - μ` and `ln n + β (J*m) - μ` with `μ = λ - 1`;
/// this is the gradient of [`grand_excess_2c`] divided by `h`.
pub fn gradient_2c(m: &MonotoneProfile, n: &MonotoneProfile, bulk: &BulkPhases, st: &Stencil) -> (Vec<f64>, Vec<f64>) {
    let mu = bulk.lambda - 1.0;
    let cn = st.convolve(&n.values, n.a, n.b);
    let cm = st.convolve(&m.values, m.a, m.b);
    let r1 = m.values.iter().zip(&cn).map(|(&v, &c)| v.ln() + bulk.beta * c - mu).collect();
    let r2 = n.values.iter().zip(&cm).map(|(&u, &c)| u.ln() + bulk.beta * c - mu).collect();
    (r1, r2)
}

fn rule8() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| Rule::new(8))
}

/// `∫ [f(m) - f(m̂)] dx` for the profile whose continuous quantile is `q`,
/// computed in mass coordinates. Linear in the quantile knots.
pub fn potential_mass_space<F: Fn(f64) -> f64>(q: &QuantileFunction, a: f64, b: f64, f: F) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let g = |s: f64| f(a + (b - a) * s) - (fa + (fb - fa) * s);
    let (mm, xx) = q.knots();
    let r = rule8();
    let mut s = 0.0;
    for k in 1..mm.len() {
        let dx = xx[k] - xx[k - 1];
        if dx == 0.0 {
            continue;
        }
        let ds = mm[k] - mm[k - 1];
        s += dx / ds * r.integrate(mm[k - 1], mm[k], &g);
    }
    s - (fb - fa) * q.mean()
}

/// `(b - a)² ∬ W(x(s) - x(t)) ds dt` for the profile whose continuous
/// quantile is `q`. Each knot interval is one cell: distinct cells interact
/// through their midpoints, a cell with itself exactly along its linear
/// piece. W is read off a piecewise linear table, which keeps it convex on
/// `[0, R]`; every argument is a nonnegative combination of knot gaps, so
/// the value is exactly convex along displacement paths.
pub fn interaction_mass_space(q: &QuantileFunction, a: f64, b: f64, w: &WPotential) -> f64 {
    assert_eq!(w.variant, WVariant::OneComponent);
    const T: usize = 1 << 14;
    let hw = w.range / T as f64;
    let tab: Vec<f64> = (0..=T + 1).map(|i| w.eval(i as f64 * hw)).collect();
    let wl = |u: f64| {
        let r = u / hw;
        let i = r as usize;
        let f = r - i as f64;
        tab[i] + f * (tab[i + 1] - tab[i])
    };
    let (mm, xx) = q.knots();
    let n = mm.len() - 1;
    let ds: Vec<f64> = mm.windows(2).map(|m| m[1] - m[0]).collect();
    let mid: Vec<f64> = xx.windows(2).map(|x| 0.5 * (x[0] + x[1])).collect();
    let r = rule8();
    let mut s = 0.0;
    for k in 0..n {
        let dx = xx[k + 1] - xx[k];
        s += ds[k] * ds[k] * 2.0 * r.integrate(0.0, 1.0, |v| (1.0 - v) * if dx * v < w.range { wl(dx * v) } else { 0.0 });
        let mut off = 0.0;
        for l in k + 1..n {
            let u = mid[l] - mid[k];
            if u >= w.range {
                break;
            }
            off += ds[l] * wl(u);
        }
        s += 2.0 * ds[k] * off;
    }
    (b - a) * (b - a) * s
}

/// Measure form `(a-b)(d-c) ∬ W ρ1 ρ2 + (b-a)(d-c) α + moments` of
/// [`interaction_2c`] for profiles with continuous quantiles `qm`, `qn`.
/// Along displacement paths the moments are affine and the W term convex.
pub fn interaction_mass_space_2c(qm: &QuantileFunction, qn: &QuantileFunction, (a, b): (f64, f64), (c, d): (f64, f64), w: &ConvexTable) -> f64 {
    let jhat = 2.0 * w.half_mass;
    let moments = -0.5 * jhat * ((b + a) * (d - c) * qn.mean() + (b - a) * (c + d) * qm.mean());
    (a - b) * (d - c) * w.pair_sum(&qm.cells(), &qn.cells()) + (b - a) * (d - c) * w.alpha() + moments
}

/// Total mass of the profile measure; `p` must reach its asymptotes.
pub fn total_variation(p: &MonotoneProfile) -> Result<f64> {
    let d = profile_to_density(p)?;
    Ok(d.weights.iter().sum::<f64>() * (p.b - p.a).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{quantile, Grid};
    use crate::kernels::Kernel;
    use crate::potential::QuarticWell;

    fn bx() -> Kernel {
        Kernel::box_kernel(1.0, 1.0).unwrap()
    }

    #[test]
    fn pure_phase_has_zero_energy() {
        let g = Grid::new(-3.0, 3.0, 301).unwrap();
        let st = Stencil::new(&bx(), g.h).unwrap();
        let p = MonotoneProfile::new(g, vec![1.0; 301], 1.0, 1.0).unwrap();
        let e = free_energy_1c(&p, &QuarticWell::symmetric(), &st, &FunctionalConfig::default()).unwrap();
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn step_energy_is_one() {
        let g = Grid::new(-3.0, 3.0, 301).unwrap();
        let st = Stencil::new(&bx(), g.h).unwrap();
        let p = MonotoneProfile::step(g, -1.0, 1.0, 0.0).unwrap();
        let e = free_energy_1c(&p, &QuarticWell::symmetric(), &st, &FunctionalConfig::default()).unwrap();
        assert_eq!(e.potential_term, 0.0);
        assert!((e.interaction_term - 1.0).abs() < 1e-13);
        assert!((e.total - e.potential_term - e.interaction_term).abs() < 1e-14);
    }

    #[test]
    fn ramp_potential_term() {
        let g = Grid::new(-1.0, 2.0, 3001).unwrap();
        let st = Stencil::new(&bx(), g.h).unwrap();
        let p = MonotoneProfile::from_fn(g, 0.0, 1.0, |x| x.clamp(0.0, 1.0)).unwrap();
        let f = QuarticWell::new(0.0, 1.0, 1.0);
        let e = free_energy_1c(&p, &f, &st, &FunctionalConfig::default()).unwrap();
        assert!((e.potential_term - 1.0 / 30.0).abs() < 1e-6);
    }

    #[test]
    fn unnormalized_potential_rejected() {
        let g = Grid::new(-1.0, 2.0, 31).unwrap();
        let st = Stencil::new(&bx(), g.h).unwrap();
        let p = MonotoneProfile::step(g, 0.0, 1.0, 0.0).unwrap();
        let f = QuarticWell::new(0.0, 0.9, 1.0);
        assert!(matches!(
            free_energy_1c(&p, &f, &st, &FunctionalConfig::default()),
            Err(Error::UnnormalizedPotential { .. })
        ));
    }

    #[test]
    fn step_measure_form_is_w0() {
        let g = Grid::new(-3.0, 3.0, 301).unwrap();
        let w = WPotential::one_component(&bx());
        let p = MonotoneProfile::step(g, -1.0, 1.0, 0.0).unwrap();
        assert!((interaction_measure_form_1c(&p, &w) - 2.0).abs() < 1e-13);
        let st = Stencil::new(&bx(), g.h).unwrap();
        assert!((interaction_1c(&p, &st) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn mass_space_interaction_tracks_the_grid_value() {
        let g = Grid::new(-8.0, 8.0, 1601).unwrap();
        let k = Kernel::triangle(1.0, 1.0).unwrap();
        let w = WPotential::one_component(&k);
        let v: Vec<f64> = g.nodes().iter().map(|&x| (1.5 * x).tanh()).collect();
        let p = MonotoneProfile::with_tol(g, v, -1.0, 1.0, f64::INFINITY).unwrap();
        let q = quantile(&p, 2048).unwrap();
        let ms = interaction_mass_space(&q, -1.0, 1.0, &w);
        let direct = interaction_1c(&p, &Stencil::new(&k, g.h).unwrap());
        assert!((ms - direct).abs() < 1e-3 * direct, "{ms} {direct}");
        // only differences of the quantile enter
        let moved = interaction_mass_space(&q.shifted(0.37), -1.0, 1.0, &w);
        assert!((moved - ms).abs() < 1e-13, "{moved} {ms}");
    }

    #[test]
    fn binary_mass_space_interaction_tracks_the_grid_value() {
        let g = Grid::new(-8.0, 8.0, 1601).unwrap();
        let k = Kernel::triangle(1.0, 1.0).unwrap();
        let w = ConvexTable::two_component(&k, 4096).unwrap();
        let (rm, rp) = (0.2, 0.9);
        let m = MonotoneProfile::with_tol(g, g.nodes().iter().map(|&x| rm + (rp - rm) * 0.5 * (1.0 + (2.5 * x).tanh())).collect(), rm, rp, f64::INFINITY).unwrap();
        let n = MonotoneProfile::with_tol(g, g.nodes().iter().map(|&x| rp + (rm - rp) * 0.5 * (1.0 + (2.0 * (x - 0.4)).tanh())).collect(), rp, rm, f64::INFINITY).unwrap();
        let (qm, qn) = (quantile(&m, 2048).unwrap(), quantile(&n, 2048).unwrap());
        let ms = interaction_mass_space_2c(&qm, &qn, (rm, rp), (rp, rm), &w);
        let direct = interaction_2c(&m, &n, &Stencil::new(&k, g.h).unwrap()).unwrap();
        assert!((ms - direct).abs() < 1e-3 * direct.abs(), "{ms} {direct}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = Grid::new(-4.0, 4.0, 161).unwrap();
        let k = Kernel::triangle(1.0, 1.0).unwrap();
        let st = Stencil::new(&k, g.h).unwrap();
        let f = QuarticWell::symmetric();
        let cfg = FunctionalConfig { kappa: 0.5 };
        let v: Vec<f64> = g.nodes().iter().map(|&x| (1.5 * x).tanh()).collect();
        let p = MonotoneProfile::with_tol(g, v, -1.0, 1.0, f64::INFINITY).unwrap();
        let grad = gradient_1c(&p, &f, &st, &cfg);
        let e0 = |q: &MonotoneProfile| free_energy_1c(q, &f, &st, &cfg).unwrap().total;
        for i in (5..156).step_by(10) {
            let d = 1e-6;
            let mut up = p.clone();
            up.values[i] += d;
            let mut dn = p.clone();
            dn.values[i] -= d;
            let fd = (e0(&up) - e0(&dn)) / (2.0 * d) / g.h;
            assert!((fd - grad[i]).abs() < 1e-6 * grad[i].abs().max(1e-2), "{i} {fd} {}", grad[i]);
        }
    }

    #[test]
    fn binary_step_pair_constant() {
        let g = Grid::new(-3.0, 3.0, 301).unwrap();
        let k = bx();
        let st = Stencil::new(&k, g.h).unwrap();
        let w = WPotential::two_component(&k).unwrap();
        let (rm, rp) = (0.2, 1.7);
        let m = MonotoneProfile::step(g, rm, rp, 0.0).unwrap();
        let n = MonotoneProfile::step(g, rp, rm, 0.0).unwrap();
        let direct = interaction_2c(&m, &n, &st).unwrap();
        assert!((direct - (rp - rm) * (rp - rm) / 4.0).abs() < 1e-13);
        let mf = interaction_measure_form_2c(&m, &n, &w).unwrap();
        assert!((mf.total - direct).abs() < 1e-13);
        assert!(mf.w_term.abs() < 1e-14);
    }

    #[test]
    fn sharp_odd_front_value() {
        let g = Grid::new(-3.0, 3.0, 301).unwrap();
        let k = bx();
        let st = Stencil::new(&k, g.h).unwrap();
        let w = WPotential::two_component(&k).unwrap();
        let m = MonotoneProfile::step(g, -1.0, 1.0, 0.0).unwrap();
        let id = phi_identity_1c(&m, &st, &w).unwrap();
        assert!((id.direct + 1.0).abs() < 1e-13);
        assert!((id.measure_form + 1.0).abs() < 1e-13);
        assert!((id.printed - 1.5).abs() < 1e-13);
    }

    #[test]
    fn mass_space_potential_of_ramp() {
        let g = Grid::new(-1.0, 2.0, 301).unwrap();
        let p = MonotoneProfile::from_fn(g, 0.0, 1.0, |x| x.clamp(0.0, 1.0)).unwrap();
        let q = quantile(&p, 1024).unwrap();
        let f = QuarticWell::new(0.0, 1.0, 1.0);
        let v = potential_mass_space(&q, 0.0, 1.0, |m| f.f(m));
        assert!((v - 1.0 / 30.0).abs() < 1e-12);
        // a chord term picks up the mean position
        let v = potential_mass_space(&q, 0.0, 1.0, |m| m);
        assert!((v - (-0.5)).abs() < 1e-12);
    }
}
