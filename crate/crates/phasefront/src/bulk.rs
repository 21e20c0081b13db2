//! Bulk thermodynamics of the binary mixture.
//!
//! `f(m, n) = m ln m + n ln n + β Ĵ m n - λ1 m - λ2 n`.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFreeEnergy {
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub jhat: f64,
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

impl LocalFreeEnergy {
    pub fn new(beta: f64, lambda: f64, jhat: f64) -> Result<Self> {
        if !(beta > 0.0) || !(jhat > 0.0) || !lambda.is_finite() {
            return Err(Error::DomainError(format!("need beta > 0 and jhat > 0, got {beta}, {jhat}")));
        }
        Ok(LocalFreeEnergy { beta, lambda1: lambda, lambda2: lambda, jhat })
    }

    pub fn evaluate_f(&self, m: f64, n: f64) -> Result<f64> {
        if m < 0.0 || n < 0.0 {
            return Err(Error::DomainError(format!("negative density ({m}, {n})")));
        }
        Ok(self.f_unchecked(m, n))
    }

    fn f_unchecked(&self, m: f64, n: f64) -> f64 {
        // summed in a fixed order so that f(m, n) = f(n, m) holds exactly when λ1 = λ2
        let (hi, lo) = if m >= n { (m, n) } else { (n, m) };
        let linear = if self.lambda1 == self.lambda2 { self.lambda1 * (hi + lo) } else { self.lambda1 * m + self.lambda2 * n };
        xlnx(hi) + xlnx(lo) + self.beta * self.jhat * m * n - linear
    }

    fn lambda(&self) -> Result<f64> {
        if self.lambda1 != self.lambda2 {
            return Err(Error::DomainError("equal chemical potentials required".into()));
        }
        Ok(self.lambda1)
    }

    /// Front chemical potential `μ = λ - 1`.
    pub fn mu(&self) -> Result<f64> {
        Ok(self.lambda()? - 1.0)
    }

    /// One step of `Φ(m, n) = (exp(μ - βĴn), exp(μ - βĴm))`.
    pub fn phi_map(&self, m: f64, n: f64) -> Result<(f64, f64)> {
        let mu = self.mu()?;
        let bj = self.beta * self.jhat;
        Ok(((mu - bj * n).clamp(-700.0, 700.0).exp(), (mu - bj * m).clamp(-700.0, 700.0).exp()))
    }

    /// Stationarity residuals `ln m + 1 + βĴn - λ1` and `ln n + 1 + βĴm - λ2`.
    pub fn stationarity(&self, m: f64, n: f64) -> (f64, f64) {
        let bj = self.beta * self.jhat;
        (m.ln() + 1.0 + bj * n - self.lambda1, n.ln() + 1.0 + bj * m - self.lambda2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BulkPhases {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub beta: f64,
    pub lambda: f64,
    pub symmetric: bool,
    /// Minimum value of `f`.
    pub g: f64,
    /// `ρ+ ln ρ+ + ρ- ln ρ- + βĴ ρ+ ρ-`, the tail value of the excess integrand's local part.
    pub c_tail: f64,
    /// Symmetric stationary density.
    pub rho_sym: f64,
}

/// Root of `ln ρ + 1 + βĴρ = λ`.
pub fn symmetric_density(beta: f64, lambda: f64, jhat: f64) -> f64 {
    let bj = beta * jhat;
    // Newton in t = ln ρ from the right; the map is convex and increasing
    let mut t = lambda - 1.0;
    for _ in 0..200 {
        let e = t.exp();
        let g = t + 1.0 + bj * e - lambda;
        let dt = g / (1.0 + bj * e);
        t -= dt;
        if dt.abs() <= 1e-16 * t.abs().max(1.0) {
            break;
        }
    }
    t.exp()
}

/// Closed form `β_c = e^(2-λ)/Ĵ` where `βĴρ_sym = 1`.
pub fn beta_c_closed_form(lambda: f64, jhat: f64) -> f64 {
    (2.0 - lambda).exp() / jhat
}

/// Asymmetric stationary pair on the branch `d = ln(m/n) > 0`.
fn asymmetric_pair(beta: f64, lambda: f64, jhat: f64) -> Option<(f64, f64)> {
    let bj = beta * jhat;
    let n_of = |d: f64| if d < 1e-12 { (1.0 - 0.5 * d) / bj } else { d / (bj * d.exp_m1()) };
    let h = |d: f64| {
        let n = n_of(d);
        n.ln() + d + 1.0 + bj * n - lambda
    };
    if h(0.0) >= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while h(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = 0.5 * (lo + hi);
    let n = n_of(d);
    Some((n * d.exp(), n))
}

/// Bulk phases without the grid cross-check.
pub fn bulk_phases_fast(lfe: &LocalFreeEnergy) -> Result<BulkPhases> {
    let lambda = lfe.lambda()?;
    let rho_sym = symmetric_density(lfe.beta, lambda, lfe.jhat);
    let (rp, rm, symmetric) = match asymmetric_pair(lfe.beta, lambda, lfe.jhat) {
        Some((m, n)) => (m, n, false),
        None => (rho_sym, rho_sym, true),
    };
    let bj = lfe.beta * lfe.jhat;
    Ok(BulkPhases {
        rho_minus: rm,
        rho_plus: rp,
        beta: lfe.beta,
        lambda,
        symmetric,
        g: lfe.f_unchecked(rp, rm),
        c_tail: xlnx(rp) + xlnx(rm) + bj * rp * rm,
        rho_sym,
    })
}

/// Bulk phases, cross-validated against [`grid_minimizer`].
pub fn bulk_phases(lfe: &LocalFreeEnergy) -> Result<BulkPhases> {
    let bp = bulk_phases_fast(lfe)?;
    let (fm, fn_) = lfe.phi_map(bp.rho_plus, bp.rho_minus)?;
    let scale = bp.rho_plus.max(1.0);
    if (fm - bp.rho_plus).abs() > 1e-10 * scale || (fn_ - bp.rho_minus).abs() > 1e-10 * scale {
        return Err(Error::OracleMismatch(format!("(ρ+, ρ-) is not a fixed point of Φ: ({fm}, {fn_})")));
    }
    let (gm, gn, _) = grid_minimizer(lfe, 400, 2)?;
    if (gm - bp.rho_plus).abs() > 1e-5 * scale || (gn - bp.rho_minus).abs() > 1e-5 * scale {
        return Err(Error::OracleMismatch(format!(
            "branch solve ({}, {}) vs grid search ({gm}, {gn})",
            bp.rho_plus, bp.rho_minus
        )));
    }
    Ok(bp)
}

/// Brute-force minimizer of `f` over `m >= n` on a `side × side` grid of
/// `[e^(λ-1-βĴ m_max), m_max]²`, `m_max = e^(λ-1)`, refined around the best cell.
pub fn grid_minimizer(lfe: &LocalFreeEnergy, side: usize, refinements: usize) -> Result<(f64, f64, f64)> {
    let lambda = lfe.lambda()?;
    let m_max = (lambda - 1.0).exp();
    let m_min = (lambda - 1.0 - lfe.beta * lfe.jhat * m_max).exp();
    let (mut lo_m, mut hi_m, mut lo_n, mut hi_n) = (m_min, m_max, m_min, m_max);
    let mut best = (m_max, m_max, f64::INFINITY);
    for _ in 0..=refinements {
        let dm = (hi_m - lo_m) / (side - 1) as f64;
        let dn = (hi_n - lo_n) / (side - 1) as f64;
        for i in 0..side {
            let m = lo_m + i as f64 * dm;
            for j in 0..side {
                let n = lo_n + j as f64 * dn;
                if n > m {
                    continue;
                }
                let v = lfe.f_unchecked(m, n);
                if v < best.2 {
                    best = (m, n, v);
                }
            }
        }
        lo_m = (best.0 - 2.0 * dm).max(m_min);
        hi_m = (best.0 + 2.0 * dm).min(m_max);
        lo_n = (best.1 - 2.0 * dn).max(m_min);
        hi_n = (best.1 + 2.0 * dn).min(m_max);
    }
    Ok(best)
}

/// Bisection on the symmetric/asymmetric flag after a geometric scan.
pub fn find_beta_c(lambda: f64, jhat: f64) -> Result<f64> {
    let flag = |beta: f64| -> Result<bool> { Ok(bulk_phases_fast(&LocalFreeEnergy::new(beta, lambda, jhat)?)?.symmetric) };
    let (lo_scan, hi_scan) = (1e-8, 1e8);
    let mut lo = lo_scan;
    if !flag(lo)? {
        return Err(Error::NoTransition { lo: lo_scan, hi: hi_scan });
    }
    let mut hi = lo;
    while flag(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > hi_scan {
            return Err(Error::NoTransition { lo: lo_scan, hi: hi_scan });
        }
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if flag(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Iterates Φ from `(m, n)` and returns the trajectory.
pub fn phi_iterate(lfe: &LocalFreeEnergy, m: f64, n: f64, steps: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![(m, n)];
    let (mut m, mut n) = (m, n);
    for _ in 0..steps {
        (m, n) = lfe.phi_map(m, n)?;
        out.push((m, n));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_examples() {
        let l = LocalFreeEnergy { beta: 0.0, lambda1: 0.0, lambda2: 0.0, jhat: 1.0 };
        assert_eq!(l.evaluate_f(1.0, 1.0).unwrap(), 0.0);
        let l = LocalFreeEnergy { beta: 0.0, lambda1: 0.7, lambda2: 0.7, jhat: 1.0 };
        let r = (0.7f64 - 1.0).exp();
        assert!((l.evaluate_f(r, r).unwrap() + 2.0 * r).abs() < 1e-15);
        assert!(l.evaluate_f(-1.0, 1.0).is_err());
        let l = LocalFreeEnergy::new(1.3, 0.2, 1.0).unwrap();
        assert_eq!(l.evaluate_f(0.3, 0.9).unwrap(), l.evaluate_f(0.9, 0.3).unwrap());
    }

    #[test]
    fn zero_coupling_phi_is_constant() {
        let l = LocalFreeEnergy { beta: 0.0, lambda1: 0.5, lambda2: 0.5, jhat: 1.0 };
        let e = (-0.5f64).exp();
        assert_eq!(l.phi_map(3.0, 0.1).unwrap(), (e, e));
    }

    #[test]
    fn asymmetric_pair_is_stationary_and_mirror() {
        let l = LocalFreeEnergy::new(2.0 * beta_c_closed_form(1.0, 1.0), 1.0, 1.0).unwrap();
        let bp = bulk_phases(&l).unwrap();
        assert!(!bp.symmetric && bp.rho_minus < bp.rho_plus);
        let (r1, r2) = l.stationarity(bp.rho_plus, bp.rho_minus);
        assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12, "{r1} {r2}");
        assert_eq!(l.evaluate_f(bp.rho_plus, bp.rho_minus).unwrap(), l.evaluate_f(bp.rho_minus, bp.rho_plus).unwrap());
        let (a, b) = l.phi_map(bp.rho_plus, bp.rho_minus).unwrap();
        assert!((a - bp.rho_plus).abs() < 1e-12 && (b - bp.rho_minus).abs() < 1e-12);
    }

    #[test]
    fn symmetric_below_critical() {
        let bc = beta_c_closed_form(0.3, 2.0);
        let l = LocalFreeEnergy::new(0.95 * bc, 0.3, 2.0).unwrap();
        assert!(bulk_phases(&l).unwrap().symmetric);
        let l = LocalFreeEnergy::new(1.05 * bc, 0.3, 2.0).unwrap();
        assert!(!bulk_phases(&l).unwrap().symmetric);
    }

    #[test]
    fn bisection_meets_hessian_condition() {
        let bc = find_beta_c(0.4, 1.5).unwrap();
        let rs = symmetric_density(bc, 0.4, 1.5);
        assert!((bc * 1.5 * rs - 1.0).abs() < 1e-6);
    }

    #[test]
    fn phi_square_contracts_above_critical() {
        let l = LocalFreeEnergy::new(1.5 * beta_c_closed_form(1.0, 1.0), 1.0, 1.0).unwrap();
        let bp = bulk_phases(&l).unwrap();
        let e = 1e-7;
        let (p, q) = (bp.rho_plus, bp.rho_minus);
        let j11 = (l.phi_map(p + e, q).unwrap().0 - l.phi_map(p - e, q).unwrap().0) / (2.0 * e);
        let j12 = (l.phi_map(p, q + e).unwrap().0 - l.phi_map(p, q - e).unwrap().0) / (2.0 * e);
        let j21 = (l.phi_map(p + e, q).unwrap().1 - l.phi_map(p - e, q).unwrap().1) / (2.0 * e);
        let j22 = (l.phi_map(p, q + e).unwrap().1 - l.phi_map(p, q - e).unwrap().1) / (2.0 * e);
        // the off-diagonal Jacobian has eigenvalues ±sqrt(j12 j21)
        assert!(j11.abs() < 1e-9 && j22.abs() < 1e-9);
        let radius = (j12 * j21).abs().sqrt();
        assert!(radius < 1.0, "{radius}");
        assert!((radius - l.beta * l.jhat * (p * q).sqrt()).abs() < 1e-6);
    }
}
