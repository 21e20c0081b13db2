//! Double-well potentials `F`.

use serde::{Deserialize, Serialize};

/// `F(m) = scale · (m - a)² (m - b)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarticWell {
    pub a: f64,
    pub b: f64,
    pub scale: f64,
}

impl QuarticWell {
    pub fn new(a: f64, b: f64, scale: f64) -> Self {
        QuarticWell { a, b, scale }
    }

    /// `(m² - 1)²/4` on the symmetric wells ±1.
    pub fn symmetric() -> Self {
        QuarticWell { a: -1.0, b: 1.0, scale: 0.25 }
    }
}

pub trait Potential: Send + Sync {
    fn f(&self, m: f64) -> f64;
    fn df(&self, m: f64) -> f64;
}

impl Potential for QuarticWell {
    fn f(&self, m: f64) -> f64 {
        let p = (m - self.a) * (m - self.b);
        self.scale * p * p
    }

    fn df(&self, m: f64) -> f64 {
        let p = (m - self.a) * (m - self.b);
        2.0 * self.scale * p * (2.0 * m - self.a - self.b)
    }
}

/// Any pair of closures.
pub struct FnPotential<F, D> {
    pub f: F,
    pub df: D,
}

impl<F, D> Potential for FnPotential<F, D>
where
    F: Fn(f64) -> f64 + Send + Sync,
    D: Fn(f64) -> f64 + Send + Sync,
{
    fn f(&self, m: f64) -> f64 {
        (self.f)(m)
    }
    fn df(&self, m: f64) -> f64 {
        (self.df)(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_matches_difference_quotient() {
        let p = QuarticWell::new(0.0, 1.0, 1.0);
        for i in 0..20 {
            let m = -0.2 + 0.07 * i as f64;
            let d = 1e-6;
            let fd = (p.f(m + d) - p.f(m - d)) / (2.0 * d);
            assert!((fd - p.df(m)).abs() < 1e-8);
        }
        assert_eq!(p.f(0.0), 0.0);
        assert_eq!(p.f(1.0), 0.0);
    }
}
