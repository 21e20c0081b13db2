//! Interaction kernels, the W potentials and dimensional reduction.

use crate::error::{Error, Result};
use crate::quad::Rule;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

fn rule() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| Rule::new(20))
}

/// Radial kernel `U(r)` on `[0, R]` for the d-dimensional functional.
#[derive(Clone, Debug, PartialEq)]
pub enum RadialShape {
    /// `c` on `[0, R]`.
    Indicator,
    /// `c (1 - (r/R)^2)^2`.
    Quartic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialKernel {
    pub shape: RadialShape,
    pub range: f64,
    pub scale: f64,
}

impl RadialKernel {
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r > self.range {
            return 0.0;
        }
        match self.shape {
            RadialShape::Indicator => self.scale,
            RadialShape::Quartic => {
                let t = 1.0 - (r / self.range).powi(2);
                self.scale * t * t
            }
        }
    }

    /// Total mass of `U(|z|)` over d-dimensional space.
    pub fn mass(&self, d: usize) -> f64 {
        let rr = self.range;
        let radial = match self.shape {
            RadialShape::Indicator => self.scale * rr.powi(d as i32) / d as f64,
            RadialShape::Quartic => {
                // ∫0^R r^{d-1}(1 - r²/R²)² dr
                let d = d as f64;
                self.scale * rr.powf(d) * (1.0 / d - 2.0 / (d + 2.0) + 1.0 / (d + 4.0))
            }
        };
        sphere_area(d) * radial
    }
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    let d = d as f64;
    2.0 * PI.powf(d / 2.0) / gamma(d / 2.0)
}

fn gamma(x: f64) -> f64 {
    // half-integer arguments only
    if (x - x.round()).abs() < 1e-12 {
        (1..x.round() as i64).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut t = 0.5;
        while t < x - 1e-12 {
            g *= t;
            t += 1.0;
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Constant `Ĵ/(2R)` on `[-R, R]`.
    Box,
    /// `c (1 - |s|/R)`.
    Triangle,
    /// `c exp(-s²/(2σ²))` cut at `|s| = R`.
    TruncatedGaussian { sigma: f64 },
    /// Linear interpolation of samples; zero outside.
    Tabulated { s: Vec<f64>, j: Vec<f64> },
    /// `J̄(s) = ∫ U(sqrt(s² + |t|²)) dt` over `R^(d-1)`.
    Reduced { u: RadialKernel, d: usize },
}

#[derive(Clone, Debug)]
pub struct Kernel {
    pub shape: Shape,
    pub range: f64,
    scale: f64,
    pub total_mass: f64,
    pub even: bool,
    pub decreasing: bool,
}

impl Kernel {
    pub fn box_kernel(range: f64, mass: f64) -> Result<Self> {
        Self::analytic(Shape::Box, range, mass / (2.0 * range), mass)
    }

    pub fn triangle(range: f64, mass: f64) -> Result<Self> {
        Self::analytic(Shape::Triangle, range, mass / range, mass)
    }

    pub fn truncated_gaussian(range: f64, sigma: f64, mass: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidKernel("sigma must be positive".into()));
        }
        let z = range / (sigma * 2f64.sqrt());
        let unit = sigma * (2.0 * PI).sqrt() * erf(z);
        Self::analytic(Shape::TruncatedGaussian { sigma }, range, mass / unit, mass)
    }

    fn analytic(shape: Shape, range: f64, scale: f64, mass: f64) -> Result<Self> {
        if !(range > 0.0) || !(mass > 0.0) {
            return Err(Error::InvalidKernel(format!("range {range} and mass {mass} must be positive")));
        }
        let mut k = Kernel { shape, range, scale, total_mass: mass, even: true, decreasing: true };
        let q = k.integrate(|_| 1.0);
        if (q - mass).abs() > 1e-10 * mass {
            return Err(Error::QuadratureFailure(format!("kernel mass {q} vs closed form {mass}")));
        }
        k.total_mass = q;
        Ok(k)
    }

    /// Samples must be strictly increasing in `s`; samples on `s >= 0` only are mirrored.
    pub fn tabulated(s: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        if s.len() < 2 || s.len() != j.len() {
            return Err(Error::InvalidKernel("need at least two (s, J) samples".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidKernel("s must be strictly increasing".into()));
        }
        if j.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidKernel("J must be finite and non-negative".into()));
        }
        let mirrored = s[0] >= 0.0;
        let range = s[s.len() - 1].abs().max(s[0].abs());
        let decreasing = if mirrored {
            j.windows(2).all(|w| w[1] <= w[0])
        } else {
            let pos: Vec<usize> = (0..s.len()).filter(|&i| s[i] >= 0.0).collect();
            pos.windows(2).all(|w| j[w[1]] <= j[w[0]])
        };
        let mut k = Kernel { shape: Shape::Tabulated { s, j }, range, scale: 1.0, total_mass: 0.0, even: true, decreasing };
        if !mirrored {
            let samples: Vec<f64> = (0..=200).map(|i| -range + 2.0 * range * i as f64 / 200.0).collect();
            k.even = samples.iter().all(|&t| (k.eval(t) - k.eval(-t)).abs() <= 1e-12);
            k.decreasing &= k.even;
        }
        k.total_mass = k.integrate(|_| 1.0);
        if !(k.total_mass > 0.0) {
            return Err(Error::InvalidKernel("kernel has zero mass".into()));
        }
        Ok(k)
    }

    /// Two-column CSV `s,J(s)`, header optional.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path).map_err(|e| Error::Config(e.to_string()))?;
        let (mut s, mut j) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
            if rec.len() != 2 {
                return Err(Error::Config(format!("kernel table row {i}: expected 2 columns")));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    s.push(a);
                    j.push(b);
                }
                _ if i == 0 => continue,
                _ => return Err(Error::Config(format!("kernel table row {i}: not numeric"))),
            }
        }
        Self::tabulated(s, j)
    }

    /// `J̄(s) = ∫ U(sqrt(s² + |t|²)) dt` over `R^(d-1)`.
    pub fn reduce_dimension(u: &RadialKernel, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidKernel("reduction needs d >= 2".into()));
        }
        if !(u.range > 0.0) || !(u.scale > 0.0) {
            return Err(Error::InvalidKernel("radial kernel needs positive range and scale".into()));
        }
        let mut k = Kernel {
            shape: Shape::Reduced { u: u.clone(), d },
            range: u.range,
            scale: 1.0,
            total_mass: 0.0,
            even: true,
            decreasing: true,
        };
        let coarse = Rule::new(24);
        let fine = Rule::new(48);
        for i in 0..=64 {
            let s = u.range * i as f64 / 64.0;
            let a = reduced_value(u, d, s, &coarse);
            let b = reduced_value(u, d, s, &fine);
            if (a - b).abs() > 1e-9 * b.abs().max(u.scale * u.range) {
                return Err(Error::QuadratureFailure(format!("inner integral at s = {s}: {a} vs {b}")));
            }
        }
        k.total_mass = k.integrate(|_| 1.0);
        Ok(k)
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s.abs() > self.range {
            return 0.0;
        }
        match &self.shape {
            Shape::Box => self.scale,
            Shape::Triangle => self.scale * (1.0 - s.abs() / self.range),
            Shape::TruncatedGaussian { sigma } => self.scale * (-0.5 * (s / sigma).powi(2)).exp(),
            Shape::Tabulated { s: ss, j } => {
                let t = if ss[0] >= 0.0 { s.abs() } else { s };
                if t < ss[0] || t > ss[ss.len() - 1] {
                    return 0.0;
                }
                let k = ss.partition_point(|&v| v <= t).clamp(1, ss.len() - 1);
                let w = (t - ss[k - 1]) / (ss[k] - ss[k - 1]);
                j[k - 1] + w * (j[k] - j[k - 1])
            }
            Shape::Reduced { u, d } => reduced_value(u, *d, s, rule()),
        }
    }

    /// Points where `J` or one of its derivatives jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        let r = self.range;
        let mut b = vec![-r, r];
        match &self.shape {
            Shape::Triangle => b.push(0.0),
            Shape::Tabulated { s, .. } => {
                b.extend(s.iter().copied());
                if s[0] >= 0.0 {
                    b.extend(s.iter().map(|v| -v));
                }
            }
            Shape::Reduced { .. } => {
                // graded towards the square-root edge
                for k in 1..=40 {
                    let t = r * (1.0 - 0.5f64.powi(k));
                    b.push(t);
                    b.push(-t);
                }
                b.push(0.0);
            }
            _ => {}
        }
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup();
        b
    }

    /// `∫ J(s) g(s) ds` by Gauss-Legendre between breakpoints.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        rule().integrate_split(-self.range, self.range, &self.breakpoints(), |s| self.eval(s) * g(s))
    }

    /// `∫ J(s) g(s) ds` over `[lo, hi]` with extra breakpoints.
    pub fn integrate_on<G: Fn(f64) -> f64>(&self, lo: f64, hi: f64, extra: &[f64], g: G) -> f64 {
        let lo = lo.max(-self.range);
        let hi = hi.min(self.range);
        let mut b = self.breakpoints();
        b.extend_from_slice(extra);
        rule().integrate_split(lo, hi, &b, |s| self.eval(s) * g(s))
    }

    /// Tabulated kernels must be sampled at least twice per grid cell.
    pub fn check_resolution(&self, h: f64) -> Result<()> {
        if let Shape::Tabulated { s, .. } = &self.shape {
            let coarse = s.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            if coarse > 0.5 * h + 1e-15 {
                return Err(Error::InvalidKernel(format!("table spacing {coarse} exceeds h/2 = {}", 0.5 * h)));
            }
        }
        Ok(())
    }
}

fn reduced_value(u: &RadialKernel, d: usize, s: f64, r: &Rule) -> f64 {
    let rr = u.range;
    if s.abs() >= rr {
        return 0.0;
    }
    let top = (rr * rr - s * s).sqrt();
    let p = (d - 2) as i32;
    let inner = r.integrate(0.0, top, |t| t.powi(p) * u.eval((s * s + t * t).sqrt()));
    // S^{d-2} area, with |S^0| = 2
    sphere_area(d - 1) * inner
}

fn erf(x: f64) -> f64 {
    // series for moderate arguments, continued fraction beyond
    if x.abs() < 3.0 {
        let mut sum = x;
        let mut term = x;
        let x2 = x * x;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -x2 / k;
            let add = term / (2.0 * k + 1.0);
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    } else {
        let s = x.signum();
        let x = x.abs();
        let mut f = 0.0;
        for k in (1..60).rev() {
            f = (k as f64 / 2.0) / (x + f);
        }
        s * (1.0 - (-x * x).exp() / (PI.sqrt() * (x + f)))
    }
}

/// Cell-pair weights `Q_k = ∫ J(t) (h - |t + k h|)_+ dt`.
#[derive(Clone, Debug)]
pub struct Stencil {
    pub h: f64,
    pub k_max: usize,
    q: Vec<f64>,
    /// `Σ_k Q_k / h`, the discrete total mass.
    pub jhat: f64,
    pub kernel: Kernel,
}

impl Stencil {
    pub fn new(k: &Kernel, h: f64) -> Result<Self> {
        k.check_resolution(h)?;
        let k_max = (k.range / h).ceil() as usize + 1;
        let mut q = Vec::with_capacity(2 * k_max + 1);
        for kk in -(k_max as i64)..=(k_max as i64) {
            let c = -(kk as f64) * h;
            let v = k.integrate_on(c - h, c + h, &[c], |t| (h - (t - c).abs()).max(0.0));
            q.push(v);
        }
        let jhat = q.iter().sum::<f64>() / h;
        Ok(Stencil { h, k_max, q, jhat, kernel: k.clone() })
    }

    #[inline]
    pub fn q(&self, k: i64) -> f64 {
        let i = k + self.k_max as i64;
        if i < 0 || i as usize >= self.q.len() {
            0.0
        } else {
            self.q[i as usize]
        }
    }

    /// Symmetrized weight `(Q_k + Q_{-k})/2`.
    #[inline]
    pub fn qs(&self, k: i64) -> f64 {
        0.5 * (self.q(k) + self.q(-k))
    }

    /// `(J ⊛ v)_i = Σ_k qs_k/h · v_{i+k}`, with asymptotes outside the window.
    pub fn convolve(&self, v: &[f64], a: f64, b: f64) -> Vec<f64> {
        let n = v.len() as i64;
        let km = self.k_max as i64;
        let w: Vec<f64> = (-km..=km).map(|k| self.qs(k) / self.h).collect();
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                for (idx, k) in (-km..=km).enumerate() {
                    let j = i + k;
                    let x = if j < 0 {
                        a
                    } else if j >= n {
                        b
                    } else {
                        v[j as usize]
                    };
                    s += w[idx] * x;
                }
                s
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WVariant {
    OneComponent,
    TwoComponent,
}

/// Tabulated W with cubic Hermite interpolation.
#[derive(Clone, Debug)]
pub struct WPotential {
    pub variant: WVariant,
    pub range: f64,
    hw: f64,
    w: Vec<f64>,
    dw: Vec<f64>,
    /// Constant of the linear tail (two-component only).
    pub w_offset: f64,
    /// Slope of the linear tail, `Ĵ/2` for two components and 0 otherwise.
    pub slope_at_infinity: f64,
}

const W_TABLE: usize = 4096;

/// Per-interval Simpson integrals of `f` on the table `0, hw, ..., R`.
fn simpson_cells<F: Fn(f64) -> f64>(n: usize, hw: f64, f: F) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let a = k as f64 * hw;
            let b = a + hw;
            hw / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        })
        .collect()
}

impl WPotential {
    /// `W(u) = ∫_u^R (s - u)(J(s) + J(-s)) ds`.
    pub fn one_component(k: &Kernel) -> Self {
        Self::one_component_with(k, W_TABLE)
    }

    pub fn one_component_with(k: &Kernel, n: usize) -> Self {
        let r = k.range;
        let hw = r / n as f64;
        let je = |s: f64| k.eval(s) + k.eval(-s);
        // one-sided limits at the table ends
        let je_in = |s: f64| {
            let e = 1e-13 * r;
            je(s.clamp(e, r - e))
        };
        let c0 = simpson_cells(n, hw, je_in);
        let c1 = simpson_cells(n, hw, |s| s * je_in(s));
        let mut a0 = vec![0.0; n + 1];
        let mut a1 = vec![0.0; n + 1];
        for i in (0..n).rev() {
            a0[i] = a0[i + 1] + c0[i];
            a1[i] = a1[i + 1] + c1[i];
        }
        let w = (0..=n).map(|i| a1[i] - i as f64 * hw * a0[i]).collect();
        let dw = a0.iter().map(|v| -v).collect();
        WPotential { variant: WVariant::OneComponent, range: r, hw, w, dw, w_offset: 0.0, slope_at_infinity: 0.0 }
    }

    /// Double antiderivative of `J` from 0, linear beyond the range.
    pub fn two_component(k: &Kernel) -> Result<Self> {
        Self::two_component_with(k, W_TABLE)
    }

    pub fn two_component_with(k: &Kernel, n: usize) -> Result<Self> {
        if !k.even {
            return Err(Error::InvalidKernel("two-component W needs an even kernel".into()));
        }
        let r = k.range;
        let hw = r / n as f64;
        let e = 1e-13 * r;
        let jin = |s: f64| k.eval(s.clamp(e, r - e));
        let c0 = simpson_cells(n, hw, jin);
        let c1 = simpson_cells(n, hw, |s| s * jin(s));
        let mut p0 = vec![0.0; n + 1];
        let mut p1 = vec![0.0; n + 1];
        for i in 0..n {
            p0[i + 1] = p0[i] + c0[i];
            p1[i + 1] = p1[i] + c1[i];
        }
        let w: Vec<f64> = (0..=n).map(|i| i as f64 * hw * p0[i] - p1[i]).collect();
        let slope = p0[n];
        let w_offset = w[n] - slope * r;
        Ok(WPotential { variant: WVariant::TwoComponent, range: r, hw, w, dw: p0, w_offset, slope_at_infinity: slope })
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.eval_with_derivative(u).0
    }

    /// `(W(u), W'(u))`.
    pub fn eval_with_derivative(&self, u: f64) -> (f64, f64) {
        let sgn = if u < 0.0 { -1.0 } else { 1.0 };
        let t = u.abs();
        if t >= self.range {
            return match self.variant {
                WVariant::OneComponent => (0.0, 0.0),
                WVariant::TwoComponent => (self.w_offset + self.slope_at_infinity * t, sgn * self.slope_at_infinity),
            };
        }
        let r = t / self.hw;
        let i = (r.floor() as usize).min(self.w.len() - 2);
        let s = r - i as f64;
        let (y0, y1) = (self.w[i], self.w[i + 1]);
        let (d0, d1) = (self.dw[i] * self.hw, self.dw[i + 1] * self.hw);
        let s2 = s * s;
        let s3 = s2 * s;
        let val = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1;
        let der = ((6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * d0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * d1) / self.hw;
        (val, sgn * der)
    }
}

/// Even function with `W(0) = W'(0) = 0`, `W'' = K` on `[0, R]` and linear
/// beyond, on a piecewise linear table built from trapezoid sums. Its
/// second differences are sums of `K ≥ 0`, so the table is convex on the
/// whole line.
#[derive(Clone, Debug)]
pub struct ConvexTable {
    pub range: f64,
    delta: f64,
    w: Vec<f64>,
    /// `∫_0^R K`, the slope of the linear tail.
    pub half_mass: f64,
}

impl ConvexTable {
    /// Tabulates from samples `k[i] = K(i R / (k.len() - 1))`.
    pub fn from_samples(k: &[f64], range: f64) -> Self {
        let nodes = k.len() - 1;
        let delta = range / nodes as f64;
        let mut d = vec![0.0; nodes + 1];
        let mut w = vec![0.0; nodes + 1];
        for i in 1..=nodes {
            d[i] = d[i - 1] + 0.5 * delta * (k[i - 1] + k[i]);
            w[i] = w[i - 1] + 0.5 * delta * (d[i - 1] + d[i]);
        }
        ConvexTable { range, delta, w, half_mass: d[nodes] }
    }

    /// The two-component W of an even kernel.
    pub fn two_component(k: &Kernel, nodes: usize) -> Result<Self> {
        if !k.even {
            return Err(Error::InvalidKernel("two-component W needs an even kernel".into()));
        }
        let r = k.range;
        let e = 1e-13 * r;
        let samples: Vec<f64> = (0..=nodes).map(|i| k.eval((i as f64 * r / nodes as f64).clamp(e, r - e))).collect();
        Ok(Self::from_samples(&samples, r))
    }

    /// Constant of the linear tail.
    pub fn alpha(&self) -> f64 {
        self.w[self.w.len() - 1] - self.half_mass * self.range
    }

    pub fn eval(&self, u: f64) -> f64 {
        let t = u.abs();
        if t >= self.range {
            return self.alpha() + self.half_mass * t;
        }
        let r = t / self.delta;
        let i = (r as usize).min(self.w.len() - 2);
        let f = r - i as f64;
        self.w[i] + f * (self.w[i + 1] - self.w[i])
    }

    /// `Σ_i Σ_j m1_i m2_j W(x1_i - x2_j)` for atoms `(m, x)` sorted by position.
    pub fn pair_sum(&self, c1: &(Vec<f64>, Vec<f64>), c2: &(Vec<f64>, Vec<f64>)) -> f64 {
        let (ds1, x1) = c1;
        let (ds2, x2) = c2;
        let n2 = x2.len();
        let mut p0 = vec![0.0; n2 + 1];
        let mut p1 = vec![0.0; n2 + 1];
        for j in 0..n2 {
            p0[j + 1] = p0[j] + ds2[j];
            p1[j + 1] = p1[j] + ds2[j] * x2[j];
        }
        let (alpha, slope) = (self.alpha(), self.half_mass);
        let (mut lo, mut hi) = (0usize, 0usize);
        let mut s = 0.0;
        for (&w1, &x) in ds1.iter().zip(x1) {
            while lo < n2 && x2[lo] <= x - self.range {
                lo += 1;
            }
            while hi < n2 && x2[hi] < x + self.range {
                hi += 1;
            }
            let mut near = 0.0;
            for j in lo..hi {
                near += ds2[j] * self.eval(x - x2[j]);
            }
            // beyond the range W is linear: prefix sums cover both sides
            let left = alpha * p0[lo] + slope * (x * p0[lo] - p1[lo]);
            let right = alpha * (p0[n2] - p0[hi]) + slope * ((p1[n2] - p1[hi]) - x * (p0[n2] - p0[hi]));
            s += w1 * (near + left + right);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_masses() {
        let b = Kernel::box_kernel(1.0, 1.0).unwrap();
        assert!((b.total_mass - 1.0).abs() < 1e-14);
        assert_eq!(b.eval(0.3), 0.5);
        assert_eq!(b.eval(1.2), 0.0);
        let t = Kernel::triangle(2.0, 3.0).unwrap();
        assert!((t.total_mass - 3.0).abs() < 1e-13);
        let g = Kernel::truncated_gaussian(3.0, 1.0, 2.0).unwrap();
        assert!((g.total_mass - 2.0).abs() < 1e-10);
    }

    #[test]
    fn erf_values() {
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert!((erf(3.5) - 0.999_999_256_901_627_7).abs() < 1e-15);
    }

    #[test]
    fn box_w_one_component() {
        let k = Kernel::box_kernel(1.0, 1.0).unwrap();
        let w = WPotential::one_component(&k);
        assert!((w.eval(0.0) - 0.5).abs() < 1e-14);
        for i in 0..=50 {
            let u = i as f64 / 50.0;
            assert!((w.eval(u) - 0.5 * (1.0 - u).powi(2)).abs() < 1e-13);
            assert!((w.eval(-u) - w.eval(u)).abs() < 1e-15);
        }
        assert_eq!(w.eval(2.0), 0.0);
    }

    #[test]
    fn one_component_w_is_not_convex_across_zero() {
        let k = Kernel::box_kernel(1.0, 1.0).unwrap();
        let w = WPotential::one_component(&k);
        let d = 1e-3;
        assert!(w.eval(d) - 2.0 * w.eval(0.0) + w.eval(-d) < 0.0);
    }

    #[test]
    fn box_w_two_component() {
        let k = Kernel::box_kernel(1.0, 1.0).unwrap();
        let w = WPotential::two_component(&k).unwrap();
        assert_eq!(w.eval(0.0), 0.0);
        assert!((w.w_offset + 0.25).abs() < 1e-14);
        assert!((w.slope_at_infinity - 0.5).abs() < 1e-14);
        for i in 0..=40 {
            let x = i as f64 / 40.0;
            assert!((w.eval(x) - x * x / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn second_derivative_matches_kernel() {
        let k = Kernel::truncated_gaussian(2.0, 0.7, 1.0).unwrap();
        let w1 = WPotential::one_component(&k);
        let w2 = WPotential::two_component(&k).unwrap();
        let d = 1e-3;
        for i in 1..19 {
            let u = 0.1 * i as f64;
            let fd1 = (w1.eval(u + d) - 2.0 * w1.eval(u) + w1.eval(u - d)) / (d * d);
            let fd2 = (w2.eval(u + d) - 2.0 * w2.eval(u) + w2.eval(u - d)) / (d * d);
            let je = k.eval(u) + k.eval(-u);
            assert!((fd1 - je).abs() < 1e-6 * je, "u={u} {fd1} {je}");
            assert!((fd2 - k.eval(u)).abs() < 1e-6 * k.eval(u));
        }
    }

    #[test]
    fn tail_identity() {
        for k in [Kernel::triangle(1.5, 2.0).unwrap(), Kernel::truncated_gaussian(2.0, 0.6, 1.0).unwrap()] {
            let w = WPotential::two_component(&k).unwrap();
            assert!((w.slope_at_infinity - 0.5 * k.total_mass).abs() < 1e-12);
            for i in 0..=30 {
                let x = k.range * (1.0 + 3.0 * i as f64 / 30.0);
                let lin = w.w_offset + 0.5 * k.total_mass * x;
                assert!((w.eval(x) - lin).abs() < 1e-10);
                assert!((w.eval(-x) - lin).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn stencil_sums_to_mass() {
        for k in [Kernel::box_kernel(1.0, 1.0).unwrap(), Kernel::triangle(1.3, 0.7).unwrap()] {
            for h in [0.1, 0.0371, 0.01] {
                let st = Stencil::new(&k, h).unwrap();
                assert!((st.jhat - k.total_mass).abs() < 1e-13);
                assert!((-(st.k_max as i64)..=st.k_max as i64).all(|j| st.q(j) >= 0.0));
            }
        }
    }

    #[test]
    fn reduction_of_half_indicator_is_semicircle() {
        let u = RadialKernel { shape: RadialShape::Indicator, range: 1.0, scale: 0.5 };
        let k = Kernel::reduce_dimension(&u, 2).unwrap();
        for i in 0..20 {
            let s = i as f64 / 20.0;
            assert!((k.eval(s) - (1.0 - s * s).sqrt()).abs() < 1e-13);
        }
        assert!((k.total_mass - PI / 2.0).abs() < 1e-9);
        assert!((u.mass(2) - PI / 2.0).abs() < 1e-14);
        assert_eq!(k.eval(1.5), 0.0);
    }

    #[test]
    fn reduction_conserves_mass_in_three_dimensions() {
        let u = RadialKernel { shape: RadialShape::Quartic, range: 1.2, scale: 1.0 };
        let k = Kernel::reduce_dimension(&u, 3).unwrap();
        assert!((k.total_mass - u.mass(3)).abs() < 1e-10 * u.mass(3));
    }

    #[test]
    fn coarse_table_rejected() {
        let s: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let j: Vec<f64> = s.iter().map(|x| 1.0 - x).collect();
        let k = Kernel::tabulated(s, j).unwrap();
        assert!(k.even && k.decreasing);
        assert!((k.total_mass - 1.0).abs() < 1e-13);
        assert!(Stencil::new(&k, 0.1).is_err());
        assert!(Stencil::new(&k, 0.2).is_ok());
    }
}
