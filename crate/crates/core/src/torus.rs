//! Periodic grids on the torus `[0, 2π)` and probability densities on them.
//!
//! Integrals use the periodic rectangle rule, which coincides with the
//! trapezoid rule on a periodic grid and is exact for trigonometric
//! polynomials of degree below `n`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Uniform periodic grid `x_j = 2πj/n`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    /// `n` must be even and at least 16 so that `x = π` is a grid point.
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n = {n} must be even and >= 16")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Cell width `2π/n`.
    pub fn h(&self) -> f64 {
        TWO_PI / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        TWO_PI * j as f64 / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Index of the grid point `x = π`.
    pub fn pi_index(&self) -> usize {
        self.n / 2
    }

    /// Signed representative of `x_j` in `[-π, π)`.
    pub fn centered(&self, j: usize) -> f64 {
        let x = self.x(j);
        if x >= PI {
            x - TWO_PI
        } else {
            x
        }
    }

    /// Index of `-x_j`.
    pub fn mirror(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// `∫ f dx` by the periodic rectangle rule.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        self.h() * values.iter().sum::<f64>()
    }

    /// Central first difference with wrap-around.
    pub fn d1(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        let inv = 1.0 / (2.0 * self.h());
        (0..n)
            .map(|j| (values[(j + 1) % n] - values[(j + n - 1) % n]) * inv)
            .collect()
    }

    /// Central second difference with wrap-around.
    pub fn d2(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        let inv = 1.0 / (self.h() * self.h());
        (0..n)
            .map(|j| (values[(j + 1) % n] - 2.0 * values[j] + values[(j + n - 1) % n]) * inv)
            .collect()
    }

    /// Periodic linear interpolation of grid samples at an arbitrary `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let s = wrap(x) / self.h();
        let k = s.floor();
        let frac = s - k;
        let j = (k as usize) % self.n;
        let jp = (j + 1) % self.n;
        values[j] * (1.0 - frac) + values[jp] * frac
    }
}

/// Maps any real to `[0, 2π)`.
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(TWO_PI);
    if y >= TWO_PI {
        0.0
    } else {
        y
    }
}

/// A real function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid function has non-finite samples".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n()] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn at(&self, j: usize) -> f64 {
        self.values[j]
    }
}

pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// The interaction and noise constants of the game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    beta: f64,
    sigma: f64,
    kappa: f64,
}

impl Params {
    pub fn new(beta: f64, sigma: f64, kappa: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParams(format!("beta = {beta} must be positive")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma = {sigma} must be positive")));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParams(format!("kappa = {kappa} must be non-negative")));
        }
        Ok(Self { beta, sigma, kappa })
    }

    /// `β = 1/2`, `σ = 1`, the setting of the reference experiments (`κ_c = 1`).
    pub fn reference(kappa: f64) -> Self {
        Self { beta: 0.5, sigma: 1.0, kappa }
    }

    pub fn with_kappa(self, kappa: f64) -> Result<Self> {
        Self::new(self.beta, self.sigma, kappa)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Critical interaction `βσ² + σ⁴/2`.
    pub fn kappa_c(&self) -> f64 {
        let s2 = self.sigma2();
        self.beta * s2 + 0.5 * s2 * s2
    }

    /// `κ_c / σ² = β + σ²/2`.
    pub fn rho(&self) -> f64 {
        self.beta + 0.5 * self.sigma2()
    }
}

/// First trigonometric moments and the order parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigMoments {
    pub a: f64,
    pub b: f64,
    pub g: f64,
}

/// A probability density on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    grid: Grid,
    density: Vec<f64>,
}

const MASS_TOL: f64 = 1e-12;

impl Measure {
    /// Validates non-negativity and unit mass.
    pub fn new(grid: Grid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.n() {
            return Err(Error::InvalidMeasure(format!(
                "expected {} samples, got {}",
                grid.n(),
                density.len()
            )));
        }
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidMeasure("density must be finite and non-negative".into()));
        }
        let mass = grid.integrate(&density);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("mass {mass} differs from 1")));
        }
        Ok(Self { grid, density })
    }

    /// Normalises a non-negative, not identically zero, weight vector.
    pub fn from_weights(grid: Grid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.n() {
            return Err(Error::InvalidMeasure(format!(
                "expected {} samples, got {}",
                grid.n(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("weights must be finite and non-negative".into()));
        }
        let mass = grid.integrate(&weights);
        if mass <= 0.0 {
            return Err(Error::InvalidMeasure("weights have zero mass".into()));
        }
        let density = weights.into_iter().map(|w| w / mass).collect();
        Ok(Self { grid, density })
    }

    /// Density proportional to `f(x)` at the grid points.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_weights(grid, grid.points().into_iter().map(f).collect())
    }

    /// Density `exp(-potential_j)` normalised, computed with a shift so that
    /// large potentials do not overflow. Returns the measure and `log Z`.
    pub fn gibbs(grid: Grid, potential: &[f64]) -> (Self, f64) {
        let min = potential.iter().cloned().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = potential.iter().map(|p| (-(p - min)).exp()).collect();
        let shifted_mass = grid.integrate(&weights);
        let log_z = shifted_mass.ln() - min;
        let density = weights.into_iter().map(|w| w / shifted_mass).collect();
        (Self { grid, density }, log_z)
    }

    pub fn uniform(grid: Grid) -> Self {
        Self { grid, density: vec![1.0 / TWO_PI; grid.n()] }
    }

    /// Wrapped Gaussian with the given centre and standard deviation.
    pub fn wrapped_gaussian(grid: Grid, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidMeasure("width must be positive".into()));
        }
        Self::from_fn(grid, |x| {
            (-6..=6)
                .map(|k| {
                    let d = x - center + TWO_PI * k as f64;
                    (-0.5 * d * d / (width * width)).exp()
                })
                .sum()
        })
    }

    /// Cell-average projection of the normalised indicator of a union of arcs.
    /// Each arc is `[start, start + length]` in radians.
    pub fn indicator(grid: Grid, arcs: &[(f64, f64)]) -> Result<Self> {
        let h = grid.h();
        let weights = (0..grid.n())
            .map(|j| {
                let lo = grid.x(j) - 0.5 * h;
                let hi = grid.x(j) + 0.5 * h;
                arcs.iter()
                    .map(|&(start, len)| {
                        (-1..=1)
                            .map(|k| {
                                let s = start + TWO_PI * k as f64;
                                (hi.min(s + len) - lo.max(s)).max(0.0)
                            })
                            .sum::<f64>()
                    })
                    .sum::<f64>()
                    / h
            })
            .collect();
        Self::from_weights(grid, weights)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn into_density(self) -> Vec<f64> {
        self.density
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.density)
    }

    /// `μ(f)` for a test function evaluated at the grid points.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.grid.h();
        self.density
            .iter()
            .enumerate()
            .map(|(j, d)| d * f(self.grid.x(j)))
            .sum::<f64>()
            * h
    }

    /// `μ([lo, hi])` for `-π ≤ lo < hi ≤ π`, in the centred coordinate.
    /// Grid points exactly at the endpoints count with weight one half.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let h = self.grid.h();
        let tol = 1e-12;
        (0..self.grid.n())
            .map(|j| {
                let x = self.grid.centered(j);
                let w = if x > lo + tol && x < hi - tol {
                    1.0
                } else if (x - lo).abs() <= tol || (x - hi).abs() <= tol {
                    0.5
                } else {
                    0.0
                };
                w * self.density[j]
            })
            .sum::<f64>()
            * h
    }

    pub fn sup_distance(&self, other: &Measure) -> f64 {
        sup_diff(&self.density, &other.density)
    }

    /// CSV with header `x,density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,density\n");
        for (j, d) in self.density.iter().enumerate() {
            let _ = writeln!(out, "{},{}", fmt_sig(self.grid.x(j)), fmt_sig(*d));
        }
        out
    }

    /// Reads a density from CSV with at least the columns `x,density`;
    /// the sample count must match the grid and the weights are renormalised.
    pub fn from_csv(grid: Grid, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::InvalidInput("empty csv".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let idx = cols
            .iter()
            .position(|c| *c == "density")
            .ok_or_else(|| Error::InvalidInput("csv has no `density` column".into()))?;
        let weights = lines
            .map(|l| {
                l.split(',')
                    .nth(idx)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("bad csv row `{l}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::from_weights(grid, weights)
    }
}

/// Formats with 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{:.11e}", x)
}

/// `(μ(cos), μ(sin), √(a² + b²))`.
pub fn trig_moments(mu: &Measure) -> TrigMoments {
    let a = mu.expect(f64::cos);
    let b = mu.expect(f64::sin);
    TrigMoments { a, b, g: a.hypot(b) }
}

/// Push-forward of `μ` under `x ↦ x + z`: the new density is `f(x - z)`.
///
/// On-grid shifts are exact cyclic rotations; off-grid shifts use periodic
/// linear interpolation followed by renormalisation.
pub fn translate(mu: &Measure, z: f64) -> Measure {
    let grid = mu.grid;
    let n = grid.n();
    let s = wrap(z) / grid.h();
    let k = s.round();
    if (s - k).abs() < 1e-9 {
        let shift = (k as usize) % n;
        let density = (0..n).map(|j| mu.density[(j + n - shift) % n]).collect();
        return Measure { grid, density };
    }
    let weights = (0..n)
        .map(|j| grid.interpolate(&mu.density, grid.x(j) - z))
        .collect();
    Measure::from_weights(grid, weights).expect("interpolated density keeps positive mass")
}

/// Rotates `μ` so that `b = 0` and `a = g(μ)`.
///
/// Returns the aligned measure and `z* = atan2(b, a)`, the angle of the
/// mean phase; the aligned measure is `translate(μ, -z*)`.
pub fn align(mu: &Measure) -> Result<(Measure, f64)> {
    let m = trig_moments(mu);
    if m.g < 1e-12 {
        return Err(Error::DegenerateAlignment { g: m.g });
    }
    let z_star = m.b.atan2(m.a);
    Ok((translate(mu, -z_star), z_star))
}

/// `d(μ) = max{|μ(cos)|, |μ(sin)|, |μ(sin·cos)|, |μ(cos²) - 1/2|}`.
pub fn dist_to_uniform(mu: &Measure) -> f64 {
    let [c, s, sc, c2] = distance_moments(mu);
    c.abs().max(s.abs()).max(sc.abs()).max((c2 - 0.5).abs())
}

/// The four moments entering `d(μ)`: `[cos, sin, sin·cos, cos²]`.
pub fn distance_moments(mu: &Measure) -> [f64; 4] {
    let h = mu.grid.h();
    let mut acc = [0.0; 4];
    for (j, d) in mu.density.iter().enumerate() {
        let (s, c) = mu.grid.x(j).sin_cos();
        acc[0] += d * c;
        acc[1] += d * s;
        acc[2] += d * s * c;
        acc[3] += d * c * c;
    }
    acc.map(|v| v * h)
}

/// Kuramoto interaction cost `c(x, μ) = 1 - a(μ) cos x - b(μ) sin x`.
pub fn running_cost(x: f64, mu: &Measure) -> f64 {
    let m = trig_moments(mu);
    1.0 - m.a * x.cos() - m.b * x.sin()
}
