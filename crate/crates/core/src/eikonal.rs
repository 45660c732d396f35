//! Strong-interaction scaling `w^γ = (v^γ + γ/β)/√γ` and its limit, the
//! viscosity solution `w(x) = 4(1 - |cos(x/2)|)` of `½(w')² = 1 - cos x`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::Result;
use crate::hjb::{solve_ladder, solve_stationary_hjb_with, HjbOptions, ValueFn};
use crate::torus::{fmt_sig, sup_diff, sup_norm, Grid, GridFn, Params};

/// Rescaled stationary value function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledProfile {
    pub gamma: f64,
    pub w: GridFn,
    /// `w - w(0)`
    pub w_centered: GridFn,
    pub w_x: GridFn,
    /// `sup |w_centered - w_explicit|`
    pub sup_gap: f64,
}

impl ScaledProfile {
    pub fn from_value(vf: &ValueFn, params: &Params) -> Self {
        let gamma = vf.gamma();
        let grid = vf.grid();
        let root = gamma.sqrt();
        let shift = gamma / params.beta();
        let w: Vec<f64> = vf.v().values().iter().map(|v| (v + shift) / root).collect();
        let w0 = w[0];
        let centered: Vec<f64> = w.iter().map(|x| x - w0).collect();
        let w_x: Vec<f64> = vf.v_x().values().iter().map(|d| d / root).collect();
        let sup_gap = sup_diff(&centered, explicit_eikonal(grid).values());
        Self {
            gamma,
            w: GridFn::new(grid, w).expect("finite"),
            w_centered: GridFn::new(grid, centered).expect("finite"),
            w_x: GridFn::new(grid, w_x).expect("finite"),
            sup_gap,
        }
    }

    /// `sup |w_x|` on the grid.
    pub fn sup_wx(&self) -> f64 {
        self.w_x.sup_norm()
    }

    /// Inverse of the rescaling, `v = √γ w - γ/β`.
    pub fn value(&self, params: &Params) -> Vec<f64> {
        let root = self.gamma.sqrt();
        let shift = self.gamma / params.beta();
        self.w.values().iter().map(|w| root * w - shift).collect()
    }

    /// CSV `x,w_centered,w_explicit`.
    pub fn to_csv(&self) -> String {
        let grid = self.w.grid();
        let mut out = String::from("x,w_centered,w_explicit\n");
        for j in 0..grid.n() {
            let x = grid.x(j);
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_sig(x),
                fmt_sig(self.w_centered.at(j)),
                fmt_sig(eikonal_profile(x))
            );
        }
        out
    }
}

/// Residual of the rescaled equation
/// `β_γ w - (σ_γ²/2) w_xx + ½(w_x)² - (1 - cos x)` with `β_γ = βγ^{-1/2}`,
/// `σ_γ = σγ^{-1/4}`, using the same stencil as the solver.
pub fn scaled_residual(profile: &ScaledProfile, params: &Params, opts: &HjbOptions) -> f64 {
    let grid = profile.w.grid();
    let w = profile.w.values();
    let beta_g = params.beta() / profile.gamma.sqrt();
    let sigma2_g = params.sigma2() / profile.gamma.sqrt();
    let d1 = opts.stencil.d1(grid, w);
    let d2 = opts.stencil.d2(grid, w);
    let r: Vec<f64> = (0..grid.n())
        .map(|j| beta_g * w[j] - 0.5 * sigma2_g * d2[j] + 0.5 * d1[j] * d1[j] - (1.0 - grid.x(j).cos()))
        .collect();
    sup_norm(&r)
}

pub fn scaled_w(gamma: f64, params: &Params, grid: Grid) -> Result<ScaledProfile> {
    scaled_w_with(gamma, params, grid, &HjbOptions::default())
}

pub fn scaled_w_with(gamma: f64, params: &Params, grid: Grid, opts: &HjbOptions) -> Result<ScaledProfile> {
    let vf = solve_stationary_hjb_with(gamma, params, grid, opts)?;
    Ok(ScaledProfile::from_value(&vf, params))
}

/// `4(1 - |cos(x/2)|)`; smooth except for the concave corner at `x = π`.
pub fn eikonal_profile(x: f64) -> f64 {
    4.0 * (1.0 - (0.5 * crate::torus::wrap(x)).cos().abs())
}

/// Classical derivative of [`eikonal_profile`] away from `x = π`.
pub fn eikonal_slope(x: f64) -> f64 {
    let y = crate::torus::wrap(x);
    let s = 2.0 * (0.5 * y).sin();
    if y <= PI {
        s
    } else {
        -s
    }
}

pub fn explicit_eikonal(grid: Grid) -> GridFn {
    GridFn::from_fn(grid, eikonal_profile)
}

/// `sup |½(w')² - (1 - cos x)|` over grid points more than `cells` cells
/// away from the corner at `π`.
pub fn explicit_residual(grid: Grid, cells: usize) -> f64 {
    let away = cells as f64 * grid.h() + 1e-12;
    grid.points()
        .into_iter()
        .filter(|x| (x - PI).abs() > away)
        .map(|x| (0.5 * eikonal_slope(x).powi(2) - (1.0 - x.cos())).abs())
        .fold(0.0, f64::max)
}

/// One row of an Eikonal convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEntry {
    pub gamma: f64,
    pub sup_gap: f64,
    pub sup_wx: f64,
}

pub fn eikonal_gap(gammas: &[f64], params: &Params, grid: Grid) -> Result<Vec<GapEntry>> {
    eikonal_gap_with(gammas, params, grid, &HjbOptions::default())
}

/// Solves along the increasing list `gammas` with one continuation ladder.
pub fn eikonal_gap_with(gammas: &[f64], params: &Params, grid: Grid, opts: &HjbOptions) -> Result<Vec<GapEntry>> {
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(solve_ladder(&sorted, params, grid, opts)?
        .iter()
        .map(|vf| {
            let p = ScaledProfile::from_value(vf, params);
            GapEntry {
                gamma: p.gamma,
                sup_gap: p.sup_gap,
                sup_wx: p.sup_wx(),
            }
        })
        .collect())
}

/// Least-squares slope of `-log sup_gap` against `log γ`.
pub fn gap_decay_order(entries: &[GapEntry]) -> f64 {
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.sup_gap > 0.0)
        .map(|e| (e.gamma.ln(), -e.sup_gap.ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn gap_csv(entries: &[GapEntry]) -> String {
    let mut out = String::from("gamma,sup_gap,sup_wx\n");
    for e in entries {
        let _ = writeln!(out, "{},{},{}", fmt_sig(e.gamma), fmt_sig(e.sup_gap), fmt_sig(e.sup_wx));
    }
    out
}

/// `½(3 + 2π + π² + σ²/β)`.
pub fn lipschitz_bound(params: &Params) -> f64 {
    0.5 * (3.0 + 2.0 * PI + PI * PI + params.sigma2() / params.beta())
}

/// `sup |w^γ_x|` on the grid.
pub fn lipschitz_check(gamma: f64, params: &Params, grid: Grid) -> Result<f64> {
    Ok(scaled_w(gamma, params, grid)?.sup_wx())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_values() {
        assert_eq!(eikonal_profile(0.0), 0.0);
        assert!(eikonal_profile(2.0 * PI - 1e-15).abs() < 1e-12);
        assert!((eikonal_profile(PI) - 4.0).abs() < 1e-15);
        assert!((eikonal_profile(PI / 2.0) - (4.0 - 2.0 * 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn explicit_solves_eikonal_away_from_corner() {
        assert!(explicit_residual(Grid::new(256).unwrap(), 1) <= 1e-10);
    }

    #[test]
    fn round_trip_and_scaled_residual() {
        let p = Params::reference(1.0);
        let g = Grid::new(128).unwrap();
        let vf = solve_stationary_hjb_with(20.0, &p, g, &HjbOptions::default()).unwrap();
        let prof = ScaledProfile::from_value(&vf, &p);
        assert!(sup_diff(&prof.value(&p), vf.v().values()) <= 1e-12);
        assert_eq!(prof.w_centered.at(0), 0.0);
        assert!(scaled_residual(&prof, &p, &HjbOptions::default()) <= 1e-8);
    }

    #[test]
    fn bound_constant() {
        assert!((lipschitz_bound(&Params::reference(0.0)) - 10.5764).abs() < 1e-4);
    }

    #[test]
    fn decay_order_of_power_law() {
        let e: Vec<GapEntry> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&g: &f64| GapEntry { gamma: g, sup_gap: g.powf(-0.5), sup_wx: 0.0 })
            .collect();
        assert!((gap_decay_order(&e) - 0.5).abs() < 1e-12);
    }
}
