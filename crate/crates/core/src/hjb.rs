//! Stationary discounted HJB equation
//!
//! ```text
//! β v - (σ²/2) v_xx + ½ (v_x)² = -γ cos x
//! ```
//!
//! solved by damped Newton iteration on the discrete residual.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fd::Stencil;
use crate::linalg::CyclicBanded;
use crate::torus::{fmt_sig, sup_norm, Grid, GridFn, Params};

/// Solver settings for [`solve_stationary_hjb_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct HjbOptions {
    /// Residual tolerance relative to `max(1, γ)`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub stencil: Stencil,
    /// Above this amplitude the solve walks a geometric ladder from here.
    pub continuation_start: f64,
    /// Rungs per decade of the continuation ladder.
    pub rungs_per_decade: usize,
}

impl Default for HjbOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            max_halvings: 30,
            stencil: Stencil::default(),
            continuation_start: 10.0,
            rungs_per_decade: 10,
        }
    }
}

/// Solution of the stationary HJB equation for `ℓ = -γ cos x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFn {
    grid: Grid,
    gamma: f64,
    v: GridFn,
    v_x: GridFn,
    residual_norm: f64,
    iterations: usize,
}

impl ValueFn {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn v(&self) -> &GridFn {
        &self.v
    }

    pub fn v_x(&self) -> &GridFn {
        &self.v_x
    }

    /// Sup norm of the discrete residual at the returned iterate.
    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// Newton steps taken on the final rung.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,v,v_x\n");
        for j in 0..self.grid.n() {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_sig(self.grid.x(j)),
                fmt_sig(self.v.at(j)),
                fmt_sig(self.v_x.at(j))
            );
        }
        out
    }
}

/// Linear-quadratic comparison bound `v(x) ≤ -γ/β + √γ (x²/2 + σ²/(2β))`
/// for `x ∈ [-π, π]`.
pub fn value_upper_bound(gamma: f64, params: &Params, x: f64) -> f64 {
    let beta = params.beta();
    -gamma / beta + gamma.sqrt() * (0.5 * x * x + params.sigma2() / (2.0 * beta))
}

/// Discrete residual `βv - (σ²/2)D₂v + ½(D₁v)² + γ cos x` on the grid.
pub fn hjb_residual(v: &[f64], gamma: f64, params: &Params, grid: Grid, stencil: Stencil) -> Vec<f64> {
    let d1 = stencil.d1(grid, v);
    let d2 = stencil.d2(grid, v);
    let half_s2 = 0.5 * params.sigma2();
    (0..grid.n())
        .map(|j| {
            params.beta() * v[j] - half_s2 * d2[j] + 0.5 * d1[j] * d1[j] + gamma * grid.x(j).cos()
        })
        .collect()
}

pub fn solve_stationary_hjb(gamma: f64, params: &Params, grid: Grid) -> Result<ValueFn> {
    solve_stationary_hjb_with(gamma, params, grid, &HjbOptions::default())
}

pub fn solve_stationary_hjb_with(
    gamma: f64,
    params: &Params,
    grid: Grid,
    opts: &HjbOptions,
) -> Result<ValueFn> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidInput(format!("gamma = {gamma} must be finite and >= 0")));
    }
    if gamma <= opts.continuation_start {
        return newton(gamma, params, grid, opts, linear_guess(gamma, params, grid));
    }
    let mut prev = newton(
        opts.continuation_start,
        params,
        grid,
        opts,
        linear_guess(opts.continuation_start, params, grid),
    )?;
    for g in ladder(opts.continuation_start, gamma, opts.rungs_per_decade) {
        prev = newton(g, params, grid, opts, rescaled_guess(&prev, g, params))?;
    }
    Ok(prev)
}

/// Solves along an increasing list of amplitudes, warm-starting each solve
/// from the previous one through the `w`-scaling.
pub fn solve_ladder(gammas: &[f64], params: &Params, grid: Grid, opts: &HjbOptions) -> Result<Vec<ValueFn>> {
    let mut out: Vec<ValueFn> = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let vf = match out.last() {
            Some(prev) if g > prev.gamma && prev.gamma > 0.0 => {
                let mut cur = prev.clone();
                for rung in ladder(prev.gamma, g, opts.rungs_per_decade) {
                    cur = newton(rung, params, grid, opts, rescaled_guess(&cur, rung, params))?;
                }
                cur
            }
            _ => solve_stationary_hjb_with(g, params, grid, opts)?,
        };
        out.push(vf);
    }
    Ok(out)
}

/// Geometric rungs in `(from, to]`, ending exactly at `to`.
fn ladder(from: f64, to: f64, per_decade: usize) -> Vec<f64> {
    let steps = ((to / from).log10() * per_decade.max(1) as f64).ceil().max(1.0) as usize;
    let ratio = (to / from).powf(1.0 / steps as f64);
    (1..=steps)
        .map(|k| if k == steps { to } else { from * ratio.powi(k as i32) })
        .collect()
}

/// First-order expansion `-2γ cos x / (2β + σ²)`.
fn linear_guess(gamma: f64, params: &Params, grid: Grid) -> Vec<f64> {
    let c = -2.0 * gamma / (2.0 * params.beta() + params.sigma2());
    grid.points().iter().map(|x| c * x.cos()).collect()
}

/// Transfers `w = (v + γ/β)/√γ` from the previous rung to amplitude `gamma`.
fn rescaled_guess(prev: &ValueFn, gamma: f64, params: &Params) -> Vec<f64> {
    let beta = params.beta();
    let g0 = prev.gamma;
    let scale = (gamma / g0).sqrt();
    prev.v
        .values()
        .iter()
        .map(|v| scale * (v + g0 / beta) - gamma / beta)
        .collect()
}

fn newton(gamma: f64, params: &Params, grid: Grid, opts: &HjbOptions, mut v: Vec<f64>) -> Result<ValueFn> {
    let stencil = opts.stencil;
    let tol = opts.tol * gamma.max(1.0);
    let half_s2 = 0.5 * params.sigma2();
    let mut r = hjb_residual(&v, gamma, params, grid, stencil);
    let mut rn = sup_norm(&r);
    let mut it = 0;
    while rn > tol {
        if it == opts.max_iter {
            return Err(Error::NonConvergence { iterations: it, residual: rn });
        }
        it += 1;
        let vx = stencil.d1(grid, &v);
        let mut jac = CyclicBanded::zeros(grid.n(), stencil.half_width());
        for j in 0..grid.n() {
            jac.add(j, 0, params.beta());
        }
        stencil.add_d2(grid, -half_s2, &mut jac);
        stencil.add_d1(grid, &vx, 1.0, &mut jac);
        let dv = jac.solve(&r);

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = v.iter().zip(&dv).map(|(a, d)| a - step * d).collect();
            let tr = hjb_residual(&trial, gamma, params, grid, stencil);
            let tn = sup_norm(&tr);
            if tn < rn {
                v = trial;
                r = tr;
                rn = tn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence { iterations: it, residual: rn });
        }
    }
    let v_x = stencil.d1(grid, &v);
    Ok(ValueFn {
        grid,
        gamma,
        v: GridFn::new(grid, v)?,
        v_x: GridFn::new(grid, v_x)?,
        residual_norm: rn,
        iterations: it,
    })
}

/// Optimal feedback `α*(x) = -v_x(x)`.
pub fn drift_field(vf: &ValueFn) -> GridFn {
    let values = vf.v_x.values().iter().map(|d| -d).collect();
    GridFn::new(vf.grid, values).expect("negated finite values stay finite")
}
