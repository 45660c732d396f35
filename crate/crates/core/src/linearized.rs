//! Linearisation of the moment map around zero forcing.
//!
//! For `ξ = (γ, η)` decaying like `e^{-λt}`,
//!
//! ```text
//! 𝒯_t(ξ; μ₀) = e^{-σ²t/2} (μ₀(cos), μ₀(sin)) + Ξ_t(ξ) + R_t(ξ, μ₀)
//! Ξ_t(ξ)     = ½ ∫_0^t e^{-σ²(t-u)/2} (M_u, N_u) du
//! M_t        = ∫_t^T e^{-ρ(s-t)} γ(s) ds,   N_t likewise with η
//! ```
//!
//! `M` is integrated exactly against the piecewise-linear interpolant of the
//! forcing, which is extended by zero past the horizon. `Ξ` uses the cubic
//! Hermite interpolant of `M`, whose slopes `ρM - γ` are known exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::evolution::{apply_t_with, EvolutionOptions, Forcing};
use crate::torus::{dist_to_uniform, fmt_sig, trig_moments, Measure, Params};

/// A forcing together with the exponential weight of its norm.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedForcing {
    pub forcing: Forcing,
    pub lambda: f64,
    pub norm_lambda: f64,
}

impl WeightedForcing {
    pub fn new(forcing: Forcing, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda = {lambda} must be positive")));
        }
        let norm_lambda = forcing.lambda_norm(lambda);
        Ok(Self { forcing, lambda, norm_lambda })
    }

    /// `(c₁ e^{-λt}, c₂ e^{-λt})` on `steps` steps of size `dt`.
    pub fn exponential(lambda: f64, amplitude: (f64, f64), steps: usize, dt: f64) -> Result<Self> {
        let f = Forcing::from_fn(steps, dt, |t| {
            let e = (-lambda * t).exp();
            (amplitude.0 * e, amplitude.1 * e)
        });
        Self::new(f, lambda)
    }
}

/// `∫_0^h e^{-ρu} du` and `∫_0^h u e^{-ρu} du`.
fn exp_moments(rho: f64, h: f64) -> (f64, f64) {
    let x = rho * h;
    if x.abs() < 1e-8 {
        return (h * (1.0 - 0.5 * x), h * h * (0.5 - x / 3.0));
    }
    let e = (-x).exp();
    ((1.0 - e) / rho, (1.0 - e * (1.0 + x)) / (rho * rho))
}

fn discounted_tail(values: &[f64], dt: f64, rho: f64) -> Vec<f64> {
    let n = values.len();
    let (i0, i1) = exp_moments(rho, dt);
    let decay = (-rho * dt).exp();
    let mut out = vec![0.0; n];
    for m in (0..n - 1).rev() {
        let slope = (values[m + 1] - values[m]) / dt;
        out[m] = decay * out[m + 1] + values[m] * i0 + slope * i1;
    }
    out
}

/// `½ ∫_0^t e^{-c(t-u)} y(u) du` with `y` the cubic Hermite interpolant of
/// the samples and slopes, three Gauss points per step.
fn smoothed(values: &[f64], slopes: &[f64], dt: f64, c: f64) -> Vec<f64> {
    const NODES: [(f64, f64); 3] = [
        (0.112_701_665_379_258_3, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.887_298_334_620_741_7, 5.0 / 18.0),
    ];
    let n = values.len();
    let decay = (-c * dt).exp();
    let mut out = vec![0.0; n];
    for m in 0..n - 1 {
        let (y0, y1) = (values[m], values[m + 1]);
        let (d0, d1) = (slopes[m] * dt, slopes[m + 1] * dt);
        let mut acc = 0.0;
        for (s, w) in NODES {
            let s2 = s * s;
            let s3 = s2 * s;
            let y = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                + (s3 - 2.0 * s2 + s) * d0
                + (-2.0 * s3 + 3.0 * s2) * y1
                + (s3 - s2) * d1;
            acc += w * (-c * dt * (1.0 - s)).exp() * y;
        }
        out[m + 1] = decay * out[m] + 0.5 * dt * acc;
    }
    out
}

/// `(M_t, N_t)` on the forcing's time grid.
pub fn mn_operators(wf: &WeightedForcing, params: &Params) -> Forcing {
    let f = &wf.forcing;
    let rho = params.rho();
    Forcing::new(
        f.dt(),
        discounted_tail(f.gamma(), f.dt(), rho),
        discounted_tail(f.eta(), f.dt(), rho),
    )
    .expect("finite by construction")
}

/// Bound on the part of `M_t, N_t` carried by the forcing beyond the horizon
/// if it were not cut off: `e^{-λT} e^{-ρ(T-t)} ‖ξ‖_λ / (ρ + λ)`.
pub fn mn_tail_bound(wf: &WeightedForcing, params: &Params) -> Vec<f64> {
    let rho = params.rho();
    let t_end = wf.forcing.horizon();
    wf.forcing
        .times()
        .iter()
        .map(|t| (-wf.lambda * t_end - rho * (t_end - t)).exp() * wf.norm_lambda / (rho + wf.lambda))
        .collect()
}

/// `1/(κ_c - 2λρ)`, the operator-norm bound of `Ξ` on the `λ`-weighted space.
pub fn xi_bound_constant(params: &Params, lambda: f64) -> Result<f64> {
    let gap = params.kappa_c() - 2.0 * lambda * params.rho();
    if gap <= 0.0 {
        return Err(Error::LambdaTooLarge {
            lambda,
            reason: format!("kappa_c - 2 lambda rho = {gap} is not positive"),
        });
    }
    Ok(1.0 / gap)
}

pub fn xi_operator(wf: &WeightedForcing, params: &Params) -> Result<Forcing> {
    xi_bound_constant(params, wf.lambda)?;
    Ok(xi_of_mn(&mn_operators(wf, params), &wf.forcing, params))
}

fn xi_of_mn(mn: &Forcing, forcing: &Forcing, params: &Params) -> Forcing {
    let c = 0.5 * params.sigma2();
    let rho = params.rho();
    // M' = ρM - γ, N' = ρN - η
    let slope = |y: &[f64], f: &[f64]| -> Vec<f64> { y.iter().zip(f).map(|(y, f)| rho * y - f).collect() };
    let dt = mn.dt();
    Forcing::new(
        dt,
        smoothed(mn.gamma(), &slope(mn.gamma(), forcing.gamma()), dt, c),
        smoothed(mn.eta(), &slope(mn.eta(), forcing.eta()), dt, c),
    )
    .expect("finite by construction")
}

/// `c₂(β, σ) = 4c/σ²` with `c = (12β + 4σ²)/((2β + σ²)β²σ²)`.
pub fn c2_constant(params: &Params) -> f64 {
    let (b, s2) = (params.beta(), params.sigma2());
    let c = (12.0 * b + 4.0 * s2) / ((2.0 * b + s2) * b * b * s2);
    4.0 * c / s2
}

/// Remainder of the linearisation evaluated with the full nonlinear map.
#[derive(Debug, Clone, PartialEq)]
pub struct RemainderProbe {
    pub mn: Forcing,
    pub xi: Forcing,
    pub remainder: Forcing,
    /// `sup_t e^{2λt} |R_t|`
    pub r_norm: f64,
    /// `8d(μ₀)/κ_c ‖ξ‖_λ + c₂ ‖ξ‖²_λ`
    pub bound: f64,
}

impl RemainderProbe {
    /// CSV `t,M,N,Xi_gamma,Xi_eta,R_gamma,R_eta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,M,N,Xi_gamma,Xi_eta,R_gamma,R_eta\n");
        for m in 0..=self.mn.steps() {
            let row = [
                self.mn.t(m),
                self.mn.gamma()[m],
                self.mn.eta()[m],
                self.xi.gamma()[m],
                self.xi.eta()[m],
                self.remainder.gamma()[m],
                self.remainder.eta()[m],
            ];
            let cells: Vec<String> = row.iter().map(|x| fmt_sig(*x)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

pub fn remainder_probe(mu0: &Measure, wf: &WeightedForcing, params: &Params) -> Result<RemainderProbe> {
    remainder_probe_with(mu0, wf, params, &EvolutionOptions::default())
}

/// `R_t = 𝒯_t(ξ; μ₀) - e^{-σ²t/2}(μ₀(cos), μ₀(sin)) - Ξ_t(ξ)`.
pub fn remainder_probe_with(
    mu0: &Measure,
    wf: &WeightedForcing,
    params: &Params,
    opts: &EvolutionOptions,
) -> Result<RemainderProbe> {
    let xi_f = &wf.forcing;
    let t_map = apply_t_with(xi_f, mu0, params, opts)?;
    let mn = mn_operators(wf, params);
    let xi = xi_of_mn(&mn, xi_f, params);
    let m0 = trig_moments(mu0);
    let rate = 0.5 * params.sigma2();
    let heat = Forcing::from_fn(xi_f.steps(), xi_f.dt(), |t| {
        let e = (-rate * t).exp();
        (m0.a * e, m0.b * e)
    });
    let remainder = t_map.combine(&heat, 1.0, -1.0).combine(&xi, 1.0, -1.0);
    let r_norm = remainder.lambda_norm(2.0 * wf.lambda);
    let bound = 8.0 * dist_to_uniform(mu0) / params.kappa_c() * wf.norm_lambda
        + c2_constant(params) * wf.norm_lambda.powi(2);
    Ok(RemainderProbe { mn, xi, remainder, r_norm, bound })
}

/// `log₂(r(ξ)/r(ξ/2))` for successive halvings of the forcing amplitude.
pub fn remainder_scaling(
    mu0: &Measure,
    wf: &WeightedForcing,
    params: &Params,
    halvings: usize,
    opts: &EvolutionOptions,
) -> Result<Vec<f64>> {
    let norms = (0..=halvings)
        .map(|k| {
            let scaled = WeightedForcing::new(wf.forcing.scaled(0.5f64.powi(k as i32)), wf.lambda)?;
            Ok(remainder_probe_with(mu0, &scaled, params, opts)?.r_norm)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(norms.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}
