//! Time-dependent Kuramoto mean-field game on a truncated horizon `[0, T]`.
//!
//! A forcing `ξ = (γ, η)` defines the running cost `-γ(t) cos x - η(t) sin x`.
//! The backward HJB equation with `v(T) = 0` gives the optimal drift, the
//! forward Fokker–Planck equation transports `μ₀` along it, and the cos/sin
//! moments of the resulting flow are `𝒯(ξ)`. Equilibria are fixed points of
//! `ξ ↦ κ𝒯(ξ)`, found by damped Picard iteration.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::fd::Stencil;
use crate::fp;
use crate::hjb::ValueFn;
use crate::linalg::{CyclicBanded, CyclicTridiagonal};
use crate::torus::{dist_to_uniform, fmt_sig, sup_norm, trig_moments, Grid, Measure, Params};

/// Time samples `γ(t_m), η(t_m)` on `t_m = m·dt`, `m = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    dt: f64,
    gamma: Vec<f64>,
    eta: Vec<f64>,
}

impl Forcing {
    pub fn new(dt: f64, gamma: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step {dt} must be positive")));
        }
        if gamma.len() != eta.len() || gamma.len() < 2 {
            return Err(Error::InvalidInput(
                "forcing needs matching gamma/eta samples and at least one step".into(),
            ));
        }
        if gamma.iter().chain(&eta).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("forcing samples must be finite".into()));
        }
        Ok(Self { dt, gamma, eta })
    }

    pub fn zeros(steps: usize, dt: f64) -> Self {
        Self::from_fn(steps, dt, |_| (0.0, 0.0))
    }

    pub fn from_fn(steps: usize, dt: f64, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let (gamma, eta) = (0..=steps).map(|m| f(m as f64 * dt)).unzip();
        Self { dt, gamma, eta }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.gamma.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn t(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|m| self.t(m)).collect()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// `sup_t |γ(t)| + |η(t)|`.
    pub fn sup_norm(&self) -> f64 {
        self.gamma
            .iter()
            .zip(&self.eta)
            .map(|(g, e)| g.abs() + e.abs())
            .fold(0.0, f64::max)
    }

    /// `‖ξ‖_{t_m,∞} = sup_{u ≥ t_m} |γ(u)| + |η(u)|` for every `m`.
    pub fn tail_sup(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.gamma.len()];
        let mut acc: f64 = 0.0;
        for m in (0..self.gamma.len()).rev() {
            acc = acc.max(self.gamma[m].abs() + self.eta[m].abs());
            out[m] = acc;
        }
        out
    }

    /// `sup_t e^{λt} (|γ(t)| + |η(t)|)` on the sampled horizon.
    pub fn lambda_norm(&self, lambda: f64) -> f64 {
        (0..self.gamma.len())
            .map(|m| (lambda * self.t(m)).exp() * (self.gamma[m].abs() + self.eta[m].abs()))
            .fold(0.0, f64::max)
    }

    /// `sup_t |Δγ| + |Δη|`.
    pub fn distance(&self, other: &Forcing) -> f64 {
        self.combine(other, 1.0, -1.0).sup_norm()
    }

    /// `a·self + b·other` on the common time grid.
    pub fn combine(&self, other: &Forcing, a: f64, b: f64) -> Forcing {
        assert_eq!(self.gamma.len(), other.gamma.len(), "forcings on different time grids");
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(x, y)| a * x + b * y).collect();
        Forcing {
            dt: self.dt,
            gamma: mix(&self.gamma, &other.gamma),
            eta: mix(&self.eta, &other.eta),
        }
    }

    pub fn scaled(&self, c: f64) -> Forcing {
        Forcing {
            dt: self.dt,
            gamma: self.gamma.iter().map(|g| c * g).collect(),
            eta: self.eta.iter().map(|e| c * e).collect(),
        }
    }

    /// Piecewise-linear interpolation, constant past the last sample.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let s = (t / self.dt).clamp(0.0, self.steps() as f64);
        let m = (s.floor() as usize).min(self.steps() - 1);
        let w = s - m as f64;
        (
            self.gamma[m] * (1.0 - w) + self.gamma[m + 1] * w,
            self.eta[m] * (1.0 - w) + self.eta[m + 1] * w,
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,gamma,eta\n");
        for m in 0..self.gamma.len() {
            let _ = writeln!(out, "{},{},{}", fmt_sig(self.t(m)), fmt_sig(self.gamma[m]), fmt_sig(self.eta[m]));
        }
        out
    }
}

/// Value function `v(t_m, x_j)` and its space derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    grid: Grid,
    dt: f64,
    v: Vec<f64>,
    v_x: Vec<f64>,
}

impl ValueField {
    /// Time-constant field equal to a stationary solution.
    pub fn stationary(vf: &ValueFn, steps: usize, dt: f64) -> Self {
        let v = vf.v().values().repeat(steps + 1);
        let v_x = vf.v_x().values().repeat(steps + 1);
        Self { grid: vf.grid(), dt, v, v_x }
    }

    pub fn zeros(grid: Grid, steps: usize, dt: f64) -> Self {
        let len = grid.n() * (steps + 1);
        Self { grid, dt, v: vec![0.0; len], v_x: vec![0.0; len] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.v.len() / self.grid.n() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn v(&self, m: usize) -> &[f64] {
        let n = self.grid.n();
        &self.v[m * n..(m + 1) * n]
    }

    pub fn v_x(&self, m: usize) -> &[f64] {
        let n = self.grid.n();
        &self.v_x[m * n..(m + 1) * n]
    }

    /// `v_x(t, x)` by linear interpolation in both variables.
    pub fn v_x_at(&self, t: f64, x: f64) -> f64 {
        let s = (t / self.dt).clamp(0.0, self.steps() as f64);
        let m = (s.floor() as usize).min(self.steps().saturating_sub(1));
        let w = s - m as f64;
        let a = self.grid.interpolate(self.v_x(m), x);
        if w == 0.0 || self.steps() == 0 {
            return a;
        }
        let b = self.grid.interpolate(self.v_x(m + 1), x);
        a * (1.0 - w) + b * w
    }

    /// Sup norm of `v_x(t_m, ·)` for every slice.
    pub fn gradient_sup(&self) -> Vec<f64> {
        (0..=self.steps()).map(|m| sup_norm(self.v_x(m))).collect()
    }
}

/// Cos/sin moments and `d(μ)` of one slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowMoments {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

/// Densities `μ_{t_m}` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureFlow {
    grid: Grid,
    dt: f64,
    densities: Vec<f64>,
    moments: Vec<FlowMoments>,
}

impl MeasureFlow {
    fn from_slices(grid: Grid, dt: f64, densities: Vec<f64>) -> Self {
        let n = grid.n();
        let moments = densities
            .chunks(n)
            .map(|d| {
                let mu = Measure::from_weights(grid, d.to_vec()).expect("flow slices are valid densities");
                let m = trig_moments(&mu);
                FlowMoments { a: m.a, b: m.b, d: dist_to_uniform(&mu) }
            })
            .collect();
        Self { grid, dt, densities, moments }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn t(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    pub fn density(&self, m: usize) -> &[f64] {
        let n = self.grid.n();
        &self.densities[m * n..(m + 1) * n]
    }

    pub fn measure(&self, m: usize) -> Measure {
        Measure::from_weights(self.grid, self.density(m).to_vec()).expect("flow slices are valid densities")
    }

    pub fn mass(&self, m: usize) -> f64 {
        self.grid.integrate(self.density(m))
    }

    pub fn moments(&self) -> &[FlowMoments] {
        &self.moments
    }

    /// Slice index closest to time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        ((t / self.dt).round().max(0.0) as usize).min(self.steps())
    }

    /// `(μ_{t_m}(cos kx), μ_{t_m}(sin kx))`.
    pub fn harmonic(&self, m: usize, k: u32) -> (f64, f64) {
        let h = self.grid.h();
        let kf = k as f64;
        self.density(m).iter().enumerate().fold((0.0, 0.0), |(c, s), (j, d)| {
            let (sn, cs) = (kf * self.grid.x(j)).sin_cos();
            (c + h * d * cs, s + h * d * sn)
        })
    }

    /// Long-format CSV `t,x,density` of every `stride`-th slice.
    pub fn to_csv(&self, stride: usize) -> String {
        let mut out = String::from("t,x,density\n");
        for m in (0..=self.steps()).step_by(stride.max(1)) {
            for (j, d) in self.density(m).iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", fmt_sig(self.t(m)), fmt_sig(self.grid.x(j)), fmt_sig(*d));
            }
        }
        out
    }

    pub fn moments_csv(&self) -> String {
        let mut out = String::from("t,a,b,d\n");
        for (m, mo) in self.moments.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", fmt_sig(self.t(m)), fmt_sig(mo.a), fmt_sig(mo.b), fmt_sig(mo.d));
        }
        out
    }

    fn forcing(&self) -> Forcing {
        Forcing {
            dt: self.dt,
            gamma: self.moments.iter().map(|m| m.a).collect(),
            eta: self.moments.iter().map(|m| m.b).collect(),
        }
    }
}

/// Settings shared by the backward, forward and Picard solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionOptions {
    pub dt: f64,
    /// `None` picks the horizon from the discount-tail rule.
    pub horizon: Option<f64>,
    /// Picard tolerance on `sup_t |ξ - κ𝒯(ξ)|`.
    pub tol: f64,
    pub damping: f64,
    pub max_iter: usize,
    /// Stagnation is declared when the residual fails to drop by
    /// `stagnation_factor` within `stagnation_window` iterations.
    pub stagnation_window: usize,
    pub stagnation_factor: f64,
    pub stencil: Stencil,
    /// Time-step halvings allowed in the backward sweep.
    pub max_halvings: usize,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            horizon: None,
            tol: 1e-7,
            damping: 0.5,
            max_iter: 2000,
            stagnation_window: 50,
            stagnation_factor: 10.0,
            stencil: Stencil::default(),
            max_halvings: 10,
        }
    }
}

/// Smallest `T` with `e^{-βT}·2κ/β ≤ tol/10`, never below 10.
pub fn default_horizon(params: &Params, tol: f64) -> f64 {
    let beta = params.beta();
    let t = (20.0 * params.kappa() / (beta * tol)).ln() / beta;
    if t.is_finite() {
        t.max(10.0)
    } else {
        10.0
    }
}

/// `e^{-βT}·2κ/β`, the cost discarded by truncating at `T`.
pub fn truncation_tail(params: &Params, horizon: f64) -> f64 {
    (-params.beta() * horizon).exp() * 2.0 * params.kappa() / params.beta()
}

impl EvolutionOptions {
    pub fn steps_for(&self, params: &Params) -> usize {
        let t = self.horizon.unwrap_or_else(|| default_horizon(params, self.tol));
        (t / self.dt).round().max(1.0) as usize
    }
}

pub fn solve_backward_hjb(xi: &Forcing, params: &Params, grid: Grid) -> Result<ValueField> {
    solve_backward_hjb_with(xi, params, grid, &EvolutionOptions::default())
}

/// Backward sweep from `v(T) = 0`: second-order IMEX (implicit diffusion
/// and discount, explicit Hamiltonian), started with one IMEX Euler step.
/// A sweep whose gradient leaves the a-priori bound is repeated with the
/// step halved.
pub fn solve_backward_hjb_with(xi: &Forcing, params: &Params, grid: Grid, opts: &EvolutionOptions) -> Result<ValueField> {
    let mut sub = 1usize;
    for _ in 0..=opts.max_halvings {
        if let Some(field) = backward_sweep(xi, params, grid, opts.stencil, sub) {
            return Ok(field);
        }
        sub *= 2;
    }
    Err(Error::StepRejected {
        halvings: opts.max_halvings,
        dt: xi.dt() / sub as f64,
    })
}

fn implicit_matrix(grid: Grid, stencil: Stencil, diag: f64, half_s2: f64) -> CyclicBanded {
    let mut a = CyclicBanded::zeros(grid.n(), stencil.half_width());
    for j in 0..grid.n() {
        a.add(j, 0, diag);
    }
    stencil.add_d2(grid, -half_s2, &mut a);
    a
}

fn backward_sweep(xi: &Forcing, params: &Params, grid: Grid, stencil: Stencil, sub: usize) -> Option<ValueField> {
    let n = grid.n();
    let steps = xi.steps();
    let fine = steps * sub;
    let dt = xi.dt() / sub as f64;
    let beta = params.beta();
    let half_s2 = 0.5 * params.sigma2();
    let euler = implicit_matrix(grid, stencil, 1.0 / dt + beta, half_s2).factor();
    let bdf2 = implicit_matrix(grid, stencil, 1.5 / dt + beta, half_s2).factor();
    let (sin, cos): (Vec<f64>, Vec<f64>) = grid.points().iter().map(|x| x.sin_cos()).unzip();
    let tail = xi.tail_sup();

    let hamiltonian = |v: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let vx = stencil.d1(grid, v);
        let h = vx.iter().map(|d| -0.5 * d * d).collect();
        (vx, h)
    };

    let mut field = ValueField::zeros(grid, steps, xi.dt());
    // fine levels k+1 and k+2 (k runs backwards)
    let mut v1 = vec![0.0; n];
    let mut h1 = vec![0.0; n];
    let mut v2: Vec<f64> = Vec::new();
    let mut h2: Vec<f64> = Vec::new();

    for k in (0..fine).rev() {
        let (g, e) = xi.at(k as f64 * dt);
        let rhs: Vec<f64> = if v2.is_empty() {
            (0..n)
                .map(|j| v1[j] / dt + h1[j] - g * cos[j] - e * sin[j])
                .collect()
        } else {
            (0..n)
                .map(|j| (4.0 * v1[j] - v2[j]) / (2.0 * dt) + 2.0 * h1[j] - h2[j] - g * cos[j] - e * sin[j])
                .collect()
        };
        let v0 = if v2.is_empty() { euler.solve(&rhs) } else { bdf2.solve(&rhs) };
        let (vx0, h0) = hamiltonian(&v0);

        if k % sub == 0 {
            let m = k / sub;
            let bound = 2.0 * tail[m] / beta + 1.0;
            if v0.iter().any(|x| !x.is_finite()) || sup_norm(&vx0) > bound {
                return None;
            }
            field.v[m * n..(m + 1) * n].copy_from_slice(&v0);
            field.v_x[m * n..(m + 1) * n].copy_from_slice(&vx0);
        }
        v2 = std::mem::replace(&mut v1, v0);
        h2 = std::mem::replace(&mut h1, h0);
    }
    Some(field)
}

/// Forward Fokker–Planck sweep along the drift `-v_x` of `vfield`.
///
/// BDF2 in time with an implicit Euler first step; a BDF2 step that would
/// produce a negative density is redone with implicit Euler, which keeps the
/// density non-negative.
pub fn solve_forward_fp(vfield: &ValueField, mu0: &Measure, params: &Params) -> Result<MeasureFlow> {
    let grid = vfield.grid();
    if mu0.grid() != grid {
        return Err(Error::InvalidInput("initial measure and value field use different grids".into()));
    }
    let n = grid.n();
    let steps = vfield.steps();
    let dt = vfield.dt();
    let s2 = params.sigma2();
    let mut densities = Vec::with_capacity(n * (steps + 1));
    densities.extend_from_slice(mu0.density());

    let shifted = |l: &CyclicTridiagonal, c0: f64, c1: f64| {
        CyclicTridiagonal::new(
            l.lower.iter().map(|x| c1 * x).collect(),
            l.diag.iter().map(|x| c0 + c1 * x).collect(),
            l.upper.iter().map(|x| c1 * x).collect(),
        )
    };
    let mut prev: Option<Vec<f64>> = None;
    let mut cur = mu0.density().to_vec();
    for m in 0..steps {
        let l = fp::generator(grid, vfield.v(m + 1), s2);
        let mut next = None;
        if let Some(p) = &prev {
            let rhs: Vec<f64> = cur.iter().zip(p).map(|(c, p)| 4.0 * c - p).collect();
            let f = shifted(&l, 3.0, -2.0 * dt).solve(&rhs);
            if f.iter().all(|x| *x >= 0.0) {
                next = Some(f);
            }
        }
        let next = next.unwrap_or_else(|| {
            // an M-matrix solve; clip round-off below zero
            let mut f = shifted(&l, 1.0, -dt).solve(&cur);
            for x in &mut f {
                *x = x.max(0.0);
            }
            f
        });
        densities.extend_from_slice(&next);
        prev = Some(std::mem::replace(&mut cur, next));
    }
    Ok(MeasureFlow::from_slices(grid, dt, densities))
}

/// Moments `t ↦ (μ_t(cos), μ_t(sin))` of the optimally controlled flow.
pub fn apply_t(xi: &Forcing, mu0: &Measure, params: &Params) -> Result<Forcing> {
    apply_t_with(xi, mu0, params, &EvolutionOptions::default())
}

pub fn apply_t_with(xi: &Forcing, mu0: &Measure, params: &Params, opts: &EvolutionOptions) -> Result<Forcing> {
    Ok(respond(xi, mu0, params, opts)?.1.forcing())
}

fn respond(xi: &Forcing, mu0: &Measure, params: &Params, opts: &EvolutionOptions) -> Result<(ValueField, MeasureFlow)> {
    let value = solve_backward_hjb_with(xi, params, mu0.grid(), opts)?;
    let flow = solve_forward_fp(&value, mu0, params)?;
    Ok((value, flow))
}

/// A converged equilibrium on the truncated horizon.
#[derive(Debug, Clone)]
pub struct MfgSolution {
    pub forcing: Forcing,
    pub value: ValueField,
    pub flow: MeasureFlow,
    pub picard_residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// `e^{-βT}·2κ/β` for the horizon used.
    pub truncation_tail: f64,
}

impl MfgSolution {
    /// `sup_t |ξ_t - κ(μ_t(cos), μ_t(sin))|`.
    pub fn consistency_error(&self, kappa: f64) -> f64 {
        self.forcing.distance(&self.flow.forcing().scaled(kappa))
    }
}

/// Damped Picard iteration `ξ ← (1-ω)ξ + ω κ𝒯(ξ)` from the heat-flow
/// prediction `ξ⁰ = κ(a(μ₀), b(μ₀)) e^{-σ²t/2}`.
pub fn solve_mfg(mu0: &Measure, params: &Params, opts: &EvolutionOptions) -> Result<MfgSolution> {
    let kappa = params.kappa();
    let steps = opts.steps_for(params);
    let m0 = trig_moments(mu0);
    let rate = 0.5 * params.sigma2();
    let mut xi = Forcing::from_fn(steps, opts.dt, |t| {
        let decay = (-rate * t).exp();
        (kappa * m0.a * decay, kappa * m0.b * decay)
    });
    let mut history = Vec::new();
    loop {
        let (value, flow) = respond(&xi, mu0, params, opts)?;
        let target = flow.forcing().scaled(kappa);
        let residual = xi.distance(&target);
        history.push(residual);
        if residual <= opts.tol {
            return Ok(MfgSolution {
                forcing: xi,
                value,
                flow,
                picard_residual: residual,
                iterations: history.len(),
                residual_history: history,
                truncation_tail: truncation_tail(params, steps as f64 * opts.dt),
            });
        }
        let k = history.len() - 1;
        let stalled = k >= opts.stagnation_window
            && history[k] > history[k - opts.stagnation_window] / opts.stagnation_factor;
        if stalled || history.len() >= opts.max_iter || !residual.is_finite() {
            return Err(Error::PicardStagnation { history });
        }
        xi = xi.combine(&target, 1.0 - opts.damping, opts.damping);
    }
}

/// Least-squares slope of `-log d(μ_t)` over the slices with `t ∈ [t_a, t_b]`.
pub fn estimate_decay_rate(flow: &MeasureFlow, window: (f64, f64)) -> Result<f64> {
    let (ta, tb) = window;
    let pts: Vec<(f64, f64)> = (0..=flow.steps())
        .filter(|&m| {
            let t = flow.t(m);
            t >= ta - 1e-12 && t <= tb + 1e-12
        })
        .map(|m| (flow.t(m), flow.moments()[m].d))
        .collect();
    if pts.len() < 2 {
        return Err(Error::WindowDegenerate(format!("fewer than two slices in [{ta}, {tb}]")));
    }
    if let Some((t, d)) = pts.iter().find(|(_, d)| !(*d > 1e-12)) {
        return Err(Error::WindowDegenerate(format!("d = {d:e} at t = {t}")));
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| -p.1.ln()).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (-p.1.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Named initial distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Uniform,
    /// `∝ exp(cos x)`
    ExpCos,
    /// `∝ exp(-sin x)`
    ExpNegSin,
    /// Normalised indicator of `[π/4, π/4 + π/10] ∪ [π, π + π/10]`.
    TwoCluster,
    /// Density read from a CSV file with an `x,density` header.
    CustomCsv(PathBuf),
}

impl InitialCondition {
    /// Accepts the names `uniform`, `exp_cos`, `exp_neg_sin`, `two_cluster`;
    /// anything else is taken as a CSV path.
    pub fn parse(name: &str) -> Self {
        match name {
            "uniform" => Self::Uniform,
            "exp_cos" => Self::ExpCos,
            "exp_neg_sin" => Self::ExpNegSin,
            "two_cluster" => Self::TwoCluster,
            path => Self::CustomCsv(PathBuf::from(path.strip_prefix("custom_csv:").unwrap_or(path))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Uniform => "uniform".into(),
            Self::ExpCos => "exp_cos".into(),
            Self::ExpNegSin => "exp_neg_sin".into(),
            Self::TwoCluster => "two_cluster".into(),
            Self::CustomCsv(p) => format!("custom_csv:{}", p.display()),
        }
    }

    pub fn build(&self, grid: Grid) -> Result<Measure> {
        use std::f64::consts::PI;
        match self {
            Self::Uniform => Ok(Measure::uniform(grid)),
            Self::ExpCos => Measure::from_fn(grid, |x| x.cos().exp()),
            Self::ExpNegSin => Measure::from_fn(grid, |x| (-x.sin()).exp()),
            Self::TwoCluster => Measure::indicator(grid, &[(PI / 4.0, PI / 10.0), (PI, PI / 10.0)]),
            Self::CustomCsv(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
                Measure::from_csv(grid, &text)
            }
        }
    }
}
