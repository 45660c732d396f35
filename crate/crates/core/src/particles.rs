//! Finite ensembles of oscillators driven by a mean-field feedback
//! `α = -v_x(t, θ)`, and Monte-Carlo evaluation of discounted costs.
//!
//! Every particle (or tagged path) owns a ChaCha8 stream selected by its
//! index, so results do not depend on how the work is scheduled.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::{Forcing, ValueField};
use crate::hjb::ValueFn;
use crate::torus::{fmt_sig, wrap, Grid, Measure, Params};

/// Where the feedback control comes from.
#[derive(Debug, Clone)]
pub enum DriftSource {
    Zero,
    Stationary(ValueFn),
    Field(ValueField),
}

impl DriftSource {
    /// `-v_x(t, x)` by linear interpolation in `x` and `t`.
    pub fn drift(&self, t: f64, x: f64) -> f64 {
        match self {
            DriftSource::Zero => 0.0,
            DriftSource::Stationary(vf) => -vf.grid().interpolate(vf.v_x().values(), x),
            DriftSource::Field(field) => -field.v_x_at(t, x),
        }
    }

    fn grid(&self) -> Option<Grid> {
        match self {
            DriftSource::Zero => None,
            DriftSource::Stationary(vf) => Some(vf.grid()),
            DriftSource::Field(field) => Some(field.grid()),
        }
    }

    fn max_speed(&self) -> f64 {
        match self {
            DriftSource::Zero => 0.0,
            DriftSource::Stationary(vf) => vf.v_x().sup_norm(),
            DriftSource::Field(field) => field.gradient_sup().into_iter().fold(0.0, f64::max),
        }
    }

    fn horizon(&self) -> f64 {
        match self {
            DriftSource::Field(field) => field.horizon(),
            _ => f64::INFINITY,
        }
    }

    fn check_step(&self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt = {dt} must be positive")));
        }
        if let Some(grid) = self.grid() {
            let speed = self.max_speed();
            if speed > 0.0 && dt > grid.h() / speed {
                return Err(Error::InvalidInput(format!(
                    "dt = {dt} exceeds h / max|v_x| = {}",
                    grid.h() / speed
                )));
            }
        }
        Ok(())
    }
}

/// Periodic linear lookup with the cell index reduced in integer arithmetic.
struct Table {
    inv_h: f64,
    n: i64,
    /// `n - 1` when `n` is a power of two
    mask: Option<i64>,
    /// `n + 1` samples, the last repeating the first
    values: Vec<f64>,
}

impl Table {
    fn new(grid: Grid, samples: &[f64], scale: f64) -> Self {
        let mut values: Vec<f64> = samples.iter().map(|v| scale * v).collect();
        values.push(values[0]);
        let n = grid.n() as i64;
        let mask = (n as u64).is_power_of_two().then_some(n - 1);
        Self { inv_h: 1.0 / grid.h(), n, mask, values }
    }

    /// Cell index and offset within the cell.
    #[inline]
    fn locate(&self, x: f64) -> (usize, f64) {
        let s = x * self.inv_h;
        let k = s.floor();
        let j = match self.mask {
            Some(m) => (k as i64) & m,
            None => (k as i64).rem_euclid(self.n),
        };
        (j as usize, s - k)
    }

    #[inline]
    fn at(&self, x: f64) -> f64 {
        let (j, frac) = self.locate(x);
        self.values[j] + frac * (self.values[j + 1] - self.values[j])
    }
}

/// Stationary drift, `cos` and `sin` interpolated from one fine periodic
/// table. The fine cells subdivide the drift grid, so the drift is the same
/// piecewise-linear function as [`DriftSource::drift`]; the trig error is
/// below `(2π/4096)²/8 ≈ 3e-7`.
struct CostTable {
    locator: Table,
    rows: Vec<[f64; 3]>,
}

impl CostTable {
    const MIN_CELLS: usize = 4096;

    fn new(drift: &DriftSource) -> Self {
        let coarse = match drift {
            DriftSource::Stationary(vf) => Some((vf.grid(), vf.v_x().values())),
            _ => None,
        };
        let cells = match coarse {
            Some((g, _)) => g.n() * Self::MIN_CELLS.div_ceil(g.n()),
            None => Self::MIN_CELLS,
        };
        let fine = Grid::new(cells).expect("valid size");
        let mut rows: Vec<[f64; 3]> = fine
            .points()
            .iter()
            .map(|&x| {
                let b = coarse.map_or(0.0, |(g, v)| -g.interpolate(v, x));
                let (s, c) = x.sin_cos();
                [b, c, s]
            })
            .collect();
        rows.push(rows[0]);
        Self { locator: Table::new(fine, &vec![0.0; cells], 1.0), rows }
    }

    /// `(-v_x, cos, sin)` at `x`; the first entry is zero unless the drift
    /// is stationary.
    #[inline]
    fn at(&self, x: f64) -> [f64; 3] {
        let (j, frac) = self.locator.locate(x);
        let (lo, hi) = (self.rows[j], self.rows[j + 1]);
        [
            lo[0] + frac * (hi[0] - lo[0]),
            lo[1] + frac * (hi[1] - lo[1]),
            lo[2] + frac * (hi[2] - lo[2]),
        ]
    }
}

/// [`DriftSource`] prepared for repeated evaluation.
enum Feedback<'a> {
    Zero,
    Table(Table),
    Field(&'a ValueField),
}

impl<'a> Feedback<'a> {
    fn new(source: &'a DriftSource) -> Self {
        match source {
            DriftSource::Zero => Feedback::Zero,
            DriftSource::Stationary(vf) => Feedback::Table(Table::new(vf.grid(), vf.v_x().values(), -1.0)),
            DriftSource::Field(field) => Feedback::Field(field),
        }
    }

    #[inline]
    fn at(&self, t: f64, x: f64) -> f64 {
        match self {
            Feedback::Zero => 0.0,
            Feedback::Table(table) => table.at(x),
            Feedback::Field(field) => -field.v_x_at(t, x),
        }
    }
}

/// Empirical moments of the ensemble at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub t: f64,
    pub a_emp: f64,
    pub b_emp: f64,
    /// Larger of the two sample standard errors of `cos θ` and `sin θ`.
    pub se: f64,
    /// Empirical `d`, the largest deviation of the four moments from uniform.
    pub d_emp: f64,
    /// Largest standard error among the four moments.
    pub d_se: f64,
}

/// Fixed-order pairwise summation.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = if xs.len() > 1 { pairwise_sum(&dev) / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

pub fn ensemble_stats(t: f64, phases: &[f64]) -> EnsembleStats {
    let (s, c): (Vec<f64>, Vec<f64>) = phases.iter().map(|x| x.sin_cos()).unzip();
    let sc: Vec<f64> = s.iter().zip(&c).map(|(s, c)| s * c).collect();
    let c2: Vec<f64> = c.iter().map(|c| c * c - 0.5).collect();
    let (a, se_a) = mean_and_se(&c);
    let (b, se_b) = mean_and_se(&s);
    let (m3, se3) = mean_and_se(&sc);
    let (m4, se4) = mean_and_se(&c2);
    let d = a.abs().max(b.abs()).max(m3.abs()).max(m4.abs());
    EnsembleStats {
        t,
        a_emp: a,
        b_emp: b,
        se: se_a.max(se_b),
        d_emp: d,
        d_se: se_a.max(se_b).max(se3).max(se4),
    }
}

/// Inverse-CDF sample of a grid density.
///
/// The CDF is the cumulative trapezoid rule over the periodic grid and is
/// inverted linearly within each cell.
pub struct InverseCdf {
    grid: Grid,
    cdf: Vec<f64>,
}

impl InverseCdf {
    pub fn new(mu: &Measure) -> Self {
        let grid = mu.grid();
        let f = mu.density();
        let n = grid.n();
        let mut cdf = Vec::with_capacity(n + 1);
        cdf.push(0.0);
        for j in 0..n {
            let next = cdf[j] + 0.5 * grid.h() * (f[j] + f[(j + 1) % n]);
            cdf.push(next);
        }
        let total = cdf[n];
        for c in &mut cdf {
            *c /= total;
        }
        Self { grid, cdf }
    }

    pub fn sample(&self, u: f64) -> f64 {
        let j = self.cdf.partition_point(|c| *c <= u).clamp(1, self.cdf.len() - 1) - 1;
        let (lo, hi) = (self.cdf[j], self.cdf[j + 1]);
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
        wrap(self.grid.x(j) + frac * self.grid.h())
    }
}

fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `N` phases and one random stream per particle.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    phases: Vec<f64>,
    rng_seed: u64,
    rngs: Vec<ChaCha8Rng>,
}

impl ParticleEnsemble {
    /// `n` i.i.d. phases drawn from `mu0`.
    pub fn sample(mu0: &Measure, n: usize, seed: u64) -> Result<Self> {
        if n < 100 {
            return Err(Error::InvalidInput(format!("ensemble of {n} particles is below the minimum of 100")));
        }
        let inv = InverseCdf::new(mu0);
        let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|i| path_rng(seed, i)).collect();
        let phases = rngs.iter_mut().map(|r| inv.sample(r.gen::<f64>())).collect();
        Ok(Self { phases, rng_seed: seed, rngs })
    }

    pub fn n_particles(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn stats(&self, t: f64) -> EnsembleStats {
        ensemble_stats(t, &self.phases)
    }

    /// One Euler–Maruyama step `θ ← θ + b(θ) dt + σ √dt Z`, wrapped.
    pub fn step(&mut self, drift: impl Fn(f64) -> f64 + Sync, dt: f64, sigma: f64) {
        let noise = sigma * dt.sqrt();
        self.phases
            .par_iter_mut()
            .zip(self.rngs.par_iter_mut())
            .for_each(|(x, rng)| {
                let z: f64 = rng.sample(StandardNormal);
                *x = wrap(*x + drift(*x) * dt + noise * z);
            });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub n_particles: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Record statistics every this many steps.
    pub record_every: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { n_particles: 10_000, dt: 1e-3, horizon: 10.0, seed: 0, record_every: 100 }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub stats: Vec<EnsembleStats>,
    pub ensemble: ParticleEnsemble,
}

impl Simulation {
    /// CSV `t,a_emp,b_emp,se`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,a_emp,b_emp,se\n");
        for s in &self.stats {
            let _ = writeln!(out, "{},{},{},{}", fmt_sig(s.t), fmt_sig(s.a_emp), fmt_sig(s.b_emp), fmt_sig(s.se));
        }
        out
    }
}

pub fn simulate(mu0: &Measure, drift: &DriftSource, params: &Params, opts: &SimulationOptions) -> Result<Simulation> {
    drift.check_step(opts.dt)?;
    if opts.record_every == 0 {
        return Err(Error::InvalidInput("record_every must be positive".into()));
    }
    if opts.horizon > drift.horizon() + 1e-9 {
        return Err(Error::InvalidInput(format!(
            "horizon {} exceeds the drift field's horizon {}",
            opts.horizon,
            drift.horizon()
        )));
    }
    let steps = (opts.horizon / opts.dt).round() as usize;
    let mut ensemble = ParticleEnsemble::sample(mu0, opts.n_particles, opts.seed)?;
    let mut stats = vec![ensemble.stats(0.0)];
    let feedback = Feedback::new(drift);
    for k in 0..steps {
        let t = k as f64 * opts.dt;
        ensemble.step(|x| feedback.at(t, x), opts.dt, params.sigma());
        if (k + 1) % opts.record_every == 0 || k + 1 == steps {
            stats.push(ensemble.stats((k + 1) as f64 * opts.dt));
        }
    }
    Ok(Simulation { stats, ensemble })
}

/// The coefficients `κ(a_t, b_t)` a tagged particle pays against.
#[derive(Debug, Clone, PartialEq)]
pub enum CostEnvironment {
    Constant { gamma: f64, eta: f64 },
    /// Held at its last value past the end.
    Path(Forcing),
}

impl CostEnvironment {
    pub fn stationary(vf: &ValueFn) -> Self {
        CostEnvironment::Constant { gamma: vf.gamma(), eta: 0.0 }
    }

    fn at(&self, t: f64) -> (f64, f64) {
        match self {
            CostEnvironment::Constant { gamma, eta } => (*gamma, *eta),
            CostEnvironment::Path(f) => f.at(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostOptions {
    pub paths: usize,
    pub dt: f64,
    /// Defaults to the shortest horizon meeting `tol`.
    pub horizon: Option<f64>,
    pub seed: u64,
    pub tol: f64,
}

impl Default for CostOptions {
    fn default() -> Self {
        Self { paths: 20_000, dt: 1e-3, horizon: None, seed: 0, tol: 1e-3 }
    }
}

/// `e^{-βT} 2κ/β`, the discounted interaction cost past `T`.
pub fn cost_tail(params: &Params, horizon: f64) -> f64 {
    (-params.beta() * horizon).exp() * 2.0 * params.kappa() / params.beta()
}

impl CostOptions {
    pub fn horizon_for(&self, params: &Params) -> Result<f64> {
        let horizon = match self.horizon {
            Some(t) => t,
            None => {
                let need = (2.0 * params.kappa() / (params.beta() * self.tol)).ln() / params.beta();
                need.max(1.0).ceil()
            }
        };
        let tail = cost_tail(params, horizon);
        if tail > self.tol {
            return Err(Error::HorizonTooShort { horizon, tail, tol: self.tol });
        }
        Ok(horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub mean: f64,
    pub se: f64,
    pub paths: usize,
    pub horizon: f64,
}

/// Discounted costs of one tagged path per control offset, all driven by the
/// same Brownian increments.
fn path_costs(
    x0: f64,
    drift: &DriftSource,
    env: &CostEnvironment,
    params: &Params,
    offsets: &[f64],
    opts: &CostOptions,
) -> Result<(Vec<Vec<f64>>, f64)> {
    drift.check_step(opts.dt)?;
    if opts.paths < 2 {
        return Err(Error::InvalidInput("at least two paths are needed".into()));
    }
    let horizon = opts.horizon_for(params)?;
    if horizon > drift.horizon() + 1e-9 {
        return Err(Error::InvalidInput(format!(
            "cost horizon {horizon} exceeds the drift field's horizon {}",
            drift.horizon()
        )));
    }
    let steps = (horizon / opts.dt).round() as usize;
    let dt = opts.dt;
    let beta = params.beta();
    let weight = (1.0 - (-beta * dt).exp()) / beta;
    let noise = params.sigma() * dt.sqrt();
    let schedule: Vec<(f64, f64, f64)> = (0..steps)
        .map(|k| {
            let t = k as f64 * dt;
            let (g, e) = env.at(t);
            ((-beta * t).exp() * weight, g, e)
        })
        .collect();
    let table = CostTable::new(drift);
    let field = match drift {
        DriftSource::Field(f) => Some(f),
        _ => None,
    };
    // Paths advance in blocks so that the independent lookup chains of
    // several paths overlap in the pipeline; each path keeps its own stream.
    const BLOCK: usize = 8;
    let m = offsets.len();
    let blocks: Vec<Vec<f64>> = (0..opts.paths.div_ceil(BLOCK))
        .into_par_iter()
        .map(|blk| {
            let paths = blk * BLOCK..((blk + 1) * BLOCK).min(opts.paths);
            let mut rngs: Vec<_> = paths.clone().map(|i| path_rng(opts.seed, i)).collect();
            let mut x = vec![wrap(x0); rngs.len() * m];
            let mut cost = vec![0.0; rngs.len() * m];
            for (k, &(w, g, e)) in schedule.iter().enumerate() {
                let t = k as f64 * dt;
                for (l, rng) in rngs.iter_mut().enumerate() {
                    let z: f64 = rng.sample(StandardNormal);
                    for (j, off) in offsets.iter().enumerate() {
                        let q = l * m + j;
                        let [b, c, s] = table.at(x[q]);
                        let b = field.map_or(b, |f| -f.v_x_at(t, x[q]));
                        let alpha = b + off;
                        cost[q] += w * (-(g * c + e * s) + 0.5 * alpha * alpha);
                        // unwrapped; the drift interpolation wraps on lookup
                        x[q] += alpha * dt + noise * z;
                    }
                }
            }
            cost
        })
        .collect();
    let costs: Vec<&[f64]> = blocks.iter().flat_map(|c| c.chunks(m)).collect();
    let by_offset = (0..offsets.len()).map(|j| costs.iter().map(|c| c[j]).collect()).collect();
    Ok((by_offset, horizon))
}

/// Monte-Carlo discounted cost `E ∫ e^{-βt}(κ[c(X_t, μ_t) - 1] + ½α²) dt` of
/// a tagged particle started at `x0` and using the feedback of `drift`.
pub fn empirical_cost(
    x0: f64,
    drift: &DriftSource,
    env: &CostEnvironment,
    params: &Params,
    opts: &CostOptions,
) -> Result<CostEstimate> {
    let (costs, horizon) = path_costs(x0, drift, env, params, &[0.0], opts)?;
    let (mean, se) = mean_and_se(&costs[0]);
    Ok(CostEstimate { mean, se, paths: opts.paths, horizon })
}

/// Cost of the control `-v_x + offset` against the unperturbed feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub offset: f64,
    pub cost: CostEstimate,
    /// Mean of the paired differences, perturbed minus optimal.
    pub excess: f64,
    pub excess_se: f64,
}

impl Deviation {
    /// True unless the deviation beats the optimal feedback by more than
    /// three standard errors.
    pub fn consistent(&self) -> bool {
        self.excess >= -3.0 * self.excess_se
    }
}

pub fn deviation_probe(
    x0: f64,
    drift: &DriftSource,
    env: &CostEnvironment,
    params: &Params,
    offsets: &[f64],
    opts: &CostOptions,
) -> Result<(CostEstimate, Vec<Deviation>)> {
    let mut all = vec![0.0];
    all.extend_from_slice(offsets);
    let (costs, horizon) = path_costs(x0, drift, env, params, &all, opts)?;
    let (mean, se) = mean_and_se(&costs[0]);
    let base = CostEstimate { mean, se, paths: opts.paths, horizon };
    let devs = offsets
        .iter()
        .enumerate()
        .map(|(j, &offset)| {
            let c = &costs[j + 1];
            let (mean, se) = mean_and_se(c);
            let diff: Vec<f64> = c.iter().zip(&costs[0]).map(|(p, q)| p - q).collect();
            let (excess, excess_se) = mean_and_se(&diff);
            Deviation { offset, cost: CostEstimate { mean, se, paths: opts.paths, horizon }, excess, excess_se }
        })
        .collect();
    Ok((base, devs))
}
