//! Invariant checks shared by the property tests and the acceptance run.
#![allow(dead_code)]

use kuramoto_mfg::evolution::{solve_mfg, EvolutionOptions, Forcing, InitialCondition, MfgSolution};
use kuramoto_mfg::hjb::{solve_ladder, solve_stationary_hjb, value_upper_bound, HjbOptions};
use kuramoto_mfg::linearized::{mn_operators, remainder_probe, xi_bound_constant, xi_operator, WeightedForcing};
use kuramoto_mfg::torus::{Grid, Measure, Params};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }

    pub fn assert(&self) {
        assert!(self.pass, "{}: {}", self.name, self.detail);
    }
}

pub fn grid(n: usize) -> Grid {
    Grid::new(n).unwrap()
}

pub const PROBE_GAMMAS: [f64; 4] = [0.1, 1.0, 10.0, 100.0];

/// `v(x) ≤ -γ/β + √γ(x²/2 + σ²/(2β)) + 1e-6` on the grid.
pub fn upper_bound(n: usize) -> Check {
    let p = Params::reference(1.0);
    let g = grid(n);
    let vfs = solve_ladder(&PROBE_GAMMAS, &p, g, &HjbOptions::default()).unwrap();
    let mut worst: f64 = f64::NEG_INFINITY;
    for vf in &vfs {
        for j in 0..n {
            let excess = vf.v().at(j) - value_upper_bound(vf.gamma(), &p, g.centered(j));
            worst = worst.max(excess);
        }
    }
    Check::new(
        format!("value upper bound (n={n})"),
        worst <= 1e-6,
        format!("max v - bound = {worst:.3e}"),
    )
}

/// `v` nondecreasing on `[0, π]` and `v(π) > v(0)`.
pub fn monotonicity(n: usize) -> Check {
    let p = Params::reference(1.0);
    let g = grid(n);
    let vfs = solve_ladder(&PROBE_GAMMAS, &p, g, &HjbOptions::default()).unwrap();
    let mut worst_drop: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for vf in &vfs {
        let v = vf.v().values();
        for j in 0..g.pi_index() {
            worst_drop = worst_drop.max(v[j] - v[j + 1]);
        }
        min_gap = min_gap.min(v[g.pi_index()] - v[0]);
    }
    Check::new(
        format!("value monotone in |x| (n={n})"),
        worst_drop <= 1e-9 && min_gap > 0.0,
        format!("largest drop {worst_drop:.3e}, min v(π) - v(0) = {min_gap:.4e}"),
    )
}

/// Converged equilibrium used by the time-dependent checks.
pub fn reference_solution(n: usize) -> (MfgSolution, Params) {
    let p = Params::reference(0.5);
    let mu0 = InitialCondition::TwoCluster.build(grid(n)).unwrap();
    let opts = EvolutionOptions { horizon: Some(20.0), ..Default::default() };
    (solve_mfg(&mu0, &p, &opts).unwrap(), p)
}

/// `sup_{u ≥ t} |ξ_u|` with the Euclidean norm, the Lipschitz constant of
/// the running cost.
pub fn tail_sup_euclid(f: &Forcing) -> Vec<f64> {
    let mut out = vec![0.0; f.steps() + 1];
    let mut acc: f64 = 0.0;
    for m in (0..=f.steps()).rev() {
        acc = acc.max(f.gamma()[m].hypot(f.eta()[m]));
        out[m] = acc;
    }
    out
}

/// `‖v_x(t,·)‖∞ ≤ ‖ξ‖_{t,∞}/β + 1e-6` slice by slice.
pub fn gradient_bound(sol: &MfgSolution, p: &Params, n: usize) -> Check {
    let tail = tail_sup_euclid(&sol.forcing);
    let mut worst: f64 = f64::NEG_INFINITY;
    for (m, s) in sol.value.gradient_sup().iter().enumerate() {
        worst = worst.max(s - tail[m] / p.beta());
    }
    Check::new(
        format!("gradient bound (n={n})"),
        worst <= 1e-6,
        format!("max ‖v_x‖ - ‖ξ‖/β = {worst:.3e}"),
    )
}

/// `|E cos(kX_s)| + |E sin(kX_s)| ≤ 2e^{-k²σ²(s-t)/2} + 4‖ξ‖_{t,∞}/(kβσ²) + 1e-4`.
pub fn moment_decay(sol: &MfgSolution, p: &Params, n: usize) -> Check {
    let tail = tail_sup_euclid(&sol.forcing);
    let flow = &sol.flow;
    let s2 = p.sigma2();
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut pairs = 0;
    for k in 1..=3u32 {
        for &t in &[0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
            for &gap in &[0.1, 0.5, 1.0, 2.0, 5.0] {
                let s = t + gap;
                if s > flow.t(flow.steps()) {
                    continue;
                }
                let (ms, mt) = (flow.index_at(s), flow.index_at(t));
                let (c, sn) = flow.harmonic(ms, k);
                let kf = k as f64;
                let rhs = 2.0 * (-kf * kf * s2 * (flow.t(ms) - flow.t(mt)) / 2.0).exp()
                    + 4.0 * tail[mt] / (kf * p.beta() * s2);
                worst = worst.max(c.abs() + sn.abs() - rhs);
                pairs += 1;
            }
        }
    }
    Check::new(
        format!("moment decay inequality (n={n})"),
        worst <= 1e-4,
        format!("{pairs} pairs, max lhs - rhs = {worst:.3e}"),
    )
}

/// Forcings probed by the operator bounds.
pub fn probe_forcings(lambda: f64) -> Vec<WeightedForcing> {
    let (steps, dt) = (3000, 0.01);
    let shapes: Vec<Box<dyn Fn(f64) -> (f64, f64)>> = vec![
        Box::new(move |t| ((-lambda * t).exp(), 0.0)),
        Box::new(move |t| (0.0, -(-lambda * t).exp())),
        Box::new(move |t| ((-lambda * t).exp() * (3.0 * t).cos(), (-lambda * t).exp() * t.sin())),
        Box::new(move |t| (0.3 * (-2.0 * lambda * t).exp(), 0.7 * (-lambda * t).exp() * (0.5 * t).cos())),
        Box::new(move |t| ((-lambda * (t - 5.0).abs()).exp() * (-lambda * 5.0).exp(), 0.2)),
    ];
    shapes
        .into_iter()
        .map(|f| WeightedForcing::new(Forcing::from_fn(steps, dt, f), lambda).unwrap())
        .collect()
}

/// `‖(M,N)‖_λ ≤ ‖ξ‖_λ/ρ` and `‖Ξ‖_λ ≤ ‖ξ‖_λ/(κ_c - 2λρ)`, each + 1e-8.
pub fn operator_bounds() -> Check {
    let p = Params::reference(0.5);
    let mut worst_mn: f64 = f64::NEG_INFINITY;
    let mut worst_xi: f64 = f64::NEG_INFINITY;
    for &lambda in &[0.02, 0.05, 1.0 / 16.0, 0.125] {
        let c = xi_bound_constant(&p, lambda).unwrap();
        for wf in probe_forcings(lambda) {
            let mn = mn_operators(&wf, &p).lambda_norm(lambda);
            let xi = xi_operator(&wf, &p).unwrap().lambda_norm(lambda);
            worst_mn = worst_mn.max(mn - wf.norm_lambda / p.rho());
            worst_xi = worst_xi.max(xi - wf.norm_lambda * c);
        }
    }
    Check::new(
        "linear operator bounds",
        worst_mn <= 1e-8 && worst_xi <= 1e-8,
        format!("max excess: (M,N) {worst_mn:.3e}, Ξ {worst_xi:.3e}"),
    )
}

/// `log₂` ratios of `r_norm` under `ξ → ξ/2` for `μ₀ = U` should lie in
/// `[1.8, 2.2]`; the remainder must also respect its bound.
pub fn remainder_scaling(n: usize) -> Check {
    let p = Params::reference(0.5);
    let mu0 = Measure::uniform(grid(n));
    let lambda = p.sigma2() / 16.0;
    let mut norms = Vec::new();
    let mut within = true;
    for k in 0..3 {
        let amp = 0.4 * 0.5f64.powi(k);
        let wf = WeightedForcing::exponential(lambda, (amp, 0.5 * amp), 3000, 0.01).unwrap();
        let probe = remainder_probe(&mu0, &wf, &p).unwrap();
        within &= probe.r_norm <= probe.bound;
        norms.push(probe.r_norm);
    }
    let ratios: Vec<f64> = norms.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let scaling = ratios.iter().all(|r| (1.8..=2.2).contains(r));
    Check::new(
        format!("quadratic remainder scaling (n={n})"),
        scaling && within,
        format!(
            "r_norm {:?}, log2 ratios [{}], within bound {within}",
            norms.iter().map(|r| format!("{r:.4e}")).collect::<Vec<_>>(),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

/// Stationary value function at a single `γ`, reference parameters.
pub fn stationary(gamma: f64, n: usize) -> kuramoto_mfg::hjb::ValueFn {
    solve_stationary_hjb(gamma, &Params::reference(1.0), grid(n)).unwrap()
}
