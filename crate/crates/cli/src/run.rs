use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kuramoto_mfg::eikonal::{explicit_eikonal, gap_csv, gap_decay_order, lipschitz_bound, GapEntry, ScaledProfile};
use kuramoto_mfg::evolution::{estimate_decay_rate, solve_mfg, EvolutionOptions, InitialCondition, MfgSolution};
use kuramoto_mfg::gibbs::{
    big_f_with, bifurcation_scan_with, find_fixed_points_with, gibbs_measure, profile_from_value, FixedPointOptions,
};
use kuramoto_mfg::hjb::{solve_ladder, solve_stationary_hjb_with, value_upper_bound, HjbOptions};
use kuramoto_mfg::linearized::{c2_constant, remainder_probe_with, xi_bound_constant, WeightedForcing};
use kuramoto_mfg::particles::{simulate, DriftSource, SimulationOptions};
use kuramoto_mfg::torus::{dist_to_uniform, fmt_sig, trig_moments, Grid, Measure, Params, TWO_PI};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{Command, ConfigError, DriftSpec, RunConfig};
use crate::svg::{HeatMap, LinePlot, Series, PALETTE};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] kuramoto_mfg::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 for bad input, 3 for a solver that failed to converge, 4 for Picard
    /// stagnation, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        use kuramoto_mfg::Error as E;
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(e) => match e {
                E::InvalidGrid(_)
                | E::InvalidParams(_)
                | E::InvalidMeasure(_)
                | E::InvalidInput(_)
                | E::LambdaTooLarge { .. }
                | E::HorizonTooShort { .. } => 2,
                E::NonConvergence { .. }
                | E::StepRejected { .. }
                | E::DegenerateAlignment { .. }
                | E::WindowDegenerate(_) => 3,
                E::PicardStagnation { .. } => 4,
            },
            RunError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Record of a finished run, written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputEntry>,
}

/// The `summary.json` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: Command,
    pub version: String,
    pub config: RunConfig,
    pub results: Value,
}

impl Summary {
    pub fn read(dir: &Path) -> Result<Self, ConfigError> {
        let path = dir.join("summary.json");
        let text = fs::read_to_string(&path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }
}

/// `runs/<command>-<first 12 hex digits of the config hash>`.
pub fn default_output_dir(config: &RunConfig) -> PathBuf {
    let mut c = config.clone();
    c.output_dir = PathBuf::new();
    let digest = Sha256::digest(serde_json::to_vec(&c).expect("serialisable"));
    PathBuf::from("runs").join(format!("{}-{}", c.command, &hex::encode(digest)[..12]))
}

struct Output {
    results: Value,
    files: Vec<(String, String)>,
}

impl Output {
    fn new(results: Value) -> Self {
        Self { results, files: Vec::new() }
    }

    fn file(mut self, name: &str, contents: String) -> Self {
        self.files.push((name.to_string(), contents));
        self
    }
}

/// Validates `config`, runs its pipeline and writes every output together
/// with `summary.json` and `manifest.json`.
pub fn run(mut config: RunConfig) -> Result<RunManifest, RunError> {
    config.validate()?;
    if config.output_dir.as_os_str().is_empty() {
        config.output_dir = default_output_dir(&config);
    }
    let start = Instant::now();
    let out = match config.command {
        Command::Stationary => stationary(&config)?,
        Command::Bifurcation => bifurcation(&config)?,
        Command::Evolve => evolve(&config)?,
        Command::Eikonal => eikonal(&config)?,
        Command::Linearize => linearize(&config)?,
        Command::Particles => particles(&config)?,
    };
    let summary = Summary {
        command: config.command,
        version: VERSION.to_string(),
        config: config.clone(),
        results: out.results,
    };
    let mut files = out.files;
    files.push(("summary.json".into(), serde_json::to_string_pretty(&summary).expect("serialisable") + "\n"));

    fs::create_dir_all(&config.output_dir)?;
    let mut outputs = Vec::new();
    for (name, contents) in &files {
        fs::write(config.output_dir.join(name), contents)?;
        outputs.push(OutputEntry {
            file: name.clone(),
            bytes: contents.len(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
        });
    }
    let manifest = RunManifest {
        config,
        version: VERSION.to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("serialisable") + "\n";
    fs::write(manifest.config.output_dir.join("manifest.json"), text)?;
    Ok(manifest)
}

fn params(c: &RunConfig) -> Result<Params, RunError> {
    Ok(Params::new(c.beta, c.sigma, c.kappa)?)
}

fn grid(c: &RunConfig) -> Result<Grid, RunError> {
    Ok(Grid::new(c.grid_n)?)
}

fn hjb_options(c: &RunConfig) -> HjbOptions {
    HjbOptions { tol: c.tol("hjb"), ..HjbOptions::default() }
}

fn fixed_point_options(c: &RunConfig) -> FixedPointOptions {
    FixedPointOptions { tol: c.tol("fixed_point"), hjb: hjb_options(c), ..FixedPointOptions::default() }
}

fn evolution_options(c: &RunConfig) -> EvolutionOptions {
    let d = EvolutionOptions::default();
    EvolutionOptions { dt: c.dt.unwrap_or(d.dt), horizon: c.horizon, tol: c.tol("picard"), ..d }
}

fn initial_measure(name: &str, g: Grid) -> Result<Measure, RunError> {
    Ok(InitialCondition::parse(name).build(g)?)
}

fn csv(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_sig).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn stationary(c: &RunConfig) -> Result<Output, RunError> {
    let p = params(c)?;
    let g = grid(c)?;
    let vf = solve_stationary_hjb_with(c.gamma, &p, g, &hjb_options(c))?;
    let value_csv = vf.to_csv();
    let prof = profile_from_value(vf, &p);
    let m = trig_moments(&prof.mu);
    let dens = prof.mu.density();
    let plot = LinePlot {
        title: format!("stationary density, gamma = {}", c.gamma),
        x_label: "x".into(),
        y_label: "density".into(),
        series: vec![Series::new("mu", g.points().into_iter().zip(dens.iter().copied()).collect(), PALETTE[0])],
        ..Default::default()
    };
    let results = json!({
        "gamma": c.gamma,
        "v_at_0": prof.value.v().at(0),
        "v_at_pi": prof.value.v().at(g.pi_index()),
        "upper_bound_at_pi": value_upper_bound(c.gamma, &p, std::f64::consts::PI),
        "residual": prof.value.residual_norm(),
        "newton_iterations": prof.value.iterations(),
        "order_parameter": m.g,
        "f_kappa": p.kappa() * m.g,
        "log_z": prof.log_z,
        "density_min": dens.iter().copied().fold(f64::INFINITY, f64::min),
        "density_max": dens.iter().copied().fold(0.0, f64::max),
    });
    Ok(Output::new(results)
        .file("value.csv", value_csv)
        .file("density.csv", prof.mu.to_csv())
        .file("stationary.svg", plot.render()))
}

fn bifurcation(c: &RunConfig) -> Result<Output, RunError> {
    let p = params(c)?;
    let g = grid(c)?;
    let opts = fixed_point_options(c);
    let kappa = c.kappa;
    let fp = find_fixed_points_with(kappa, &p, g, &opts)?;
    let gamma_star = fp.largest();
    let curve = (0..=100)
        .map(|i| {
            let gamma = kappa * i as f64 / 100.0;
            Ok((gamma, big_f_with(kappa, gamma, &p, g, &opts.hjb)?))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let scan = bifurcation_scan_with(c.kappa_min, c.kappa_max, c.steps, &p, g, &opts)?;
    let plot = LinePlot {
        title: format!("F_kappa, kappa = {kappa}"),
        x_label: "gamma".into(),
        y_label: "F_kappa(gamma)".into(),
        series: vec![
            Series::new("F_kappa", curve.clone(), PALETTE[0]),
            Series::new("identity", vec![(0.0, 0.0), (kappa, kappa)], "#777777").dashed(),
        ],
        markers: vec![Series::new("fixed points", fp.fixed_points.iter().map(|&x| (x, x)).collect(), PALETTE[1])],
    };
    let failures: Vec<Value> = scan
        .failures
        .iter()
        .map(|(k, e)| json!({"kappa": k, "error": e.to_string()}))
        .collect();
    let results = json!({
        "kappa": kappa,
        "kappa_c": p.kappa_c(),
        "gamma_star": gamma_star,
        "fixed_points": fp.fixed_points,
        "order_parameters": fp.order_parameters,
        "scan_failures": failures,
        "monotonicity_violations": scan.monotonicity_violations,
    });
    Ok(Output::new(results)
        .file("curve.csv", csv("gamma,F", curve.iter().map(|&(x, y)| vec![x, y])))
        .file("scan.csv", scan.to_csv())
        .file("bifurcation.svg", plot.render()))
}

/// Solves the equilibrium an `evolve` config describes.
pub fn solve_evolve(c: &RunConfig) -> Result<(MfgSolution, Measure, Params), RunError> {
    let p = params(c)?;
    let mu0 = initial_measure(&c.initial_condition, grid(c)?)?;
    let sol = solve_mfg(&mu0, &p, &evolution_options(c))?;
    Ok((sol, mu0, p))
}

fn evolve(c: &RunConfig) -> Result<Output, RunError> {
    let (sol, mu0, p) = solve_evolve(c)?;
    let flow = &sol.flow;
    let horizon = flow.t(flow.steps());
    let decay = estimate_decay_rate(flow, (horizon / 2.0, horizon));
    let d_final = flow.moments().last().map_or(f64::NAN, |m| m.d);
    // at most 200 time slices in the flow CSV, 100 columns and 128 rows in the map
    let stride = flow.steps().div_ceil(200);
    let cols = flow.steps().div_ceil(100);
    let g = flow.grid();
    let row_stride = g.n().div_ceil(128);
    let values = (0..=flow.steps())
        .step_by(cols)
        .map(|m| flow.density(m).iter().step_by(row_stride).copied().collect())
        .collect();
    let map = HeatMap {
        title: format!("density, kappa = {}, {}", c.kappa, c.initial_condition),
        x_label: "t".into(),
        y_label: "x".into(),
        x_range: (0.0, horizon),
        y_range: (0.0, TWO_PI),
        values,
    };
    let results = json!({
        "kappa": p.kappa(),
        "kappa_c": p.kappa_c(),
        "horizon": horizon,
        "steps": flow.steps(),
        "d_initial": dist_to_uniform(&mu0),
        "d_final": d_final,
        "decay_rate": decay.as_ref().ok(),
        "decay_rate_error": decay.as_ref().err().map(|e| e.to_string()),
        "picard_iterations": sol.iterations,
        "picard_residual": sol.picard_residual,
        "consistency_error": sol.consistency_error(p.kappa()),
        "truncation_tail": sol.truncation_tail,
    });
    Ok(Output::new(results)
        .file("flow.csv", flow.to_csv(stride))
        .file("moments.csv", flow.moments_csv())
        .file("forcing.csv", sol.forcing.to_csv())
        .file("evolve.svg", map.render()))
}

fn eikonal(c: &RunConfig) -> Result<Output, RunError> {
    let p = params(c)?;
    let g = grid(c)?;
    let mut gammas = c.gammas.clone();
    gammas.sort_by(f64::total_cmp);
    let profiles: Vec<ScaledProfile> = solve_ladder(&gammas, &p, g, &hjb_options(c))?
        .iter()
        .map(|vf| ScaledProfile::from_value(vf, &p))
        .collect();
    let entries: Vec<GapEntry> = profiles
        .iter()
        .map(|s| GapEntry { gamma: s.gamma, sup_gap: s.sup_gap, sup_wx: s.sup_wx() })
        .collect();
    let explicit = explicit_eikonal(g);
    let xs = g.points();
    let mut header = String::from("x,w_explicit");
    for s in &profiles {
        let _ = write!(header, ",w_{}", fmt_sig(s.gamma));
    }
    let rows = (0..g.n()).map(|j| {
        let mut row = vec![xs[j], explicit.at(j)];
        row.extend(profiles.iter().map(|s| s.w_centered.at(j)));
        row
    });
    let mut series: Vec<Series> = profiles
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pts = xs.iter().copied().zip(s.w_centered.values().iter().copied()).collect();
            Series::new(format!("gamma = {}", s.gamma), pts, PALETTE[i % PALETTE.len()])
        })
        .collect();
    series.push(Series::new("eikonal", xs.iter().copied().zip(explicit.values().iter().copied()).collect(), "#000000").dashed());
    let plot = LinePlot {
        title: "scaled value profiles".into(),
        x_label: "x".into(),
        y_label: "w - w(0)".into(),
        series,
        ..Default::default()
    };
    let bound = lipschitz_bound(&p);
    let max_wx = entries.iter().map(|e| e.sup_wx).fold(0.0, f64::max);
    let results = json!({
        "gammas": gammas,
        "sup_gap": entries.iter().map(|e| e.sup_gap).collect::<Vec<_>>(),
        "sup_wx": entries.iter().map(|e| e.sup_wx).collect::<Vec<_>>(),
        "gap_decay_order": if entries.len() >= 2 { Some(gap_decay_order(&entries)) } else { None },
        "lipschitz_bound": bound,
        "lipschitz_ok": max_wx <= bound,
    });
    Ok(Output::new(results)
        .file("gap.csv", gap_csv(&entries))
        .file("profiles.csv", csv(&header, rows))
        .file("eikonal.svg", plot.render()))
}

fn linearize(c: &RunConfig) -> Result<Output, RunError> {
    let p = params(c)?;
    let g = grid(c)?;
    let opts = evolution_options(c);
    let lambda = c.lambda.unwrap_or(p.sigma2() / 16.0);
    let horizon = c.horizon.unwrap_or(30.0);
    let steps = (horizon / opts.dt).round().max(1.0) as usize;
    let wf = WeightedForcing::exponential(lambda, (c.amplitude[0], c.amplitude[1]), steps, opts.dt)?;
    let xi_c = xi_bound_constant(&p, lambda)?;
    let mu0 = initial_measure(&c.initial_condition, g)?;
    let probe = remainder_probe_with(&mu0, &wf, &p, &opts)?;
    let t = probe.mn.times();
    let line = |v: &[f64]| t.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let plot = LinePlot {
        title: format!("linearised response, lambda = {lambda}"),
        x_label: "t".into(),
        y_label: "value".into(),
        series: vec![
            Series::new("M", line(probe.mn.gamma()), PALETTE[0]).thin(400),
            Series::new("N", line(probe.mn.eta()), PALETTE[1]).thin(400),
            Series::new("Xi_gamma", line(probe.xi.gamma()), PALETTE[2]).thin(400).dashed(),
            Series::new("Xi_eta", line(probe.xi.eta()), PALETTE[3]).thin(400).dashed(),
        ],
        ..Default::default()
    };
    let results = json!({
        "lambda": lambda,
        "kappa_c": p.kappa_c(),
        "xi_bound_constant": xi_c,
        "contraction_bound": p.kappa() * xi_c,
        "c2": c2_constant(&p),
        "forcing_norm": wf.norm_lambda,
        "d_initial": dist_to_uniform(&mu0),
        "r_norm": probe.r_norm,
        "r_bound": probe.bound,
    });
    Ok(Output::new(results)
        .file("remainder.csv", probe.to_csv())
        .file("linearize.svg", plot.render()))
}

fn particles(c: &RunConfig) -> Result<Output, RunError> {
    let mut p = params(c)?;
    let mut g = grid(c)?;
    let mut gamma = None;
    let (drift, auto_mu) = match c.drift_source()? {
        DriftSpec::Zero => (DriftSource::Zero, ("uniform".to_string(), Measure::uniform(g))),
        DriftSpec::Stationary(fixed) => {
            let gm = match fixed {
                Some(gm) => gm,
                None => find_fixed_points_with(c.kappa, &p, g, &fixed_point_options(c))?.largest(),
            };
            gamma = Some(gm);
            let vf = solve_stationary_hjb_with(gm, &p, g, &hjb_options(c))?;
            let mu = gibbs_measure(&vf, &p);
            (DriftSource::Stationary(vf), ("gibbs".to_string(), mu))
        }
        DriftSpec::MfgRun(dir) => {
            let run = Summary::read(&dir)?.config;
            if run.command != Command::Evolve {
                return Err(ConfigError(format!("{} is a `{}` run, not `evolve`", dir.display(), run.command)).into());
            }
            let (sol, mu0, rp) = solve_evolve(&run)?;
            p = rp;
            g = mu0.grid();
            (DriftSource::Field(sol.value), (run.initial_condition, mu0))
        }
    };
    let (init, mu0) = if c.initial_condition == "auto" {
        auto_mu
    } else {
        (c.initial_condition.clone(), initial_measure(&c.initial_condition, g)?)
    };
    let d = SimulationOptions::default();
    let dt = c.dt.unwrap_or(d.dt);
    let opts = SimulationOptions {
        n_particles: c.n_particles,
        dt,
        horizon: c.horizon.unwrap_or(d.horizon),
        seed: c.seed,
        record_every: ((0.1 / dt).round() as usize).max(1),
    };
    let sim = simulate(&mu0, &drift, &p, &opts)?;
    // a stationary ensemble should keep the cosine moment of its Gibbs start
    let target = trig_moments(&mu0).a;
    let worst_z = gamma.filter(|_| init == "gibbs").map(|_| {
        sim.stats
            .iter()
            .map(|s| (s.a_emp - target).abs() / s.se)
            .fold(0.0, f64::max)
    });
    let pts = |f: &dyn Fn(&kuramoto_mfg::particles::EnsembleStats) -> f64| {
        sim.stats.iter().map(|s| (s.t, f(s))).collect::<Vec<_>>()
    };
    let plot = LinePlot {
        title: format!("empirical cosine moment, N = {}", c.n_particles),
        x_label: "t".into(),
        y_label: "a_emp".into(),
        series: vec![
            Series::new("a_emp", pts(&|s| s.a_emp), PALETTE[0]),
            Series::new("+3 se", pts(&|s| s.a_emp + 3.0 * s.se), "#999999").dashed(),
            Series::new("-3 se", pts(&|s| s.a_emp - 3.0 * s.se), "#999999").dashed(),
            Series::new("mu0(cos)", pts(&|_| target), PALETTE[1]),
        ],
        ..Default::default()
    };
    let last = sim.stats.last();
    let results = json!({
        "drift": c.drift,
        "gamma": gamma,
        "initial_condition": init,
        "initial_a": target,
        "max_z_stationary": worst_z,
        "final_a_emp": last.map(|s| s.a_emp),
        "final_b_emp": last.map(|s| s.b_emp),
        "final_se": last.map(|s| s.se),
        "final_d_emp": last.map(|s| s.d_emp),
    });
    Ok(Output::new(results)
        .file("particles.csv", sim.to_csv())
        .file("particles.svg", plot.render()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_class() {
        use kuramoto_mfg::Error as E;
        assert_eq!(RunError::from(ConfigError("x".into())).exit_code(), 2);
        assert_eq!(RunError::from(E::InvalidGrid("x".into())).exit_code(), 2);
        assert_eq!(RunError::from(E::NonConvergence { iterations: 1, residual: 1.0 }).exit_code(), 3);
        assert_eq!(RunError::from(E::StepRejected { halvings: 1, dt: 1.0 }).exit_code(), 3);
        assert_eq!(RunError::from(E::PicardStagnation { history: vec![1.0] }).exit_code(), 4);
    }

    #[test]
    fn default_dir_ignores_the_output_dir_field() {
        let mut c = RunConfig::defaults(Command::Stationary);
        let a = default_output_dir(&c);
        c.output_dir = PathBuf::from("elsewhere");
        assert_eq!(default_output_dir(&c), a);
        c.gamma = 0.3;
        assert_ne!(default_output_dir(&c), a);
        assert!(a.starts_with("runs"));
    }
}
