//! Stationary measures `μ^γ ∝ exp(-2v^γ/σ²)`, the self-consistency map
//! `F_κ(γ) = κ μ^γ(cos)` and its fixed points.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fp;
use crate::hjb::{solve_stationary_hjb_with, HjbOptions, ValueFn};
use crate::torus::{fmt_sig, sup_norm, trig_moments, Grid, Measure, Params};

/// Stationary value function together with its Gibbs measure.
#[derive(Debug, Clone)]
pub struct StationaryProfile {
    pub gamma: f64,
    pub value: ValueFn,
    pub mu: Measure,
    /// `log Z^γ`; `Z^γ` itself overflows for large `γ`.
    pub log_z: f64,
    pub a: f64,
    pub b: f64,
}

impl StationaryProfile {
    pub fn z_norm(&self) -> f64 {
        self.log_z.exp()
    }
}

/// Normalised `exp(-2v/σ²)`.
pub fn gibbs_measure(vf: &ValueFn, params: &Params) -> Measure {
    gibbs_with_log_z(vf, params).0
}

fn gibbs_with_log_z(vf: &ValueFn, params: &Params) -> (Measure, f64) {
    let s2 = params.sigma2();
    let potential: Vec<f64> = vf.v().values().iter().map(|v| 2.0 * v / s2).collect();
    Measure::gibbs(vf.grid(), &potential)
}

pub fn stationary_profile(gamma: f64, params: &Params, grid: Grid) -> Result<StationaryProfile> {
    stationary_profile_with(gamma, params, grid, &HjbOptions::default())
}

pub fn stationary_profile_with(
    gamma: f64,
    params: &Params,
    grid: Grid,
    opts: &HjbOptions,
) -> Result<StationaryProfile> {
    let value = solve_stationary_hjb_with(gamma, params, grid, opts)?;
    Ok(profile_from_value(value, params))
}

pub fn profile_from_value(value: ValueFn, params: &Params) -> StationaryProfile {
    let (mu, log_z) = gibbs_with_log_z(&value, params);
    let m = trig_moments(&mu);
    StationaryProfile {
        gamma: value.gamma(),
        value,
        mu,
        log_z,
        a: m.a,
        b: m.b,
    }
}

/// Sup norm of the discrete stationary Fokker–Planck residual of `mu`
/// under the drift `-v_x`.
pub fn fp_residual(vf: &ValueFn, mu: &Measure, params: &Params) -> f64 {
    sup_norm(&fp::stationary_residual(
        vf.grid(),
        vf.v().values(),
        mu.density(),
        params.sigma2(),
    ))
}

/// `F_κ(γ) = κ μ^γ(cos)`.
pub fn big_f(kappa: f64, gamma: f64, params: &Params, grid: Grid) -> Result<f64> {
    big_f_with(kappa, gamma, params, grid, &HjbOptions::default())
}

pub fn big_f_with(kappa: f64, gamma: f64, params: &Params, grid: Grid, opts: &HjbOptions) -> Result<f64> {
    if !(kappa >= 0.0) {
        return Err(Error::InvalidInput(format!("kappa = {kappa} must be >= 0")));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    Ok(kappa * stationary_profile_with(gamma, params, grid, opts)?.a)
}

/// Fixed points of `F_κ` for one interaction strength.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationPoint {
    pub kappa: f64,
    /// Always starts with `0`.
    pub fixed_points: Vec<f64>,
    /// `g(μ^γ)` for each fixed point.
    pub order_parameters: Vec<f64>,
    /// Final bisection bracket of each positive fixed point.
    pub brackets: Vec<(f64, f64)>,
}

impl BifurcationPoint {
    pub fn largest(&self) -> f64 {
        self.fixed_points.iter().cloned().fold(0.0, f64::max)
    }
}

/// Settings for [`find_fixed_points_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointOptions {
    /// Scan spacing; `None` means `κ/200`.
    pub scan_step: Option<f64>,
    /// Target `|F_κ(γ) - γ|` at an accepted root.
    pub tol: f64,
    /// Roots closer than this to zero are not resolved.
    pub min_root: f64,
    pub hjb: HjbOptions,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            scan_step: None,
            tol: 1e-8,
            min_root: 1e-4,
            hjb: HjbOptions::default(),
        }
    }
}

pub fn find_fixed_points(kappa: f64, params: &Params, grid: Grid, scan_step: f64) -> Result<BifurcationPoint> {
    let opts = FixedPointOptions {
        scan_step: Some(scan_step),
        ..FixedPointOptions::default()
    };
    find_fixed_points_with(kappa, params, grid, &opts)
}

/// Scans `r(γ) = F_κ(γ) - γ` on `(0, κ]`, brackets each sign change and
/// bisects it down to `|r| ≤ tol`.
pub fn find_fixed_points_with(
    kappa: f64,
    params: &Params,
    grid: Grid,
    opts: &FixedPointOptions,
) -> Result<BifurcationPoint> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidInput(format!("kappa = {kappa} must be finite and >= 0")));
    }
    let mut point = BifurcationPoint {
        kappa,
        fixed_points: vec![0.0],
        order_parameters: vec![0.0],
        brackets: Vec::new(),
    };
    if kappa == 0.0 {
        return Ok(point);
    }
    let step = opts.scan_step.unwrap_or(kappa / 200.0);
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("scan step {step} must be positive")));
    }
    let r = |gamma: f64| -> Result<(f64, f64)> {
        let prof = stationary_profile_with(gamma, params, grid, &opts.hjb)?;
        Ok((kappa * prof.a - gamma, prof.a.hypot(prof.b)))
    };

    let steps = (kappa / step).ceil() as usize;
    let mut lo = opts.min_root.min(step);
    let mut r_lo = r(lo)?.0;
    for k in 1..=steps {
        let hi = (k as f64 * step).min(kappa);
        if hi <= lo {
            continue;
        }
        let (r_hi, g_hi) = r(hi)?;
        if r_hi == 0.0 {
            point.fixed_points.push(hi);
            point.order_parameters.push(g_hi);
            point.brackets.push((hi, hi));
        } else if r_lo * r_hi < 0.0 {
            let (root, g, bracket) = bisect(&r, lo, hi, r_lo, opts.tol)?;
            point.fixed_points.push(root);
            point.order_parameters.push(g);
            point.brackets.push(bracket);
        }
        lo = hi;
        r_lo = r_hi;
    }
    Ok(point)
}

fn bisect(
    r: &impl Fn(f64) -> Result<(f64, f64)>,
    mut lo: f64,
    mut hi: f64,
    mut r_lo: f64,
    tol: f64,
) -> Result<(f64, f64, (f64, f64))> {
    loop {
        let mid = 0.5 * (lo + hi);
        let (r_mid, g_mid) = r(mid)?;
        if r_mid.abs() <= tol || hi - lo < 1e-15 * hi.max(1.0) {
            return Ok((mid, g_mid, (lo, hi)));
        }
        if (r_mid < 0.0) == (r_lo < 0.0) {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
        }
    }
}

/// `A'(0) κ` estimated from `F_κ(γ₀)/γ₀` at `γ₀ = 10⁻³` and `5·10⁻⁴`,
/// Richardson-extrapolated. `F_κ` is odd in `γ`, so the quotient is a
/// central difference with an `O(γ₀²)` error.
pub fn slope_at_zero(kappa: f64, params: &Params, grid: Grid) -> Result<f64> {
    let g0 = 1e-3;
    let s1 = big_f(kappa, g0, params, grid)? / g0;
    let s2 = big_f(kappa, 0.5 * g0, params, grid)? / (0.5 * g0);
    Ok((4.0 * s2 - s1) / 3.0)
}

/// Result of a sweep over `κ`.
#[derive(Debug, Clone)]
pub struct BifurcationScan {
    pub points: Vec<BifurcationPoint>,
    /// `κ` values whose solve failed, with the error.
    pub failures: Vec<(f64, Error)>,
    /// `κ` values where the largest fixed point dropped below the previous one.
    pub monotonicity_violations: Vec<f64>,
}

impl BifurcationScan {
    /// CSV with one row per fixed point, zero rows included.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kappa,gamma_star,order_parameter\n");
        for p in &self.points {
            for (g, op) in p.fixed_points.iter().zip(&p.order_parameters) {
                let _ = writeln!(out, "{},{},{}", fmt_sig(p.kappa), fmt_sig(*g), fmt_sig(*op));
            }
        }
        out
    }
}

pub fn bifurcation_scan(
    kappa_min: f64,
    kappa_max: f64,
    n_kappa: usize,
    params: &Params,
    grid: Grid,
) -> Result<BifurcationScan> {
    bifurcation_scan_with(kappa_min, kappa_max, n_kappa, params, grid, &FixedPointOptions::default())
}

pub fn bifurcation_scan_with(
    kappa_min: f64,
    kappa_max: f64,
    n_kappa: usize,
    params: &Params,
    grid: Grid,
    opts: &FixedPointOptions,
) -> Result<BifurcationScan> {
    if !(kappa_min >= 0.0 && kappa_min < kappa_max) || n_kappa == 0 {
        return Err(Error::InvalidInput(format!(
            "need 0 <= kappa_min < kappa_max and at least one point, got [{kappa_min}, {kappa_max}] x {n_kappa}"
        )));
    }
    let kappas: Vec<f64> = if n_kappa == 1 {
        vec![kappa_min]
    } else {
        (0..n_kappa)
            .map(|i| kappa_min + (kappa_max - kappa_min) * i as f64 / (n_kappa - 1) as f64)
            .collect()
    };
    let results: Vec<(f64, Result<BifurcationPoint>)> = kappas
        .par_iter()
        .map(|&k| (k, find_fixed_points_with(k, params, grid, opts)))
        .collect();

    let mut scan = BifurcationScan {
        points: Vec::new(),
        failures: Vec::new(),
        monotonicity_violations: Vec::new(),
    };
    let mut prev = 0.0;
    for (k, res) in results {
        match res {
            Ok(p) => {
                if p.largest() < prev - 1e-8 {
                    scan.monotonicity_violations.push(k);
                }
                prev = p.largest();
                scan.points.push(p);
            }
            Err(e) => scan.failures.push((k, e)),
        }
    }
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::align;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn zero_value_gives_uniform() {
        let p = Params::reference(1.0);
        let prof = stationary_profile(0.0, &p, grid(64)).unwrap();
        assert!(prof.mu.sup_distance(&Measure::uniform(grid(64))) < 1e-12);
        assert!((prof.z_norm() - crate::torus::TWO_PI).abs() < 1e-12);
    }

    #[test]
    fn density_matches_closed_form_and_is_stationary() {
        let p = Params::reference(2.0);
        let prof = stationary_profile(1.3, &p, grid(128)).unwrap();
        let z = prof.z_norm();
        for (d, v) in prof.mu.density().iter().zip(prof.value.v().values()) {
            assert!((d - (-2.0 * v / p.sigma2()).exp() / z).abs() < 1e-12);
        }
        assert!(prof.b.abs() < 1e-9);
        assert!(fp_residual(&prof.value, &prof.mu, &p) <= 1e-8);
    }

    #[test]
    fn f_is_bounded_and_vanishes_at_zero() {
        let p = Params::reference(2.0);
        let g = grid(64);
        assert_eq!(big_f(2.0, 0.0, &p, g).unwrap(), 0.0);
        for gamma in [0.1, 1.0, 5.0] {
            assert!(big_f(2.0, gamma, &p, g).unwrap().abs() <= 2.0);
        }
    }

    #[test]
    fn reference_peak_and_trough() {
        let p = Params::reference(2.0);
        let prof = stationary_profile(1.469, &p, grid(256)).unwrap();
        let (aligned, _) = align(&prof.mu).unwrap();
        let peak = aligned.density().iter().cloned().fold(0.0, f64::max);
        let trough = aligned.density().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((peak - 0.5212).abs() < 5e-3, "peak {peak}");
        assert!((trough - 0.002734).abs() < 5e-4, "trough {trough}");
    }

    #[test]
    fn subcritical_has_only_zero() {
        let bp = find_fixed_points(0.5, &Params::reference(0.5), grid(64), 0.5 / 200.0).unwrap();
        assert_eq!(bp.fixed_points, vec![0.0]);
    }

    #[test]
    fn scan_csv_lists_zero_rows() {
        let scan = bifurcation_scan(0.2, 0.4, 2, &Params::reference(0.0), grid(32)).unwrap();
        let csv = scan.to_csv();
        assert!(csv.starts_with("kappa,gamma_star,order_parameter\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!(scan.failures.is_empty());
    }

    #[test]
    fn invalid_scan_range() {
        assert!(bifurcation_scan(1.0, 0.5, 3, &Params::reference(0.0), grid(32)).is_err());
    }
}
