use kuramoto_mfg::gibbs::{find_fixed_points, gibbs_measure};
use kuramoto_mfg::hjb::solve_stationary_hjb;
use kuramoto_mfg::particles::{
    deviation_probe, simulate, CostEnvironment, CostOptions, DriftSource, SimulationOptions,
};
use kuramoto_mfg::torus::{Grid, Measure, Params};
use proptest::prelude::*;

#[test]
fn clt_envelope_for_uniform_noise() {
    let g = Grid::new(64).unwrap();
    let mu = Measure::uniform(g);
    let p = Params::reference(0.0);
    let n = 1000;
    let envelope = 4.0 / (n as f64).sqrt();
    let (mut inside, mut total) = (0, 0);
    for seed in 0..20 {
        let opts = SimulationOptions { n_particles: n, dt: 1e-2, horizon: 2.0, seed, record_every: 5 };
        let sim = simulate(&mu, &DriftSource::Zero, &p, &opts).unwrap();
        for s in &sim.stats {
            total += 1;
            inside += (s.a_emp.abs() <= envelope && s.b_emp.abs() <= envelope) as usize;
        }
    }
    assert!(inside as f64 >= 0.99 * total as f64, "{inside}/{total}");
}

#[test]
fn stationary_ensemble_keeps_its_order_parameter() {
    let p = Params::reference(2.0);
    let g = Grid::new(256).unwrap();
    let gamma = find_fixed_points(2.0, &p, g, 0.01).unwrap().largest();
    let vf = solve_stationary_hjb(gamma, &p, g).unwrap();
    let mu = gibbs_measure(&vf, &p);
    let opts = SimulationOptions { n_particles: 2000, horizon: 2.0, record_every: 250, ..Default::default() };
    let sim = simulate(&mu, &DriftSource::Stationary(vf), &p, &opts).unwrap();
    for s in &sim.stats {
        assert!((s.a_emp - gamma / 2.0).abs() <= 3.0 * s.se, "t = {}: {} vs {}", s.t, s.a_emp, gamma / 2.0);
    }
}

#[test]
fn deviations_do_not_pay() {
    let p = Params::reference(2.0);
    let g = Grid::new(128).unwrap();
    let vf = solve_stationary_hjb(1.4582, &p, g).unwrap();
    let env = CostEnvironment::stationary(&vf);
    let opts = CostOptions { paths: 400, dt: 5e-3, tol: 1e-2, ..Default::default() };
    let (_, devs) = deviation_probe(0.0, &DriftSource::Stationary(vf), &env, &p, &[0.1, -0.1, 0.5, -0.5], &opts).unwrap();
    for d in devs {
        assert!(d.consistent(), "offset {}: {} ± {}", d.offset, d.excess, d.excess_se);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn seeds_reproduce_bit_identical_paths(seed in 0u64..1000) {
        let g = Grid::new(64).unwrap();
        let p = Params::reference(1.0);
        let vf = solve_stationary_hjb(0.7, &p, g).unwrap();
        let mu = Measure::from_fn(g, |x| (-x.sin()).exp()).unwrap();
        let drift = DriftSource::Stationary(vf);
        let opts = SimulationOptions { n_particles: 300, horizon: 0.5, seed, ..Default::default() };
        let a = simulate(&mu, &drift, &p, &opts).unwrap();
        let b = simulate(&mu, &drift, &p, &opts).unwrap();
        prop_assert_eq!(a.ensemble.phases(), b.ensemble.phases());
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }
}
