use kuramoto_mfg::torus::{
    dist_to_uniform, distance_moments, running_cost, translate, trig_moments, Grid, Measure, TWO_PI,
};
use proptest::prelude::*;

fn trig_density(grid: Grid, c: [f64; 4]) -> Measure {
    Measure::from_fn(grid, |x| {
        1.0 + c[0] * x.cos() + c[1] * x.sin() + c[2] * (2.0 * x).cos() + c[3] * (2.0 * x).sin()
    })
    .unwrap()
}

fn even_n() -> impl Strategy<Value = usize> {
    (8usize..=256).prop_map(|k| 2 * k)
}

fn coeffs() -> impl Strategy<Value = [f64; 4]> {
    [-0.24f64..0.24, -0.24f64..0.24, -0.24f64..0.24, -0.24f64..0.24]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rectangle_rule_is_exact_on_trig_polynomials(n in even_n(), c in coeffs()) {
        let mu = trig_density(Grid::new(n).unwrap(), c);
        // density is (1 + ...)/(2π) after normalisation
        let m = trig_moments(&mu);
        let [_, _, sc, c2] = distance_moments(&mu);
        prop_assert!((mu.mass() - 1.0).abs() < 1e-12);
        prop_assert!((m.a - c[0] / 2.0).abs() < 1e-12);
        prop_assert!((m.b - c[1] / 2.0).abs() < 1e-12);
        prop_assert!((c2 - (0.5 + c[2] / 4.0)).abs() < 1e-12);
        prop_assert!((sc - c[3] / 4.0).abs() < 1e-12);
    }

    #[test]
    fn translate_round_trip_is_second_order(k in 5u32..9, c in coeffs(), z in -7.0f64..7.0) {
        let n = 1usize << k;
        let g = Grid::new(n).unwrap();
        let mu = trig_density(g, c);
        let back = translate(&translate(&mu, z), -z);
        // |f''| ≤ 4·Σ|c|/(2π), interpolation error ≤ h²|f''|/8 per pass
        let bound = 2.0 * g.h() * g.h() / 8.0 * 4.0 * c.iter().map(|x| x.abs()).sum::<f64>() / TWO_PI;
        prop_assert!(back.sup_distance(&mu) <= bound + 1e-14);
        prop_assert!((back.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn order_parameter_is_rotation_invariant_on_grid(n in even_n(), c in coeffs(), shift in 0usize..512) {
        let g = Grid::new(n).unwrap();
        let mu = trig_density(g, c);
        let z = (shift % n) as f64 * g.h();
        prop_assert!((trig_moments(&translate(&mu, z)).g - trig_moments(&mu).g).abs() < 1e-10);
    }

    #[test]
    fn order_parameter_off_grid_shift_is_damped_at_most_h2(k in 5u32..10, c in coeffs(), z in 0.0f64..TWO_PI) {
        let g = Grid::new(1usize << k).unwrap();
        let mu = trig_density(g, c);
        let before = trig_moments(&mu).g;
        let after = trig_moments(&translate(&mu, z)).g;
        prop_assert!(after <= before + 1e-12);
        prop_assert!(before - after <= before * g.h() * g.h() / 8.0 + 1e-12);
    }

    #[test]
    fn running_cost_in_unit_range(n in even_n(), w in prop::collection::vec(0.0f64..1.0, 1..17), x in -10.0f64..10.0) {
        let g = Grid::new(n).unwrap();
        // blocky positive weights, including near-atomic shapes
        let weights: Vec<f64> = (0..n).map(|j| w[j * w.len() / n].powi(8) + 1e-300).collect();
        let mu = Measure::from_weights(g, weights).unwrap();
        let c = running_cost(x, &mu);
        prop_assert!((-1e-10..=2.0 + 1e-10).contains(&c));
    }

    #[test]
    fn distance_vanishes_iff_moments_vanish(n in even_n(), c in coeffs(), zero in prop::bool::ANY) {
        let g = Grid::new(n).unwrap();
        // zero moments of cos, sin, sin·cos, cos² - 1/2 when only cos 3x and sin 4x are present
        let mu = if zero {
            Measure::from_fn(g, |x| 1.0 + c[0] * (3.0 * x).cos() + c[1] * (4.0 * x).sin()).unwrap()
        } else {
            trig_density(g, c)
        };
        let m = distance_moments(&mu);
        let all_zero = m[0].abs() < 1e-12 && m[1].abs() < 1e-12 && m[2].abs() < 1e-12 && (m[3] - 0.5).abs() < 1e-12;
        prop_assert_eq!(dist_to_uniform(&mu) < 1e-12, all_zero);
        if zero {
            prop_assert!(dist_to_uniform(&mu) < 1e-12);
        }
    }
}

#[test]
fn uniform_is_at_distance_zero() {
    for n in [16, 256, 512] {
        assert!(dist_to_uniform(&Measure::uniform(Grid::new(n).unwrap())) < 1e-15);
    }
}

#[test]
fn exp_cos_moments_match_bessel_ratio() {
    let mu = Measure::from_fn(Grid::new(256).unwrap(), |x| x.cos().exp()).unwrap();
    let m = trig_moments(&mu);
    assert!((m.a - 0.446_389_965_896_534_6).abs() < 1e-12);
    assert!(m.b.abs() < 1e-15);
}
