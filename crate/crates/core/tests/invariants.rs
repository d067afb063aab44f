use dlab_core::fit::fit_exponent;
use dlab_core::imethod::{apply_i, i_multiplier_value, IParams};
use dlab_core::lp::{band_random, dyadic_range, low_project, lp_project, SupportSpec};
use dlab_core::nls::{energy, strang_step, Nonlinearity};
use dlab_core::spectral::{dealiased_product, free_propagate, free_propagate_boosted};
use dlab_core::{Field, Grid};
use num_complex::Complex64;
use proptest::prelude::*;

fn ball(grid: &Grid, radius: f64, seed: u64) -> Field {
    band_random(grid, &SupportSpec::Ball { center: [0.0; 3], radius }, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn propagator_is_a_unitary_group(seed in any::<u64>(), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let g = Grid::new(2, 10.0, 32).unwrap();
        let f = ball(&g, 4.0, seed);
        let both = free_propagate(&free_propagate(&f, s), t);
        prop_assert!(both.relative_distance(&free_propagate(&f, s + t)) < 1e-12);
        prop_assert!((both.l2_norm() - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
    }

    #[test]
    fn boost_only_translates_the_modulus(seed in any::<u64>(), t in 0.0f64..0.5) {
        let g = Grid::new(1, 16.0, 64).unwrap();
        let f = ball(&g, 2.0, seed);
        let k = 2.0 * std::f64::consts::PI / 16.0 * 4.0;
        let moving = free_propagate_boosted(&f, t, [k, 0.0, 0.0]);
        let modulated = Field::from_fn(g, |x| Complex64::from_polar(1.0, k * x[0]));
        let lab = free_propagate(&f.pointwise_mul(&modulated).unwrap(), t);
        let a: Vec<f64> = moving.values().iter().map(|z| z.norm()).collect();
        let b: Vec<f64> = lab.values().iter().map(|z| z.norm()).collect();
        prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
    }

    #[test]
    fn littlewood_paley_pieces_sum_to_the_field(seed in any::<u64>(), radius in 1.0f64..12.0) {
        let g = Grid::new(2, 2.0 * std::f64::consts::PI, 32).unwrap();
        let f = ball(&g, radius, seed);
        let mut sum = low_project(&f).into_values();
        for big in dyadic_range(&g) {
            for (acc, z) in sum.iter_mut().zip(lp_project(&f, big).field.values()) {
                *acc += z;
            }
        }
        prop_assert!(Field::from_values(g, sum).unwrap().relative_distance(&f) < 1e-12);
    }

    #[test]
    fn resolved_products_are_pointwise(seed in any::<u64>()) {
        let g = Grid::new(2, 2.0 * std::f64::consts::PI, 32).unwrap();
        let a = ball(&g, 5.0, seed);
        let b = ball(&g, 5.0, seed ^ 0x55);
        let p = dealiased_product(&a, &b).unwrap();
        prop_assert!(p.relative_distance(&a.pointwise_mul(&b).unwrap()) < 1e-11);
    }

    #[test]
    fn strang_steps_keep_mass_and_real_energy(seed in any::<u64>(), kappa in -1.0f64..1.0, dt in 0.001f64..0.02) {
        let g = Grid::new(3, 2.0 * std::f64::consts::PI, 16).unwrap();
        let u = ball(&g, 3.0, seed);
        for nl in [Nonlinearity::hartree(kappa), Nonlinearity::power(kappa)] {
            let v = strang_step(&u, dt, nl).unwrap();
            prop_assert!((v.mass() - u.mass()).abs() < 1e-12 * u.mass());
            prop_assert!(energy(&v, nl).unwrap().is_finite());
        }
    }

    #[test]
    fn power_laws_are_recovered(a in 0.1f64..10.0, p in -3.0f64..3.0) {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0].iter().map(|&x: &f64| (x, a * x.powf(p))).collect();
        let fit = fit_exponent(&pts).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-10);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-10 || p.abs() < 1e-12);
    }

    #[test]
    fn i_is_a_contraction(seed in any::<u64>(), k in 2i32..5, s in 0.1f64..1.0) {
        let p = IParams::new(2f64.powi(k), s).unwrap();
        let g = Grid::new(2, 2.0 * std::f64::consts::PI, 64).unwrap();
        let f = ball(&g, 25.0, seed);
        prop_assert!(apply_i(&f, p).l2_norm() <= f.l2_norm() * (1.0 + 1e-12));
        prop_assert!(i_multiplier_value(p.n_cut.value() * 3.0, p) < 1.0);
    }
}
