use std::sync::Arc;

use glperiod_core::forcing::check_oddness;
use glperiod_core::operators::{
    auto_cutoffs, make_cutoffs, multiplier_ratio, project, semigroup_apply, smooth_step, Band, LinearOperator,
};
use glperiod_core::random::{random_field, sample_rng, RandomFieldSpec};
use glperiod_core::solver::{linear_period_map, TimeQuadrature};
use glperiod_core::spectral::{cubic_nonlinearity, make_grid, FieldSeries, Grid, GridConfig};
use glperiod_core::stability::perturbation_terms;
use num_complex::Complex64;
use proptest::prelude::*;

fn grid(dim: usize, n: usize, box_length: f64) -> Arc<Grid> {
    make_grid(GridConfig::new(dim, n, box_length)).unwrap()
}

fn grids() -> impl Strategy<Value = Arc<Grid>> {
    (1usize..=3, prop::sample::select(vec![8usize, 12, 16]), 8.0f64..40.0)
        .prop_map(|(dim, n, l)| grid(dim, if dim == 3 { n.min(12) } else { n }, l))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn smooth_step_is_a_monotone_partition(a in -0.5f64..1.5, b in -0.5f64..1.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!((0.0..=1.0).contains(&smooth_step(lo)));
        prop_assert!(smooth_step(lo) >= smooth_step(hi));
        prop_assert!((smooth_step(a) + smooth_step(1.0 - a) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projections_sum_to_identity(g in grids(), seed in any::<u64>(), frac in 0.1f64..0.9) {
        let r_inf = 0.9 * g.max_axis_frequency();
        let cut = make_cutoffs(frac * r_inf, r_inf, &g).unwrap();
        let f = random_field(&g, &RandomFieldSpec::broadband(), &mut sample_rng(seed, 0));
        let mut sum = project(&f, Band::Low, &cut);
        sum.axpy(Complex64::new(1.0, 0.0), &project(&f, Band::High, &cut)).unwrap();
        prop_assert!(sum.sub(&f).unwrap().l2_norm() <= 1e-14 * f.l2_norm());
    }

    #[test]
    fn semigroup_contracts_and_composes(g in grids(), seed in any::<u64>(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let op = LinearOperator::new(&g, 1.0).unwrap();
        let f = random_field(&g, &RandomFieldSpec::broadband(), &mut sample_rng(seed, 1));
        let st = semigroup_apply(&f, t, &op).unwrap();
        prop_assert!(st.l2_norm() <= f.l2_norm() * (1.0 + 1e-14));
        let composed = semigroup_apply(&semigroup_apply(&f, s, &op).unwrap(), t, &op).unwrap();
        let direct = semigroup_apply(&f, s + t, &op).unwrap();
        prop_assert!(composed.sub(&direct).unwrap().l2_norm() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn transforms_round_trip(g in grids(), seed in any::<u64>()) {
        let f = random_field(&g, &RandomFieldSpec::broadband(), &mut sample_rng(seed, 2));
        let back = f.to_physical().into_frequency();
        prop_assert!(back.sub(&f).unwrap().l2_norm() <= 1e-13 * f.l2_norm());
        // Parseval with the continuum normalisation.
        prop_assert!((f.to_physical().l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn perturbation_terms_match_cubic_difference(
        g in grids(),
        seed in any::<u64>(),
        sv in -3.0f64..1.0,
        sw in -3.0f64..1.0,
    ) {
        let mut rng = sample_rng(seed, 3);
        let v = random_field(&g, &RandomFieldSpec { l2_norm: 10f64.powf(sv), ..RandomFieldSpec::broadband() }, &mut rng)
            .into_physical();
        let w = random_field(&g, &RandomFieldSpec { l2_norm: 10f64.powf(sw), ..RandomFieldSpec::broadband() }, &mut rng)
            .into_physical();
        let full = cubic_nonlinearity(&v.add(&w).unwrap()).unwrap();
        let base = cubic_nonlinearity(&v).unwrap();
        let diff = full.sub(&base).unwrap();
        let terms = perturbation_terms(&w, &v).unwrap();
        let scale = full.max_modulus().max(base.max_modulus());
        prop_assert!(terms.sub(&diff).unwrap().max_modulus() <= 1e-12 * scale);
    }

    #[test]
    fn cubic_preserves_oddness(g in grids(), seed in any::<u64>()) {
        let spec = RandomFieldSpec { odd: true, ..RandomFieldSpec::broadband() };
        let f = random_field(&g, &spec, &mut sample_rng(seed, 4));
        prop_assert!(check_oddness(&f) <= 1e-13);
        let c = cubic_nonlinearity(&f.to_physical()).unwrap();
        prop_assert!(check_oddness(&c) <= 1e-13);
    }

    #[test]
    fn period_map_is_periodic_and_keeps_oddness(g in grids(), seed in any::<u64>(), m_t in 8usize..20) {
        let op = LinearOperator::new(&g, 1.0).unwrap();
        let spec = RandomFieldSpec { odd: true, ..RandomFieldSpec::broadband() };
        let a = random_field(&g, &spec, &mut sample_rng(seed, 5));
        let fields: Vec<_> = (0..=m_t)
            .map(|m| a.scaled(Complex64::new((std::f64::consts::TAU * m as f64 / m_t as f64).sin(), 0.0)))
            .collect();
        let f = FieldSeries::new(fields, 1.0).unwrap();
        let u = linear_period_map(&f, &op, TimeQuadrature::PiecewiseLinear, 1e-10).unwrap();
        prop_assert!(u.periodicity_residual() <= 1e-12);
        for field in u.fields() {
            prop_assert!(check_oddness(field) <= 1e-12);
        }
    }

    #[test]
    fn multiplier_ratio_is_increasing(theta in 1e-8f64..4.0, step in 1e-3f64..1.0) {
        prop_assert!(multiplier_ratio(theta + step) >= multiplier_ratio(theta));
        prop_assert!(multiplier_ratio(theta) >= std::f64::consts::FRAC_1_SQRT_2 * (1.0 - 1e-12));
    }
}

#[test]
fn auto_cutoffs_keep_the_multiplier_below_one() {
    for dim in 1..=3 {
        for &(n, l) in &[(16usize, 16.0f64), (32, 64.0), (16, 200.0)] {
            let g = grid(dim, if dim == 3 { 16 } else { n }, l);
            let cut = auto_cutoffs(&g, 1.0).unwrap();
            assert!(multiplier_ratio(cut.r_inf * cut.r_inf) < 1.0);
        }
    }
}
