use eqvol_core::bergman::{gram_offdiagonal, interior_box, log_monomial_norm_at};
use eqvol_core::envelope::ToricSymbol;
use eqvol_core::{
    bergman_weight, complete_series, envelope_level, equilibrium_symbol, example36_series,
    fubini_study_weight, sandwich_report, series_from_generators, ExponentVector, GridSpec,
    MonomialSeries, QuadratureSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ev(c: &[i64]) -> ExponentVector {
    ExponentVector::new(c.to_vec()).unwrap()
}

fn even_series() -> MonomialSeries {
    series_from_generators(1, 2, vec![(1, ev(&[0])), (1, ev(&[2]))]).unwrap()
}

#[test]
fn lower_bound_by_envelope_level() {
    let spec = QuadratureSpec::default();
    for (w, d) in [(complete_series(1, 1).unwrap(), 1u64), (even_series(), 2)] {
        let phi = fubini_study_weight(1, d).unwrap();
        // ∫ dV as the level-0 norm of the constant.
        let log_vol = log_monomial_norm_at(&[0.0], 0, &phi, &spec)
            .unwrap()
            .log_norm;
        for k in [1u64, 2, 4, 8] {
            let u = bergman_weight(&w, k, &phi, &spec).unwrap();
            let fk = envelope_level(&w, k, &phi).unwrap();
            for i in 0..=120 {
                let t = [-6.0 + 0.1 * i as f64];
                assert!(
                    u.evaluate(&t) >= fk.value(&t) - log_vol / k as f64 - 1e-9,
                    "k={k} t={t:?}"
                );
                // Mean-value direction with the constant 2.
                assert!(
                    u.evaluate(&t) <= phi.evaluate(&t) + ((u.dim() as f64).ln() + 2.0) / k as f64
                );
            }
        }
    }
}

#[test]
fn doubling_differences_shrink() {
    let spec = QuadratureSpec::default();
    let phi = fubini_study_weight(1, 1).unwrap();
    let w = complete_series(1, 1).unwrap();
    let levels: Vec<_> = [2u64, 4, 8, 16, 32]
        .iter()
        .map(|&k| bergman_weight(&w, k, &phi, &spec).unwrap())
        .collect();
    let mut prev = f64::INFINITY;
    for pair in levels.windows(2) {
        let eps = (0..=60)
            .map(|i| [-3.0 + 0.1 * i as f64])
            .map(|t| pair[0].evaluate(&t) - pair[1].evaluate(&t))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(eps < prev);
        prev = eps;
    }
    assert!(prev < 0.1);
}

#[test]
fn random_gram_entries_vanish() {
    let spec = QuadratureSpec::default();
    let phi = fubini_study_weight(2, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let k = 4;
    let mut checked = 0;
    while checked < 6 {
        let a = [rng.gen_range(0..=4i64), rng.gen_range(0..=4i64)];
        let b = [rng.gen_range(0..=4i64), rng.gen_range(0..=4i64)];
        if a == b || a[0] + a[1] > 4 || b[0] + b[1] > 4 {
            continue;
        }
        let g = gram_offdiagonal(&ev(&a), &ev(&b), k, &phi, &spec, 16).unwrap();
        assert!(g <= 1e-8, "{a:?} {b:?} {g}");
        checked += 1;
    }
}

#[test]
fn bergman_weights_are_convex() {
    let spec = QuadratureSpec::default();
    let phi = fubini_study_weight(2, 1).unwrap();
    let u = bergman_weight(&complete_series(2, 1).unwrap(), 3, &phi, &spec).unwrap();
    assert_eq!(u.dim(), 10);
    assert!(u.log_norms.values().all(|v| v.is_finite()));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let y = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let m = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
        assert!(u.value_at(&m) <= 0.5 * (u.value_at(&x) + u.value_at(&y)) + 1e-12);
    }
}

#[test]
fn sandwich_for_non_birational_series() {
    let spec = QuadratureSpec::default();
    let phi = fubini_study_weight(1, 2).unwrap();
    let w = even_series();
    let p = equilibrium_symbol(&w, &phi, &[1, 2, 4, 8, 16, 32]).unwrap();
    let k_box = GridSpec::cube(1, -3, 3, 121).unwrap();
    let report = sandwich_report(&w, &phi, &p, &k_box, &[4, 8, 16], &spec).unwrap();
    let gaps: Vec<f64> = report.rows.iter().map(|r| r.sup_gap).collect();
    assert!(gaps[2] < gaps[0]);
    assert!(report.to_csv().starts_with("k,sup_gap"));
}

#[test]
fn sandwich_away_from_the_wall() {
    let spec = QuadratureSpec::default();
    let phi = fubini_study_weight(2, 1).unwrap();
    let w = example36_series();
    let p = equilibrium_symbol(&w, &phi, &[1, 2, 4, 8, 16]).unwrap();
    let k_box = GridSpec::new(
        vec![
            eqvol_core::rational::q_int(-2),
            eqvol_core::rational::q_int(-2),
        ],
        vec![
            eqvol_core::rational::q_int(2),
            eqvol_core::rational::q_int(2),
        ],
        vec![21, 21],
    )
    .unwrap();
    let report = sandwich_report(&w, &phi, &p, &k_box, &[2, 4, 8], &spec).unwrap();
    let gaps: Vec<f64> = report.rows.iter().map(|r| r.sup_gap).collect();
    assert!(gaps[2] < gaps[0], "{gaps:?}");
}

#[test]
fn interior_box_keeps_slopes_inside() {
    let phi = fubini_study_weight(1, 1).unwrap();
    let p =
        equilibrium_symbol(&complete_series(1, 1).unwrap(), &phi, &[1, 2, 4, 8, 16, 32]).unwrap();
    let b = interior_box(&p.function, 0.05, 0.5, 10.0, 201).unwrap();
    let r = eqvol_core::rational::q_to_f64(&b.upper[0]);
    // Slopes of the level-32 envelope at ±r stay 0.05 inside [0, 1].
    assert!((2.0..=4.0).contains(&r), "{r}");
}
