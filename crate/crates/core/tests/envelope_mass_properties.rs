use eqvol_core::envelope::{weighted_fubini_study, LegendreOptions};
use eqvol_core::lp::upper_envelope_value;
use eqvol_core::monge_ampere::{active_pieces, mass_report, Comparison, GridMassOptions};
use eqvol_core::rational::{q_frac, q_from_f64, q_int, q_to_f64, QVector};
use eqvol_core::{
    comparison_check, envelope_level, fubini_study_weight, legendre, ma_mass_grid_pl, ma_mass_pl,
    mk_self_intersection, series_from_generators, ExponentVector, GridSpec, MonomialSeries,
    PLConvexFunction,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ev(c: &[i64]) -> ExponentVector {
    ExponentVector::new(c.to_vec()).unwrap()
}

fn pl_2d() -> impl Strategy<Value = PLConvexFunction> {
    prop::collection::vec((-3i64..=3, -3i64..=3, -16i64..=16), 3..12).prop_map(|raw| {
        let pieces = raw
            .into_iter()
            .map(|(a, b, c)| (vec![q_int(a), q_int(b)], c as f64 / 8.0))
            .collect();
        PLConvexFunction::new(2, pieces).unwrap()
    })
}

fn small_series() -> impl Strategy<Value = MonomialSeries> {
    prop::collection::vec((0i64..=2, 0i64..=2), 1..4).prop_map(|raw| {
        let mut gens = vec![(1, ev(&[0, 0]))];
        for (a, b) in raw {
            gens.push((1, ev(&[a.min(2), b.min(2 - a.min(2))])));
        }
        series_from_generators(2, 2, gens).unwrap()
    })
}

fn unimodular_image(f: &PLConvexFunction, m: [[i64; 2]; 2]) -> PLConvexFunction {
    let pieces = f
        .pieces()
        .iter()
        .map(|p| {
            let s = &p.slope;
            let image = vec![
                &s[0] * q_int(m[0][0]) + &s[1] * q_int(m[1][0]),
                &s[0] * q_int(m[0][1]) + &s[1] * q_int(m[1][1]),
            ];
            (image, p.intercept)
        })
        .collect();
    PLConvexFunction::new(2, pieces).unwrap()
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let phi = weighted_fubini_study(2, 3, &[1.0, 2.5, 0.4]).unwrap();
    let h = 1e-5;
    for _ in 0..1000 {
        let t = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let g = phi.gradient(&t);
        let mut err = 0.0f64;
        for a in 0..2 {
            let mut up = t;
            let mut down = t;
            up[a] += h;
            down[a] -= h;
            let fd = (phi.evaluate(&up) - phi.evaluate(&down)) / (2.0 * h);
            err = err.max((fd - g[a]).abs());
        }
        let scale = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err <= 1e-6 * scale, "t={t:?} err={err} |g|={scale}");
    }
}

#[test]
fn legendre_matches_dense_grid() {
    let phi = fubini_study_weight(1, 2).unwrap();
    let opts = LegendreOptions::default();
    for s in [q_frac(1, 4), q_int(1), q_frac(3, 2), q_frac(7, 4)] {
        let sf = q_to_f64(&s);
        let brute = (0..=400_000)
            .map(|i| -20.0 + 1e-4 * i as f64)
            .map(|t| sf * t - phi.evaluate(&[t]))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((legendre(&phi, &[s], &opts).unwrap() - brute).abs() < 1e-6);
    }
}

#[test]
fn grid_mass_is_thread_count_invariant() {
    let f = PLConvexFunction::new(
        2,
        vec![
            (vec![q_int(0), q_int(0)], 0.0),
            (vec![q_int(1), q_int(0)], 0.3),
            (vec![q_int(0), q_int(1)], -0.2),
        ],
    )
    .unwrap();
    let grid = GridSpec::cube(2, -20, 20, 192).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| ma_mass_grid_pl(&f, &grid, 0.5, &GridMassOptions::default()).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.mass.to_bits(), four.mass.to_bits());
    assert_eq!(one.negative_mass.to_bits(), four.negative_mass.to_bits());
}

#[test]
fn mass_report_agrees_with_grid() {
    let f = PLConvexFunction::new(
        2,
        vec![
            (vec![q_int(0), q_int(0)], 0.0),
            (vec![q_int(1), q_int(0)], 0.0),
            (vec![q_int(0), q_int(1)], 0.0),
        ],
    )
    .unwrap();
    let grid = GridSpec::cube(2, -20, 20, 256).unwrap();
    let r = mass_report(&f, Some((&grid, 0.3)), &GridMassOptions::default()).unwrap();
    assert_eq!(r.exact_mass, Some(q_int(1)));
    assert!(r.discrepancy.unwrap() < 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn active_pieces_match_lp_oracle(f in pl_2d()) {
        let slopes: Vec<QVector> = f.pieces().iter().map(|p| p.slope.clone()).collect();
        let heights: Vec<_> = f.pieces().iter().map(|p| q_from_f64(p.intercept).unwrap()).collect();
        let active = active_pieces(&f).unwrap();
        for (j, p) in f.pieces().iter().enumerate() {
            let env = upper_envelope_value(&slopes, &heights, &p.slope).unwrap();
            prop_assert_eq!(active.contains(&j), env == heights[j], "piece {}", j);
        }
    }

    #[test]
    fn mass_is_invariant(f in pl_2d(), c in -5.0f64..5.0, dx in -3.0f64..3.0, dy in -3.0f64..3.0) {
        let m = ma_mass_pl(&f).unwrap();
        prop_assert_eq!(ma_mass_pl(&f.shifted(c)).unwrap(), m.clone());
        prop_assert_eq!(ma_mass_pl(&f.translated(&[dx, dy])).unwrap(), m.clone());
        for u in [[[1, 1], [0, 1]], [[0, 1], [1, 0]], [[1, 0], [-2, 1]]] {
            prop_assert_eq!(ma_mass_pl(&unimodular_image(&f, u)).unwrap(), m.clone());
        }
    }

    #[test]
    fn comparison_principle(f in pl_2d(), g in pl_2d(), c in 0.0f64..4.0) {
        let check_box = GridSpec::cube(2, -6, 6, 25).unwrap();
        if let Comparison::Checked { holds, mass_f, mass_g } = comparison_check(&f, &g, c, &check_box).unwrap() {
            prop_assert!(holds, "mass(g) = {} > mass(f) = {}", mass_g, mass_f);
        }
        // A function always compares with its own shift.
        match comparison_check(&f, &f.shifted(-c), c, &check_box).unwrap() {
            Comparison::Checked { holds, .. } => prop_assert!(holds),
            Comparison::Skipped => prop_assert!(false, "self comparison skipped"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn envelope_levels_are_ordered_and_exact(w in small_series(), pts in prop::collection::vec((-6.0f64..6.0, -6.0f64..6.0), 20)) {
        let phi = fubini_study_weight(2, 2).unwrap();
        let f1 = envelope_level(&w, 1, &phi).unwrap();
        let f2 = envelope_level(&w, 2, &phi).unwrap();
        let f4 = envelope_level(&w, 4, &phi).unwrap();
        for &(x, y) in &pts {
            let t = [x, y];
            prop_assert!(f1.value(&t) <= f2.value(&t) + 1e-9);
            prop_assert!(f2.value(&t) <= f4.value(&t) + 1e-9);
            prop_assert!(f4.value(&t) <= phi.evaluate(&t) + 1e-9);
            let mid = [0.5 * x, 0.5 * y];
            prop_assert!(f4.value(&mid) <= 0.5 * (f4.value(&t) + f4.value(&[0.0, 0.0])) + 1e-12);
        }
        for (k, f) in [(1u64, &f1), (2, &f2), (4, &f4)] {
            for p in f.pieces() {
                let s = &p.slope;
                prop_assert!(s[0] >= q_int(0) && s[1] >= q_int(0) && &s[0] + &s[1] <= q_int(2));
            }
            let m = ma_mass_pl(f).unwrap();
            prop_assert!(m <= q_int(4));
            prop_assert_eq!(m, mk_self_intersection(&w, k).unwrap().normalized);
        }
    }

    #[test]
    fn legendre_is_an_involution(t in -2.0f64..2.0) {
        // φ(t) = sup_s st − φ*(s) recovered from a slope grid of step 1/100 on [0, 2].
        let phi = fubini_study_weight(1, 2).unwrap();
        let opts = LegendreOptions::default();
        let mut best = f64::NEG_INFINITY;
        for j in 0..=200 {
            let s = q_frac(j, 100);
            best = best.max(q_to_f64(&s) * t - legendre(&phi, &[s], &opts).unwrap());
        }
        let exact = phi.evaluate(&[t]);
        prop_assert!(best <= exact + 1e-9);
        prop_assert!(exact - best < 1e-4);
    }
}
