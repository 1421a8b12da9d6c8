use hardball::atraj::{
    build_am, build_atilde, build_inductive, geometric_weights, perturb_to_genuine, propagate, rescale, validate,
    AdmissibleMatrix, Mode, PLTrajectory, PerturbOptions, ViolationKind, MAX_EVENTS,
};
use hardball::linalg::Matrix;
use hardball::numeric::{Field, Rational};
use proptest::prelude::*;

fn zero() -> Rational {
    Rational::zero()
}

fn genuine(m: usize, seed: u64) -> (PLTrajectory<Rational>, AdmissibleMatrix<Rational>) {
    let (f, _) = build_inductive(m).unwrap();
    let a = build_am(m);
    let opts = PerturbOptions {
        seed,
        ..Default::default()
    };
    (perturb_to_genuine(&f, &a, &opts, &zero()).unwrap(), a)
}

#[test]
fn changed_slope_is_caught() {
    let (g, a) = genuine(4, 1);
    let k = g.slopes().len() / 2;
    let bad = g.with_slope(k, 0, g.slopes()[k][0].clone() + Rational::from_ratio(1, 3));
    let rep = validate(&bad, &a, Mode::Genuine, &zero()).unwrap();
    assert!(!rep.passed());
}

#[test]
fn generalized_is_not_genuine() {
    let (f, _) = build_inductive(5).unwrap();
    let rep = validate(&f, &build_am(5), Mode::Genuine, &zero()).unwrap();
    assert!(matches!(
        rep.violation.map(|v| v.kind),
        Some(ViolationKind::SimultaneousRoots { .. })
    ));
}

#[test]
fn record_round_trip_is_exact() {
    let (g, _) = genuine(6, 3);
    let json = serde_json::to_string(&g.to_record()).unwrap();
    let back = PLTrajectory::<Rational>::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
    assert_eq!(back, g);
}

#[test]
fn rescaling_keeps_the_trajectory_valid() {
    let m = 6;
    let (g, _) = genuine(m, 0);
    let lambda = geometric_weights(m, &Rational::from_ratio(1, 8));
    let (at, dist) = build_atilde(m, &lambda).unwrap();
    assert_eq!(dist, Rational::from_ratio(1, 64));
    let (x, v) = g.initial_data();
    let h = propagate(&at, g.t_start().clone(), &x, &v, g.t_end().clone(), MAX_EVENTS).unwrap();
    let b = rescale(&at, &lambda).unwrap();
    assert!(b.as_matrix().is_symmetric());
    let scaled = h.scaled(&lambda).unwrap();
    assert!(validate(&scaled, &b, Mode::Genuine, &zero()).unwrap().passed());
    assert_eq!(scaled.collision_count(&zero()), h.collision_count(&zero()));
}

#[test]
fn same_seed_same_trajectory() {
    assert_eq!(genuine(7, 11).0, genuine(7, 11).0);
}

fn small_matrix(m: usize, entries: &[i64]) -> AdmissibleMatrix<Rational> {
    let mut mat = Matrix::identity(m);
    let mut k = 0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                mat[(i, j)] = Rational::from_ratio(entries[k], 4);
                k += 1;
            }
        }
    }
    AdmissibleMatrix::new(mat).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // propagation is its own oracle: whatever it produces must satisfy the
    // reflection rule it implements, checked independently by validate
    #[test]
    fn propagated_trajectories_validate(
        entries in prop::collection::vec(-3i64..=3, 6),
        x in prop::collection::vec(1i64..20, 3),
        v in prop::collection::vec(-5i64..5, 3),
    ) {
        let a = small_matrix(3, &entries);
        let x: Vec<Rational> = x.iter().map(|&k| Rational::from_ratio(k, 3)).collect();
        let v: Vec<Rational> = v.iter().map(|&k| Rational::from_i64(k)).collect();
        match propagate(&a, zero(), &x, &v, Rational::from_i64(20), 200) {
            Ok(f) => {
                let rep = validate(&f, &a, Mode::Genuine, &zero()).unwrap();
                prop_assert!(rep.passed(), "{:?}", rep.violation);
            }
            // ties and runaway event counts are reported, not hidden
            Err(e) => prop_assert!(matches!(
                e.root(),
                hardball::Error::Simultaneous { .. } | hardball::Error::Numeric(_)
            ), "{e}"),
        }
    }

    #[test]
    fn perturbation_keeps_counts(m in 2usize..9, seed in 0u64..1000) {
        let (f, _) = build_inductive(m).unwrap();
        let (g, a) = genuine(m, seed);
        prop_assert_eq!(g.collision_count(&zero()), f.collision_count(&zero()));
        prop_assert!(validate(&g, &a, Mode::Genuine, &zero()).unwrap().passed());
    }
}
