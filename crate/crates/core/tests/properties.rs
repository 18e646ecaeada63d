use ancgeom::abp::{integrate_jacobi, random_symmetric, seeded_rng, JacobiSystem};
use ancgeom::manifold::{unit_ball_volume, ModelManifold};
use ancgeom::ode::{model_bounds_check, solve_model};
use ancgeom::profile::{monotone_envelope, CurvatureProfile};
use ancgeom::report::Tolerances;
use ancgeom::sobolev::{theorem11_report, DensitySpec, RadialDensity, RadialDomain};
use ancgeom::submanifold::{lemma31_bound_check, theorem14_report, Submanifold};
use nalgebra::DMatrix;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn exp_decay_moments(rate in 0.2f64..5.0, amplitude in 0.01f64..3.0) {
        let p = CurvatureProfile::exp_decay(rate, amplitude).unwrap();
        prop_assert!((p.b1() - amplitude / rate).abs() < 1e-8 * (1.0 + amplitude / rate));
        prop_assert!((p.b0() - amplitude / (rate * rate)).abs() < 1e-8 * (1.0 + amplitude / (rate * rate)));
    }

    #[test]
    fn moments_scale_with_amplitude(amplitude in 0.01f64..2.0, cutoff in 0.1f64..4.0, k in 0.1f64..10.0) {
        let p = CurvatureProfile::linear_cutoff(amplitude, cutoff).unwrap();
        let q = CurvatureProfile::linear_cutoff(k * amplitude, cutoff).unwrap();
        prop_assert!((q.b0() - k * p.b0()).abs() < 1e-10 * (1.0 + q.b0()));
        prop_assert!((q.b1() - k * p.b1()).abs() < 1e-10 * (1.0 + q.b1()));
    }

    #[test]
    fn envelope_is_idempotent_and_dominating(values in prop::collection::vec(-1.0f64..2.0, 2..40)) {
        let mut v = values.clone();
        *v.last_mut().unwrap() = 0.0;
        let env = monotone_envelope(0.1, &v, None).unwrap();
        let Some((step, samples)) = env.samples() else {
            prop_assert!(v.iter().all(|&x| x <= 0.0));
            return Ok(());
        };
        prop_assert_eq!(step, 0.1);
        for (e, x) in samples.iter().zip(&v) {
            prop_assert!(*e >= *x && *e >= 0.0);
        }
        for w in samples.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        let again = monotone_envelope(step, samples, None).unwrap();
        prop_assert_eq!(again.samples().unwrap().1, samples);
    }

    #[test]
    fn model_solution_bounds(rate in 0.5f64..4.0, amplitude in 0.05f64..1.5) {
        let p = CurvatureProfile::exp_decay(rate, amplitude).unwrap();
        let h = solve_model(&p, 30.0, 1e-9).unwrap();
        prop_assert!(model_bounds_check(&h, &p, 1e-8).is_clean());
    }

    #[test]
    fn sobolev_ratio_is_scale_invariant(n in 2usize..5, radius in 0.3f64..3.0, c in 0.1f64..10.0) {
        let tol = Tolerances::default();
        let domain = RadialDomain::with_cells(ModelManifold::euclidean(n).unwrap(), radius, 400).unwrap();
        let f = RadialDensity::new(DensitySpec::Quadratic { coef: 0.7 }, radius).unwrap();
        let zero = CurvatureProfile::zero();
        let a = theorem11_report(&domain, &f, &zero, 1.0, &tol).unwrap().ratio.unwrap();
        let b = theorem11_report(&domain, &f.scaled(c), &zero, 1.0, &tol).unwrap().ratio.unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a);
        prop_assert!(a > 1.0);
    }

    #[test]
    fn submanifold_ratio_at_least_one(n in 2usize..5, p in 2usize..4, rho in 0.2f64..5.0, alpha in 0.1f64..3.0, f in 0.1f64..5.0) {
        let tol = Tolerances::default();
        let zero = CurvatureProfile::zero();
        for s in [
            Submanifold::flat_ball(n, p, rho).unwrap(),
            Submanifold::round_sphere(n, p, rho).unwrap(),
            Submanifold::spherical_cap(n, p, rho, alpha).unwrap(),
        ] {
            let q = theorem14_report(&s, f, &zero, 1.0, &tol).unwrap().ratio.unwrap();
            prop_assert!(q >= 1.0 - 1e-9, "{:?}: ratio {}", s.spec, q);
        }
    }

    #[test]
    fn pointwise_bound_holds_inside_unit_disc(
        n in 2usize..6,
        f in 0.1f64..4.0,
        b1 in 0.0f64..1.0,
        h in 0.0f64..5.0,
        pairs in prop::collection::vec((0.0f64..0.7, 0.0f64..0.7), 1..20),
    ) {
        let d = lemma31_bound_check(n, f, b1, h, &pairs, 1e-12).unwrap();
        prop_assert!(d.is_clean());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn flat_jacobi_matches_affine_oracle(seed in any::<u64>(), m in 1usize..5, r in 0.1f64..0.8) {
        let mut rng = seeded_rng(seed);
        let a = random_symmetric(&mut rng, m, -1.0, 1.0);
        let sys = JacobiSystem::euclidean(a.clone(), r, 0.5, 0.0).unwrap();
        let run = integrate_jacobi(&sys, 1e-10).unwrap();
        for i in 0..run.len() {
            let expected = DMatrix::identity(m, m) + &a * run.time(i);
            prop_assert!((run.p(i) - expected).amax() < 1e-10);
        }
        prop_assert!(run.symmetry_residual < 1e-8);
        // AM–GM: det(I + rA) ≤ (1 + r·tr A/m)^m.
        let amgm = (1.0 + r * a.trace() / m as f64).powi(m as i32);
        prop_assert!(run.final_det() <= amgm * (1.0 + 1e-12));
        prop_assert!(run.log_det_residual() < 1e-3);
    }
}

#[test]
fn ball_volume_recurrence() {
    for m in 1..=12 {
        let lhs = unit_ball_volume(m + 2).unwrap();
        let rhs = 2.0 * std::f64::consts::PI / (m + 2) as f64 * unit_ball_volume(m).unwrap();
        assert!((lhs - rhs).abs() < 1e-14 * rhs);
    }
    assert!(unit_ball_volume(0).is_err());
}
