//! Property tests for the contracts that hold over whole input families.

use std::sync::Arc;

use proptest::prelude::*;

use hbrownian::ensemble::{fit_exponent, moment_batch_range, finalize_moment, EnsembleOpts};
use hbrownian::functionals::moment_form;
use hbrownian::geometry::{Ellipsoid, EmbeddedManifold, Sphere, Torus};
use hbrownian::linalg;
use hbrownian::rng::{bridged_noise_levels, NoiseSource};
use hbrownian::system::{Potential, SdeSystem};

fn ellipsoid_system() -> SdeSystem {
    SdeSystem::new(
        Arc::new(Ellipsoid::new(1.0, 1.0, 1.5)),
        Potential::Height {
            scale: 0.4,
            axis: 2,
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moment_form_is_two_homogeneous(
        wx in -1.5f64..1.5, wy in -1.5f64..1.5, wz in -1.5f64..1.5,
        vx in -1.0f64..1.0, vy in -1.0f64..1.0, vz in -1.0f64..1.0,
        scale in 0.1f64..10.0,
        p in 1.0f64..4.0,
    ) {
        let sys = ellipsoid_system();
        let x = sys.manifold.project_point(&[wx + 0.2, wy - 0.1, wz + 1.2]);
        let v = sys.manifold.project_tangent(&x, &[vx, vy, vz]);
        prop_assume!(linalg::norm(&v) > 1e-3);
        let base = moment_form(&sys, &x, &v, p).unwrap();
        let scaled = moment_form(&sys, &x, &linalg::scale(&v, scale), p).unwrap();
        let tol = 1e-10 * (1.0 + base.abs()) * scale * scale;
        prop_assert!((scaled - scale * scale * base).abs() <= tol);
    }

    #[test]
    fn moment_form_is_nondecreasing_in_order(
        wx in -1.0f64..1.0, wy in -1.0f64..1.0, wz in -1.0f64..1.0,
        p_lo in 1.0f64..3.0,
        dp in 0.0f64..2.0,
    ) {
        let sys = ellipsoid_system();
        let x = sys.manifold.project_point(&[wx, wy + 0.3, wz + 1.1]);
        let v = hbrownian::geometry::random_unit_tangent(sys.manifold.as_ref(), &x, 5, 0);
        let lo = moment_form(&sys, &x, &v, p_lo).unwrap();
        let hi = moment_form(&sys, &x, &v, p_lo + dp).unwrap();
        prop_assert!(hi >= lo - 1e-12);
    }

    #[test]
    fn retractions_are_idempotent_and_land_on_the_manifold(
        wx in -3.0f64..3.0, wy in -3.0f64..3.0, wz in -3.0f64..3.0,
        which in 0usize..3,
    ) {
        let manifold: Box<dyn EmbeddedManifold> = match which {
            0 => Box::new(Sphere::unit(2)),
            1 => Box::new(Ellipsoid::new(1.0, 1.0, 1.5)),
            _ => Box::new(Torus::new(2.0, 0.5, None)),
        };
        let w = [wx, wy + 0.01, wz];
        prop_assume!(linalg::norm(&w) > 1e-2);
        let r1 = manifold.project_point(&w);
        prop_assume!(r1.iter().all(|c| c.is_finite()));
        let scale = 1.0 + linalg::norm(&r1);
        prop_assert!(manifold.constraint_distance(&r1) < 1e-9 * scale);
        let r2 = manifold.project_point(&r1);
        prop_assert!(linalg::dist(&r1, &r2) < 1e-10 * scale);
    }

    #[test]
    fn exponent_fit_recovers_random_exponentials(
        amp in 0.1f64..10.0,
        rate in -2.0f64..2.0,
    ) {
        let times: Vec<f64> = (0..41).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| amp * (rate * t).exp()).collect();
        let fit = fit_exponent(&times, &values, 0.5).unwrap();
        prop_assert!((fit.slope - rate).abs() < 1e-8);
    }

    #[test]
    fn bridged_noise_preserves_partial_sums(
        seed in 0u64..1000,
        path in 0u64..64,
    ) {
        let levels = bridged_noise_levels(seed, path, 3, 0.25, 4, 2);
        // Every refinement level resolves the same Brownian path: partial
        // sums at shared times agree exactly.
        for comp in 0..3 {
            for coarse_step in 0..4 {
                let mut buf = [0.0; 3];
                levels[0].fill_increments(coarse_step, &mut buf);
                let coarse = buf[comp];
                let mut fine = 0.0f64;
                for sub in 0..4 {
                    levels[2].fill_increments(4 * coarse_step + sub, &mut buf);
                    fine += buf[comp];
                }
                prop_assert!((coarse - fine).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn batch_merge_is_split_point_independent(split_a in 1u64..15, split_b in 16u64..31) {
        let sys = SdeSystem::brownian(Arc::new(Sphere::unit(2))).unwrap();
        let opts = EnsembleOpts {
            dt: 2e-2,
            horizon: 0.4,
            grid: 9,
            n_paths: 32,
            seed: 77,
            ..EnsembleOpts::default()
        };
        let x0 = [0.0, 0.0, 1.0];
        let full = moment_batch_range(&sys, &x0, 1.0, &opts, 0, 32).unwrap();
        let a = moment_batch_range(&sys, &x0, 1.0, &opts, 0, split_a).unwrap();
        let b = moment_batch_range(&sys, &x0, 1.0, &opts, split_a, split_b).unwrap();
        let c = moment_batch_range(&sys, &x0, 1.0, &opts, split_b, 32).unwrap();
        let merged = a.merge(b.merge(c).unwrap()).unwrap();
        let lhs = serde_json::to_string(&finalize_moment(&full, 1.0, &opts).unwrap()).unwrap();
        let rhs = serde_json::to_string(&finalize_moment(&merged, 1.0, &opts).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}
