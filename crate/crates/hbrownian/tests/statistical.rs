//! Statistically flavored operation checks that need real ensembles —
//! worked examples with derived expected values that are neither pure unit
//! tests nor acceptance criteria. Seeds are fixed, so every assertion is
//! reproducible.

use std::sync::Arc;

use hbrownian::ensemble::{
    estimate_moment, exponential_functional, integrability_diagnostic, integrability_from_curve,
    sandwich_check, stochastic_positivity_rate, EnsembleOpts, PointFunctional,
};
use hbrownian::functionals::moment_form_sup;
use hbrownian::geometry::{Ellipsoid, FlatSpace, Sphere};
use hbrownian::loops::{circle_loop, mean_length_curve};
use hbrownian::system::SdeSystem;

fn sphere() -> SdeSystem {
    SdeSystem::brownian(Arc::new(Sphere::unit(2))).unwrap()
}

#[test]
fn sphere_moment_time_integral_is_about_two() {
    // Rate -1/2 makes the time integral of E|v_t| equal 2; trapezoid over
    // the grid plus the fitted exponential tail lands within 10%.
    let opts = EnsembleOpts {
        dt: 2e-3,
        horizon: 4.0,
        grid: 81,
        n_paths: 4096,
        seed: 42,
        ..EnsembleOpts::default()
    };
    let est = estimate_moment(&sphere(), &[0.0, 0.0, 1.0], 1.0, &opts).unwrap();
    let integ = integrability_diagnostic(&est);
    assert!(integ.finite, "{:?}", est.fitted);
    let value = integ.value.unwrap();
    assert!((value - 2.0).abs() < 0.2, "integral {value}");
}

#[test]
fn circle_moment_time_integral_does_not_certify_decay() {
    // The circle's exponent is exactly zero. The windowed fit returns a
    // value near zero; the diagnostic must not certify a finite integral
    // with a materially negative rate. Near-zero rates sit on the decision
    // boundary of the windowed estimator (the infinite-time limit is not
    // computable), so the honest assertions are on the fitted rate itself
    // and on what a "finite" verdict would have to imply.
    let opts = EnsembleOpts {
        dt: 2e-3,
        horizon: 2.0,
        grid: 41,
        n_paths: 16384,
        seed: 42,
        ..EnsembleOpts::default()
    };
    let circle = SdeSystem::brownian(Arc::new(Sphere::unit(1))).unwrap();
    let est = estimate_moment(&circle, &[0.0, 1.0], 1.0, &opts).unwrap();
    assert!(est.fitted.slope.abs() < 0.05, "{:?}", est.fitted);
    let integ = integrability_diagnostic(&est);
    if let Some(value) = integ.value {
        // A finite verdict at a near-zero rate implies an enormous tail.
        assert!(value > 10.0, "implausibly small integral {value}");
    }
}

#[test]
fn integrability_diverges_for_flat_curves() {
    let times: Vec<f64> = (0..41).map(|i| i as f64 * 0.1).collect();
    let values = vec![5.0; times.len()];
    let fit = hbrownian::ensemble::fit_exponent(&times, &values, 0.5).unwrap();
    let integ = integrability_from_curve(&times, &values, &fit);
    assert!(!integ.finite);
}

#[test]
fn sphere_exponential_functional_matches_constant_route() {
    // On the unit sphere the upper rate at p = 1 is identically -1, so the
    // exponential functional must agree with the constant functional to
    // rounding, path by path.
    let opts = EnsembleOpts {
        dt: 1e-2,
        horizon: 2.0,
        grid: 11,
        n_paths: 32,
        seed: 9,
        ..EnsembleOpts::default()
    };
    let sys = sphere();
    let via_rate = exponential_functional(
        &sys,
        &[0.0, 0.0, 1.0],
        PointFunctional::UpperRate { p: 1.0 },
        0.5,
        &opts,
    )
    .unwrap();
    let via_const = exponential_functional(
        &sys,
        &[0.0, 0.0, 1.0],
        PointFunctional::Const(-1.0),
        0.5,
        &opts,
    )
    .unwrap();
    for (a, b) in via_rate.mean.iter().zip(&via_const.mean) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    let last = *via_rate.mean.last().unwrap();
    assert!((last - (-1.0_f64).exp()).abs() < 1e-9);
}

#[test]
fn ellipsoid_exponential_functional_is_seed_consistent() {
    // No closed form on the ellipsoid: two independent ensembles must agree
    // within overlapping confidence intervals.
    let sys = SdeSystem::brownian(Arc::new(Ellipsoid::new(1.0, 1.0, 1.5))).unwrap();
    let x0 = [0.0, 0.0, 1.5];
    let run = |seed: u64| {
        let opts = EnsembleOpts {
            dt: 2e-3,
            horizon: 1.0,
            grid: 11,
            n_paths: 2048,
            seed,
            ..EnsembleOpts::default()
        };
        exponential_functional(&sys, &x0, PointFunctional::UpperRate { p: 1.0 }, 0.5, &opts)
            .unwrap()
    };
    let a = run(42);
    let b = run(4242);
    let (la, ha) = (*a.ci_lo.last().unwrap(), *a.ci_hi.last().unwrap());
    let (lb, hb) = (*b.ci_lo.last().unwrap(), *b.ci_hi.last().unwrap());
    assert!(ha >= lb && hb >= la, "disjoint CIs: [{la}, {ha}] vs [{lb}, {hb}]");
}

#[test]
fn positivity_rates_for_constant_fields() {
    // Deterministic integrands need almost no paths: f = c gives rate -c/2
    // exactly; the sphere's negated upper rate is the constant 1; the
    // circle's is 0 and earns no verdict.
    let opts = EnsembleOpts {
        dt: 1e-2,
        horizon: 4.0,
        grid: 21,
        n_paths: 8,
        seed: 3,
        ..EnsembleOpts::default()
    };
    let sys = sphere();
    let report = stochastic_positivity_rate(
        &sys,
        &[vec![0.0, 0.0, 1.0]],
        PointFunctional::Const(2.0),
        &opts,
    )
    .unwrap();
    assert!((report.rates[0].rate + 1.0).abs() < 1e-9);
    assert!(report.strongly_positive_on_sample);

    let report = stochastic_positivity_rate(
        &sys,
        &[vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
        PointFunctional::NegUpperRate { p: 1.0 },
        &opts,
    )
    .unwrap();
    assert!((report.sup_rate + 0.5).abs() < 1e-9, "{}", report.sup_rate);
    assert!(report.strongly_positive_on_sample);

    let circle = SdeSystem::brownian(Arc::new(Sphere::unit(1))).unwrap();
    let report = stochastic_positivity_rate(
        &circle,
        &[vec![0.0, 1.0]],
        PointFunctional::NegUpperRate { p: 1.0 },
        &opts,
    )
    .unwrap();
    assert!(report.sup_rate.abs() < 1e-9);
    assert!(!report.strongly_positive_on_sample);
}

#[test]
fn refinement_shrinks_the_residual_on_curved_catalog_entries() {
    // The contract is monotone decay of the median residual under
    // common-noise dt refinement on every catalog manifold; the sphere
    // case is in the acceptance suite, the others here.
    use hbrownian::ensemble::median;
    use hbrownian::flow::refinement_residuals;
    use hbrownian::geometry::{Cylinder, Torus};

    let systems: Vec<(SdeSystem, Vec<f64>)> = vec![
        (
            SdeSystem::brownian(Arc::new(Ellipsoid::new(1.0, 1.0, 1.5))).unwrap(),
            vec![0.0, 0.0, 1.5],
        ),
        (
            SdeSystem::brownian(Arc::new(Cylinder::new(1.0))).unwrap(),
            vec![1.0, 0.0, 0.0],
        ),
        (
            SdeSystem::brownian(Arc::new(Torus::new(2.0, 0.5, None))).unwrap(),
            vec![2.5, 0.0, 0.0],
        ),
    ];
    for (sys, x0) in &systems {
        let ladders = refinement_residuals(sys, x0, 1.0, 0.5, 1e-2, 2, 16, 5).unwrap();
        let medians: Vec<f64> = ladders
            .into_iter()
            .map(|mut level| median(&mut level))
            .collect();
        assert!(
            medians[0] > medians[1] && medians[1] > medians[2],
            "{}: {medians:?}",
            sys.manifold.name()
        );
    }
}

#[test]
fn paths_stay_on_implicit_surfaces() {
    use hbrownian::flow::{simulate_path, IntegratorConfig};
    use hbrownian::geometry::{Paraboloid, Torus};
    use hbrownian::rng::CounterNoise;

    let systems: Vec<(SdeSystem, Vec<f64>)> = vec![
        (
            SdeSystem::brownian(Arc::new(Torus::new(2.0, 0.5, None))).unwrap(),
            vec![2.5, 0.0, 0.0],
        ),
        (
            SdeSystem::brownian(Arc::new(Paraboloid::new(1.0))).unwrap(),
            vec![0.0, 0.0, 0.0],
        ),
    ];
    for (sys, x0) in &systems {
        let cfg = IntegratorConfig::new(1e-3, 1.0);
        let v0 = hbrownian::geometry::random_unit_tangent(sys.manifold.as_ref(), x0, 2, 0);
        let noise = CounterNoise {
            seed: 2,
            path: 0,
            dt: cfg.dt,
        };
        let traj = simulate_path(sys, x0, &v0, 1.0, 21, &cfg, &noise).unwrap();
        for s in &traj.samples {
            let scale = 1.0 + hbrownian::linalg::norm(&s.x);
            assert!(
                sys.manifold.constraint_distance(&s.x) < 1e-8 * scale,
                "{} left the surface: {:?}",
                sys.manifold.name(),
                s.x
            );
            let t = sys.manifold.project_tangent(&s.x, &s.v);
            assert!(hbrownian::linalg::dist(&t, &s.v) < 1e-8 * (1.0 + hbrownian::linalg::norm(&s.v)));
        }
    }
}

#[test]
fn exponent_overflow_is_reported_not_hidden() {
    let sys = sphere();
    let opts = EnsembleOpts {
        dt: 1e-2,
        horizon: 4.0,
        grid: 9,
        n_paths: 4,
        seed: 1,
        ..EnsembleOpts::default()
    };
    let est = exponential_functional(
        &sys,
        &[0.0, 0.0, 1.0],
        PointFunctional::Const(400.0),
        0.5,
        &opts,
    )
    .unwrap();
    // exp(200 t) overflows past t ~ 3.5; the estimate flags the first
    // offending time instead of dropping paths.
    assert!(!est.overflow_times.is_empty());
    assert!(est.mean.last().unwrap().is_infinite());
}

#[test]
fn flat_space_sandwich_is_exact() {
    // Everything is deterministic on flat space: lower = middle = 1 and
    // upper = n exactly.
    let sys = SdeSystem::brownian(Arc::new(FlatSpace::new(2))).unwrap();
    let opts = EnsembleOpts {
        dt: 1e-2,
        n_paths: 16,
        seed: 1,
        ..EnsembleOpts::default()
    };
    let res = sandwich_check(&sys, &[0.0, 0.0], 1.0, 1.0, &opts).unwrap();
    assert_eq!(res.lower.mean, 1.0);
    assert_eq!(res.middle.mean, 1.0);
    assert_eq!(res.upper.mean, 2.0);
    assert!(res.pass);
    assert!(res.lower.mean <= res.upper.mean);
}

#[test]
fn loop_mean_length_is_bounded_by_the_moment_curve() {
    // Pathwise, loop length integrates |T F_t| along the loop, so the mean
    // length cannot exceed the initial length times the frame estimate of
    // sup E|T_x F_t| (up to CI slack). Both sides are measured.
    let sys = sphere();
    let loop0 = circle_loop(&sys, &[0.0, 0.0, 0.0], 1.0, (0, 1), 64, None).unwrap();
    let l0 = loop0.length();
    let curve = mean_length_curve(&sys, &loop0, 2.0, 9, 5e-3, 64, 11, None).unwrap();

    let opts = EnsembleOpts {
        dt: 5e-3,
        horizon: 2.0,
        grid: 9,
        n_paths: 1024,
        seed: 11,
        frame_sup: true,
        ..EnsembleOpts::default()
    };
    let est = estimate_moment(&sys, &[0.0, 0.0, 1.0], 1.0, &opts).unwrap();
    let frame = est.frame_sup.as_ref().unwrap();
    for (g, t) in curve.times.iter().enumerate() {
        let bound = l0 * frame.ci_hi[g] * 1.05 + 0.02;
        assert!(
            curve.mean_length[g] <= bound,
            "t = {t}: mean length {} above bound {bound}",
            curve.mean_length[g]
        );
    }
    // And the sign criterion really is visible: by t = 2 the loop has
    // shrunk well below its initial length.
    assert!(*curve.mean_length.last().unwrap() < 0.6 * l0);
    let sup1 = moment_form_sup(&sys, &[0.0, 0.0, 1.0], 1.0, hbrownian::functionals::ExtremumMethod::Auto).unwrap();
    assert!(sup1 < 0.0);
}
