// Sign-based stability criteria from the curvature functionals.
//
// For a gradient h-Brownian system the moment form
// `H_p(v,v) = -Ric(v,v) + 2 Hess h(v,v) + |alpha(v,.)|^2 + (p-2)|alpha(v,v)|^2/|v|^2`
// controls moment growth: a negative sup of `p H_p` over unit tangents on
// the whole space forces p-th moment stability, and at p = 1 it forces the
// fundamental group to vanish. The report below evaluates the sup/inf over
// region samples together with the Ricci-drift gap whose upper bound gives
// non-explosion.
//
//     cargo run --release --example stability_criteria

use std::sync::Arc;

use hbrownian::functionals::{criterion_report, ricci_drift_gap, ExtremumMethod};
use hbrownian::geometry::{sample_points, Cylinder, Ellipsoid, Sphere};
use hbrownian::system::{Potential, SdeSystem};

fn report(system: &SdeSystem, p: f64) {
    let sample = sample_points(system.manifold.as_ref(), 128, 11);
    let rep = criterion_report(system, &sample, p, ExtremumMethod::Auto).unwrap();
    println!(
        "{:<34} p = {p}: rate range [{:+.4}, {:+.4}]  stable-sufficient {}  pi1-trivial-sufficient {}",
        rep.manifold, rep.inf_rate, rep.sup_rate, rep.moment_stable_sufficient, rep.pi1_trivial_sufficient
    );
}

pub fn main() {
    let sphere = SdeSystem::brownian(Arc::new(Sphere::unit(2))).unwrap();
    let circle = SdeSystem::brownian(Arc::new(Sphere::unit(1))).unwrap();
    let three = SdeSystem::brownian(Arc::new(Sphere::unit(3))).unwrap();
    let cyl = SdeSystem::brownian(Arc::new(Cylinder::new(1.0))).unwrap();
    let ell = SdeSystem::brownian(Arc::new(Ellipsoid::new(1.0, 1.0, 1.5))).unwrap();

    report(&sphere, 1.0);
    report(&three, 1.0);
    report(&circle, 1.0);
    report(&cyl, 1.0);
    report(&ell, 1.0);
    report(&sphere, 2.0);

    // The Ricci-drift gap: bounded above means no explosion. A height
    // potential tightens it at the pole.
    println!();
    let gap = ricci_drift_gap(&sphere, &[0.0, 0.0, 1.0]).unwrap();
    println!("Ricci gap, unit sphere, h = 0:            {gap:+.6}");
    let height = SdeSystem::new(
        Arc::new(Sphere::unit(2)),
        Potential::Height {
            scale: 1.0,
            axis: 2,
        },
    )
    .unwrap();
    let gap = ricci_drift_gap(&height, &[0.0, 0.0, 1.0]).unwrap();
    println!("Ricci gap, unit sphere, h = z, at pole:   {gap:+.6}");
}
