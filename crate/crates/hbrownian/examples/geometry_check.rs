// Runs the geometric invariant suite over the whole manifold catalog:
// projector algebra, symmetry and normality of the second fundamental
// form, the Gauss-equation residual against the catalog Ricci, and the
// retraction contract, each at 100 seeded random points.
//
//     cargo run --release --example geometry_check

use hbrownian::geometry::checks::check_invariants;
use hbrownian::geometry::{
    Cylinder, Ellipsoid, EmbeddedManifold, FlatSpace, Paraboloid, Sphere, Torus,
};

pub fn main() {
    let catalog: Vec<Box<dyn EmbeddedManifold>> = vec![
        Box::new(Sphere::unit(1)),
        Box::new(Sphere::unit(2)),
        Box::new(Sphere::unit(3)),
        Box::new(Sphere::new(2, 2.5)),
        Box::new(Ellipsoid::new(1.0, 1.0, 1.5)),
        Box::new(Cylinder::new(1.0)),
        Box::new(Paraboloid::new(1.0)),
        Box::new(FlatSpace::new(2)),
        Box::new(Torus::new(2.0, 0.5, None)),
    ];
    println!(
        "{:<34} {:>10} {:>10} {:>10} {:>10}  verdict",
        "manifold", "projector", "alpha", "gauss", "routes"
    );
    let mut all_ok = true;
    for manifold in &catalog {
        let rep = check_invariants(manifold.as_ref(), 100, 2024);
        all_ok &= rep.pass;
        println!(
            "{:<34} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e}  {}",
            rep.manifold,
            rep.projector_idempotency
                .max(rep.projector_symmetry)
                .max(rep.normal_orthogonality),
            rep.alpha_symmetry.max(rep.alpha_normality),
            rep.gauss_residual.unwrap_or(0.0),
            rep.norm_route_gap,
            if rep.pass { "ok" } else { "FAIL" }
        );
    }
    assert!(all_ok, "an invariant failed");
    println!("\nall invariants hold at every sampled point");
}
