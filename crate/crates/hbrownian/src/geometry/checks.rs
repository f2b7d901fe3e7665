//! Invariant suite for catalog manifolds: projector algebra, second
//! fundamental form symmetry and normality, the Gauss-equation residual,
//! and retraction contracts, evaluated at seeded random points.

use serde::Serialize;

use super::{
    gauss_ricci_residual, random_tangent, sample_points, second_fundamental_norms,
    second_fundamental_norms_via_fields, EmbeddedManifold,
};
use crate::linalg;

pub const PROJECTOR_TOL: f64 = 1e-10;
pub const RANK_TOL: f64 = 1e-8;
pub const ALPHA_TOL: f64 = 1e-10;
pub const GAUSS_TOL: f64 = 1e-8;
pub const NORM_ROUTE_TOL: f64 = 1e-9;
pub const RETRACTION_TOL: f64 = 1e-10;

/// Worst-case residuals of every geometric invariant over a point sample.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub manifold: String,
    pub points: usize,
    /// max |P^2 - P|
    pub projector_idempotency: f64,
    /// max |P - P^T|
    pub projector_symmetry: f64,
    /// max |trace P - n|
    pub projector_rank: f64,
    /// max |<P e_i, nu_j>|
    pub normal_orthogonality: f64,
    /// max |alpha(u,v) - alpha(v,u)|
    pub alpha_symmetry: f64,
    /// max |P alpha(u,v)|
    pub alpha_normality: f64,
    /// max Gauss-equation residual; `None` when the codimension exceeds one
    pub gauss_residual: Option<f64>,
    /// max gap between the two routes to |alpha(v,.)|_HS^2 and |alpha(v,v)|^2
    pub norm_route_gap: f64,
    /// max |retract(retract(w)) - retract(w)|
    pub retraction_idempotency: f64,
    /// max |retract(x) - x| over on-manifold points
    pub retraction_drift: f64,
    pub pass: bool,
}

pub fn check_invariants(
    manifold: &dyn EmbeddedManifold,
    n_points: usize,
    seed: u64,
) -> InvariantReport {
    let m = manifold.ambient_dim();
    let n = manifold.intrinsic_dim();
    let mut rep = InvariantReport {
        manifold: manifold.name(),
        points: n_points,
        projector_idempotency: 0.0,
        projector_symmetry: 0.0,
        projector_rank: 0.0,
        normal_orthogonality: 0.0,
        alpha_symmetry: 0.0,
        alpha_normality: 0.0,
        gauss_residual: None,
        norm_route_gap: 0.0,
        retraction_idempotency: 0.0,
        retraction_drift: 0.0,
        pass: false,
    };
    let hypersurface = m - n <= 1;
    let mut worst_gauss: f64 = 0.0;

    for (k, x) in sample_points(manifold, n_points, seed).into_iter().enumerate() {
        let p = manifold.projector_matrix(&x);
        for i in 0..m {
            for j in 0..m {
                let p2 = (0..m).map(|l| p[i][l] * p[l][j]).sum::<f64>();
                rep.projector_idempotency = rep.projector_idempotency.max((p2 - p[i][j]).abs());
                rep.projector_symmetry = rep.projector_symmetry.max((p[i][j] - p[j][i]).abs());
            }
        }
        let trace: f64 = (0..m).map(|i| p[i][i]).sum();
        rep.projector_rank = rep.projector_rank.max((trace - n as f64).abs());

        let normals = manifold.normal_frame(&x);
        for nu in &normals {
            for i in 0..m {
                let pe: Vec<f64> = (0..m).map(|r| p[r][i]).collect();
                rep.normal_orthogonality = rep.normal_orthogonality.max(linalg::dot(&pe, nu).abs());
            }
        }

        let u = random_tangent(manifold, &x, seed ^ 0x5bd1, 2 * k as u64);
        let v = random_tangent(manifold, &x, seed ^ 0x5bd1, 2 * k as u64 + 1);
        let auv = manifold.second_fundamental(&x, &u, &v);
        let avu = manifold.second_fundamental(&x, &v, &u);
        rep.alpha_symmetry = rep.alpha_symmetry.max(linalg::dist(&auv, &avu));
        let tangential = manifold.project_tangent(&x, &auv);
        rep.alpha_normality = rep.alpha_normality.max(linalg::norm(&tangential));

        if hypersurface {
            worst_gauss = worst_gauss.max(gauss_ricci_residual(manifold, &x).expect("hypersurface"));
        }

        if let Some(vu) = linalg::normalize(&v) {
            let (hs_a, diag_a) = second_fundamental_norms(manifold, &x, &vu).unwrap();
            let (hs_f, diag_f) = second_fundamental_norms_via_fields(manifold, &x, &vu).unwrap();
            rep.norm_route_gap = rep
                .norm_route_gap
                .max((hs_a - hs_f).abs())
                .max((diag_a - diag_f).abs());
        }

        // Retraction: idempotent from a perturbed point, near-fixed on M.
        let mut w = x.clone();
        for (i, wi) in w.iter_mut().enumerate() {
            *wi += 0.05 * ((k + i) as f64 * 0.37).sin();
        }
        let r1 = manifold.project_point(&w);
        let r2 = manifold.project_point(&r1);
        rep.retraction_idempotency = rep.retraction_idempotency.max(linalg::dist(&r1, &r2));
        let back = manifold.project_point(&x);
        rep.retraction_drift = rep.retraction_drift.max(linalg::dist(&back, &x));
    }

    if hypersurface {
        rep.gauss_residual = Some(worst_gauss);
    }
    rep.pass = rep.projector_idempotency < PROJECTOR_TOL
        && rep.projector_symmetry < PROJECTOR_TOL
        && rep.projector_rank < RANK_TOL
        && rep.normal_orthogonality < PROJECTOR_TOL
        && rep.alpha_symmetry < ALPHA_TOL
        && rep.alpha_normality < ALPHA_TOL
        && rep.gauss_residual.unwrap_or(0.0) < GAUSS_TOL
        && rep.norm_route_gap < NORM_ROUTE_TOL
        && rep.retraction_idempotency < RETRACTION_TOL
        && rep.retraction_drift < manifold.membership_tolerance();
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cylinder, Ellipsoid, FlatSpace, Paraboloid, Sphere, Torus};

    #[test]
    fn catalog_invariants_hold_at_sampled_points() {
        let manifolds: Vec<Box<dyn EmbeddedManifold>> = vec![
            Box::new(Sphere::unit(1)),
            Box::new(Sphere::unit(2)),
            Box::new(Sphere::unit(3)),
            Box::new(Sphere::new(2, 2.5)),
            Box::new(Ellipsoid::new(1.0, 1.0, 1.5)),
            Box::new(Cylinder::new(1.0)),
            Box::new(Paraboloid::new(1.0)),
            Box::new(FlatSpace::new(1)),
            Box::new(FlatSpace::new(2)),
            Box::new(Torus::new(2.0, 0.5, None)),
        ];
        for m in &manifolds {
            let rep = check_invariants(m.as_ref(), 100, 424242);
            assert!(rep.pass, "{}: {rep:?}", m.name());
        }
    }
}
