//! Embedded submanifolds and their pointwise geometric operators.
//!
//! Every manifold in the catalog is an isometrically embedded submanifold of
//! some `R^m`, described through its tangent projector, an orthonormal normal
//! frame, the second fundamental form, Ricci curvature, a retraction back
//! onto the constraint set, and (where available) a parametrized chart for
//! quadrature and an injectivity-radius bound for the loop experiments.
//!
//! The catalog entries carry closed forms wherever they exist, so they can
//! serve as exact oracles for the stochastic machinery built on top. The
//! implicit-surface entry derives everything from the defining function
//! instead and is the generality escape hatch.

mod flat;
mod implicit;
mod quadrics;
mod sphere;

pub mod checks;

pub use flat::FlatSpace;
pub use implicit::{newton_project, Torus};
pub use quadrics::{Cylinder, Ellipsoid, Paraboloid};
pub use sphere::Sphere;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{self, Stream};

use std::sync::Arc;

/// Deviations below this are accepted verbatim; between this and the
/// membership tolerance inputs are silently re-projected.
pub const SNAP_TOLERANCE: f64 = 1e-8;

/// One axis of a chart's parameter domain.
#[derive(Debug, Clone, Copy)]
pub enum AxisDomain {
    /// Compact interval, integrated directly.
    Interval(f64, f64),
    /// Unbounded axis, integrated over nested truncations with a
    /// divergence test.
    Line,
}

/// A d-dimensional parametrization (d is 1 or 2 in the catalog) with its
/// volume element, used for weighted-volume quadrature and low-discrepancy
/// region sampling.
pub struct Chart {
    pub axes: Vec<AxisDomain>,
    pub map: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    pub volume_element: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

/// An isometrically embedded submanifold of `R^m`.
///
/// All methods are pure functions of their inputs; implementations are
/// immutable and safe to share across workers.
pub trait EmbeddedManifold: Send + Sync {
    /// Catalog name including parameters, e.g. `sphere(dim=2, radius=1)`.
    fn name(&self) -> String;

    fn intrinsic_dim(&self) -> usize;

    fn ambient_dim(&self) -> usize;

    /// First-order estimate of the distance from `x` to the constraint set.
    fn constraint_distance(&self, x: &[f64]) -> f64;

    /// Retraction of an ambient point onto the manifold.
    fn project_point(&self, w: &[f64]) -> Vec<f64>;

    /// Orthonormal basis of the normal space at `x` (length `m - n`).
    fn normal_frame(&self, x: &[f64]) -> Vec<Vec<f64>>;

    /// Second fundamental form `alpha_x(u, v)`, a normal-valued symmetric
    /// bilinear map of tangent vectors.
    fn second_fundamental(&self, x: &[f64], u: &[f64], v: &[f64]) -> Vec<f64>;

    /// Ricci curvature `Ric_x(u, v)` of tangent vectors.
    fn ricci(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64;

    /// Lower bound for the injectivity radius on the region of interest,
    /// `None` when the catalog has nothing safe to offer.
    fn injectivity_radius(&self) -> Option<f64>;

    /// Ambient diameter bound for compact entries; used to sanity-check the
    /// explosion cutoff.
    fn diameter_bound(&self) -> Option<f64> {
        None
    }

    fn chart(&self) -> Option<Chart> {
        None
    }

    /// Hard gate for accepting points as "on the manifold".
    fn membership_tolerance(&self) -> f64 {
        1e-6
    }

    // ---- provided operators ------------------------------------------------

    /// Orthogonal projection of `w` onto the tangent space at `x`.
    fn project_tangent(&self, x: &[f64], w: &[f64]) -> Vec<f64> {
        let mut out = w.to_vec();
        for nu in self.normal_frame(x) {
            let c = linalg::dot(&out, &nu);
            linalg::axpy(&mut out, -c, &nu);
        }
        out
    }

    /// Tangent projector as an `m x m` matrix, `P = I - sum nu nu^T`.
    fn projector_matrix(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let m = self.ambient_dim();
        let mut p = linalg::zeros_mat(m);
        for (i, row) in p.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for nu in self.normal_frame(x) {
            for i in 0..m {
                for j in 0..m {
                    p[i][j] -= nu[i] * nu[j];
                }
            }
        }
        p
    }

    /// Deterministic orthonormal basis of the tangent space at `x`.
    fn tangent_basis(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let m = self.ambient_dim();
        let normals = self.normal_frame(x);
        let ambient: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        linalg::orthonormal_complement(&normals, &ambient, self.intrinsic_dim())
    }

    /// Accepts `x` as a manifold point, re-projecting mild drift and
    /// rejecting anything beyond the membership tolerance.
    fn admit_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        let scale = 1.0 + linalg::norm(x);
        let d = self.constraint_distance(x);
        if d <= SNAP_TOLERANCE * scale {
            Ok(x.to_vec())
        } else if d <= self.membership_tolerance() * scale {
            Ok(self.project_point(x))
        } else {
            Err(Error::OffManifold {
                dist: d,
                tol: self.membership_tolerance() * scale,
            })
        }
    }

    /// Accepts `v` as a tangent vector at `x` under the same policy.
    fn admit_tangent(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let n = linalg::norm(v);
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        let projected = self.project_tangent(x, v);
        let dev = linalg::dist(&projected, v) / n;
        if dev <= SNAP_TOLERANCE {
            Ok(v.to_vec())
        } else if dev <= self.membership_tolerance() {
            Ok(projected)
        } else {
            Err(Error::NotTangent { dev })
        }
    }
}

pub type ManifoldRef = Arc<dyn EmbeddedManifold>;

/// Diffusion fields of the embedding: `X^i(x) = P(x) e_i` as columns of the
/// tangent projector. Their sum of outer products is `P(x)`, so the SDE they
/// drive has generator `(1/2) Laplacian` plus the drift.
pub fn diffusion_fields(manifold: &dyn EmbeddedManifold, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let x = manifold.admit_point(x)?;
    let p = manifold.projector_matrix(&x);
    let m = manifold.ambient_dim();
    Ok((0..m).map(|i| (0..m).map(|r| p[r][i]).collect()).collect())
}

/// Derivative of each diffusion field along a tangent vector `v`:
/// the shape operator applied to the normal part of each ambient basis
/// vector. Returns `m` tangent vectors.
pub fn diffusion_field_derivatives(
    manifold: &dyn EmbeddedManifold,
    x: &[f64],
    v: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let x = manifold.admit_point(x)?;
    let v = manifold.admit_tangent(&x, v)?;
    let m = manifold.ambient_dim();
    let normals = manifold.normal_frame(&x);
    let basis = manifold.tangent_basis(&x);
    // alpha(v, e_j) for the tangent basis, reused for every field.
    let alphas: Vec<Vec<f64>> = basis
        .iter()
        .map(|e| manifold.second_fundamental(&x, &v, e))
        .collect();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        // A_x(v, Y e_i) = sum_j <alpha(v, e_j), Y e_i> e_j with Y the normal
        // projection; expand Y e_i over the normal frame.
        let mut field = vec![0.0; m];
        for nu in &normals {
            let ni = nu[i];
            if ni == 0.0 {
                continue;
            }
            for (e, alpha) in basis.iter().zip(&alphas) {
                linalg::axpy(&mut field, ni * linalg::dot(alpha, nu), e);
            }
        }
        out.push(field);
    }
    Ok(out)
}

/// Hilbert-Schmidt and diagonal norms of the second fundamental form in the
/// direction `v`: `(|alpha(v,.)|_HS^2, |alpha(v,v)|^2)`, computed directly
/// from `alpha` over an orthonormal tangent basis.
pub fn second_fundamental_norms(
    manifold: &dyn EmbeddedManifold,
    x: &[f64],
    v: &[f64],
) -> Result<(f64, f64)> {
    let x = manifold.admit_point(x)?;
    let v = manifold.admit_tangent(&x, v)?;
    if linalg::norm(&v) == 0.0 {
        return Err(Error::ZeroVector);
    }
    let basis = manifold.tangent_basis(&x);
    let hs: f64 = basis
        .iter()
        .map(|e| {
            let a = manifold.second_fundamental(&x, &v, e);
            linalg::dot(&a, &a)
        })
        .sum();
    let avv = manifold.second_fundamental(&x, &v, &v);
    Ok((hs, linalg::dot(&avv, &avv)))
}

/// Same norms summed over the diffusion fields, the brute-force route.
pub fn second_fundamental_norms_via_fields(
    manifold: &dyn EmbeddedManifold,
    x: &[f64],
    v: &[f64],
) -> Result<(f64, f64)> {
    let derivs = diffusion_field_derivatives(manifold, x, v)?;
    let hs = derivs.iter().map(|d| linalg::dot(d, d)).sum();
    let diag = derivs
        .iter()
        .map(|d| {
            let c = linalg::dot(d, v);
            c * c
        })
        .sum();
    Ok((hs, diag))
}

/// Ricci curvature reconstructed from the second fundamental form through
/// the Gauss equation (flat ambient space):
/// `Ric(u, v) = sum_j <alpha(u,v), alpha(e_j,e_j)> - <alpha(u,e_j), alpha(v,e_j)>`.
pub fn ricci_from_alpha(
    manifold: &dyn EmbeddedManifold,
    x: &[f64],
    u: &[f64],
    v: &[f64],
) -> f64 {
    let basis = manifold.tangent_basis(x);
    let auv = manifold.second_fundamental(x, u, v);
    let mut total = 0.0;
    for e in &basis {
        let aee = manifold.second_fundamental(x, e, e);
        let aue = manifold.second_fundamental(x, u, e);
        let ave = manifold.second_fundamental(x, v, e);
        total += linalg::dot(&auv, &aee) - linalg::dot(&aue, &ave);
    }
    total
}

/// Largest Gauss-equation residual between the catalog Ricci and the
/// alpha-derived Ricci over an orthonormal tangent basis. Only meaningful
/// for entries of codimension at most one; for implicit entries whose Ricci
/// already comes from the Gauss equation this is a tautology and stays at
/// rounding level.
pub fn gauss_ricci_residual(manifold: &dyn EmbeddedManifold, x: &[f64]) -> Result<f64> {
    let codim = manifold.ambient_dim() - manifold.intrinsic_dim();
    if codim > 1 {
        return Err(Error::NotApplicable(format!(
            "{} has codimension {codim}; the hypersurface residual does not apply",
            manifold.name()
        )));
    }
    let x = manifold.admit_point(x)?;
    let basis = manifold.tangent_basis(&x);
    let mut worst: f64 = 0.0;
    for e in &basis {
        let direct = manifold.ricci(&x, e, e);
        let derived = ricci_from_alpha(manifold, &x, e, e);
        worst = worst.max((direct - derived).abs());
    }
    Ok(worst)
}

/// Deterministic on-manifold sample: chart-based low-discrepancy points when
/// a chart exists, otherwise projected ambient Gaussians. Unbounded chart
/// axes are mapped to `[-3, 3]`.
pub fn sample_points(manifold: &dyn EmbeddedManifold, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if let Some(chart) = manifold.chart() {
        let d = chart.axes.len();
        (0..count)
            .map(|k| {
                let params: Vec<f64> = chart
                    .axes
                    .iter()
                    .enumerate()
                    .map(|(axis, dom)| {
                        let u = halton(k as u64 + 1, PRIMES[axis]);
                        match dom {
                            AxisDomain::Interval(lo, hi) => lo + u * (hi - lo),
                            AxisDomain::Line => -3.0 + 6.0 * u,
                        }
                    })
                    .collect();
                debug_assert_eq!(params.len(), d);
                (chart.map)(&params)
            })
            .collect()
    } else {
        let m = manifold.ambient_dim();
        (0..count)
            .map(|k| {
                let w: Vec<f64> = (0..m)
                    .map(|c| rng::normal(seed, Stream::RegionSample, k as u64, 0, c as u64))
                    .collect();
                manifold.project_point(&w)
            })
            .collect()
    }
}

/// Seeded random tangent vector at `x` (not normalized).
pub fn random_tangent(
    manifold: &dyn EmbeddedManifold,
    x: &[f64],
    seed: u64,
    idx: u64,
) -> Vec<f64> {
    let m = manifold.ambient_dim();
    for attempt in 0..16 {
        let w: Vec<f64> = (0..m)
            .map(|c| rng::normal(seed, Stream::RegionSample, idx, 1 + attempt, c as u64))
            .collect();
        let t = manifold.project_tangent(x, &w);
        if linalg::norm(&t) > 1e-8 {
            return t;
        }
    }
    panic!("failed to draw a nonzero tangent vector at {x:?}");
}

/// Unit tangent vector drawn uniformly on the tangent sphere at `x`.
pub fn random_unit_tangent(
    manifold: &dyn EmbeddedManifold,
    x: &[f64],
    seed: u64,
    idx: u64,
) -> Vec<f64> {
    let t = random_tangent(manifold, x, seed, idx);
    linalg::normalize(&t).expect("nonzero by construction")
}

const PRIMES: [u64; 4] = [2, 3, 5, 7];

/// Van der Corput radical inverse in the given base; pairs of these give the
/// low-discrepancy Halton points used for region sampling.
fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projector_fields_on_flat_space_are_identity() {
        let m = FlatSpace::new(2);
        let fields = diffusion_fields(&m, &[0.3, -1.2]).unwrap();
        assert_eq!(fields, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn sphere_pole_projector_kills_normal() {
        let s = Sphere::unit(2);
        let fields = diffusion_fields(&s, &[0.0, 0.0, 1.0]).unwrap();
        // P = diag(1, 1, 0) at the pole.
        assert!(linalg::norm(&fields[2]) < 1e-12);
        assert!((fields[0][0] - 1.0).abs() < 1e-12);
        assert!((fields[1][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_projector_at_east_point() {
        let s = Sphere::unit(1);
        let fields = diffusion_fields(&s, &[1.0, 0.0]).unwrap();
        assert!(linalg::norm(&fields[0]) < 1e-12);
        assert!((fields[1][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn off_manifold_point_is_rejected() {
        let s = Sphere::unit(2);
        let err = diffusion_fields(&s, &[1.5, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::OffManifold { .. }));
    }

    #[test]
    fn mildly_drifted_point_is_reprojected() {
        let s = Sphere::unit(2);
        let x = [1.0 + 5e-7, 0.0, 0.0];
        let admitted = s.admit_point(&x).unwrap();
        assert!((linalg::norm(&admitted) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_field_derivative_norms() {
        // On the unit sphere the field derivatives contract v by the
        // coordinates of x, so both norm sums close to |v|^2 and |v|^4.
        let s = Sphere::unit(2);
        let x = [
            1.0 / 3.0_f64.sqrt(),
            1.0 / 3.0_f64.sqrt(),
            1.0 / 3.0_f64.sqrt(),
        ];
        let v = s.project_tangent(&x, &[1.0, -0.5, 0.2]);
        let (hs, diag) = second_fundamental_norms(&s, &x, &v).unwrap();
        let nv = linalg::norm(&v);
        assert!((hs - nv * nv).abs() < 1e-10);
        assert!((diag - nv.powi(4)).abs() < 1e-10);
        let (hs2, diag2) = second_fundamental_norms_via_fields(&s, &x, &v).unwrap();
        assert!((hs - hs2).abs() < 1e-9);
        assert!((diag - diag2).abs() < 1e-9);
    }

    #[test]
    fn cylinder_axis_direction_is_flat() {
        let c = Cylinder::new(1.0);
        let x = [1.0, 0.0, 0.7];
        let v = [0.0, 0.0, 1.0];
        let (_, diag) = second_fundamental_norms(&c, &x, &v).unwrap();
        assert!(diag < 1e-18);
        let derivs = diffusion_field_derivatives(&c, &x, &v).unwrap();
        let diag2: f64 = derivs
            .iter()
            .map(|d| {
                let c = linalg::dot(d, &v);
                c * c
            })
            .sum();
        assert!(diag2 < 1e-18);
    }

    #[test]
    fn gauss_residual_closed_forms() {
        let s = Sphere::unit(2);
        for x in sample_points(&s, 16, 5) {
            assert!(gauss_ricci_residual(&s, &x).unwrap() < 1e-10);
        }
        let f = FlatSpace::new(2);
        assert_eq!(gauss_ricci_residual(&f, &[0.1, 0.2]).unwrap(), 0.0);
        let e = Ellipsoid::new(1.0, 1.0, 1.5);
        for x in sample_points(&e, 32, 6) {
            assert!(gauss_ricci_residual(&e, &x).unwrap() < 1e-9);
        }
    }
}
