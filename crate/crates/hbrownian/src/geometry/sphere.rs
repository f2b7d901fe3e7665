//! Round spheres `S^n` of any radius, embedded in `R^{n+1}`.
//!
//! Everything is closed form: the outward unit normal is `x / r`, the second
//! fundamental form is `alpha(u, v) = -(<u, v> / r) nu`, and the Ricci
//! curvature is `(n - 1) / r^2` times the metric. These exact expressions
//! make the sphere the primary oracle for the rest of the crate.

use super::{AxisDomain, Chart, EmbeddedManifold};
use crate::linalg;

#[derive(Debug, Clone)]
pub struct Sphere {
    dim: usize,
    radius: f64,
}

impl Sphere {
    pub fn new(dim: usize, radius: f64) -> Self {
        assert!((1..=3).contains(&dim), "catalog spheres have dim 1..=3");
        assert!(radius > 0.0);
        Sphere { dim, radius }
    }

    pub fn unit(dim: usize) -> Self {
        Sphere::new(dim, 1.0)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn unit_normal(&self, x: &[f64]) -> Vec<f64> {
        linalg::normalize(x).expect("sphere normal undefined at the origin")
    }
}

impl EmbeddedManifold for Sphere {
    fn name(&self) -> String {
        format!("sphere(dim={}, radius={})", self.dim, self.radius)
    }

    fn intrinsic_dim(&self) -> usize {
        self.dim
    }

    fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    fn constraint_distance(&self, x: &[f64]) -> f64 {
        (linalg::norm(x) - self.radius).abs()
    }

    fn project_point(&self, w: &[f64]) -> Vec<f64> {
        match linalg::normalize(w) {
            Some(u) => linalg::scale(&u, self.radius),
            None => {
                let mut p = vec![0.0; self.ambient_dim()];
                p[0] = self.radius;
                p
            }
        }
    }

    fn normal_frame(&self, x: &[f64]) -> Vec<Vec<f64>> {
        vec![self.unit_normal(x)]
    }

    fn second_fundamental(&self, x: &[f64], u: &[f64], v: &[f64]) -> Vec<f64> {
        let nu = self.unit_normal(x);
        linalg::scale(&nu, -linalg::dot(u, v) / self.radius)
    }

    fn ricci(&self, _x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        (self.dim as f64 - 1.0) / (self.radius * self.radius) * linalg::dot(u, v)
    }

    fn injectivity_radius(&self) -> Option<f64> {
        Some(std::f64::consts::PI * self.radius)
    }

    fn diameter_bound(&self) -> Option<f64> {
        Some(2.0 * self.radius)
    }

    fn chart(&self) -> Option<Chart> {
        let r = self.radius;
        match self.dim {
            1 => Some(Chart {
                axes: vec![AxisDomain::Interval(0.0, std::f64::consts::TAU)],
                map: Box::new(move |p| vec![r * p[0].cos(), r * p[0].sin()]),
                volume_element: Box::new(move |_| r),
            }),
            2 => Some(Chart {
                axes: vec![
                    AxisDomain::Interval(0.0, std::f64::consts::PI),
                    AxisDomain::Interval(0.0, std::f64::consts::TAU),
                ],
                map: Box::new(move |p| {
                    let (theta, phi) = (p[0], p[1]);
                    vec![
                        r * theta.sin() * phi.cos(),
                        r * theta.sin() * phi.sin(),
                        r * theta.cos(),
                    ]
                }),
                volume_element: Box::new(move |p| r * r * p[0].sin()),
            }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gauss_ricci_residual, sample_points};

    #[test]
    fn alpha_is_inward_and_metric_scaled() {
        let s = Sphere::new(2, 2.0);
        let x = [2.0, 0.0, 0.0];
        let u = [0.0, 1.0, 0.0];
        let a = s.second_fundamental(&x, &u, &u);
        // alpha(u, u) = -(|u|^2 / r^2) x = (-1/2, 0, 0)
        assert!((a[0] + 0.5).abs() < 1e-14);
        assert!(a[1].abs() < 1e-14 && a[2].abs() < 1e-14);
    }

    #[test]
    fn scaled_sphere_gauss_equation_holds() {
        for r in [0.5, 1.0, 3.0] {
            let s = Sphere::new(2, r);
            for x in sample_points(&s, 20, 11) {
                assert!(gauss_ricci_residual(&s, &x).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn three_sphere_ricci_matches_gauss() {
        let s = Sphere::unit(3);
        for x in sample_points(&s, 20, 12) {
            assert!(gauss_ricci_residual(&s, &x).unwrap() < 1e-10);
        }
    }
}
