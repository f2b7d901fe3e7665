//! Ellipsoid, circular cylinder, and paraboloid of revolution in `R^3`.
//!
//! Each is the zero set of a quadratic (or graph) constraint `g`, so the
//! unit normal is `grad g / |grad g|` and the second fundamental form is
//! `alpha(u, v) = -(u^T Hess(g) v / |grad g|) nu`. Ricci curvature comes
//! from a closed-form Gaussian curvature in each case, which keeps it
//! independent of the alpha route and lets the Gauss-equation residual act
//! as a genuine cross-check.

use super::{AxisDomain, Chart, EmbeddedManifold};
use crate::linalg;

// ---------------------------------------------------------------------------
// Ellipsoid x^2/a^2 + y^2/b^2 + z^2/c^2 = 1
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Ellipsoid {
    a: f64,
    b: f64,
    c: f64,
}

impl Ellipsoid {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        assert!(a > 0.0 && b > 0.0 && c > 0.0);
        Ellipsoid { a, b, c }
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        vec![
            2.0 * x[0] / (self.a * self.a),
            2.0 * x[1] / (self.b * self.b),
            2.0 * x[2] / (self.c * self.c),
        ]
    }

    fn g(&self, x: &[f64]) -> f64 {
        (x[0] / self.a).powi(2) + (x[1] / self.b).powi(2) + (x[2] / self.c).powi(2) - 1.0
    }

    /// Gaussian curvature `1 / (a^2 b^2 c^2 h^4)` with
    /// `h^2 = x^2/a^4 + y^2/b^4 + z^2/c^4`.
    fn gaussian_curvature(&self, x: &[f64]) -> f64 {
        let h2 = (x[0] / (self.a * self.a)).powi(2)
            + (x[1] / (self.b * self.b)).powi(2)
            + (x[2] / (self.c * self.c)).powi(2);
        1.0 / ((self.a * self.b * self.c).powi(2) * h2 * h2)
    }
}

impl EmbeddedManifold for Ellipsoid {
    fn name(&self) -> String {
        format!("ellipsoid(a={}, b={}, c={})", self.a, self.b, self.c)
    }

    fn intrinsic_dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn constraint_distance(&self, x: &[f64]) -> f64 {
        let grad_norm = linalg::norm(&self.grad(x));
        if grad_norm < 1e-300 {
            1.0
        } else {
            self.g(x).abs() / grad_norm
        }
    }

    /// Radial scaling onto the constraint set. Exactly idempotent, fixes
    /// on-manifold points, and is tangent to the identity there.
    fn project_point(&self, w: &[f64]) -> Vec<f64> {
        let s = ((w[0] / self.a).powi(2) + (w[1] / self.b).powi(2) + (w[2] / self.c).powi(2))
            .sqrt();
        if s < 1e-300 {
            vec![self.a, 0.0, 0.0]
        } else {
            linalg::scale(w, 1.0 / s)
        }
    }

    fn normal_frame(&self, x: &[f64]) -> Vec<Vec<f64>> {
        vec![linalg::normalize(&self.grad(x)).expect("gradient vanishes only at the origin")]
    }

    fn second_fundamental(&self, x: &[f64], u: &[f64], v: &[f64]) -> Vec<f64> {
        let grad = self.grad(x);
        let grad_norm = linalg::norm(&grad);
        let hess_quad = 2.0
            * (u[0] * v[0] / (self.a * self.a)
                + u[1] * v[1] / (self.b * self.b)
                + u[2] * v[2] / (self.c * self.c));
        linalg::scale(&grad, -hess_quad / (grad_norm * grad_norm))
    }

    fn ricci(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        self.gaussian_curvature(x) * linalg::dot(u, v)
    }

    fn injectivity_radius(&self) -> Option<f64> {
        None
    }

    fn diameter_bound(&self) -> Option<f64> {
        Some(2.0 * self.a.max(self.b).max(self.c))
    }

    fn chart(&self) -> Option<Chart> {
        let (a, b, c) = (self.a, self.b, self.c);
        Some(Chart {
            axes: vec![
                AxisDomain::Interval(0.0, std::f64::consts::PI),
                AxisDomain::Interval(0.0, std::f64::consts::TAU),
            ],
            map: Box::new(move |p| {
                let (theta, phi) = (p[0], p[1]);
                vec![
                    a * theta.sin() * phi.cos(),
                    b * theta.sin() * phi.sin(),
                    c * theta.cos(),
                ]
            }),
            volume_element: Box::new(move |p| {
                let (theta, phi) = (p[0], p[1]);
                let rt = [
                    a * theta.cos() * phi.cos(),
                    b * theta.cos() * phi.sin(),
                    -c * theta.sin(),
                ];
                let rp = [
                    -a * theta.sin() * phi.sin(),
                    b * theta.sin() * phi.cos(),
                    0.0,
                ];
                let cross = [
                    rt[1] * rp[2] - rt[2] * rp[1],
                    rt[2] * rp[0] - rt[0] * rp[2],
                    rt[0] * rp[1] - rt[1] * rp[0],
                ];
                linalg::norm(&cross)
            }),
        })
    }
}

// ---------------------------------------------------------------------------
// Cylinder x^2 + y^2 = r^2, z free
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Cylinder {
    radius: f64,
}

impl Cylinder {
    pub fn new(radius: f64) -> Self {
        assert!(radius > 0.0);
        Cylinder { radius }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn rho(x: &[f64]) -> f64 {
        (x[0] * x[0] + x[1] * x[1]).sqrt()
    }
}

impl EmbeddedManifold for Cylinder {
    fn name(&self) -> String {
        format!("cylinder(radius={})", self.radius)
    }

    fn intrinsic_dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn constraint_distance(&self, x: &[f64]) -> f64 {
        (Self::rho(x) - self.radius).abs()
    }

    fn project_point(&self, w: &[f64]) -> Vec<f64> {
        let rho = Self::rho(w);
        if rho < 1e-300 {
            vec![self.radius, 0.0, w[2]]
        } else {
            let s = self.radius / rho;
            vec![w[0] * s, w[1] * s, w[2]]
        }
    }

    fn normal_frame(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let rho = Self::rho(x);
        vec![vec![x[0] / rho, x[1] / rho, 0.0]]
    }

    fn second_fundamental(&self, x: &[f64], u: &[f64], v: &[f64]) -> Vec<f64> {
        let nu = &self.normal_frame(x)[0];
        linalg::scale(nu, -(u[0] * v[0] + u[1] * v[1]) / self.radius)
    }

    fn ricci(&self, _x: &[f64], _u: &[f64], _v: &[f64]) -> f64 {
        0.0
    }

    fn injectivity_radius(&self) -> Option<f64> {
        Some(std::f64::consts::PI * self.radius)
    }

    fn chart(&self) -> Option<Chart> {
        let r = self.radius;
        Some(Chart {
            axes: vec![
                AxisDomain::Interval(0.0, std::f64::consts::TAU),
                AxisDomain::Line,
            ],
            map: Box::new(move |p| vec![r * p[0].cos(), r * p[0].sin(), p[1]]),
            volume_element: Box::new(move |_| r),
        })
    }
}

// ---------------------------------------------------------------------------
// Paraboloid z = k (x^2 + y^2) / 2
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Paraboloid {
    curvature: f64,
}

impl Paraboloid {
    pub fn new(curvature: f64) -> Self {
        assert!(curvature > 0.0);
        Paraboloid { curvature }
    }

    fn g(&self, x: &[f64]) -> f64 {
        x[2] - 0.5 * self.curvature * (x[0] * x[0] + x[1] * x[1])
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        vec![-self.curvature * x[0], -self.curvature * x[1], 1.0]
    }
}

impl EmbeddedManifold for Paraboloid {
    fn name(&self) -> String {
        format!("paraboloid(curvature={})", self.curvature)
    }

    fn intrinsic_dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn constraint_distance(&self, x: &[f64]) -> f64 {
        self.g(x).abs() / linalg::norm(&self.grad(x))
    }

    fn project_point(&self, w: &[f64]) -> Vec<f64> {
        super::newton_project(
            w,
            |x| self.g(x),
            |x| self.grad(x),
        )
    }

    fn normal_frame(&self, x: &[f64]) -> Vec<Vec<f64>> {
        vec![linalg::normalize(&self.grad(x)).expect("paraboloid gradient never vanishes")]
    }

    fn second_fundamental(&self, x: &[f64], u: &[f64], v: &[f64]) -> Vec<f64> {
        let grad = self.grad(x);
        let grad_norm = linalg::norm(&grad);
        // Hess(g) = diag(-k, -k, 0)
        let hess_quad = -self.curvature * (u[0] * v[0] + u[1] * v[1]);
        linalg::scale(&grad, -hess_quad / (grad_norm * grad_norm))
    }

    fn ricci(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        let k = self.curvature;
        let rho2 = x[0] * x[0] + x[1] * x[1];
        let gauss = k * k / (1.0 + k * k * rho2).powi(2);
        gauss * linalg::dot(u, v)
    }

    fn injectivity_radius(&self) -> Option<f64> {
        None
    }

    fn chart(&self) -> Option<Chart> {
        let k = self.curvature;
        Some(Chart {
            axes: vec![AxisDomain::Line, AxisDomain::Line],
            map: Box::new(move |p| vec![p[0], p[1], 0.5 * k * (p[0] * p[0] + p[1] * p[1])]),
            volume_element: Box::new(move |p| {
                (1.0 + k * k * (p[0] * p[0] + p[1] * p[1])).sqrt()
            }),
        })
    }
}
