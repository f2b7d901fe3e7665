//! Flat `R^n` embedded identically in itself: the null case where every
//! curvature quantity vanishes and the projector is the identity.

use super::{AxisDomain, Chart, EmbeddedManifold};

#[derive(Debug, Clone)]
pub struct FlatSpace {
    dim: usize,
}

impl FlatSpace {
    pub fn new(dim: usize) -> Self {
        assert!((1..=3).contains(&dim));
        FlatSpace { dim }
    }
}

impl EmbeddedManifold for FlatSpace {
    fn name(&self) -> String {
        format!("flat(dim={})", self.dim)
    }

    fn intrinsic_dim(&self) -> usize {
        self.dim
    }

    fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn constraint_distance(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn project_point(&self, w: &[f64]) -> Vec<f64> {
        w.to_vec()
    }

    fn normal_frame(&self, _x: &[f64]) -> Vec<Vec<f64>> {
        Vec::new()
    }

    fn second_fundamental(&self, _x: &[f64], _u: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn ricci(&self, _x: &[f64], _u: &[f64], _v: &[f64]) -> f64 {
        0.0
    }

    fn injectivity_radius(&self) -> Option<f64> {
        Some(f64::INFINITY)
    }

    fn chart(&self) -> Option<Chart> {
        if self.dim > 2 {
            return None;
        }
        Some(Chart {
            axes: vec![AxisDomain::Line; self.dim],
            map: Box::new(|p| p.to_vec()),
            volume_element: Box::new(|_| 1.0),
        })
    }
}
