//! Run configuration: parseable specs for manifolds, potentials, diffusion
//! and loops, a canonical serialized form, and its hash.
//!
//! The canonical document is compact JSON with a fixed field order; its
//! 64-bit FNV-1a hash names the run in every manifest, so a run can be
//! replayed bit-exactly from config plus seed.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleOpts;
use crate::error::{Error, Result};
use crate::functionals::ExtremumMethod;
use crate::geometry::{Cylinder, Ellipsoid, FlatSpace, ManifoldRef, Paraboloid, Sphere, Torus};
use crate::system::{Diffusion, ExtraDrift, Potential, SdeSystem};

/// Parsed manifold descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldSpec {
    Sphere { dim: usize, radius: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
    Cylinder { radius: f64 },
    Paraboloid { curvature: f64 },
    Flat { dim: usize },
    Torus { major: f64, minor: f64, injectivity: Option<f64> },
}

fn split_params(spec: &str) -> (String, Vec<f64>) {
    match spec.split_once(':') {
        None => (spec.trim().to_ascii_lowercase(), Vec::new()),
        Some((name, rest)) => {
            let params = rest
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .unwrap_or_default();
            (name.trim().to_ascii_lowercase(), params)
        }
    }
}

impl ManifoldSpec {
    /// Parses strings like `sphere:2`, `sphere:2,1.5`, `ellipsoid:1,1,1.5`,
    /// `cylinder:1`, `paraboloid`, `flat:1`, `torus:2,0.5[,inj]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, p) = split_params(spec);
        let bad = |msg: &str| Error::Config(format!("manifold '{spec}': {msg}"));
        match name.as_str() {
            "sphere" => {
                let dim = *p.first().ok_or_else(|| bad("needs a dimension"))? as usize;
                if !(1..=3).contains(&dim) {
                    return Err(bad("dimension must be 1, 2 or 3"));
                }
                Ok(ManifoldSpec::Sphere {
                    dim,
                    radius: p.get(1).copied().unwrap_or(1.0),
                })
            }
            "ellipsoid" => {
                if p.len() != 3 {
                    return Err(bad("needs three semi-axes"));
                }
                Ok(ManifoldSpec::Ellipsoid {
                    a: p[0],
                    b: p[1],
                    c: p[2],
                })
            }
            "cylinder" => Ok(ManifoldSpec::Cylinder {
                radius: p.first().copied().unwrap_or(1.0),
            }),
            "paraboloid" => Ok(ManifoldSpec::Paraboloid {
                curvature: p.first().copied().unwrap_or(1.0),
            }),
            "flat" | "line" => {
                let dim = if name == "line" {
                    1
                } else {
                    *p.first().ok_or_else(|| bad("needs a dimension"))? as usize
                };
                if !(1..=3).contains(&dim) {
                    return Err(bad("dimension must be 1, 2 or 3"));
                }
                Ok(ManifoldSpec::Flat { dim })
            }
            "torus" => {
                if p.len() < 2 {
                    return Err(bad("needs major and minor radii"));
                }
                Ok(ManifoldSpec::Torus {
                    major: p[0],
                    minor: p[1],
                    injectivity: p.get(2).copied(),
                })
            }
            _ => Err(bad("unknown manifold name")),
        }
    }

    pub fn build(&self) -> ManifoldRef {
        match *self {
            ManifoldSpec::Sphere { dim, radius } => Arc::new(Sphere::new(dim, radius)),
            ManifoldSpec::Ellipsoid { a, b, c } => Arc::new(Ellipsoid::new(a, b, c)),
            ManifoldSpec::Cylinder { radius } => Arc::new(Cylinder::new(radius)),
            ManifoldSpec::Paraboloid { curvature } => Arc::new(Paraboloid::new(curvature)),
            ManifoldSpec::Flat { dim } => Arc::new(FlatSpace::new(dim)),
            ManifoldSpec::Torus {
                major,
                minor,
                injectivity,
            } => Arc::new(Torus::new(major, minor, injectivity)),
        }
    }

    /// Canonical base point for simulations starting "somewhere natural".
    pub fn base_point(&self) -> Vec<f64> {
        match *self {
            ManifoldSpec::Sphere { dim, radius } => {
                let mut x = vec![0.0; dim + 1];
                x[dim] = radius;
                x
            }
            ManifoldSpec::Ellipsoid { c, .. } => vec![0.0, 0.0, c],
            ManifoldSpec::Cylinder { radius } => vec![radius, 0.0, 0.0],
            ManifoldSpec::Paraboloid { .. } => vec![0.0, 0.0, 0.0],
            ManifoldSpec::Flat { dim } => vec![0.0; dim],
            ManifoldSpec::Torus { major, minor, .. } => vec![major + minor, 0.0, 0.0],
        }
    }

    /// Circle template (center, radius, plane) for a named catalog loop.
    pub fn loop_template(&self, spec: &LoopSpec) -> Result<(Vec<f64>, f64, (usize, usize))> {
        let err = |msg: &str| Error::Config(format!("loop on {self:?}: {msg}"));
        match (self, spec) {
            (ManifoldSpec::Sphere { dim: 2, radius }, LoopSpec::Equator { .. }) => {
                Ok((vec![0.0, 0.0, 0.0], *radius, (0, 1)))
            }
            (ManifoldSpec::Sphere { dim: 2, radius }, LoopSpec::Circle { height, .. }) => {
                let z = height * radius;
                let rho = (radius * radius - z * z).max(0.0).sqrt();
                if rho <= 0.0 {
                    return Err(err("circle height leaves no radius"));
                }
                Ok((vec![0.0, 0.0, z], rho, (0, 1)))
            }
            (ManifoldSpec::Cylinder { radius }, _) => {
                let z = match spec {
                    LoopSpec::Waist { height, .. } | LoopSpec::Circle { height, .. } => *height,
                    LoopSpec::Equator { .. } => 0.0,
                };
                Ok((vec![0.0, 0.0, z], *radius, (0, 1)))
            }
            (ManifoldSpec::Torus { major, minor, .. }, LoopSpec::Equator { .. }) => {
                Ok((vec![0.0, 0.0, 0.0], major + minor, (0, 1)))
            }
            _ => Err(err("no catalog loop of that kind")),
        }
    }
}

/// Parsed loop descriptor: `equator:256`, `waist:256[,z]`, `circle:h,256`.
#[derive(Debug, Clone, PartialEq)]
pub enum LoopSpec {
    Equator { points: usize },
    Waist { points: usize, height: f64 },
    Circle { height: f64, points: usize },
}

impl LoopSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, p) = split_params(spec);
        let bad = |msg: &str| Error::Config(format!("loop '{spec}': {msg}"));
        match name.as_str() {
            "equator" => Ok(LoopSpec::Equator {
                points: p.first().copied().unwrap_or(256.0) as usize,
            }),
            "waist" => Ok(LoopSpec::Waist {
                points: p.first().copied().unwrap_or(256.0) as usize,
                height: p.get(1).copied().unwrap_or(0.0),
            }),
            "circle" => {
                if p.len() < 2 {
                    return Err(bad("needs height and point count"));
                }
                Ok(LoopSpec::Circle {
                    height: p[0],
                    points: p[1] as usize,
                })
            }
            _ => Err(bad("unknown loop kind")),
        }
    }

    pub fn points(&self) -> usize {
        match self {
            LoopSpec::Equator { points }
            | LoopSpec::Waist { points, .. }
            | LoopSpec::Circle { points, .. } => *points,
        }
    }
}

/// Parses potential specs: `zero`, `height[:scale[,axis]]`,
/// `radial[:coeff]`, and `+`-joined combinations.
pub fn parse_potential(spec: &str, ambient_dim: usize) -> Result<Potential> {
    let terms: Vec<&str> = spec.split('+').map(|s| s.trim()).collect();
    let mut parsed = Vec::with_capacity(terms.len());
    for term in terms {
        let (name, p) = split_params(term);
        match name.as_str() {
            "zero" | "" => parsed.push(Potential::Zero),
            "height" => parsed.push(Potential::Height {
                scale: p.first().copied().unwrap_or(1.0),
                axis: p
                    .get(1)
                    .map(|a| *a as usize)
                    .unwrap_or(ambient_dim.saturating_sub(1)),
            }),
            "radial" => parsed.push(Potential::RadialQuadratic {
                coeff: p.first().copied().unwrap_or(-1.0),
            }),
            _ => {
                return Err(Error::Config(format!(
                    "unknown potential '{term}' in '{spec}'"
                )))
            }
        }
    }
    Ok(if parsed.len() == 1 {
        parsed.pop().unwrap()
    } else {
        Potential::Sum(parsed)
    })
}

pub fn parse_diffusion(spec: &str) -> Result<Diffusion> {
    match spec.trim().to_ascii_lowercase().as_str() {
        "projection" | "" => Ok(Diffusion::Projection),
        "sincos" => Ok(Diffusion::SinCos),
        other => Err(Error::Config(format!("unknown diffusion '{other}'"))),
    }
}

pub fn parse_extra_drift(spec: &str) -> Result<ExtraDrift> {
    let (name, p) = split_params(spec);
    match name.as_str() {
        "none" | "" => Ok(ExtraDrift::None),
        "restoring" => Ok(ExtraDrift::LinearRestoring {
            rate: p.first().copied().unwrap_or(1.0),
        }),
        other => Err(Error::Config(format!("unknown extra drift '{other}'"))),
    }
}

/// Parses the functional tag used by positivity runs: `upper-rate`,
/// `lower-rate`, `neg-upper-rate`, `ricci-gap`, `const:c`. Rate tags take
/// the order from the run configuration.
pub fn parse_functional(spec: &str, p: f64) -> Result<crate::ensemble::PointFunctional> {
    use crate::ensemble::PointFunctional;
    let (name, params) = split_params(spec);
    match name.as_str() {
        "upper-rate" => Ok(PointFunctional::UpperRate { p }),
        "lower-rate" => Ok(PointFunctional::LowerRate { p }),
        "neg-upper-rate" | "" => Ok(PointFunctional::NegUpperRate { p }),
        "ricci-gap" => Ok(PointFunctional::RicciDriftGap),
        "const" => Ok(PointFunctional::Const(
            params.first().copied().unwrap_or(1.0),
        )),
        other => Err(Error::Config(format!("unknown functional '{other}'"))),
    }
}

/// The complete, canonically serializable run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub manifold: String,
    pub h: String,
    pub diffusion: String,
    pub extra_drift: String,
    pub x0: Option<Vec<f64>>,
    pub p: f64,
    pub dt: f64,
    pub horizon: f64,
    pub grid: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    pub fit_window: f64,
    pub explosion_radius: f64,
    pub frame_sup: bool,
    pub region_samples: usize,
    pub sandwich_t: f64,
    pub functional: String,
    pub loop_spec: String,
    pub loop_realizations: usize,
    pub quadrature_resolution: usize,
    pub check_points: usize,
    pub dump_paths: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifold: "sphere:2".into(),
            h: "zero".into(),
            diffusion: "projection".into(),
            extra_drift: "none".into(),
            x0: None,
            p: 1.0,
            dt: 1e-3,
            horizon: 4.0,
            grid: 81,
            n_paths: 4096,
            seed: 42,
            workers: None,
            fit_window: 0.5,
            explosion_radius: 1e6,
            frame_sup: false,
            region_samples: 128,
            sandwich_t: 2.0,
            functional: "neg-upper-rate".into(),
            loop_spec: "equator:256".into(),
            loop_realizations: 256,
            quadrature_resolution: 64,
            check_points: 100,
            dump_paths: false,
        }
    }
}

impl RunConfig {
    /// Compact JSON with the struct's field order: the canonical document.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// FNV-1a hash of the canonical document, as fixed-width hex.
    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a(self.canonical().as_bytes()))
    }

    pub fn manifold_spec(&self) -> Result<ManifoldSpec> {
        ManifoldSpec::parse(&self.manifold)
    }

    pub fn build_system(&self) -> Result<SdeSystem> {
        let spec = self.manifold_spec()?;
        let manifold = spec.build();
        let potential = parse_potential(&self.h, manifold.ambient_dim())?;
        let diffusion = parse_diffusion(&self.diffusion)?;
        let extra = parse_extra_drift(&self.extra_drift)?;
        if self.dt <= 0.0 || self.horizon <= 0.0 {
            return Err(Error::Config("dt and horizon must be positive".into()));
        }
        if self.p < 1.0 {
            return Err(Error::Config("moment order must be at least 1".into()));
        }
        if self.grid < 2 {
            return Err(Error::Config("grid needs at least 2 points".into()));
        }
        if let Some(d) = manifold.diameter_bound() {
            if self.explosion_radius <= d {
                return Err(Error::Config(format!(
                    "explosion radius {} does not clear the manifold diameter {d}",
                    self.explosion_radius
                )));
            }
        }
        SdeSystem::build(manifold, potential, diffusion, extra)
    }

    pub fn start_point(&self, system: &SdeSystem) -> Result<Vec<f64>> {
        match &self.x0 {
            Some(x) => system.manifold.admit_point(x),
            None => Ok(self.manifold_spec()?.base_point()),
        }
    }

    pub fn ensemble_opts(&self) -> EnsembleOpts {
        EnsembleOpts {
            dt: self.dt,
            horizon: self.horizon,
            grid: self.grid,
            n_paths: self.n_paths,
            seed: self.seed,
            workers: self.workers,
            frame_sup: self.frame_sup,
            v0_scale: 1.0,
            fit_window: self.fit_window,
            explosion_radius: self.explosion_radius,
            extremum_method: ExtremumMethod::Auto,
        }
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifold_specs_round_trip() {
        let s = ManifoldSpec::parse("sphere:2").unwrap();
        assert_eq!(
            s,
            ManifoldSpec::Sphere {
                dim: 2,
                radius: 1.0
            }
        );
        let e = ManifoldSpec::parse("ellipsoid:1,1,1.5").unwrap();
        assert_eq!(
            e,
            ManifoldSpec::Ellipsoid {
                a: 1.0,
                b: 1.0,
                c: 1.5
            }
        );
        assert!(ManifoldSpec::parse("pretzel:3").is_err());
        assert!(ManifoldSpec::parse("sphere:7").is_err());
    }

    #[test]
    fn potentials_parse_including_sums() {
        let p = parse_potential("height:2,1", 3).unwrap();
        assert_eq!(
            p,
            Potential::Height {
                scale: 2.0,
                axis: 1
            }
        );
        let p = parse_potential("height + radial:-0.5", 3).unwrap();
        match p {
            Potential::Sum(terms) => assert_eq!(terms.len(), 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_potential("cubic:1", 3).is_err());
    }

    #[test]
    fn config_canonical_form_round_trips_and_hashes_stably() {
        let cfg = RunConfig::default();
        let doc = cfg.canonical();
        let back: RunConfig = serde_json::from_str(&doc).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
        let mut other = cfg.clone();
        other.seed = 43;
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn config_validates_ranges() {
        let mut cfg = RunConfig {
            dt: -1.0,
            ..RunConfig::default()
        };
        assert!(cfg.build_system().is_err());
        cfg.dt = 1e-3;
        cfg.explosion_radius = 1.0;
        assert!(cfg.build_system().is_err());
        cfg.explosion_radius = 1e6;
        assert!(cfg.build_system().is_ok());
    }

    #[test]
    fn base_points_are_on_their_manifolds() {
        for spec in [
            "sphere:1",
            "sphere:2",
            "sphere:3",
            "ellipsoid:1,1,1.5",
            "cylinder:1",
            "paraboloid",
            "flat:2",
            "torus:2,0.5",
        ] {
            let ms = ManifoldSpec::parse(spec).unwrap();
            let m = ms.build();
            let x = ms.base_point();
            assert!(
                m.constraint_distance(&x) < 1e-12,
                "{spec}: {x:?}"
            );
        }
    }
}
