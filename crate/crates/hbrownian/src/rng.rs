//! Counter-based random numbers for reproducible parallel ensembles.
//!
//! Every draw is a pure function of `(seed, stream, path, step, slot)`, so a
//! path ensemble produces identical numbers no matter how its paths are
//! distributed over workers, and a single path can be replayed from its
//! indices alone. The mixer chains splitmix64 finalization steps over the key
//! words; statistical quality is far beyond what the estimators here resolve.
//!
//! Streams separate the purposes a seed is used for, so that e.g. initial
//! directions never collide with Brownian increments.

/// Purpose tag mixed into every key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Brownian increments of the base path.
    Increments,
    /// Initial tangent directions.
    InitialDirection,
    /// Region sampling on a manifold.
    RegionSample,
    /// Brownian-bridge refinement draws at a given subdivision level.
    Bridge(u32),
    /// Scratch draws in tests and diagnostics.
    Diagnostic,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Increments => 1,
            Stream::InitialDirection => 2,
            Stream::RegionSample => 3,
            Stream::Bridge(level) => 0x100 + level as u64,
            Stream::Diagnostic => 4,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix_key(seed: u64, stream: u64, path: u64, step: u64, slot: u64) -> u64 {
    let mut z = splitmix(seed ^ 0x6a09_e667_f3bc_c908);
    z = splitmix(z ^ stream.wrapping_mul(0xbb67_ae85_84ca_a73b));
    z = splitmix(z ^ path.wrapping_mul(0x3c6e_f372_fe94_f82b));
    z = splitmix(z ^ step.wrapping_mul(0xa54f_f53a_5f1d_36f1));
    splitmix(z ^ slot.wrapping_mul(0x510e_527f_ade6_82d1))
}

/// Uniform in `(0, 1]`: never zero, so it is safe under a logarithm.
fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draw for the given key (Box-Muller, cosine branch).
pub fn normal(seed: u64, stream: Stream, path: u64, step: u64, slot: u64) -> f64 {
    let u1 = unit_open(mix_key(seed, stream.id(), path, step, slot.wrapping_mul(2)));
    let u2 = unit_open(mix_key(
        seed,
        stream.id(),
        path,
        step,
        slot.wrapping_mul(2).wrapping_add(1),
    ));
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Uniform draw in `[0, 1)` for the given key.
pub fn uniform(seed: u64, stream: Stream, path: u64, step: u64, slot: u64) -> f64 {
    let bits = mix_key(seed, stream.id(), path, step, slot);
    (bits >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Brownian increments for one path on a fixed step size.
///
/// `increments(step)` fills one `N(0, dt)` draw per ambient component; the
/// same `(seed, path, step)` always yields the same vector.
pub trait NoiseSource {
    fn dt(&self) -> f64;
    fn fill_increments(&self, step: usize, out: &mut [f64]);
}

/// Direct counter-keyed increments at step size `dt`.
#[derive(Debug, Clone)]
pub struct CounterNoise {
    pub seed: u64,
    pub path: u64,
    pub dt: f64,
}

impl NoiseSource for CounterNoise {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn fill_increments(&self, step: usize, out: &mut [f64]) {
        let sqrt_dt = self.dt.sqrt();
        for (comp, slot) in out.iter_mut().enumerate() {
            *slot = sqrt_dt * normal(self.seed, Stream::Increments, self.path, step as u64, comp as u64);
        }
    }
}

/// Pre-tabulated increments, used for common-noise refinement studies.
#[derive(Debug, Clone)]
pub struct TableNoise {
    dt: f64,
    components: usize,
    /// Row-major `[step][component]` increments.
    table: Vec<f64>,
}

impl TableNoise {
    pub fn steps(&self) -> usize {
        self.table.len() / self.components
    }
}

impl NoiseSource for TableNoise {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn fill_increments(&self, step: usize, out: &mut [f64]) {
        let base = step * self.components;
        out.copy_from_slice(&self.table[base..base + self.components]);
    }
}

/// Builds a Brownian path at the base resolution and its dyadic refinements.
///
/// The base increments over `[k dt, (k+1) dt]` come from the counter stream;
/// each refinement level splits every increment in two with a bridge draw:
/// the first half is `w/2 + xi`, `xi ~ N(0, dt/4)`, and the second half is
/// the exact remainder, so every level resolves the same Brownian path.
pub fn bridged_noise_levels(
    seed: u64,
    path: u64,
    components: usize,
    base_dt: f64,
    base_steps: usize,
    levels: u32,
) -> Vec<TableNoise> {
    let mut out = Vec::with_capacity(levels as usize + 1);
    let mut table = vec![0.0; base_steps * components];
    let sqrt_dt = base_dt.sqrt();
    for step in 0..base_steps {
        for comp in 0..components {
            table[step * components + comp] =
                sqrt_dt * normal(seed, Stream::Increments, path, step as u64, comp as u64);
        }
    }
    out.push(TableNoise {
        dt: base_dt,
        components,
        table: table.clone(),
    });
    let mut dt = base_dt;
    let mut steps = base_steps;
    for level in 0..levels {
        let half_std = (dt / 4.0).sqrt();
        let mut refined = vec![0.0; steps * 2 * components];
        for step in 0..steps {
            for comp in 0..components {
                let w = table[step * components + comp];
                let xi = half_std
                    * normal(seed, Stream::Bridge(level), path, step as u64, comp as u64);
                let first = 0.5 * w + xi;
                refined[(2 * step) * components + comp] = first;
                refined[(2 * step + 1) * components + comp] = w - first;
            }
        }
        table = refined;
        dt *= 0.5;
        steps *= 2;
        out.push(TableNoise {
            dt,
            components,
            table: table.clone(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_reproducible_and_stream_separated() {
        let a = normal(42, Stream::Increments, 7, 100, 2);
        let b = normal(42, Stream::Increments, 7, 100, 2);
        assert_eq!(a.to_bits(), b.to_bits());
        let c = normal(42, Stream::InitialDirection, 7, 100, 2);
        assert_ne!(a.to_bits(), c.to_bits());
        let d = normal(43, Stream::Increments, 7, 100, 2);
        assert_ne!(a.to_bits(), d.to_bits());
    }

    #[test]
    fn normals_have_unit_moments() {
        let n = 200_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut lag = 0.0;
        let mut prev = 0.0;
        for i in 0..n {
            let z = normal(1234, Stream::Diagnostic, 0, i as u64, 0);
            sum += z;
            sumsq += z * z;
            if i > 0 {
                lag += z * prev;
            }
            prev = z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let lag1 = lag / (n - 1) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
        assert!(lag1.abs() < 0.01, "lag-1 correlation {lag1}");
    }

    #[test]
    fn bridge_levels_resolve_the_same_path() {
        let levels = bridged_noise_levels(9, 3, 2, 0.25, 8, 3);
        // Sum of increments over the full horizon must agree exactly.
        let total = |t: &TableNoise, comp: usize| -> f64 {
            (0..t.steps()).map(|s| {
                let mut buf = [0.0; 2];
                t.fill_increments(s, &mut buf);
                buf[comp]
            }).sum()
        };
        for comp in 0..2 {
            let t0 = total(&levels[0], comp);
            for lv in &levels[1..] {
                assert!((total(lv, comp) - t0).abs() < 1e-12);
            }
        }
        // Each refinement halves the step and doubles the count.
        assert_eq!(levels[3].steps(), 64);
        assert!((levels[3].dt() - 0.03125).abs() < 1e-15);
        // Partial sums at shared times agree: level 2 step 4k..4k+3 vs level 0 step k.
        let mut buf = [0.0; 2];
        let mut partial = 0.0;
        for s in 0..4 {
            levels[2].fill_increments(s, &mut buf);
            partial += buf[0];
        }
        levels[0].fill_increments(0, &mut buf);
        assert!((partial - buf[0]).abs() < 1e-12);
    }
}
