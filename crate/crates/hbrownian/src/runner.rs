//! Orchestration behind the command line: each experiment as a function of
//! a [`RunConfig`], writing machine-readable outputs plus a manifest and
//! returning the typed result for in-process callers.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{parse_functional, LoopSpec, RunConfig};
use crate::ensemble::{
    self, estimate_moment, exponential_functional, sandwich_check, stochastic_positivity_rate,
    MomentEstimate, PositivityReport, SandwichResult,
};
use crate::error::Result;
use crate::flow::{self, IntegratorConfig};
use crate::functionals::{criterion_report, CriterionReport, ExtremumMethod};
use crate::geometry::{checks, sample_points};
use crate::linalg;
use crate::loops::{self, LoopCurve};
use crate::output::{csv_document, write_json, write_text, write_versioned, ManifestBuilder, SCHEMA_VERSION};
use crate::rng::CounterNoise;
use crate::volume::{h_volume, HVolume};

/// Where a run wrote its files and what to print.
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub manifest: PathBuf,
    pub summary: String,
    /// False when the run's own verdict failed (e.g. a geometry invariant).
    pub ok: bool,
}

fn finish(
    mut builder: ManifestBuilder,
    out_dir: &Path,
    summary: String,
    ok: bool,
    outputs: &[PathBuf],
) -> Result<RunArtifacts> {
    for p in outputs {
        builder.record_output(p);
    }
    let manifest = builder.finish(out_dir)?;
    Ok(RunArtifacts {
        out_dir: out_dir.to_path_buf(),
        manifest,
        summary,
        ok,
    })
}

// ---------------------------------------------------------------------------
// geometry-check
// ---------------------------------------------------------------------------

pub fn run_geometry_check(
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<(RunArtifacts, checks::InvariantReport)> {
    let builder = ManifestBuilder::new("geometry-check", cfg);
    let system = cfg.build_system()?;
    let report = checks::check_invariants(system.manifold.as_ref(), cfg.check_points, cfg.seed);
    let path = out_dir.join("geometry.json");
    write_versioned(&path, &report)?;
    let mut summary = format!(
        "{:<44} {:>8} points  {}\n",
        report.manifold,
        report.points,
        if report.pass { "PASS" } else { "FAIL" }
    );
    summary.push_str(&format!(
        "  projector: idem {:.2e}  sym {:.2e}  rank {:.2e}  normals {:.2e}\n",
        report.projector_idempotency,
        report.projector_symmetry,
        report.projector_rank,
        report.normal_orthogonality
    ));
    summary.push_str(&format!(
        "  alpha: sym {:.2e}  normality {:.2e}  route gap {:.2e}\n",
        report.alpha_symmetry, report.alpha_normality, report.norm_route_gap
    ));
    if let Some(g) = report.gauss_residual {
        summary.push_str(&format!("  gauss residual: {g:.2e}\n"));
    }
    summary.push_str(&format!(
        "  retraction: idem {:.2e}  drift {:.2e}\n",
        report.retraction_idempotency, report.retraction_drift
    ));
    let ok = report.pass;
    let artifacts = finish(builder, out_dir, summary, ok, &[path])?;
    Ok((artifacts, report))
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub schema_version: u32,
    pub n_paths: usize,
    pub n_censored: usize,
    pub terminal_mean_log_vnorm: f64,
    pub max_representation_residual: f64,
}

pub fn run_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<(RunArtifacts, SimulateSummary)> {
    let mut builder = ManifestBuilder::new("simulate", cfg);
    let system = cfg.build_system()?;
    let x0 = cfg.start_point(&system)?;
    let mut icfg = IntegratorConfig::new(cfg.dt, cfg.p).with_rate_integrals();
    icfg.explosion_radius = cfg.explosion_radius;

    let mut outputs = Vec::new();
    let mut censored = 0;
    let mut log_terminal = 0.0;
    let mut max_residual: f64 = 0.0;
    for path in 0..cfg.n_paths as u64 {
        let v0 = crate::geometry::random_unit_tangent(system.manifold.as_ref(), &x0, cfg.seed, path);
        let noise = CounterNoise {
            seed: cfg.seed,
            path,
            dt: cfg.dt,
        };
        let traj = flow::simulate_path(
            &system,
            &x0,
            &v0,
            cfg.horizon,
            cfg.grid,
            &icfg,
            &noise,
        )?;
        censored += traj.censored as usize;
        let last = traj.samples.last().expect("grid nonempty");
        log_terminal += (linalg::norm(&last.v) / traj.v0_norm).ln() / cfg.n_paths as f64;
        if !traj.censored {
            max_residual = max_residual.max(flow::representation_residual(&traj, cfg.p));
        }
        if cfg.dump_paths {
            let m = system.manifold.ambient_dim();
            let mut header: Vec<String> = vec!["t".into()];
            header.extend((0..m).map(|i| format!("x{i}")));
            header.extend(
                ["v_norm", "mart", "qvar", "drift_exp", "sup_rate_int", "alive"]
                    .iter()
                    .map(|s| s.to_string()),
            );
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let rows: Vec<Vec<f64>> = traj
                .samples
                .iter()
                .map(|s| {
                    let mut row = vec![s.t];
                    row.extend(s.x.iter().copied());
                    row.push(linalg::norm(&s.v));
                    row.push(s.mart);
                    row.push(s.qvar);
                    row.push(s.drift_exp);
                    row.push(s.sup_rate_int);
                    row.push(s.alive as u8 as f64);
                    row
                })
                .collect();
            let path_file = out_dir.join(format!("paths/path-{path:05}.csv"));
            write_text(&path_file, &csv_document(&header_refs, &rows))?;
            outputs.push(path_file);
        }
    }
    builder.n_paths = cfg.n_paths;
    builder.n_censored = censored;
    let summary_doc = SimulateSummary {
        schema_version: SCHEMA_VERSION,
        n_paths: cfg.n_paths,
        n_censored: censored,
        terminal_mean_log_vnorm: log_terminal,
        max_representation_residual: max_residual,
    };
    let json_path = out_dir.join("simulate.json");
    write_json(&json_path, &summary_doc)?;
    outputs.push(json_path);
    let summary = format!(
        "simulated {} paths on {} (censored {censored}); mean terminal log|v| = {:.4}, worst pathwise-identity residual = {:.3e}\n",
        cfg.n_paths,
        system.manifold.name(),
        summary_doc.terminal_mean_log_vnorm,
        summary_doc.max_representation_residual,
    );
    let artifacts = finish(builder, out_dir, summary, true, &outputs)?;
    Ok((artifacts, summary_doc))
}

// ---------------------------------------------------------------------------
// moments
// ---------------------------------------------------------------------------

pub fn run_moments(cfg: &RunConfig, out_dir: &Path) -> Result<(RunArtifacts, MomentEstimate)> {
    let mut builder = ManifestBuilder::new("moments", cfg);
    let system = cfg.build_system()?;
    let x0 = cfg.start_point(&system)?;
    let opts = cfg.ensemble_opts();
    let est = estimate_moment(&system, &x0, cfg.p, &opts)?;
    builder.n_paths = est.n_paths;
    builder.n_censored = est.n_censored;

    let json_path = out_dir.join("moments.json");
    write_versioned(&json_path, &est)?;
    let mut header = vec!["t", "mean_vp", "ci_lo", "ci_hi"];
    let mut rows: Vec<Vec<f64>> = est
        .times
        .iter()
        .enumerate()
        .map(|(i, t)| vec![*t, est.mean_vp[i], est.ci_lo[i], est.ci_hi[i]])
        .collect();
    if let Some(frame) = &est.frame_sup {
        header.extend(["frame_mean", "frame_lo", "frame_hi"]);
        for (i, row) in rows.iter_mut().enumerate() {
            row.extend([frame.mean[i], frame.ci_lo[i], frame.ci_hi[i]]);
        }
    }
    let csv_path = out_dir.join("moments.csv");
    write_text(&csv_path, &csv_document(&header, &rows))?;

    let summary = format!(
        "moment exponent on {} at p = {}: {:.4} +/- {:.4}  ({} paths, {} censored{})\n",
        system.manifold.name(),
        cfg.p,
        est.fitted.slope,
        est.fitted.ci_half_width,
        est.n_paths,
        est.n_censored,
        if est.heavy_tail_warning {
            "; heavy-tailed sample, intervals dubious"
        } else {
            ""
        },
    );
    let artifacts = finish(builder, out_dir, summary, true, &[json_path, csv_path])?;
    Ok((artifacts, est))
}

// ---------------------------------------------------------------------------
// sandwich
// ---------------------------------------------------------------------------

pub fn run_sandwich(cfg: &RunConfig, out_dir: &Path) -> Result<(RunArtifacts, SandwichResult)> {
    let mut builder = ManifestBuilder::new("sandwich", cfg);
    let system = cfg.build_system()?;
    let x0 = cfg.start_point(&system)?;
    let opts = cfg.ensemble_opts();
    let res = sandwich_check(&system, &x0, cfg.p, cfg.sandwich_t, &opts)?;
    builder.n_paths = res.n_paths;
    builder.n_censored = res.n_censored;
    let json_path = out_dir.join("sandwich.json");
    write_versioned(&json_path, &res)?;
    let summary = format!(
        "sandwich at p = {}, t = {}: lower {:.4}  middle {:.4}  upper {:.4}  -> {}{}\n",
        res.order,
        res.t,
        res.lower.mean,
        res.middle.mean,
        res.upper.mean,
        if res.pass { "PASS" } else { "FAIL" },
        if res.unreliable {
            " (unreliable: censoring above 1%)"
        } else {
            ""
        },
    );
    let ok = res.pass;
    let artifacts = finish(builder, out_dir, summary, ok, &[json_path])?;
    Ok((artifacts, res))
}

// ---------------------------------------------------------------------------
// positivity
// ---------------------------------------------------------------------------

pub fn run_positivity(
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<(RunArtifacts, PositivityReport)> {
    let mut builder = ManifestBuilder::new("positivity", cfg);
    let system = cfg.build_system()?;
    let f = parse_functional(&cfg.functional, cfg.p)?;
    let sample = sample_points(system.manifold.as_ref(), cfg.region_samples, cfg.seed);
    let opts = cfg.ensemble_opts();
    let report = stochastic_positivity_rate(&system, &sample, f, &opts)?;
    builder.n_paths = cfg.n_paths * cfg.region_samples;
    let json_path = out_dir.join("positivity.json");
    write_versioned(&json_path, &report)?;
    let rows: Vec<Vec<f64>> = report
        .rates
        .iter()
        .map(|r| {
            let mut row = r.x.clone();
            row.push(r.rate);
            row.push(r.ci_half_width);
            row
        })
        .collect();
    let m = system.manifold.ambient_dim();
    let mut header: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
    header.push("rate".into());
    header.push("ci_half_width".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let csv_path = out_dir.join("rates.csv");
    write_text(&csv_path, &csv_document(&header_refs, &rows))?;
    let summary = format!(
        "decay rate of E exp(-(1/2) int {}) over {} sample points: sup {:.4} (CI high {:.4}) -> strongly positive: {}\n",
        report.functional,
        report.rates.len(),
        report.sup_rate,
        report.sup_rate_ci_hi,
        report.strongly_positive_on_sample,
    );
    let artifacts = finish(builder, out_dir, summary, true, &[json_path, csv_path])?;
    Ok((artifacts, report))
}

// ---------------------------------------------------------------------------
// hvolume
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct HVolumeDoc {
    pub schema_version: u32,
    pub manifold: String,
    pub h: String,
    pub result: HVolume,
}

pub fn run_hvolume(cfg: &RunConfig, out_dir: &Path) -> Result<(RunArtifacts, HVolumeDoc)> {
    let builder = ManifestBuilder::new("hvolume", cfg);
    let system = cfg.build_system()?;
    let result = h_volume(
        system.manifold.as_ref(),
        &system.potential,
        cfg.quadrature_resolution,
    )?;
    let doc = HVolumeDoc {
        schema_version: SCHEMA_VERSION,
        manifold: system.manifold.name(),
        h: cfg.h.clone(),
        result,
    };
    let json_path = out_dir.join("hvolume.json");
    write_json(&json_path, &doc)?;
    let summary = match result {
        HVolume::Finite { value } => format!(
            "weighted volume of {} with h = {}: {:.6}\n",
            doc.manifold, cfg.h, value
        ),
        HVolume::Diverged => format!(
            "weighted volume of {} with h = {}: diverged\n",
            doc.manifold, cfg.h
        ),
    };
    let artifacts = finish(builder, out_dir, summary, true, &[json_path])?;
    Ok((artifacts, doc))
}

// ---------------------------------------------------------------------------
// loopflow
// ---------------------------------------------------------------------------

pub fn run_loopflow(cfg: &RunConfig, out_dir: &Path) -> Result<(RunArtifacts, LoopCurve)> {
    let mut builder = ManifestBuilder::new("loopflow", cfg);
    let system = cfg.build_system()?;
    let spec = LoopSpec::parse(&cfg.loop_spec)?;
    let (center, radius, axes) = cfg.manifold_spec()?.loop_template(&spec)?;
    let loop0 = loops::circle_loop(&system, &center, radius, axes, spec.points(), None)?;
    let curve = loops::mean_length_curve(
        &system,
        &loop0,
        cfg.horizon,
        cfg.grid,
        cfg.dt,
        cfg.loop_realizations,
        cfg.seed,
        cfg.workers,
    )?;
    builder.n_paths = cfg.loop_realizations;
    let json_path = out_dir.join("loopflow.json");
    write_versioned(&json_path, &curve)?;
    let rows: Vec<Vec<f64>> = curve
        .times
        .iter()
        .enumerate()
        .map(|(i, t)| {
            vec![
                *t,
                curve.mean_length[i],
                curve.ci_lo[i],
                curve.ci_hi[i],
                curve.contract_fraction[i],
            ]
        })
        .collect();
    let csv_path = out_dir.join("loopflow.csv");
    write_text(
        &csv_path,
        &csv_document(
            &["t", "mean_length", "ci_lo", "ci_hi", "contract_fraction"],
            &rows,
        ),
    )?;
    let mut outputs = vec![json_path, csv_path];
    if cfg.dump_paths {
        // Per-realization loop trajectories, plus the final vertex cloud for
        // external plotting. The first few realizations replay the exact
        // noise the ensemble saw.
        for realization in 0..cfg.loop_realizations.min(8) as u64 {
            let noise = crate::rng::CounterNoise {
                seed: cfg.seed,
                path: realization,
                dt: cfg.dt,
            };
            let (evo, final_state) =
                loops::evolve_loop(&system, &loop0, cfg.horizon, cfg.grid, &noise)?;
            let rows: Vec<Vec<f64>> = evo
                .times
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let contractible = evo
                        .contractible_at
                        .map(|tc| tc <= *t + 1e-12)
                        .unwrap_or(false);
                    vec![
                        *t,
                        evo.lengths[i],
                        contractible as u8 as f64,
                        evo.point_counts[i] as f64,
                    ]
                })
                .collect();
            let traj_path = out_dir.join(format!("loops/loop-{realization:03}.csv"));
            write_text(
                &traj_path,
                &csv_document(&["t", "length", "contractible", "points"], &rows),
            )?;
            outputs.push(traj_path);
            let cloud: Vec<Vec<f64>> = final_state.points.clone();
            let m = system.manifold.ambient_dim();
            let header: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let cloud_path = out_dir.join(format!("loops/loop-{realization:03}-final-points.csv"));
            write_text(&cloud_path, &csv_document(&header_refs, &cloud))?;
            outputs.push(cloud_path);
        }
    }
    let summary = format!(
        "loop flow on {}: initial length {:.4}, final mean length {:.4}, contractible fraction {:.3}, min length seen {:.4}\n",
        system.manifold.name(),
        curve.initial_length,
        curve.mean_length.last().unwrap(),
        curve.contract_fraction.last().unwrap(),
        curve.min_length,
    );
    let artifacts = finish(builder, out_dir, summary, true, &outputs)?;
    Ok((artifacts, curve))
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// One document relating the sign criteria to the measured exponents.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub schema_version: u32,
    pub manifold: String,
    pub order: f64,
    pub criteria: CriterionReport,
    pub moment: MomentEstimate,
    pub sandwich: SandwichResult,
    pub predicted_stable: bool,
    pub measured_exponent: f64,
    pub measured_exponent_ci: f64,
    pub measured_stable: bool,
    pub consistent: bool,
    pub verdict: String,
}

pub fn run_report(cfg: &RunConfig, out_dir: &Path) -> Result<(RunArtifacts, VerdictReport)> {
    let mut builder = ManifestBuilder::new("report", cfg);
    let system = cfg.build_system()?;
    let x0 = cfg.start_point(&system)?;
    let sample = sample_points(system.manifold.as_ref(), cfg.region_samples, cfg.seed);
    let criteria = criterion_report(&system, &sample, cfg.p, ExtremumMethod::Auto)?;
    let opts = cfg.ensemble_opts();
    let moment = estimate_moment(&system, &x0, cfg.p, &opts)?;
    let sandwich = sandwich_check(&system, &x0, cfg.p, cfg.sandwich_t, &opts)?;
    builder.n_paths = moment.n_paths + sandwich.n_paths;
    builder.n_censored = moment.n_censored + sandwich.n_censored;

    let mu = moment.fitted.slope;
    let ci = moment.fitted.ci_half_width;
    let measured_stable = mu + ci < 0.0;
    let measured_unstable = mu - ci > 0.0;
    let predicted = criteria.moment_stable_sufficient;
    let consistent = !(predicted && measured_unstable);
    let verdict = match (predicted, measured_stable, measured_unstable) {
        (true, true, _) => {
            "sufficient criterion holds and the measured exponent is negative: consistent"
        }
        (true, false, true) => {
            "criterion predicts stability but the measured exponent is positive: inconsistent"
        }
        (true, false, false) => {
            "criterion predicts stability; the measured exponent is inconclusive at this ensemble size"
        }
        (false, true, _) => {
            "sufficient criterion not met, yet decay was measured: consistent (the criterion is one-sided)"
        }
        (false, false, _) => "sufficient criterion not met and no decay measured: consistent",
    }
    .to_string();

    let doc = VerdictReport {
        schema_version: SCHEMA_VERSION,
        manifold: system.manifold.name(),
        order: cfg.p,
        criteria,
        moment,
        sandwich,
        predicted_stable: predicted,
        measured_exponent: mu,
        measured_exponent_ci: ci,
        measured_stable,
        consistent,
        verdict,
    };
    let json_path = out_dir.join("report.json");
    write_json(&json_path, &doc)?;
    let summary = format!(
        "{} at p = {}\n\
         {:<44} {:>12}\n\
         {:<44} {:>12.4}\n\
         {:<44} {:>12.4}\n\
         {:<44} {:>12.4}\n\
         {:<44} {:>12}\n\
         {:<44} {:>12}\n\
         {:<44} {:>12}\n\
         {:<44} {:>12}\n  {}\n",
        doc.manifold,
        doc.order,
        "criterion / measurement",
        "value",
        "sup growth rate over sample",
        doc.criteria.sup_rate,
        "inf growth rate over sample",
        doc.criteria.inf_rate,
        "sup Ricci-drift gap over sample",
        doc.criteria.sup_ricci_drift_gap,
        "moment stability sufficient",
        doc.predicted_stable,
        "fundamental group trivial (sufficient)",
        doc.criteria.pi1_trivial_sufficient,
        "measured exponent",
        format!("{mu:.4} +/- {ci:.4}"),
        "sandwich bracket",
        if doc.sandwich.pass { "PASS" } else { "FAIL" },
        doc.verdict,
    );
    let ok = doc.consistent;
    let artifacts = finish(builder, out_dir, summary, ok, &[json_path])?;
    Ok((artifacts, doc))
}

// ---------------------------------------------------------------------------

/// Default output directory for a subcommand: `runs/<name>-<confighash8>`.
pub fn default_out_dir(subcommand: &str, cfg: &RunConfig) -> PathBuf {
    PathBuf::from("runs").join(format!("{subcommand}-{}", &cfg.hash()[..8]))
}

/// Exponential-functional run used by examples and tests; not a separate
/// subcommand, the positivity and sandwich commands cover it.
pub fn functional_curve(
    cfg: &RunConfig,
    sign: f64,
) -> Result<ensemble::ExpFunctionalEstimate> {
    let system = cfg.build_system()?;
    let x0 = cfg.start_point(&system)?;
    let f = parse_functional(&cfg.functional, cfg.p)?;
    exponential_functional(&system, &x0, f, sign, &cfg.ensemble_opts())
}
