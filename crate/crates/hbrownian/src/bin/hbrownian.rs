//! Command-line front end. Every experiment is a subcommand writing
//! machine-readable outputs (JSON verdicts, CSV curves) plus a manifest
//! under the output directory; flags override values from an optional JSON
//! config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hbrownian::config::RunConfig;
use hbrownian::runner;

#[derive(Parser)]
#[command(
    name = "hbrownian",
    version,
    about = "Stochastic flows on embedded manifolds: moment exponents, curvature criteria, loop contraction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Manifold spec, e.g. sphere:2, ellipsoid:1,1,1.5, cylinder:1, flat:1, torus:2,0.5
    #[arg(long)]
    manifold: Option<String>,
    /// Drift potential, e.g. zero, height:1, radial:-1, height+radial:-0.5
    #[arg(long)]
    h: Option<String>,
    /// Diffusion fields: projection (default) or sincos (flat line only)
    #[arg(long)]
    diffusion: Option<String>,
    /// Extra non-gradient drift: none (default) or restoring:rate
    #[arg(long)]
    extra_drift: Option<String>,
    /// Start point as comma-separated ambient coordinates
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Moment order p >= 1
    #[arg(long)]
    p: Option<f64>,
    /// Integrator step size
    #[arg(long)]
    dt: Option<f64>,
    /// Time horizon
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// Number of output grid times (including both endpoints)
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Trailing fraction of the grid used for exponent fits
    #[arg(long)]
    fit_window: Option<f64>,
    /// Ambient-norm cutoff standing in for the explosion time
    #[arg(long)]
    explosion_radius: Option<f64>,
    /// Output directory (default runs/<subcommand>-<confighash>)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the geometric invariant suite on a catalog manifold.
    GeometryCheck {
        #[command(flatten)]
        common: Common,
        /// Number of random points to test
        #[arg(long)]
        points: Option<usize>,
    },
    /// Integrate paths and report the pathwise-identity residual; dump
    /// per-path CSVs with --dump-paths.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dump_paths: bool,
    },
    /// Estimate E |v_t|^p over a path ensemble and fit its exponent.
    Moments {
        #[command(flatten)]
        common: Common,
        /// Also evolve a fixed orthonormal frame and report the frame max
        #[arg(long)]
        frame_sup: bool,
    },
    /// Two-sided exponential bounds around the moment at one time.
    Sandwich {
        #[command(flatten)]
        common: Common,
        /// Time at which the bounds are evaluated
        #[arg(long)]
        t: Option<f64>,
    },
    /// Decay-rate fit of E exp(-(1/2) int f) over a region sample.
    Positivity {
        #[command(flatten)]
        common: Common,
        /// Functional: neg-upper-rate (default), upper-rate, lower-rate,
        /// ricci-gap, const:c
        #[arg(long)]
        functional: Option<String>,
        #[arg(long)]
        region_samples: Option<usize>,
    },
    /// Weighted volume of the manifold under e^{2h}.
    Hvolume {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Evolve a closed loop under common noise and track its length.
    Loopflow {
        #[command(flatten)]
        common: Common,
        /// Loop spec: equator:256, waist:256[,z], circle:h,256
        #[arg(long = "loop")]
        loop_spec: Option<String>,
        #[arg(long)]
        realizations: Option<usize>,
        /// Dump per-realization loop trajectories and final point clouds
        #[arg(long)]
        dump_paths: bool,
    },
    /// Bundle criteria, moments and sandwich into one verdict document.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        region_samples: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("bad config file: {e}"))?
        }
        None => RunConfig::default(),
    };
    macro_rules! merge {
        ($($field:ident),*) => {
            $(if let Some(v) = &common.$field { cfg.$field = v.clone(); })*
        };
    }
    merge!(manifold, h, diffusion, extra_drift);
    if common.x0.is_some() {
        cfg.x0 = common.x0.clone();
    }
    if let Some(v) = common.p {
        cfg.p = v;
    }
    if let Some(v) = common.dt {
        cfg.dt = v;
    }
    if let Some(v) = common.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = common.grid {
        cfg.grid = v;
    }
    if let Some(v) = common.n_paths {
        cfg.n_paths = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    if let Some(v) = common.fit_window {
        cfg.fit_window = v;
    }
    if let Some(v) = common.explosion_radius {
        cfg.explosion_radius = v;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool, String> {
    let (name, common) = match &cli.command {
        Command::GeometryCheck { common, .. } => ("geometry-check", common),
        Command::Simulate { common, .. } => ("simulate", common),
        Command::Moments { common, .. } => ("moments", common),
        Command::Sandwich { common, .. } => ("sandwich", common),
        Command::Positivity { common, .. } => ("positivity", common),
        Command::Hvolume { common, .. } => ("hvolume", common),
        Command::Loopflow { common, .. } => ("loopflow", common),
        Command::Report { common, .. } => ("report", common),
    };
    let mut cfg = load_config(common)?;
    match &cli.command {
        Command::GeometryCheck { points, .. } => {
            if let Some(v) = points {
                cfg.check_points = *v;
            }
        }
        Command::Simulate { dump_paths, .. } => {
            if *dump_paths {
                cfg.dump_paths = true;
            }
        }
        Command::Moments { frame_sup, .. } => {
            if *frame_sup {
                cfg.frame_sup = true;
            }
        }
        Command::Sandwich { t, .. } => {
            if let Some(v) = t {
                cfg.sandwich_t = *v;
            }
        }
        Command::Positivity {
            functional,
            region_samples,
            ..
        } => {
            if let Some(f) = functional {
                cfg.functional = f.clone();
            }
            if let Some(v) = region_samples {
                cfg.region_samples = *v;
            }
        }
        Command::Hvolume { resolution, .. } => {
            if let Some(v) = resolution {
                cfg.quadrature_resolution = *v;
            }
        }
        Command::Loopflow {
            loop_spec,
            realizations,
            dump_paths,
            ..
        } => {
            if let Some(l) = loop_spec {
                cfg.loop_spec = l.clone();
            }
            if let Some(v) = realizations {
                cfg.loop_realizations = *v;
            }
            if *dump_paths {
                cfg.dump_paths = true;
            }
        }
        Command::Report {
            region_samples, t, ..
        } => {
            if let Some(v) = region_samples {
                cfg.region_samples = *v;
            }
            if let Some(v) = t {
                cfg.sandwich_t = *v;
            }
        }
    }
    // Flag wins, then the environment override, then runs/<name>-<hash>.
    let out_dir = common.out.clone().unwrap_or_else(|| {
        let default = runner::default_out_dir(name, &cfg);
        match std::env::var_os("HBROWNIAN_OUT") {
            Some(base) => PathBuf::from(base).join(default.file_name().unwrap()),
            None => default,
        }
    });

    let run = |res: hbrownian::Result<runner::RunArtifacts>| -> Result<bool, String> {
        match res {
            Ok(artifacts) => {
                print!("{}", artifacts.summary);
                println!("outputs in {}", artifacts.out_dir.display());
                Ok(artifacts.ok)
            }
            Err(e) => Err(e.to_string()),
        }
    };

    match cli.command {
        Command::GeometryCheck { .. } => {
            run(runner::run_geometry_check(&cfg, &out_dir).map(|(a, _)| a))
        }
        Command::Simulate { .. } => run(runner::run_simulate(&cfg, &out_dir).map(|(a, _)| a)),
        Command::Moments { .. } => run(runner::run_moments(&cfg, &out_dir).map(|(a, _)| a)),
        Command::Sandwich { .. } => run(runner::run_sandwich(&cfg, &out_dir).map(|(a, _)| a)),
        Command::Positivity { .. } => run(runner::run_positivity(&cfg, &out_dir).map(|(a, _)| a)),
        Command::Hvolume { .. } => run(runner::run_hvolume(&cfg, &out_dir).map(|(a, _)| a)),
        Command::Loopflow { .. } => run(runner::run_loopflow(&cfg, &out_dir).map(|(a, _)| a)),
        Command::Report { .. } => run(runner::run_report(&cfg, &out_dir).map(|(a, _)| a)),
    }
}
