//! Batch driver: scene loading, experiment orchestration, report emission.
//! Exit codes: 0 pass, 2 verification failure, 3 inconclusive/not-applicable,
//! 64 usage error.

use clap::{Parser, Subcommand};
use nonlocal_geom::constants::{build_ledger, ledger_to_csv};
use nonlocal_geom::curvature::curvature_pv;
use nonlocal_geom::density::density_profile;
use nonlocal_geom::quad::QuadConfig;
use nonlocal_geom::report::{quote, svg_line_plot, CsvReport};
use nonlocal_geom::scene::{parse_kernel, parse_quad_config, parse_scene};
use nonlocal_geom::sets::RegionSet;
use nonlocal_geom::suites::{run_suite, SuiteParams, SUITE_NAMES};
use nonlocal_geom::KernelSpec;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 64;
const EXIT_FAIL: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "nlg", version, about = "nonlocal geometry: curvatures, perimeters, density verifiers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Worker threads (falls back to NONLOCAL_GEOM_WORKERS, then all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Quadrature config JSON file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed recorded in every output artifact.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate principal-value curvatures at boundary points.
    Curvature {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        kernel: PathBuf,
        /// `origin`, `contact`, or explicit comma-separated coordinates.
        #[arg(long, default_value = "origin")]
        points: String,
        /// Sample this many boundary points instead.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Run a named verification suite.
    Verify {
        /// One of: lemma31 lemma32 lemma33 lemma41 lemma42 thm12 thm16 cor15
        /// envelope22 formula24.
        suite: String,
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        kernel: Option<PathBuf>,
        /// Reference window radius R.
        #[arg(long, default_value_t = 4.0)]
        big_r: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Curvature bound coefficient M.
        #[arg(long, default_value_t = 0.0)]
        m: f64,
        /// Sparseness level for lemma31 (defaults to the ledger value).
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Emit the explicit constant ledger as CSV.
    Constants {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long = "Lambda", default_value_t = 1.0)]
        big_lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        m: f64,
    },
    /// Volume-fraction sweep over radii.
    Density {
        #[arg(long)]
        scene: PathBuf,
        /// Comma-separated centre coordinates (origin when omitted).
        #[arg(long)]
        center: Option<String>,
        /// `lo:hi:n` geometric sweep or comma-separated radii.
        #[arg(long, default_value = "0.01:10:13")]
        radii: String,
        /// Density target: a number, or `ledger` to resolve delta12 from the
        /// curvature parameters below.
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long = "Lambda", default_value_t = 1.0)]
        big_lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        m: f64,
        /// Write a static SVG plot of fraction vs radius.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

fn usage_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn read_file(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("write failed: {e}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_point_list(spec: &str, set: &RegionSet, count: Option<usize>, seed: u64) -> Result<Vec<Vec<f64>>, String> {
    if let Some(n) = count {
        let pts = set.sample_boundary(n, seed, None);
        if pts.is_empty() {
            return Err("set has no sampleable boundary".into());
        }
        return Ok(pts.into_iter().map(|p| p.0).collect());
    }
    match spec {
        "origin" => Ok(vec![vec![0.0; set.dim()]]),
        "contact" => {
            let pts = set.sample_boundary(1, seed, None);
            pts.into_iter()
                .map(|p| Ok(p.0))
                .collect::<Result<Vec<_>, String>>()
                .and_then(|v| {
                    if v.is_empty() {
                        Err("set has no sampleable boundary".into())
                    } else {
                        Ok(v)
                    }
                })
        }
        coords => {
            let xs: Result<Vec<f64>, _> = coords.split(',').map(str::trim).map(str::parse).collect();
            let xs = xs.map_err(|e| format!("bad coordinates `{coords}`: {e}"))?;
            if xs.len() != set.dim() {
                return Err(format!(
                    "point has {} coordinates, scene dim is {}",
                    xs.len(),
                    set.dim()
                ));
            }
            Ok(vec![xs])
        }
    }
}

fn parse_radii(spec: &str) -> Result<Vec<f64>, String> {
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("radii spec `{spec}` is not lo:hi:n"));
        }
        let lo: f64 = parts[0].parse().map_err(|e| format!("{e}"))?;
        let hi: f64 = parts[1].parse().map_err(|e| format!("{e}"))?;
        let n: usize = parts[2].parse().map_err(|e| format!("{e}"))?;
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err("need 0 < lo < hi and n >= 2".into());
        }
        let q = (hi / lo).powf(1.0 / (n - 1) as f64);
        Ok((0..n).map(|i| lo * q.powi(i as i32)).collect())
    } else {
        spec.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{e}")))
            .collect()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not usage errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let workers = cli.workers.or_else(|| {
        std::env::var("NONLOCAL_GEOM_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(w) = workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }

    let mut cfg = match &cli.config {
        Some(path) => match read_file(path).and_then(|t| {
            parse_quad_config(&t).map_err(|e| format!("bad config {}: {e}", path.display()))
        }) {
            Ok(c) => c,
            Err(e) => return usage_err(e),
        },
        None => QuadConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    match run(cli, cfg) {
        Ok(code) => code,
        Err(e) => usage_err(e),
    }
}

fn run(cli: Cli, cfg: QuadConfig) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Curvature {
            scene,
            kernel,
            points,
            count,
        } => {
            let set = parse_scene(&read_file(&scene)?).map_err(|e| e.to_string())?;
            let kernel: KernelSpec =
                parse_kernel(&read_file(&kernel)?).map_err(|e| e.to_string())?;
            if kernel.dim() != set.dim() {
                return Err(format!(
                    "kernel dim {} does not match scene dim {}",
                    kernel.dim(),
                    set.dim()
                ));
            }
            let pts = parse_point_list(&points, &set, count, cfg.seed)?;
            let mut rows = Vec::new();
            for x in &pts {
                let est = curvature_pv(&set, &kernel, x, &cfg).map_err(|e| e.to_string())?;
                rows.push(vec![
                    quote(&set.descriptor()),
                    quote(&format!("{kernel:?}")),
                    quote(&format!("{x:?}")),
                    quote(&est.verdict.label()),
                    est.verdict.value().map_or(String::new(), |v| v.to_string()),
                    est.error_bound.to_string(),
                    est.near_field_sum().to_string(),
                    est.far_field.to_string(),
                    est.tail.to_string(),
                ]);
            }
            let report = CsvReport {
                config_json: serde_json::to_string(&cfg).unwrap_or_default(),
                seed: cfg.seed,
                header: [
                    "set", "kernel", "x", "verdict", "value", "errorBound", "nearFieldSum",
                    "farField", "tail",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect(),
                rows,
            };
            emit(&cli.out, &report.render())?;
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Verify {
            suite,
            scene,
            kernel,
            big_r,
            trials,
            points,
            m,
            alpha,
        } => {
            if !SUITE_NAMES.contains(&suite.as_str()) {
                return Err(format!(
                    "unknown suite `{suite}`; expected one of {}",
                    SUITE_NAMES.join(" ")
                ));
            }
            let set = match scene {
                Some(path) => Some(parse_scene(&read_file(&path)?).map_err(|e| e.to_string())?),
                None => None,
            };
            let kernel = match kernel {
                Some(path) => Some(parse_kernel(&read_file(&path)?).map_err(|e| e.to_string())?),
                None => None,
            };
            let params = SuiteParams {
                set,
                kernel,
                big_r,
                trials,
                points,
                m,
                alpha,
                cfg: cfg.clone(),
            };
            let report = run_suite(&suite, &params).map_err(|e| e.to_string())?;
            let text = report.render_text();
            print!("{text}");
            if let Some(out) = &cli.out {
                let json = serde_json::json!({
                    "version": nonlocal_geom::report::version_string(),
                    "seed": cfg.seed,
                    "config": cfg,
                    "report": report,
                });
                std::fs::write(out, serde_json::to_string_pretty(&json).unwrap())
                    .map_err(|e| format!("write failed: {e}"))?;
            }
            Ok(match report.exit_code() {
                0 => ExitCode::SUCCESS,
                2 => ExitCode::from(EXIT_FAIL),
                _ => ExitCode::from(EXIT_INCONCLUSIVE),
            })
        }

        Cmd::Constants {
            d,
            s,
            lambda,
            big_lambda,
            m,
        } => {
            let ledger = build_ledger(d, s, lambda, big_lambda, m).map_err(|e| e.to_string())?;
            emit(&cli.out, &ledger_to_csv(&ledger))?;
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Density {
            scene,
            center,
            radii,
            target,
            s,
            lambda,
            big_lambda,
            m,
            plot,
        } => {
            let set = parse_scene(&read_file(&scene)?).map_err(|e| e.to_string())?;
            let d = set.dim();
            let center: Vec<f64> = match center {
                None => vec![0.0; d],
                Some(spec) => {
                    let xs: Result<Vec<f64>, _> =
                        spec.split(',').map(str::trim).map(str::parse).collect();
                    let xs = xs.map_err(|e| format!("bad center `{spec}`: {e}"))?;
                    if xs.len() != d {
                        return Err(format!("center has {} coords, need {d}", xs.len()));
                    }
                    xs
                }
            };
            let radii = parse_radii(&radii)?;
            let target = match target.as_deref() {
                None => None,
                Some("ledger") => Some(
                    build_ledger(d, s, lambda, big_lambda, m)
                        .map_err(|e| e.to_string())?
                        .delta12,
                ),
                Some(v) => Some(v.parse::<f64>().map_err(|e| format!("bad target: {e}"))?),
            };
            let rep = density_profile(&set, &center, &radii, target, &cfg);
            let rows: Vec<Vec<String>> = (0..radii.len())
                .map(|i| {
                    vec![
                        quote(&set.descriptor()),
                        quote(&format!("{center:?}")),
                        radii[i].to_string(),
                        rep.fractions[i].0.to_string(),
                        rep.fractions[i].1.to_string(),
                        rep.boundary_fractions[i].0.to_string(),
                        format!("{:?}", rep.verdicts[i]),
                    ]
                })
                .collect();
            let csv = CsvReport {
                config_json: serde_json::to_string(&cfg).unwrap_or_default(),
                seed: cfg.seed,
                header: [
                    "set",
                    "center",
                    "r",
                    "fraction",
                    "fractionError",
                    "boundaryFraction",
                    "verdict",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect(),
                rows,
            };
            emit(&cli.out, &csv.render())?;
            if let Some(plot_path) = plot {
                let pts: Vec<(f64, f64)> = radii
                    .iter()
                    .zip(&rep.fractions)
                    .map(|(&r, &(f, _))| (r, f))
                    .collect();
                let mut series = vec![("fraction", pts)];
                let target_series;
                if let Some(t) = target {
                    target_series = radii.iter().map(|&r| (r, t)).collect::<Vec<_>>();
                    series.push(("target", target_series));
                }
                std::fs::write(
                    &plot_path,
                    svg_line_plot("density vs radius", &series, true, false),
                )
                .map_err(|e| format!("plot write failed: {e}"))?;
            }
            let all_pass = rep.all_pass();
            Ok(if target.is_none() || all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            })
        }
    }
}
