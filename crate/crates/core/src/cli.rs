//! The `dioph-lab` experiment runner.
//!
//! Every subcommand is first turned into an [`ExperimentConfig`]; `run`
//! executes a config read from a file, so flags and config files share one
//! schema. JSON reports have the shape `{"meta": {...}, "body": {...}}`; the
//! body echoes the config and is byte-identical for identical configs, while
//! `meta` carries the version, thread count and wall-clock time.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::approxfn::{classify_series, ApproxFn};
use crate::counting::{survey_ladder, ArgConvention, CountSurvey};
use crate::error::{Error, Result};
use crate::manifold::{Ball, ManifoldMap, MapSpec};
use crate::measure::{
    calibrate, limsup_set_measure, split_big_small, verify_linear_scaling, DomainConstants, Method,
    CALIBRATION_EPS,
};
use crate::plot::{line_chart, Axes, Series};
use crate::regsys::{
    build_regular_system, default_grid_size, default_k0, dyadic_overlap_experiment,
    verify_certificate, Sampler,
};

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "DIOPH_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Measure method without its seed (the config seed is used).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MethodSpec {
    Exact1d,
    Montecarlo { samples: usize },
}

impl MethodSpec {
    fn with_seed(self, seed: u64) -> Method {
        match self {
            MethodSpec::Exact1d => Method::Exact1d,
            MethodSpec::Montecarlo { samples } => Method::MonteCarlo { samples, seed },
        }
    }

    fn parse(s: &str, default_samples: usize) -> Result<Self> {
        match s.split_once(':') {
            None if s == "exact1d" => Ok(MethodSpec::Exact1d),
            None if s == "montecarlo" => Ok(MethodSpec::Montecarlo {
                samples: default_samples,
            }),
            Some(("montecarlo", n)) => Ok(MethodSpec::Montecarlo {
                samples: n
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad sample count '{n}'")))?,
            }),
            _ => Err(Error::invalid(format!(
                "unknown method '{s}' (exact1d or montecarlo[:N])"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SamplerSpec {
    /// `m` grid points; default scales with `Q`.
    Grid {
        m: Option<usize>,
    },
    Montecarlo {
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub map: MapSpec,
    pub region: Ball,
    pub eps: Vec<f64>,
    pub q: u64,
    pub method: MethodSpec,
    pub seed: u64,
    #[serde(default)]
    pub split: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegsysConfig {
    pub map: MapSpec,
    pub region: Ball,
    pub q: u64,
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(default)]
    pub constants: Option<PathBuf>,
    pub sampler: SamplerSpec,
    pub seed: u64,
    /// Tube radii as fractions of `1/T`.
    pub gamma_fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapConfig {
    pub map: MapSpec,
    pub region: Ball,
    pub psi: ApproxFn,
    /// Apply `min(1/(2h), Ψ(h))` before building blocks.
    pub clamp: bool,
    #[serde(default)]
    pub k0: Option<u32>,
    pub k_max: u32,
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(default)]
    pub constants: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountConfig {
    pub map: MapSpec,
    pub region: Ball,
    pub psi: ApproxFn,
    pub q_max: Vec<u64>,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub convention: ArgConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub psi: ApproxFn,
    pub d: usize,
    pub s: f64,
    pub budget: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub map: MapSpec,
    pub region: Ball,
    pub q: u64,
    pub eps: Vec<f64>,
    pub method: MethodSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Experiment {
    Measure(MeasureConfig),
    Regsys(RegsysConfig),
    Overlap(OverlapConfig),
    Count(CountConfig),
    Series(SeriesConfig),
    Calibrate(CalibrateConfig),
}

/// A complete, replayable experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    /// Optional SVG figure (scaling for `measure`, count growth for `count`).
    #[serde(default)]
    pub plot: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn seed(&self) -> u64 {
        match &self.experiment {
            Experiment::Measure(c) => c.seed,
            Experiment::Regsys(c) => c.seed,
            Experiment::Overlap(c) => c.seed,
            Experiment::Count(c) => c.seed,
            Experiment::Series(c) => c.seed,
            Experiment::Calibrate(c) => c.seed,
        }
    }

    fn format(&self) -> Format {
        self.format.unwrap_or_else(|| match &self.out {
            Some(p) if p.extension().is_some_and(|e| e == "csv") => Format::Csv,
            _ => Format::Json,
        })
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "dioph-lab",
    version,
    about = "Metric Diophantine approximation experiments"
)]
struct Cli {
    /// Worker threads (default: $DIOPH_LAB_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Map: veronese:N or an inline JSON object
    #[arg(long, default_value = "veronese:2")]
    map: String,
    /// Ball as centre coordinates followed by the radius, e.g. 0.5,0.5
    #[arg(long, default_value = "0.5,0.5")]
    ball: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (printed to stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Measure of the set of points with small linear forms
    Measure {
        #[command(flatten)]
        common: Common,
        /// One value, or a comma list for the scaling fit
        #[arg(long)]
        eps: String,
        #[arg(long = "Q")]
        q: u64,
        /// exact1d or montecarlo[:SAMPLES]
        #[arg(long, default_value = "exact1d")]
        method: String,
        /// Also split the Monte Carlo estimate by gradient size
        #[arg(long)]
        split: bool,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Build and verify a regular-system certificate
    Regsys {
        #[command(flatten)]
        common: Common,
        #[arg(long = "Q")]
        q: u64,
        #[arg(long)]
        c0: Option<f64>,
        /// Constants file written by `calibrate`
        #[arg(long)]
        constants: Option<PathBuf>,
        /// grid, grid:M or montecarlo:N
        #[arg(long, default_value = "grid")]
        sampler: String,
        /// Tube radii as fractions of 1/T
        #[arg(long, default_value = "0.25,0.0625")]
        gammas: String,
    },
    /// Dyadic-block overlap experiment
    Overlap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        psi: String,
        #[arg(long)]
        k0: Option<u32>,
        #[arg(long = "K")]
        k_max: u32,
        #[arg(long)]
        c0: Option<f64>,
        #[arg(long)]
        constants: Option<PathBuf>,
        /// Use Ψ as given instead of min(1/(2h), Ψ(h))
        #[arg(long)]
        no_clamp: bool,
    },
    /// Survey of solution counts at sampled points
    Count {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        psi: String,
        /// One value or a comma list (ladder)
        #[arg(long = "Qmax")]
        q_max: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, value_enum, default_value = "standard")]
        convention: ConventionArg,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Convergence diagnostic for a series
    Series {
        #[arg(long)]
        psi: String,
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Defaults to d - 1
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value_t = 1 << 20)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate C0 and derive the constants chain
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "Q", default_value_t = 50)]
        q: u64,
        #[arg(long, default_value = "0.025,0.05,0.1,0.2")]
        eps: String,
        #[arg(long, default_value = "exact1d")]
        method: String,
    },
    /// Run an experiment config file
    Run {
        config: PathBuf,
        /// Overrides the config's output path
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    Standard,
    LegacyArg,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad {what} value '{t}'")))
        })
        .collect()
}

/// `c1,...,cd,r`
pub fn parse_ball(s: &str) -> Result<Ball> {
    let v: Vec<f64> = parse_list(s, "ball")?;
    if v.len() < 2 {
        return Err(Error::invalid("ball needs a centre and a radius"));
    }
    Ball::new(v[..v.len() - 1].to_vec(), v[v.len() - 1])
}

fn to_config(cmd: Command) -> Result<ExperimentConfig> {
    let base =
        |c: &Common| -> Result<(MapSpec, Ball)> { Ok((c.map.parse()?, parse_ball(&c.ball)?)) };
    let wrap = |experiment, c: Common, plot| ExperimentConfig {
        experiment,
        out: c.out,
        format: c.format,
        plot,
    };
    Ok(match cmd {
        Command::Measure {
            common,
            eps,
            q,
            method,
            split,
            plot,
        } => {
            let (map, region) = base(&common)?;
            let exp = Experiment::Measure(MeasureConfig {
                map,
                region,
                eps: parse_list(&eps, "eps")?,
                q,
                method: MethodSpec::parse(&method, 1_000_000)?,
                seed: common.seed,
                split,
            });
            wrap(exp, common, plot)
        }
        Command::Regsys {
            common,
            q,
            c0,
            constants,
            sampler,
            gammas,
        } => {
            let (map, region) = base(&common)?;
            let sampler = match sampler.split_once(':') {
                None if sampler == "grid" => SamplerSpec::Grid { m: None },
                Some(("grid", m)) => SamplerSpec::Grid {
                    m: Some(m.parse().map_err(|_| Error::invalid("bad grid size"))?),
                },
                Some(("montecarlo", n)) => SamplerSpec::Montecarlo {
                    samples: n.parse().map_err(|_| Error::invalid("bad sample count"))?,
                },
                _ => return Err(Error::invalid(format!("unknown sampler '{sampler}'"))),
            };
            let exp = Experiment::Regsys(RegsysConfig {
                map,
                region,
                q,
                c0,
                constants,
                sampler,
                seed: common.seed,
                gamma_fractions: parse_list(&gammas, "gamma")?,
            });
            wrap(exp, common, None)
        }
        Command::Overlap {
            common,
            psi,
            k0,
            k_max,
            c0,
            constants,
            no_clamp,
        } => {
            let (map, region) = base(&common)?;
            let exp = Experiment::Overlap(OverlapConfig {
                map,
                region,
                psi: psi.parse()?,
                clamp: !no_clamp,
                k0,
                k_max,
                c0,
                constants,
                seed: common.seed,
            });
            wrap(exp, common, None)
        }
        Command::Count {
            common,
            psi,
            q_max,
            samples,
            convention,
            plot,
        } => {
            let (map, region) = base(&common)?;
            let exp = Experiment::Count(CountConfig {
                map,
                region,
                psi: psi.parse()?,
                q_max: parse_list(&q_max, "Qmax")?,
                samples,
                seed: common.seed,
                convention: match convention {
                    ConventionArg::Standard => ArgConvention::Standard,
                    ConventionArg::LegacyArg => ArgConvention::LegacyArg,
                },
            });
            wrap(exp, common, plot)
        }
        Command::Series {
            psi,
            d,
            s,
            budget,
            out,
        } => ExperimentConfig {
            experiment: Experiment::Series(SeriesConfig {
                psi: psi.parse()?,
                d,
                s: s.unwrap_or(d as f64 - 1.0),
                budget,
                seed: 0,
            }),
            out,
            format: Some(Format::Json),
            plot: None,
        },
        Command::Calibrate {
            common,
            q,
            eps,
            method,
        } => {
            let (map, region) = base(&common)?;
            let exp = Experiment::Calibrate(CalibrateConfig {
                map,
                region,
                q,
                eps: parse_list(&eps, "eps")?,
                method: MethodSpec::parse(&method, 1_000_000)?,
                seed: common.seed,
            });
            wrap(exp, common, None)
        }
        Command::Run { config, out } => {
            let text = fs::read_to_string(&config)?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if out.is_some() {
                cfg.out = out;
            }
            cfg
        }
    })
}

/// Constants from `--constants`, `--c0`, or a fresh calibration.
fn resolve_constants(
    map: &ManifoldMap,
    region: &Ball,
    c0: Option<f64>,
    file: Option<&Path>,
    seed: u64,
) -> Result<DomainConstants> {
    if let Some(path) = file {
        let v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
        let inner = v.pointer("/body/result/constants").cloned().unwrap_or(v);
        let k: DomainConstants = serde_json::from_value(inner)?;
        if k.n != map.n() || k.d != map.d() {
            return Err(Error::invalid(
                "constants file was made for a different map shape",
            ));
        }
        return Ok(k);
    }
    let bounds = map.default_bounds(region)?;
    match c0 {
        Some(c0) => DomainConstants::derive(map, region, c0, &bounds),
        None => {
            let method = if map.d() == 1 {
                Method::Exact1d
            } else {
                Method::MonteCarlo {
                    samples: 100_000,
                    seed,
                }
            };
            Ok(calibrate(map, region, 50, &CALIBRATION_EPS, &method)?.constants)
        }
    }
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    /// Report body (config echo and results).
    pub body: Value,
    /// CSV files as `(path suffix, contents)`; empty for JSON output.
    pub tables: Vec<(String, String)>,
    /// Figure, when requested.
    pub svg: Option<String>,
    pub summary: String,
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

fn survey_csv(s: &CountSurvey) -> Result<String> {
    csv_string(
        &["x", "count", "first_witnesses"],
        s.samples.iter().map(|p| {
            vec![
                p.x.iter()
                    .map(|v| format!("{v}"))
                    .collect::<Vec<_>>()
                    .join(","),
                p.count.to_string(),
                p.witnesses
                    .iter()
                    .map(|w| w.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
            ]
        }),
    )
}

/// Executes a config on the current thread pool.
pub fn execute(cfg: &ExperimentConfig) -> Result<Output> {
    let config = serde_json::to_value(cfg)?;
    let format = cfg.format();
    let mut tables = Vec::new();
    let mut svg = None;
    let (result, summary) = match &cfg.experiment {
        Experiment::Measure(c) => {
            let map = ManifoldMap::from_spec(&c.map)?;
            let method = c.method.with_seed(c.seed);
            if c.eps.is_empty() {
                return Err(Error::invalid("eps list is empty"));
            }
            let mut rows = Vec::new();
            for &eps in &c.eps {
                rows.push(json!({"eps": eps, "measure": limsup_set_measure(&map, &c.region, eps, c.q, &method)?}));
            }
            let bounds = map.default_bounds(&c.region)?;
            let scaling = if c.eps.len() >= 4 {
                Some(verify_linear_scaling(
                    &map, &c.region, &c.eps, c.q, &method,
                )?)
            } else {
                None
            };
            let constants = match &scaling {
                Some(s) => Some(DomainConstants::derive(&map, &c.region, s.c0_hat, &bounds)?),
                None => None,
            };
            let split = if c.split {
                let mc = match method {
                    Method::MonteCarlo { .. } => method,
                    Method::Exact1d => {
                        return Err(Error::invalid("--split needs the montecarlo method"))
                    }
                };
                Some(
                    c.eps
                        .iter()
                        .map(|&e| split_big_small(&map, &c.region, e, c.q, &mc))
                        .collect::<Result<Vec<_>>>()?,
                )
            } else {
                None
            };
            if let (Some(_), Some(s)) = (&cfg.plot, &scaling) {
                let series = Series {
                    label: format!("Q = {}", c.q),
                    points: s.rows.iter().map(|r| (r.eps, r.measure.value)).collect(),
                };
                svg = Some(line_chart(
                    "Measure against eps",
                    "eps",
                    "measure",
                    &[series],
                    Axes {
                        log_x: true,
                        log_y: true,
                    },
                )?);
            }
            let summary = match &scaling {
                Some(s) => format!("slope {:.4}, C0_hat {:.4}", s.slope, s.c0_hat),
                None => format!("measure {}", rows[0]["measure"]["value"]),
            };
            if format == Format::Csv {
                tables.push((
                    String::new(),
                    csv_string(
                        &["eps", "value", "std_error", "method"],
                        rows.iter().map(|r| {
                            vec![
                                r["eps"].to_string(),
                                r["measure"]["value"].to_string(),
                                r["measure"]["std_error"].to_string(),
                                r["measure"]["method"].as_str().unwrap_or("").to_string(),
                            ]
                        }),
                    )?,
                ));
            }
            (
                json!({"bounds": bounds, "constants": constants, "rows": rows, "scaling": scaling, "split": split}),
                summary,
            )
        }
        Experiment::Regsys(c) => {
            let map = ManifoldMap::from_spec(&c.map)?;
            let consts = resolve_constants(&map, &c.region, c.c0, c.constants.as_deref(), c.seed)?;
            let sampler = match c.sampler {
                SamplerSpec::Grid { m } => Sampler::Grid {
                    m: m.unwrap_or_else(|| default_grid_size(&consts, &c.region, c.q)),
                },
                SamplerSpec::Montecarlo { samples } => Sampler::MonteCarlo {
                    samples,
                    seed: c.seed,
                },
            };
            let cert = build_regular_system(&map, &c.region, c.q, &consts, &sampler)?;
            let gammas: Vec<f64> = c.gamma_fractions.iter().map(|f| f / cert.scale).collect();
            let verification = verify_certificate(&cert, &map, &gammas)?;
            if !verification.violations.is_empty() {
                return Err(Error::numeric(format!(
                    "certificate invariant violated: {}",
                    verification.violations[0]
                )));
            }
            let summary = format!(
                "t = {}, K1_hat {:.3e}, K2_hat {:.4}, K3_hat {:.4}",
                cert.count, verification.k1_hat, verification.k2_hat, verification.k3_hat
            );
            (
                json!({"certificate": cert, "verification": verification}),
                summary,
            )
        }
        Experiment::Overlap(c) => {
            let map = ManifoldMap::from_spec(&c.map)?;
            let consts = resolve_constants(&map, &c.region, c.c0, c.constants.as_deref(), c.seed)?;
            let psi = if c.clamp {
                ApproxFn::clamped(0.5, c.psi.clone())
            } else {
                c.psi.clone()
            };
            let k0 = match c.k0 {
                Some(k) => k,
                None => default_k0(&map, &c.region, &consts, c.k_max)?,
            };
            let report = dyadic_overlap_experiment(&map, &c.region, &psi, k0, c.k_max, &consts)?;
            if format == Format::Csv {
                tables.push((
                    String::new(),
                    csv_string(
                        &["k", "E_k", "phi_k"],
                        (0..report.block_measures.len()).map(|i| {
                            vec![
                                (report.k0 + i as u32).to_string(),
                                format!("{}", report.block_measures[i]),
                                format!("{}", report.phi[i]),
                            ]
                        }),
                    )?,
                ));
                let mut pairs = Vec::new();
                for (i, row) in report.overlap.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        pairs.push(vec![
                            (report.k0 + i as u32).to_string(),
                            (report.k0 + j as u32).to_string(),
                            format!("{v}"),
                        ]);
                    }
                }
                tables.push((".pairs".into(), csv_string(&["l", "k", "measure"], pairs)?));
            }
            let summary = format!(
                "ratio/|B| = {:.4} over k = {}..={}",
                report.ratio_over_volume, k0, c.k_max
            );
            (
                json!({"psi_used": psi, "constants": consts, "report": report}),
                summary,
            )
        }
        Experiment::Count(c) => {
            let map = ManifoldMap::from_spec(&c.map)?;
            let surveys = survey_ladder(
                &map,
                &c.region,
                &c.psi,
                &c.q_max,
                c.samples,
                c.seed,
                c.convention,
            )?;
            if format == Format::Csv {
                if surveys.len() != 1 {
                    return Err(Error::invalid(
                        "CSV output takes a single Qmax; use JSON for a ladder",
                    ));
                }
                tables.push((String::new(), survey_csv(&surveys[0])?));
            }
            if cfg.plot.is_some() {
                let pick = |f: fn(&CountSurvey) -> u64, label: &str| Series {
                    label: label.into(),
                    points: surveys
                        .iter()
                        .map(|s| (s.q_max as f64, f(s) as f64))
                        .collect(),
                };
                svg = Some(line_chart(
                    &format!("Solution counts, psi = {}", c.psi),
                    "Qmax",
                    "count",
                    &[
                        pick(|s| s.summary.q10, "q10"),
                        pick(|s| s.summary.median, "median"),
                        pick(|s| s.summary.q90, "q90"),
                    ],
                    Axes::default(),
                )?);
            }
            let summary = surveys
                .iter()
                .map(|s| {
                    format!(
                        "Qmax {}: q10 {} median {} q90 {}",
                        s.q_max, s.summary.q10, s.summary.median, s.summary.q90
                    )
                })
                .collect::<Vec<_>>()
                .join("; ");
            let ladder: Vec<Value> = surveys
                .iter()
                .map(|s| json!({"q_max": s.q_max, "summary": s.summary}))
                .collect();
            let body = if format == Format::Csv {
                json!({"ladder": ladder})
            } else {
                json!({"ladder": ladder, "surveys": surveys})
            };
            (body, summary)
        }
        Experiment::Series(c) => {
            let v = classify_series(&c.psi, c.d, c.s, c.budget)?;
            let summary = format!(
                "{} (direct {}, dyadic {})",
                v.verdict, v.direct_verdict, v.dyadic_verdict
            );
            (serde_json::to_value(v)?, summary)
        }
        Experiment::Calibrate(c) => {
            let map = ManifoldMap::from_spec(&c.map)?;
            let cal = calibrate(&map, &c.region, c.q, &c.eps, &c.method.with_seed(c.seed))?;
            let summary = format!("C0_hat {:.4}, Q0 {}", cal.constants.c0, cal.constants.q0);
            (serde_json::to_value(cal)?, summary)
        }
    };
    Ok(Output {
        body: json!({"config": config, "result": result}),
        tables,
        svg,
        summary,
    })
}

/// Thread count from the flag, then the environment, then the machine.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(t) = flag {
        return Ok(t.max(1));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map(|t| t.max(1)).map_err(|_| {
            Error::invalid(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))
        }),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn sibling(out: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}{suffix}.{ext}"))
}

/// Runs a config with `threads` workers and writes its outputs.
pub fn run(cfg: &ExperimentConfig, threads: usize) -> Result<Output> {
    let start = Instant::now();
    let output = crate::with_threads(threads, || execute(cfg))?;
    let envelope = json!({
        "meta": {
            "version": env!("CARGO_PKG_VERSION"),
            "threads": threads,
            "wall_clock_ms": start.elapsed().as_millis() as u64,
        },
        "body": output.body,
    });
    let report = serde_json::to_string_pretty(&envelope)? + "\n";
    match &cfg.out {
        None => print!("{report}"),
        Some(out) => {
            if output.tables.is_empty() {
                fs::write(out, &report)?;
            } else {
                for (suffix, table) in &output.tables {
                    let path = if suffix.is_empty() {
                        out.clone()
                    } else {
                        sibling(out, suffix, "csv")
                    };
                    fs::write(path, table)?;
                }
                fs::write(sibling(out, ".report", "json"), &report)?;
            }
        }
    }
    if let (Some(path), Some(svg)) = (&cfg.plot, &output.svg) {
        fs::write(path, svg)?;
    }
    Ok(output)
}

/// Entry point with explicit arguments; returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = resolve_threads(cli.threads).and_then(|threads| {
        let cfg = to_config(cli.command)?;
        run(&cfg, threads)
    });
    match result {
        Ok(out) => {
            if !out.summary.is_empty() {
                eprintln!("{}", out.summary);
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                3
            }
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}
