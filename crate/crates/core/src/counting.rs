//! Solution counts for `|⟨f(x)·a⟩| < ψ(‖a‖∞ⁿ)`, surveys over sampled
//! points, and the divergence/convergence experiment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approxfn::{classify_series, transform_to_big_psi, ApproxFn, SeriesVerdict, Verdict};
use crate::error::{Error, Result};
use crate::linforms::{dot, nearest_integer, residue, sup_norm, IntegerForm};
use crate::manifold::{Ball, ManifoldMap, MapSpec};
use crate::measure::{calibrate, DomainConstants, Method, CALIBRATION_EPS};
use crate::regsys::{build_regular_system, default_grid_size, RegularSystemCertificate, Sampler};
use crate::sampling::{draw_points, substream};

/// Witnesses kept per point.
pub const MAX_WITNESSES: usize = 10;

/// Argument at which ψ is evaluated on the shell `‖a‖∞ = h`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgConvention {
    /// `ψ(hⁿ)`
    #[default]
    Standard,
    /// `ψ(h)`
    LegacyArg,
}

pub fn shell_threshold(psi: &ApproxFn, h: u64, n: usize, conv: ArgConvention) -> f64 {
    match conv {
        ArgConvention::Standard => psi.value((h as f64).powi(n as i32)),
        ArgConvention::LegacyArg => psi.value(h as f64),
    }
}

/// Whether `a` solves the main inequality at `x`.
pub fn is_solution(
    map: &ManifoldMap,
    x: &[f64],
    psi: &ApproxFn,
    a: &[i64],
    conv: ArgConvention,
) -> bool {
    let h = sup_norm(a);
    h > 0 && residue(dot(a, &map.eval(x))).abs() < shell_threshold(psi, h as u64, map.n(), conv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub q_max: u64,
    /// Solutions `a` counted with both signs.
    pub count: u64,
    /// Up to ten solutions with positive leading coordinate, smallest
    /// shells first, lexicographic within a shell.
    pub witnesses: Vec<IntegerForm>,
}

/// Shell histogram of solutions in the half box; `hist[h]` counts shell `h`.
fn shell_scan(y: &[f64], thresholds: &[f64], q: i64) -> (Vec<u64>, Vec<(i64, Vec<i64>)>) {
    let n = y.len();
    let mut hist = vec![0u64; q as usize + 1];
    let mut wit: Vec<(i64, Vec<i64>)> = Vec::new();
    let yn = y[n - 1];
    let mut prefix = vec![-q; n - 1];
    loop {
        let lead = prefix.iter().find(|&&v| v != 0).copied();
        if lead.is_none_or(|v| v > 0) {
            let tp = dot(&prefix, &y[..n - 1]);
            let pm = sup_norm(&prefix);
            let start = if lead.is_none() { 1 } else { -q };
            for an in start..=q {
                let t = tp + an as f64 * yn;
                let h = pm.max(an.abs());
                let r = (t - (t - 0.5).ceil()).abs();
                if r < thresholds[h as usize] {
                    hist[h as usize] += 1;
                    if wit.len() < MAX_WITNESSES || h < wit[wit.len() - 1].0 {
                        let mut a = prefix.clone();
                        a.push(an);
                        let pos = wit.partition_point(|(hh, _)| *hh <= h);
                        wit.insert(pos, (h, a));
                        wit.truncate(MAX_WITNESSES);
                    }
                }
            }
        }
        let mut i = n - 1;
        loop {
            if i == 0 {
                return (hist, wit);
            }
            i -= 1;
            if prefix[i] < q {
                prefix[i] += 1;
                break;
            }
            prefix[i] = -q;
        }
    }
}

/// Counts for every `Q_max` in `ladder` from a single scan up to the largest.
pub fn count_ladder(
    map: &ManifoldMap,
    x: &[f64],
    psi: &ApproxFn,
    ladder: &[u64],
    conv: ArgConvention,
) -> Result<Vec<CountResult>> {
    if ladder.is_empty() || ladder.contains(&0) {
        return Err(Error::invalid("Q_max values must be at least 1"));
    }
    let top = *ladder.iter().max().unwrap();
    let n = map.n();
    let thresholds: Vec<f64> = (0..=top)
        .map(|h| {
            if h == 0 {
                0.0
            } else {
                shell_threshold(psi, h, n, conv)
            }
        })
        .collect();
    let y = map.eval(x);
    let (hist, wit) = shell_scan(&y, &thresholds, top as i64);
    let mut cumulative = vec![0u64; hist.len()];
    let mut acc = 0;
    for (c, h) in cumulative.iter_mut().zip(&hist) {
        acc += h;
        *c = acc;
    }
    Ok(ladder
        .iter()
        .map(|&q| CountResult {
            q_max: q,
            count: 2 * cumulative[q as usize],
            witnesses: wit
                .iter()
                .filter(|(h, _)| *h as u64 <= q)
                .map(|(_, a)| IntegerForm {
                    a0: -nearest_integer(dot(a, &y)) as i64,
                    a: a.clone(),
                })
                .collect(),
        })
        .collect())
}

/// Number of `a` with `0 < ‖a‖∞ ≤ Q_max` solving the main inequality at `x`.
pub fn count_solutions(
    map: &ManifoldMap,
    x: &[f64],
    psi: &ApproxFn,
    q_max: u64,
) -> Result<CountResult> {
    count_with(map, x, psi, q_max, ArgConvention::Standard)
}

pub fn count_with(
    map: &ManifoldMap,
    x: &[f64],
    psi: &ApproxFn,
    q_max: u64,
    conv: ArgConvention,
) -> Result<CountResult> {
    Ok(count_ladder(map, x, psi, &[q_max], conv)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: u64,
    pub q10: u64,
    pub q90: u64,
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[u64], p: f64) -> u64 {
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

impl Summary {
    pub fn of(counts: &[u64]) -> Summary {
        let mut s = counts.to_vec();
        s.sort_unstable();
        Summary {
            median: quantile(&s, 0.5),
            q10: quantile(&s, 0.1),
            q90: quantile(&s, 0.9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCount {
    pub x: Vec<f64>,
    pub count: u64,
    pub witnesses: Vec<IntegerForm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountSurvey {
    pub map: MapSpec,
    pub region: Ball,
    pub psi: ApproxFn,
    pub q_max: u64,
    pub convention: ArgConvention,
    pub seed: u64,
    pub samples: Vec<SampleCount>,
    pub summary: Summary,
}

/// Surveys for every rung of `ladder`, sharing the sampled points.
#[allow(clippy::too_many_arguments)]
pub fn survey_ladder(
    map: &ManifoldMap,
    region: &Ball,
    psi: &ApproxFn,
    ladder: &[u64],
    n_samples: usize,
    seed: u64,
    conv: ArgConvention,
) -> Result<Vec<CountSurvey>> {
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if region.dim() != map.d() {
        return Err(Error::invalid("region dimension does not match the map"));
    }
    psi.validate()?;
    let points = draw_points(region, n_samples, seed);
    let per_point: Vec<Vec<CountResult>> = points
        .par_iter()
        .map(|x| count_ladder(map, x, psi, ladder, conv))
        .collect::<Result<_>>()?;
    Ok(ladder
        .iter()
        .enumerate()
        .map(|(rung, &q)| {
            let samples: Vec<SampleCount> = points
                .iter()
                .zip(&per_point)
                .map(|(x, r)| SampleCount {
                    x: x.clone(),
                    count: r[rung].count,
                    witnesses: r[rung].witnesses.clone(),
                })
                .collect();
            let counts: Vec<u64> = samples.iter().map(|s| s.count).collect();
            CountSurvey {
                map: map.spec().clone(),
                region: region.clone(),
                psi: psi.clone(),
                q_max: q,
                convention: conv,
                seed,
                summary: Summary::of(&counts),
                samples,
            }
        })
        .collect())
}

pub fn survey(
    map: &ManifoldMap,
    region: &Ball,
    psi: &ApproxFn,
    q_max: u64,
    n_samples: usize,
    seed: u64,
) -> Result<CountSurvey> {
    Ok(survey_ladder(
        map,
        region,
        psi,
        &[q_max],
        n_samples,
        seed,
        ArgConvention::Standard,
    )?
    .remove(0))
}

/// Outcome of testing "near a resonant set ⟹ solution" on sampled events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationCheck {
    pub events: usize,
    pub held: usize,
    /// `(x, form)` pairs where the implication failed.
    pub failures: Vec<(Vec<f64>, IntegerForm)>,
}

/// For members `(R, z)` of `cert`, draws `x` with `‖x - z‖ < Ψ(‖a‖∞^{n+1})`
/// and tests whether `a` then solves the main inequality at `x`.
pub fn implication_check(
    map: &ManifoldMap,
    cert: &RegularSystemCertificate,
    psi: &ApproxFn,
    l2: f64,
    events: usize,
    seed: u64,
) -> Result<ImplicationCheck> {
    let (n, d) = (map.n(), map.d());
    let big = transform_to_big_psi(psi, n, d, l2);
    let mut rng = substream(seed, 0);
    let mut out = ImplicationCheck {
        events: 0,
        held: 0,
        failures: Vec::new(),
    };
    if cert.members.is_empty() {
        return Ok(out);
    }
    use rand::Rng;
    let stride = (cert.members.len() / events.max(1)).max(1);
    let mut tries = 0;
    while out.events < events && tries < 20 * events {
        let m = &cert.members[(tries * stride) % cert.members.len()];
        tries += 1;
        let radius = big.value(m.weight);
        // uniform direction, radius strictly below Ψ(N)
        let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let r = radius * rng.gen::<f64>() * (1.0 - 1e-9);
        let x: Vec<f64> =
            m.z.iter()
                .zip(&dir)
                .map(|(z, u)| z + r * u / norm)
                .collect();
        if !cert.region.contains(&x) {
            continue;
        }
        out.events += 1;
        if is_solution(map, &x, psi, &m.form.a, ArgConvention::Standard) {
            out.held += 1;
        } else {
            out.failures.push((x, m.form.clone()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhintchineConfig {
    pub map: MapSpec,
    pub region: Ball,
    pub psis: Vec<ApproxFn>,
    pub q_ladder: Vec<u64>,
    pub samples: usize,
    pub seed: u64,
    /// Proximity events tested per ψ.
    #[serde(default = "default_events")]
    pub implication_events: usize,
    /// Calibrated `C0`; calibrated on the region when absent.
    #[serde(default)]
    pub c0: Option<f64>,
    /// `Q` of the certificate used for the implication check (default `Q0`).
    #[serde(default)]
    pub q_regsys: Option<u64>,
    #[serde(default = "default_budget")]
    pub series_budget: u64,
}

fn default_events() -> usize {
    1000
}

fn default_budget() -> u64 {
    1 << 20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub q_max: u64,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhintchineRow {
    pub psi: ApproxFn,
    pub series: SeriesVerdict,
    pub ladder: Vec<LadderPoint>,
    pub implication: ImplicationCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhintchineReport {
    pub constants: Option<DomainConstants>,
    /// Divergent rows first, then convergent, then undetermined.
    pub rows: Vec<KhintchineRow>,
}

pub fn khintchine_experiment(cfg: &KhintchineConfig) -> Result<KhintchineReport> {
    if cfg.psis.is_empty() {
        return Ok(KhintchineReport {
            constants: None,
            rows: Vec::new(),
        });
    }
    let map = ManifoldMap::from_spec(&cfg.map)?;
    if cfg.q_ladder.is_empty() {
        return Err(Error::invalid("Q ladder is empty"));
    }
    let bounds = map.default_bounds(&cfg.region)?;
    let consts = match cfg.c0 {
        Some(c0) => DomainConstants::derive(&map, &cfg.region, c0, &bounds)?,
        None => {
            let method = if map.d() == 1 {
                Method::Exact1d
            } else {
                Method::MonteCarlo {
                    samples: 100_000,
                    seed: cfg.seed,
                }
            };
            calibrate(&map, &cfg.region, 50, &CALIBRATION_EPS, &method)?.constants
        }
    };
    let q_reg = cfg.q_regsys.unwrap_or(consts.q0);
    let cert = build_regular_system(
        &map,
        &cfg.region,
        q_reg,
        &consts,
        &Sampler::Grid {
            m: default_grid_size(&consts, &cfg.region, q_reg),
        },
    )?;
    let mut rows = Vec::new();
    for psi in &cfg.psis {
        psi.validate()?;
        let series = classify_series(psi, 1, 0.0, cfg.series_budget)?;
        let surveys = survey_ladder(
            &map,
            &cfg.region,
            psi,
            &cfg.q_ladder,
            cfg.samples,
            cfg.seed,
            ArgConvention::Standard,
        )?;
        let implication = implication_check(
            &map,
            &cert,
            psi,
            bounds.l2,
            cfg.implication_events,
            cfg.seed,
        )?;
        rows.push(KhintchineRow {
            psi: psi.clone(),
            series,
            ladder: surveys
                .iter()
                .map(|s| LadderPoint {
                    q_max: s.q_max,
                    summary: s.summary,
                })
                .collect(),
            implication,
        });
    }
    rows.sort_by_key(|r| match r.series.verdict {
        Verdict::Diverges => 0,
        Verdict::Converges => 1,
        Verdict::Undetermined => 2,
    });
    Ok(KhintchineReport {
        constants: Some(consts),
        rows,
    })
}
