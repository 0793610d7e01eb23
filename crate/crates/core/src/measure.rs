//! Measure of `L_f(B; ε; Q) = {x ∈ B : ∃ a, 0 < ‖a‖∞ ≤ Q, |⟨f(x)·a⟩| < εQ^{-n}}`,
//! its split by gradient size, and the chain of domain constants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::IntervalUnion;
use crate::linforms::first_witness;
use crate::manifold::{unit_ball_volume, Ball, DerivBounds, ManifoldMap};
use crate::poly::UniPoly;
use crate::sampling::{count_hits, tally};

/// How a measure is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    /// Interval arithmetic on isolated roots (`d = 1` only).
    Exact1d,
    /// Uniform sampling with per-chunk seeded substreams.
    #[serde(rename = "montecarlo")]
    MonteCarlo { samples: usize, seed: u64 },
}

impl std::str::FromStr for Method {
    type Err = Error;

    /// `exact1d` or `montecarlo:SAMPLES:SEED`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["exact1d"] => Ok(Method::Exact1d),
            ["montecarlo", n, seed] => Ok(Method::MonteCarlo {
                samples: n.parse().map_err(|_| Error::invalid("bad sample count"))?,
                seed: seed.parse().map_err(|_| Error::invalid("bad seed"))?,
            }),
            _ => Err(Error::invalid(format!(
                "unknown method '{s}' (expected exact1d or montecarlo:SAMPLES:SEED)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodTag {
    Exact1d,
    #[serde(rename = "montecarlo")]
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    /// Zero exactly for exact methods.
    pub std_error: f64,
    pub method: MethodTag,
    pub samples: u64,
    pub seed: u64,
    /// A multiple root or a vanishing form was met.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

impl MeasureEstimate {
    pub fn exact(value: f64, degenerate: bool) -> Self {
        MeasureEstimate {
            value,
            std_error: 0.0,
            method: MethodTag::Exact1d,
            samples: 0,
            seed: 0,
            degenerate,
        }
    }

    /// Hit-rate estimate. The standard error uses the add-one smoothed rate
    /// `(hits + 1)/(samples + 2)`, so it stays positive at 0 or all hits.
    pub fn monte_carlo(hits: u64, samples: usize, seed: u64, volume: f64) -> Self {
        let m = samples.max(1) as f64;
        let p = hits as f64 / m;
        let ps = (hits as f64 + 1.0) / (m + 2.0);
        MeasureEstimate {
            value: volume * p,
            std_error: volume * (ps * (1.0 - ps) / m).sqrt(),
            method: MethodTag::MonteCarlo,
            samples: samples as u64,
            seed,
            degenerate: false,
        }
    }

    /// Whether two estimates agree within `k` combined standard errors.
    pub fn agrees_with(&self, other: &MeasureEstimate, k: f64) -> bool {
        let s = self.std_error.hypot(other.std_error);
        (self.value - other.value).abs() <= k * s + 1e-12
    }
}

/// Constants of the regular-system construction, all derived from a
/// calibrated `C0` and the derivative bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConstants {
    pub n: usize,
    pub d: usize,
    pub c0: f64,
    pub l1: f64,
    pub l2: f64,
    /// `(4 C0 (n L2)^{n-1})^{n+1}`
    pub c3: f64,
    /// `C3 n / (2 C0)`
    pub c4: f64,
    /// `d n · 4 C0 (n L2)^{n-1} · L2`
    pub c5: f64,
    /// `min{1/8, 1/(16 (d-1) n² L2 C3^{1/(n+1)})}`, or `1/8` for `d = 1`
    pub c6: f64,
    /// `(2 |B_d(0, C4 + 1)|)^{-1}`
    pub k1: f64,
    /// `|B_{d-1}(0, C6)| / 2`
    pub k2: f64,
    /// `12 n C5`
    pub k3: f64,
    /// Working radius on which `|∂1 F| > Q/(2n)` persists.
    pub r0: f64,
    /// Smallest `Q` with `Q^{n+1} > n/(2 r0 C0)` and `C3 Q^{n+1} > (C4+1)/r0`.
    pub q0: u64,
    /// `⌊1/(n L1 diam²)⌋ + 1`; absent when `L1 = 0`.
    pub q1: Option<u64>,
    /// `16 Q1`, the default "large Q" floor.
    pub q_floor: Option<u64>,
    /// Non-degeneracy order at the centre of the working ball (up to order 8).
    pub nondeg_order: Option<usize>,
}

impl DomainConstants {
    pub fn derive(map: &ManifoldMap, region: &Ball, c0: f64, bounds: &DerivBounds) -> Result<Self> {
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::invalid("C0 must be positive and finite"));
        }
        if !(bounds.l2 > 0.0) {
            return Err(Error::precondition("L2 must be positive"));
        }
        let (n, d) = (map.n(), map.d());
        let (nf, df) = (n as f64, d as f64);
        let (l1, l2) = (bounds.l1, bounds.l2);
        let a1_scale = 4.0 * c0 * (nf * l2).powi(n as i32 - 1);
        let c3 = a1_scale.powi(n as i32 + 1);
        let c4 = c3 * nf / (2.0 * c0);
        let c5 = df * nf * a1_scale * l2;
        let c6 = if d == 1 {
            0.125
        } else {
            (0.125f64).min(1.0 / (16.0 * (df - 1.0) * nf * nf * l2 * c3.powf(1.0 / (nf + 1.0))))
        };
        let k1 = 1.0 / (2.0 * unit_ball_volume(d) * (c4 + 1.0).powi(d as i32));
        let k2 = unit_ball_volume(d - 1) * c6.powi(d as i32 - 1) / 2.0;
        let k3 = 12.0 * nf * c5;

        let diam = region.diameter();
        let r1 = if l1 > 0.0 {
            1.0 / (8.0 * nf * nf * c0 * (nf * l2).powi(n as i32 - 1) * l1 * df.sqrt())
        } else {
            f64::INFINITY
        };
        let r0 = r1.min(diam / 8.0);
        let need = (nf / (2.0 * r0 * c0)).max((c4 + 1.0) / (r0 * c3));
        let mut q0 = need.powf(1.0 / (nf + 1.0)).floor().max(1.0) as u64;
        while (q0 as f64).powi(n as i32 + 1) <= need {
            q0 += 1;
        }
        let q1 = (l1 > 0.0).then(|| (1.0 / (nf * l1 * diam * diam)).floor() as u64 + 1);
        Ok(DomainConstants {
            n,
            d,
            c0,
            l1,
            l2,
            c3,
            c4,
            c5,
            c6,
            k1,
            k2,
            k3,
            r0,
            q0,
            q1,
            q_floor: q1.map(|q| 16 * q),
            nondeg_order: map.nondeg_order(region.center(), 8),
        })
    }

    /// `T = C3 Q^{n+1}`
    pub fn scale(&self, q: u64) -> f64 {
        self.c3 * (q as f64).powi(self.n as i32 + 1)
    }

    /// `λ(T) = T / C3`
    pub fn lambda(&self, t: f64) -> f64 {
        t / self.c3
    }
}

fn check_common(map: &ManifoldMap, region: &Ball, eps: f64, q: u64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps must be positive"));
    }
    if q == 0 {
        return Err(Error::invalid("Q must be at least 1"));
    }
    if region.dim() != map.d() {
        return Err(Error::invalid("region dimension does not match the map"));
    }
    Ok(())
}

/// Nonzero integer vectors with `‖a‖∞ ≤ q` whose first nonzero coordinate
/// is positive, in lexicographic order.
pub fn half_box(n: usize, q: u64) -> Vec<Vec<i64>> {
    let q = q as i64;
    let mut out = Vec::new();
    let mut a = vec![-q; n];
    loop {
        if a.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
            out.push(a.clone());
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if a[i] < q {
                a[i] += 1;
                break;
            }
            a[i] = -q;
        }
    }
}

/// `{x ∈ [lo, hi] : |⟨p(x)⟩| < eta}` as raw intervals.
pub(crate) fn residue_band(p: &UniPoly, lo: f64, hi: f64, eta: f64, out: &mut Vec<(f64, f64)>) {
    let (pts, _) = p.monotone_pieces(lo, hi);
    for w in pts.windows(2) {
        let (ya, yb) = (p.eval(w[0]), p.eval(w[1]));
        let (ymin, ymax) = (ya.min(yb), ya.max(yb));
        let first = (ymin - eta).ceil() as i64;
        let last = (ymax + eta).floor() as i64;
        for level in first..=last {
            p.band_on_piece(w[0], w[1], level as f64, eta, out);
        }
    }
}

/// Exact measure of `{x ∈ region : |⟨a·f(x)⟩| < delta}` for one form (`d = 1`).
pub fn form_band_measure(map: &ManifoldMap, a: &[i64], region: &Ball, delta: f64) -> Result<f64> {
    let p = map.form_poly_1d(a, 0)?;
    let (lo, hi) = region.bounds_1d();
    let mut raw = Vec::new();
    residue_band(&p, lo, hi, delta, &mut raw);
    Ok(IntervalUnion::from_intervals(raw).measure())
}

/// Exact measure of `{x ∈ [lo, hi] : |p(x)| < alpha}`.
pub fn sublevel_measure(p: &UniPoly, lo: f64, hi: f64, alpha: f64) -> f64 {
    IntervalUnion::from_intervals(p.band_preimage(lo, hi, 0.0, alpha)).measure()
}

/// The set itself as a union of intervals (`d = 1`).
pub fn limsup_set_1d(map: &ManifoldMap, region: &Ball, eps: f64, q: u64) -> Result<IntervalUnion> {
    check_common(map, region, eps, q)?;
    if map.d() != 1 {
        return Err(Error::invalid("exact1d needs d = 1"));
    }
    let (lo, hi) = region.bounds_1d();
    let eta = eps * (q as f64).powi(-(map.n() as i32));
    let forms = half_box(map.n(), q);
    let pieces: Vec<Vec<(f64, f64)>> = forms
        .par_iter()
        .map(|a| {
            let mut raw = Vec::new();
            let p = map.form_poly_1d(a, 0).expect("d = 1 checked");
            residue_band(&p, lo, hi, eta, &mut raw);
            raw
        })
        .collect();
    Ok(IntervalUnion::from_intervals(
        pieces.into_iter().flatten().collect(),
    ))
}

/// `|L_f(region; eps; Q)|`.
pub fn limsup_set_measure(
    map: &ManifoldMap,
    region: &Ball,
    eps: f64,
    q: u64,
    method: &Method,
) -> Result<MeasureEstimate> {
    check_common(map, region, eps, q)?;
    match method {
        Method::Exact1d => Ok(MeasureEstimate::exact(
            limsup_set_1d(map, region, eps, q)?.measure(),
            false,
        )),
        Method::MonteCarlo { samples, seed } => {
            let eta = eps * (q as f64).powi(-(map.n() as i32));
            let hits = count_hits(region, *samples, *seed, |x| {
                first_witness(&map.eval(x), q, eta).is_some()
            });
            Ok(MeasureEstimate::monte_carlo(
                hits,
                *samples,
                *seed,
                region.volume(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub measure: MeasureEstimate,
    /// `measure / (eps |region|)`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub q: u64,
    /// Least-squares slope of `log measure` against `log eps`.
    pub slope: f64,
    /// Largest `measure / (eps |region|)` over the grid.
    pub c0_hat: f64,
    pub rows: Vec<ScalingRow>,
    /// `Q` sits below the default floor `16 Q1`.
    pub below_q_floor: bool,
}

/// Smallest accepted ratio between the largest and smallest `eps`.
pub const MIN_EPS_SPAN: f64 = 8.0;

pub fn verify_linear_scaling(
    map: &ManifoldMap,
    region: &Ball,
    eps_grid: &[f64],
    q: u64,
    method: &Method,
) -> Result<ScalingReport> {
    if eps_grid.len() < 4 {
        return Err(Error::invalid("eps grid needs at least 4 points"));
    }
    let lo = eps_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eps_grid.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < MIN_EPS_SPAN * (1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "eps grid must be positive and span a factor of at least {MIN_EPS_SPAN}"
        )));
    }
    let vol = region.volume();
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let m = limsup_set_measure(map, region, eps, q, method)?;
        rows.push(ScalingRow {
            eps,
            ratio: m.value / (eps * vol),
            measure: m,
        });
    }
    if rows.iter().any(|r| r.measure.value <= 0.0) {
        return Err(Error::numeric("zero measure on the grid; slope undefined"));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.measure.value.ln()).collect();
    let c0_hat = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let bounds = map.default_bounds(region)?;
    let q1 = (bounds.l1 > 0.0).then(|| {
        (1.0 / (map.n() as f64 * bounds.l1 * region.diameter().powi(2))).floor() as u64 + 1
    });
    Ok(ScalingReport {
        q,
        slope: least_squares_slope(&xs, &ys),
        c0_hat,
        rows,
        below_q_floor: q1.is_some_and(|q1| q < 16 * q1),
    })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigSmallSplit {
    /// First witness with `‖a∇f(x)‖∞ ≥ √(n d L1 Q)`.
    pub big: MeasureEstimate,
    pub small: MeasureEstimate,
    pub total: MeasureEstimate,
    pub gradient_threshold: f64,
}

/// Splits the Monte Carlo estimate of `|L_f|` by the gradient size of the
/// first witness found for each sample.
pub fn split_big_small(
    map: &ManifoldMap,
    region: &Ball,
    eps: f64,
    q: u64,
    method: &Method,
) -> Result<BigSmallSplit> {
    check_common(map, region, eps, q)?;
    let Method::MonteCarlo { samples, seed } = *method else {
        return Err(Error::invalid(
            "the big/small split is estimated by Monte Carlo only",
        ));
    };
    let bounds = map.default_bounds(region)?;
    if !(bounds.l1 > 0.0) {
        return Err(Error::precondition(
            "L1 > 0 required for the big/small split",
        ));
    }
    let threshold = ((map.n() * map.d()) as f64 * bounds.l1 * q as f64).sqrt();
    let eta = eps * (q as f64).powi(-(map.n() as i32));
    let counts = tally(region, samples, seed, 2, |x| {
        first_witness(&map.eval(x), q, eta)
            .map(|a| usize::from(map.form_gradient_norm(&a, x) < threshold))
    });
    let vol = region.volume();
    Ok(BigSmallSplit {
        big: MeasureEstimate::monte_carlo(counts[0], samples, seed, vol),
        small: MeasureEstimate::monte_carlo(counts[1], samples, seed, vol),
        total: MeasureEstimate::monte_carlo(counts[0] + counts[1], samples, seed, vol),
        gradient_threshold: threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub bounds: DerivBounds,
    pub scaling: ScalingReport,
    pub constants: DomainConstants,
}

/// Default calibration grid.
pub const CALIBRATION_EPS: [f64; 4] = [0.025, 0.05, 0.1, 0.2];

/// Estimates `C0` on `region` and derives the constants chain from it.
pub fn calibrate(
    map: &ManifoldMap,
    region: &Ball,
    q: u64,
    eps_grid: &[f64],
    method: &Method,
) -> Result<Calibration> {
    let bounds = map.default_bounds(region)?;
    let scaling = verify_linear_scaling(map, region, eps_grid, q, method)?;
    let constants = DomainConstants::derive(map, region, scaling.c0_hat, &bounds)?;
    Ok(Calibration {
        bounds,
        scaling,
        constants,
    })
}
