//! Resonant sets `R_{a,a0} = {x : a·f(x) + a0 = 0}`, anchoring of points to
//! nearby resonant sets, and tube measures `|B(R, γ) ∩ region|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::IntervalUnion;
use crate::linforms::{minkowski_solve, IntegerForm};
use crate::manifold::{euclid, Ball, ManifoldMap};
use crate::measure::{DomainConstants, MeasureEstimate, Method};
use crate::sampling::count_hits;

/// Bisection cap for [`find_zero_along_axis`].
pub const MAX_BISECTIONS: usize = 200;

/// `|F(z)|` accepted as zero: `1e-12 · max(1, ‖a‖∞)`.
pub fn zero_tol(form: &IntegerForm) -> f64 {
    1e-12 * (form.norm().max(1) as f64)
}

/// A resonant set with its weight `N = ‖a‖∞^{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonantSet {
    pub form: IntegerForm,
    pub weight: f64,
}

impl ResonantSet {
    pub fn new(form: IntegerForm) -> Self {
        let weight = (form.norm() as f64).powi(form.a.len() as i32 + 1);
        ResonantSet { form, weight }
    }

    pub fn from_parts(a: Vec<i64>, a0: i64) -> Result<Self> {
        Ok(ResonantSet::new(IntegerForm::new(a, a0)?))
    }
}

/// A point `z` of a resonant set found near `source_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub z: Vec<f64>,
    pub source_x: Vec<f64>,
    pub displacement: f64,
    /// `|F(z)|`
    pub residual: f64,
}

/// `F(x) = a·f(x) + a0`.
pub fn form_value(map: &ManifoldMap, r: &ResonantSet, x: &[f64]) -> f64 {
    map.form_value(&r.form.a, r.form.a0, x)
}

/// `∇F(x) = a ∇f(x)`.
pub fn form_gradient(map: &ManifoldMap, form: &IntegerForm, x: &[f64]) -> Vec<f64> {
    let g = map.gradient(x);
    (0..map.d())
        .map(|i| {
            form.a
                .iter()
                .zip(&g)
                .map(|(&aj, row)| aj as f64 * row[i])
                .sum()
        })
        .collect()
}

fn shifted(x: &[f64], theta: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[0] += theta;
    y
}

/// Zero of `θ ↦ F(x1 + θ, x2, …, xd)` on `[-theta_max, theta_max]`.
///
/// Each half-interval `[-θ, 0]`, `[0, θ]` is checked for a sign change at
/// its ends; the root nearest to `x` is kept. `None` when neither half
/// changes sign or bisection cannot reach the zero tolerance.
pub fn find_zero_along_axis(
    map: &ManifoldMap,
    r: &ResonantSet,
    x: &[f64],
    theta_max: f64,
) -> Result<Option<Anchor>> {
    map.require_chart()?;
    if !(theta_max > 0.0) {
        return Err(Error::invalid("theta_max must be positive"));
    }
    let tol = zero_tol(&r.form);
    let g = |t: f64| form_value(map, r, &shifted(x, t));
    let g0 = g(0.0);
    let make = |theta: f64, value: f64| Anchor {
        z: shifted(x, theta),
        source_x: x.to_vec(),
        displacement: theta.abs(),
        residual: value.abs(),
    };
    if g0.abs() <= tol {
        return Ok(Some(make(0.0, g0)));
    }
    let mut best: Option<(f64, f64)> = None;
    for end in [-theta_max, theta_max] {
        let ge = g(end);
        if ge.abs() <= tol {
            best = pick(best, (end, ge));
            continue;
        }
        if (ge < 0.0) == (g0 < 0.0) {
            continue;
        }
        // bracket [0, end] with opposite signs
        let (mut inner, mut outer) = (0.0f64, end);
        let mut g_in = g0;
        let mut found = None;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (inner + outer);
            if mid == inner || mid == outer {
                break;
            }
            let gm = g(mid);
            if gm.abs() <= tol {
                found = Some((mid, gm));
                break;
            }
            if (gm < 0.0) == (g_in < 0.0) {
                inner = mid;
                g_in = gm;
            } else {
                outer = mid;
            }
        }
        if found.is_none() {
            for t in [inner, outer] {
                let gt = g(t);
                if gt.abs() <= tol {
                    found = pick(found, (t, gt));
                }
            }
        }
        if let Some(c) = found {
            best = pick(best, c);
        }
    }
    Ok(best.map(|(t, v)| make(t, v)))
}

fn pick(cur: Option<(f64, f64)>, cand: (f64, f64)) -> Option<(f64, f64)> {
    match cur {
        Some(c) if c.0.abs() <= cand.0.abs() => Some(c),
        _ => Some(cand),
    }
}

/// Result of [`anchor_for_point`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum AnchorOutcome {
    Anchored {
        set: ResonantSet,
        anchor: Anchor,
    },
    /// `|∂1 F(x)| ≤ Q/(2n)`: `x` is in the exceptional set.
    BigNormViolation {
        form: IntegerForm,
        d1f: f64,
        required: f64,
    },
    /// No sign change of `F` within the search window.
    NoSignChange {
        form: IntegerForm,
    },
}

impl AnchorOutcome {
    pub fn anchored(&self) -> Option<(&ResonantSet, &Anchor)> {
        match self {
            AnchorOutcome::Anchored { set, anchor } => Some((set, anchor)),
            _ => None,
        }
    }
}

/// Search half-width along `x1`: `n/(2 C0) · Q^{-n-1}`.
pub fn theta_max(consts: &DomainConstants, q: u64) -> f64 {
    consts.n as f64 / (2.0 * consts.c0) * (q as f64).powi(-(consts.n as i32) - 1)
}

/// Minkowski form at `f(x)` and a zero of it along `x1`.
///
/// A point already on the resonant set anchors to itself. Otherwise the
/// gradient condition `|∂1 F(x)| > Q/(2n)` is checked first.
pub fn anchor_for_point(
    map: &ManifoldMap,
    x: &[f64],
    q: u64,
    consts: &DomainConstants,
) -> Result<AnchorOutcome> {
    map.require_chart()?;
    if q < consts.q0 {
        return Err(Error::precondition(format!(
            "Q = {q} is below the threshold Q0 = {}",
            consts.q0
        )));
    }
    let n = map.n();
    let (form, _) = minkowski_solve(&map.eval(x), q, consts.c0, n, consts.l2)?;
    let set = ResonantSet::new(form);
    let fx = form_value(map, &set, x);
    if fx.abs() <= zero_tol(&set.form) {
        let anchor = Anchor {
            z: x.to_vec(),
            source_x: x.to_vec(),
            displacement: 0.0,
            residual: fx.abs(),
        };
        return Ok(AnchorOutcome::Anchored { set, anchor });
    }
    let d1f = form_gradient(map, &set.form, x)[0];
    let required = q as f64 / (2.0 * n as f64);
    if d1f.abs() <= required {
        return Ok(AnchorOutcome::BigNormViolation {
            form: set.form,
            d1f,
            required,
        });
    }
    match find_zero_along_axis(map, &set, x, theta_max(consts, q))? {
        Some(anchor) => Ok(AnchorOutcome::Anchored { set, anchor }),
        None => Ok(AnchorOutcome::NoSignChange { form: set.form }),
    }
}

/// Roots of `F` within `[lo - γ, hi + γ]` and the γ-tube around them,
/// clipped to `[lo, hi]`. `None` when `F` vanishes identically.
pub(crate) fn tube_union_1d(
    map: &ManifoldMap,
    form: &IntegerForm,
    lo: f64,
    hi: f64,
    gamma: f64,
) -> Result<(Option<IntervalUnion>, bool)> {
    let p = map.form_poly_1d(&form.a, form.a0)?;
    if p.is_zero() {
        return Ok((None, true));
    }
    let iso = p.real_roots(lo - gamma, hi + gamma);
    let tube =
        IntervalUnion::from_intervals(iso.roots.iter().map(|&r| (r - gamma, r + gamma)).collect())
            .clipped(lo, hi);
    Ok((Some(tube), iso.degenerate))
}

/// Whether `x` lies within `gamma` of the zero set of `F`, judged locally:
/// a sign change along a coordinate segment, or a Newton foot point closer
/// than `gamma`.
pub(crate) fn near_zero_set(map: &ManifoldMap, form: &IntegerForm, x: &[f64], gamma: f64) -> bool {
    let f = |y: &[f64]| map.form_value(&form.a, form.a0, y);
    let fx = f(x);
    let tol = zero_tol(form);
    if fx.abs() <= tol {
        return true;
    }
    for i in 0..x.len() {
        for s in [-1.0, 1.0] {
            let mut y = x.to_vec();
            y[i] += s * gamma * (1.0 - 1e-12);
            if (f(&y) < 0.0) != (fx < 0.0) {
                return true;
            }
        }
    }
    let mut y = x.to_vec();
    for _ in 0..30 {
        let fy = f(&y);
        if fy.abs() <= tol {
            return euclid(&y, x) < gamma;
        }
        let g = form_gradient(map, form, &y);
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2 == 0.0 {
            return false;
        }
        for (yi, gi) in y.iter_mut().zip(&g) {
            *yi -= fy * gi / g2;
        }
        if euclid(&y, x) >= 2.0 * gamma {
            return false;
        }
    }
    false
}

/// `|{x ∈ region : dist(x, R) < γ}|`, distance taken locally.
pub fn tube_measure(
    map: &ManifoldMap,
    r: &ResonantSet,
    region: &Ball,
    gamma: f64,
    method: &Method,
) -> Result<MeasureEstimate> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma must be positive"));
    }
    if region.dim() != map.d() {
        return Err(Error::invalid("region dimension does not match the map"));
    }
    match method {
        Method::Exact1d => {
            if map.d() != 1 {
                return Err(Error::invalid("exact1d needs d = 1"));
            }
            let (lo, hi) = region.bounds_1d();
            let (tube, degenerate) = tube_union_1d(map, &r.form, lo, hi, gamma)?;
            let value = tube.map_or(hi - lo, |t| t.measure());
            Ok(MeasureEstimate::exact(value, degenerate))
        }
        Method::MonteCarlo { samples, seed } => {
            let hits = if map.d() == 1 {
                let p = map.form_poly_1d(&r.form.a, r.form.a0)?;
                if p.is_zero() {
                    return Ok(MeasureEstimate::exact(region.volume(), true));
                }
                count_hits(region, *samples, *seed, |x| {
                    let (a, b) = (x[0] - gamma, x[0] + gamma);
                    let (pa, pb) = (p.eval(a), p.eval(b));
                    pa == 0.0 || pb == 0.0 || (pa < 0.0) != (pb < 0.0) || {
                        let iso = p.real_roots(a, b);
                        iso.roots.iter().any(|&z| (z - x[0]).abs() < gamma)
                    }
                })
            } else {
                count_hits(region, *samples, *seed, |x| {
                    near_zero_set(map, &r.form, x, gamma)
                })
            };
            Ok(MeasureEstimate::monte_carlo(
                hits,
                *samples,
                *seed,
                region.volume(),
            ))
        }
    }
}
