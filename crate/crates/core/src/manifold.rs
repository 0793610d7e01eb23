//! Polynomial maps `f : U ⊂ R^d → R^n`, their exact derivatives, the
//! non-degeneracy order, and the derivative bounds `L1` (second order, over
//! the doubled ball) and `L2` (gradients, over the ball).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::UniPoly;

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// Open Euclidean ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::invalid(
                "ball center must have at least one coordinate",
            ));
        }
        if center.iter().any(|c| !c.is_finite()) || !radius.is_finite() {
            return Err(Error::invalid("ball center and radius must be finite"));
        }
        if radius <= 0.0 {
            return Err(Error::invalid(format!(
                "degenerate region: radius {radius} must be positive"
            )));
        }
        Ok(Ball { center, radius })
    }

    /// The interval `[lo, hi]` as a one-dimensional ball.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Ball::new(vec![0.5 * (lo + hi)], 0.5 * (hi - lo))
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    /// `λB`: same center, radius scaled by `λ`.
    pub fn scaled(&self, lambda: f64) -> Ball {
        Ball {
            center: self.center.clone(),
            radius: self.radius * lambda,
        }
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }

    /// Endpoints of a one-dimensional ball.
    pub fn bounds_1d(&self) -> (f64, f64) {
        (self.center[0] - self.radius, self.center[0] + self.radius)
    }

    pub fn distance_to_center(&self, x: &[f64]) -> f64 {
        euclid(x, &self.center)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.distance_to_center(x) < self.radius
    }

    /// Closed containment of another ball.
    pub fn contains_ball(&self, other: &Ball) -> bool {
        self.distance_to_center(&other.center) + other.radius <= self.radius * (1.0 + 1e-12)
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// One monomial `c · x_1^{e_1} ⋯ x_d^{e_d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    #[serde(rename = "c")]
    pub coef: f64,
    #[serde(rename = "e")]
    pub exps: Vec<u32>,
}

/// Multivariate polynomial in `d` variables, like terms merged.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    d: usize,
    terms: Vec<Monomial>,
}

impl MultiPoly {
    pub fn new(d: usize, terms: Vec<Monomial>) -> Result<Self> {
        let mut merged: Vec<Monomial> = Vec::new();
        for t in terms {
            if t.exps.len() != d {
                return Err(Error::invalid(format!(
                    "monomial has {} exponents, expected {d}",
                    t.exps.len()
                )));
            }
            if !t.coef.is_finite() {
                return Err(Error::invalid("polynomial coefficients must be finite"));
            }
            match merged.iter_mut().find(|m| m.exps == t.exps) {
                Some(m) => m.coef += t.coef,
                None => merged.push(t),
            }
        }
        merged.retain(|m| m.coef != 0.0);
        merged.sort_by(|a, b| a.exps.cmp(&b.exps));
        Ok(MultiPoly { d, terms: merged })
    }

    /// Univariate polynomial from ascending coefficients.
    pub fn univariate(coeffs: &[f64]) -> Result<Self> {
        MultiPoly::new(
            1,
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| Monomial {
                    coef: c,
                    exps: vec![k as u32],
                })
                .collect(),
        )
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|m| {
                m.exps
                    .iter()
                    .zip(x)
                    .fold(m.coef, |acc, (&e, &xi)| acc * xi.powi(e as i32))
            })
            .sum()
    }

    /// `∂_β` of the polynomial, computed symbolically.
    pub fn derivative(&self, beta: &[u32]) -> MultiPoly {
        let mut terms = Vec::new();
        'outer: for m in &self.terms {
            let mut coef = m.coef;
            let mut exps = m.exps.clone();
            for (e, &b) in exps.iter_mut().zip(beta) {
                if b > *e {
                    continue 'outer;
                }
                for k in 0..b {
                    coef *= (*e - k) as f64;
                }
                *e -= b;
            }
            terms.push(Monomial { coef, exps });
        }
        MultiPoly::new(self.d, terms).expect("derivative keeps the arity")
    }

    pub fn eval_derivative(&self, x: &[f64], beta: &[u32]) -> f64 {
        self.terms
            .iter()
            .map(|m| {
                let mut v = m.coef;
                for ((&e, &b), &xi) in m.exps.iter().zip(beta).zip(x) {
                    if b > e {
                        return 0.0;
                    }
                    for k in 0..b {
                        v *= (e - k) as f64;
                    }
                    v *= xi.powi((e - b) as i32);
                }
                v
            })
            .sum()
    }

    /// True iff the polynomial is exactly `x_1`.
    pub fn is_first_coordinate(&self) -> bool {
        let mut unit = vec![0u32; self.d];
        unit[0] = 1;
        self.terms.len() == 1 && self.terms[0].coef == 1.0 && self.terms[0].exps == unit
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|m| m.exps.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Dense ascending coefficients (only for `d = 1`).
    fn dense_1d(&self) -> Vec<f64> {
        debug_assert_eq!(self.d, 1);
        let mut c = vec![0.0; self.total_degree() as usize + 1];
        for m in &self.terms {
            c[m.exps[0] as usize] += m.coef;
        }
        c
    }
}

/// Per-coordinate entry in a polynomial map config: dense ascending
/// coefficients (one variable) or an explicit monomial list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoordSpec {
    Dense(Vec<f64>),
    Terms(Vec<Monomial>),
}

/// Structured description of a map, as read from config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapSpec {
    Veronese {
        n: usize,
    },
    Poly {
        d: usize,
        n: usize,
        coeffs: Vec<CoordSpec>,
        /// Asserts `f_1(x) = x_1`; construction fails if it does not hold.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        chart: bool,
    },
}

impl FromStr for MapSpec {
    type Err = Error;

    /// Accepts `veronese:N` or an inline JSON object.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        match s.split_once(':') {
            Some(("veronese", n)) => n
                .trim()
                .parse()
                .map(|n| MapSpec::Veronese { n })
                .map_err(|_| Error::invalid(format!("bad veronese dimension in '{s}'"))),
            _ => Err(Error::invalid(format!(
                "unknown map '{s}' (expected veronese:N or a JSON object)"
            ))),
        }
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSpec::Veronese { n } => write!(f, "veronese:{n}"),
            other => write!(
                f,
                "{}",
                serde_json::to_string(other).map_err(|_| fmt::Error)?
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Veronese,
    Polynomial,
}

/// A polynomial map `f : R^d → R^n`.
#[derive(Debug, Clone)]
pub struct ManifoldMap {
    spec: MapSpec,
    kind: MapKind,
    d: usize,
    coords: Vec<MultiPoly>,
    chart: bool,
}

/// Derivative bounds over a working ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivBounds {
    /// Sup of second-order partials over the doubled ball.
    pub l1: f64,
    /// Sup of gradient sup-norms over the ball.
    pub l2: f64,
    pub safety: f64,
}

impl DerivBounds {
    pub const DEFAULT_GRID: usize = 33;
    pub const DEFAULT_SAFETY: f64 = 1.1;
}

/// Relative singular-value cutoff of the rank test in [`ManifoldMap::nondeg_order`].
pub const RANK_TOLERANCE: f64 = 1e-9;

impl ManifoldMap {
    /// Veronese curve `x ↦ (x, x², …, xⁿ)`.
    pub fn veronese(n: usize) -> Result<Self> {
        ManifoldMap::from_spec(&MapSpec::Veronese { n })
    }

    /// One-variable polynomial map from dense ascending coefficient rows.
    pub fn univariate(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let n = coeffs.len();
        ManifoldMap::from_spec(&MapSpec::Poly {
            d: 1,
            n,
            coeffs: coeffs.into_iter().map(CoordSpec::Dense).collect(),
            chart: false,
        })
    }

    pub fn from_spec(spec: &MapSpec) -> Result<Self> {
        match spec {
            MapSpec::Veronese { n } => {
                if *n == 0 {
                    return Err(Error::invalid("veronese dimension must be at least 1"));
                }
                let coords = (1..=*n)
                    .map(|k| {
                        MultiPoly::new(
                            1,
                            vec![Monomial {
                                coef: 1.0,
                                exps: vec![k as u32],
                            }],
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ManifoldMap {
                    spec: spec.clone(),
                    kind: MapKind::Veronese,
                    d: 1,
                    coords,
                    chart: true,
                })
            }
            MapSpec::Poly {
                d,
                n,
                coeffs,
                chart,
            } => {
                if *d == 0 || *n == 0 {
                    return Err(Error::invalid("map dimensions d and n must be at least 1"));
                }
                if coeffs.len() != *n {
                    return Err(Error::invalid(format!(
                        "expected {n} coordinate functions, got {}",
                        coeffs.len()
                    )));
                }
                let coords = coeffs
                    .iter()
                    .map(|c| match c {
                        CoordSpec::Dense(v) if *d == 1 => MultiPoly::univariate(v),
                        CoordSpec::Dense(_) => Err(Error::invalid(
                            "dense coefficient rows are only allowed for d = 1",
                        )),
                        CoordSpec::Terms(t) => MultiPoly::new(*d, t.clone()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let holds = coords[0].is_first_coordinate();
                if *chart && !holds {
                    return Err(Error::invalid(
                        "chart flag set but the first coordinate function is not x_1",
                    ));
                }
                Ok(ManifoldMap {
                    spec: spec.clone(),
                    kind: MapKind::Polynomial,
                    d: *d,
                    coords,
                    chart: holds,
                })
            }
        }
    }

    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// Domain dimension.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[MultiPoly] {
        &self.coords
    }

    /// Whether `f_1(x) = x_1` holds identically.
    pub fn has_first_coordinate_chart(&self) -> bool {
        self.chart
    }

    pub(crate) fn require_chart(&self) -> Result<()> {
        if self.chart {
            Ok(())
        } else {
            Err(Error::precondition(
                "map must satisfy f_1(x) = x_1 (first-coordinate chart)",
            ))
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.coords.iter().map(|p| p.eval(x)).collect()
    }

    pub fn partial(&self, x: &[f64], beta: &[u32]) -> Vec<f64> {
        self.coords
            .iter()
            .map(|p| p.eval_derivative(x, beta))
            .collect()
    }

    /// `∇f(x)` as an `n × d` row-major table.
    pub fn gradient(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.coords
            .iter()
            .map(|p| {
                (0..self.d)
                    .map(|i| p.eval_derivative(x, &unit_index(self.d, i)))
                    .collect()
            })
            .collect()
    }

    /// `‖a ∇f(x)‖_∞`.
    pub fn form_gradient_norm(&self, a: &[i64], x: &[f64]) -> f64 {
        let g = self.gradient(x);
        (0..self.d)
            .map(|i| {
                a.iter()
                    .zip(&g)
                    .map(|(&aj, row)| aj as f64 * row[i])
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// `a·f(x) + a0`.
    pub fn form_value(&self, a: &[i64], a0: i64, x: &[f64]) -> f64 {
        a.iter()
            .zip(&self.coords)
            .map(|(&aj, p)| aj as f64 * p.eval(x))
            .sum::<f64>()
            + a0 as f64
    }

    /// `a·f + a0` as a univariate polynomial (requires `d = 1`).
    pub fn form_poly_1d(&self, a: &[i64], a0: i64) -> Result<UniPoly> {
        if self.d != 1 {
            return Err(Error::precondition(
                "exact one-dimensional methods need d = 1",
            ));
        }
        let mut c = vec![0.0; 1];
        for (&aj, p) in a.iter().zip(&self.coords) {
            let dense = p.dense_1d();
            if dense.len() > c.len() {
                c.resize(dense.len(), 0.0);
            }
            for (k, v) in dense.iter().enumerate() {
                c[k] += aj as f64 * v;
            }
        }
        c[0] += a0 as f64;
        Ok(UniPoly::new(c))
    }

    /// Smallest `l ≤ l_max` such that the partial derivatives of orders
    /// `1..=l` at `x` span `R^n`.
    pub fn nondeg_order(&self, x: &[f64], l_max: usize) -> Option<usize> {
        self.nondeg_order_with_tolerance(x, l_max, RANK_TOLERANCE)
    }

    pub fn nondeg_order_with_tolerance(&self, x: &[f64], l_max: usize, tol: f64) -> Option<usize> {
        let n = self.n();
        let mut columns: Vec<Vec<f64>> = Vec::new();
        for l in 1..=l_max {
            for beta in multi_indices(self.d, l as u32) {
                columns.push(self.partial(x, &beta));
            }
            if columns.len() >= n && numeric_rank(&columns, n, tol) == n {
                return Some(l);
            }
        }
        None
    }

    /// `L1` over `2·region`, `L2` over `region`, both from a grid with
    /// `grid_per_axis` points per axis and inflated by `safety`.
    pub fn derivative_bounds(
        &self,
        region: &Ball,
        grid_per_axis: usize,
        safety: f64,
    ) -> Result<DerivBounds> {
        if region.radius() <= 0.0 {
            return Err(Error::invalid("degenerate region"));
        }
        if grid_per_axis < 2 {
            return Err(Error::invalid("grid_per_axis must be at least 2"));
        }
        if region.dim() != self.d {
            return Err(Error::invalid(format!(
                "region has dimension {}, map domain has {}",
                region.dim(),
                self.d
            )));
        }
        if !(safety >= 1.0) {
            return Err(Error::invalid("safety factor must be at least 1"));
        }
        let second: Vec<Vec<u32>> = multi_indices(self.d, 2);
        let mut l1: f64 = 0.0;
        for x in grid_points(&region.scaled(2.0), grid_per_axis) {
            for beta in &second {
                for p in &self.coords {
                    l1 = l1.max(p.eval_derivative(&x, beta).abs());
                }
            }
        }
        let mut l2: f64 = 0.0;
        for x in grid_points(region, grid_per_axis) {
            for row in self.gradient(&x) {
                for v in row {
                    l2 = l2.max(v.abs());
                }
            }
        }
        Ok(DerivBounds {
            l1: safety * l1,
            l2: safety * l2,
            safety,
        })
    }

    /// Bounds with the default grid (33 per axis) and safety factor (1.1).
    pub fn default_bounds(&self, region: &Ball) -> Result<DerivBounds> {
        self.derivative_bounds(
            region,
            DerivBounds::DEFAULT_GRID,
            DerivBounds::DEFAULT_SAFETY,
        )
    }
}

fn unit_index(d: usize, i: usize) -> Vec<u32> {
    let mut b = vec![0; d];
    b[i] = 1;
    b
}

/// All multi-indices in `d` variables with total order exactly `k`.
pub fn multi_indices(d: usize, k: u32) -> Vec<Vec<u32>> {
    if d == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in (0..=k).rev() {
        for mut rest in multi_indices(d - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn numeric_rank(columns: &[Vec<f64>], n: usize, tol: f64) -> usize {
    let m = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}

/// Points of a regular grid over the bounding cube of `ball` that lie in
/// the closed ball.
fn grid_points(ball: &Ball, per_axis: usize) -> Vec<Vec<f64>> {
    let d = ball.dim();
    let r = ball.radius();
    let step = 2.0 * r / (per_axis - 1) as f64;
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let x: Vec<f64> = idx
            .iter()
            .zip(ball.center())
            .map(|(&i, &c)| c - r + i as f64 * step)
            .collect();
        if d == 1 || ball.distance_to_center(&x) <= r * (1.0 + 1e-12) {
            out.push(x);
        }
        let mut axis = 0;
        loop {
            if axis == d {
                return out;
            }
            idx[axis] += 1;
            if idx[axis] < per_axis {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn unit_interval() -> Ball {
        Ball::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(
            ManifoldMap::veronese(3).unwrap().eval(&[2.0]),
            vec![2.0, 4.0, 8.0]
        );
        assert_eq!(
            ManifoldMap::veronese(2).unwrap().eval(&[0.0]),
            vec![0.0, 0.0]
        );
        let f = ManifoldMap::univariate(vec![vec![0.0, 1.0], vec![-1.0, 0.0, 1.0]]).unwrap();
        assert_eq!(f.eval(&[1.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn partial_examples() {
        let v2 = ManifoldMap::veronese(2).unwrap();
        assert_eq!(v2.partial(&[0.5], &[1]), vec![1.0, 1.0]);
        assert_eq!(v2.partial(&[0.37], &[2]), vec![0.0, 2.0]);
        assert_eq!(v2.partial(&[0.37], &[3]), vec![0.0, 0.0]);
    }

    #[test]
    fn nondeg_order_examples() {
        assert_eq!(
            ManifoldMap::veronese(2).unwrap().nondeg_order(&[0.3], 5),
            Some(2)
        );
        assert_eq!(
            ManifoldMap::veronese(3).unwrap().nondeg_order(&[1.0], 5),
            Some(3)
        );
        let line = ManifoldMap::univariate(vec![vec![0.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(line.nondeg_order(&[0.7], 5), None);
    }

    #[test]
    fn nondeg_order_symbolic_determinants() {
        // Veronese(2): det[(1, 2x), (0, 2)] = 2; Veronese(3) Wronskian det = 12.
        for x in [-1.0, 0.0, 0.3, 2.0] {
            let v2 = ManifoldMap::veronese(2).unwrap();
            let (c1, c2) = (v2.partial(&[x], &[1]), v2.partial(&[x], &[2]));
            assert_abs_diff_eq!(c1[0] * c2[1] - c1[1] * c2[0], 2.0, epsilon = 1e-12);
            assert_eq!(v2.nondeg_order(&[x], 5), Some(2));
        }
        let v3 = ManifoldMap::veronese(3).unwrap();
        let cols: Vec<Vec<f64>> = (1..=3).map(|k| v3.partial(&[1.0], &[k])).collect();
        let det = DMatrix::from_fn(3, 3, |i, j| cols[j][i]).determinant();
        assert_abs_diff_eq!(det, 12.0, epsilon = 1e-9);
    }

    #[test]
    fn derivative_bound_examples() {
        let b = ManifoldMap::veronese(2)
            .unwrap()
            .derivative_bounds(&unit_interval(), 33, 1.0)
            .unwrap();
        assert_abs_diff_eq!(b.l1, 2.0);
        assert_abs_diff_eq!(b.l2, 2.0);
        let lin = ManifoldMap::univariate(vec![vec![0.0, 1.0]]).unwrap();
        let b = lin.derivative_bounds(&unit_interval(), 33, 1.0).unwrap();
        assert_eq!((b.l1, b.l2), (0.0, 1.0));
        // L1 is taken over the doubled ball [-0.5, 1.5]: 6x peaks at 9.
        let b = ManifoldMap::veronese(3)
            .unwrap()
            .derivative_bounds(&unit_interval(), 33, 1.0)
            .unwrap();
        assert_abs_diff_eq!(b.l1, 9.0);
        assert_abs_diff_eq!(b.l2, 3.0);
    }

    #[test]
    fn degenerate_region_rejected() {
        assert!(Ball::new(vec![0.5], 0.0).is_err());
        let v = ManifoldMap::veronese(2).unwrap();
        assert!(v.derivative_bounds(&unit_interval(), 1, 1.0).is_err());
    }

    #[test]
    fn bounds_dominate_exact_suprema() {
        // On [0,1] the doubled ball is [-0.5, 1.5]; every monomial derivative
        // is maximal in absolute value at the right endpoint.
        for n in 1..=5usize {
            let b = ManifoldMap::veronese(n)
                .unwrap()
                .default_bounds(&unit_interval())
                .unwrap();
            let exact_l1 = (2..=n)
                .map(|k| (k * (k - 1)) as f64 * 1.5f64.powi(k as i32 - 2))
                .fold(0.0, f64::max);
            let exact_l2 = n as f64;
            assert!(b.l1 >= exact_l1, "n={n}");
            assert!(b.l2 >= exact_l2, "n={n}");
        }
    }

    #[test]
    fn chart_flag_is_checked() {
        let spec: MapSpec = serde_json::from_str(
            r#"{"kind":"poly","d":1,"n":2,"coeffs":[[0,2],[0,0,1]],"chart":true}"#,
        )
        .unwrap();
        assert!(ManifoldMap::from_spec(&spec).is_err());
        let spec: MapSpec = serde_json::from_str(
            r#"{"kind":"poly","d":2,"n":3,"coeffs":[[{"c":1,"e":[1,0]}],[{"c":1,"e":[0,1]}],[{"c":1,"e":[2,0]},{"c":1,"e":[0,2]}]],"chart":true}"#,
        )
        .unwrap();
        let f = ManifoldMap::from_spec(&spec).unwrap();
        assert!(f.has_first_coordinate_chart());
        assert_eq!(f.eval(&[1.0, 2.0]), vec![1.0, 2.0, 5.0]);
        assert_eq!(f.nondeg_order(&[0.3, 0.4], 3), Some(2));
    }

    #[test]
    fn map_spec_parsing() {
        assert_eq!(
            "veronese:3".parse::<MapSpec>().unwrap(),
            MapSpec::Veronese { n: 3 }
        );
        assert!("circle:2".parse::<MapSpec>().is_err());
        let s: MapSpec = r#"{"kind":"veronese","n":2}"#.parse().unwrap();
        assert_eq!(s.to_string(), "veronese:2");
    }

    #[test]
    fn form_poly_matches_direct_evaluation() {
        let f = ManifoldMap::veronese(3).unwrap();
        let p = f.form_poly_1d(&[3, -2, 1], -5).unwrap();
        for x in [-1.0, 0.2, 0.9] {
            assert_abs_diff_eq!(
                p.eval(x),
                f.form_value(&[3, -2, 1], -5, &[x]),
                epsilon = 1e-12
            );
        }
    }

    fn random_map(rng: &mut impl Rng) -> ManifoldMap {
        let rows = (0..2)
            .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        ManifoldMap::univariate(rows).unwrap()
    }

    #[test]
    fn partials_agree_with_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let f = random_map(&mut rng);
            let x = rng.gen_range(-1.0..1.0);
            let h = 1e-5;
            let (fp, fm) = (f.eval(&[x + h]), f.eval(&[x - h]));
            let h2 = 1e-4;
            let (gp, g0, gm) = (f.eval(&[x + h2]), f.eval(&[x]), f.eval(&[x - h2]));
            let d1 = f.partial(&[x], &[1]);
            let d2 = f.partial(&[x], &[2]);
            for j in 0..2 {
                let fd1 = (fp[j] - fm[j]) / (2.0 * h);
                let fd2 = (gp[j] - 2.0 * g0[j] + gm[j]) / (h2 * h2);
                assert!((fd1 - d1[j]).abs() <= 1e-6 * d1[j].abs().max(1.0));
                assert!((fd2 - d2[j]).abs() <= 1e-5 * d2[j].abs().max(1.0));
            }
        }
    }

    proptest! {
        #[test]
        fn nondeg_order_invariant_under_integer_recombination(
            m in prop::array::uniform9(-3i64..=3),
            x in -1.0f64..1.0,
        ) {
            let mat = DMatrix::from_fn(3, 3, |i, j| m[3 * i + j] as f64);
            prop_assume!(mat.determinant().abs() > 0.5);
            let v3 = ManifoldMap::veronese(3).unwrap();
            // g = M f, coordinate functions recombined
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|i| {
                    let mut c = vec![0.0; 4];
                    for j in 0..3 {
                        c[j + 1] += m[3 * i + j] as f64;
                    }
                    c
                })
                .collect();
            let g = ManifoldMap::univariate(rows).unwrap();
            prop_assert_eq!(g.nondeg_order(&[x], 5), v3.nondeg_order(&[x], 5));
        }
    }
}
