//! Error functions `ψ : R₊ → R₊`, their transforms, and a three-valued
//! convergence diagnostic for the associated series.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive, non-increasing function on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ApproxFn {
    /// `h^{-τ}`
    Power { tau: f64 },
    /// `h^{-τ} (log(h + e))^{-σ}`
    #[serde(rename = "powerlog")]
    PowerLog { tau: f64, sigma: f64 },
    /// Step function through `(h, value)` samples with ascending `h`:
    /// the value at `h` is that of the last sample at or left of `h`
    /// (the first sample's value before it).
    Table { points: Vec<(f64, f64)> },
    /// `min(c/h, inner(h))`
    Clamped { c: f64, inner: Box<ApproxFn> },
    /// `Ψ(k) = k^{-1/(n+1)} ψ(k^{n/(n+1)}) / (d n L2)`
    #[serde(rename = "bigpsi")]
    BigPsi {
        psi: Box<ApproxFn>,
        n: usize,
        d: usize,
        l2: f64,
    },
}

impl ApproxFn {
    pub fn power(tau: f64) -> Self {
        ApproxFn::Power { tau }
    }

    pub fn power_log(tau: f64, sigma: f64) -> Self {
        ApproxFn::PowerLog { tau, sigma }
    }

    pub fn constant(value: f64) -> Self {
        ApproxFn::Table {
            points: vec![(1.0, value)],
        }
    }

    pub fn clamped(c: f64, inner: ApproxFn) -> Self {
        ApproxFn::Clamped {
            c,
            inner: Box::new(inner),
        }
    }

    /// Checks parameters: exponents non-negative, values positive, tables
    /// sorted and non-increasing.
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64, name: &str| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be finite and non-negative, got {v}"
                )))
            }
        };
        match self {
            ApproxFn::Power { tau } => finite_nonneg(*tau, "tau"),
            ApproxFn::PowerLog { tau, sigma } => {
                finite_nonneg(*tau, "tau")?;
                finite_nonneg(*sigma, "sigma")
            }
            ApproxFn::Table { points } => {
                if points.is_empty() {
                    return Err(Error::invalid("table needs at least one sample"));
                }
                for (h, v) in points {
                    if !(h.is_finite() && v.is_finite() && *v > 0.0) {
                        return Err(Error::invalid(
                            "table samples must be finite with positive values",
                        ));
                    }
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 || w[1].1 > w[0].1 {
                        return Err(Error::invalid(
                            "table must have ascending h and non-increasing values",
                        ));
                    }
                }
                Ok(())
            }
            ApproxFn::Clamped { c, inner } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::invalid("clamp constant must be positive"));
                }
                inner.validate()
            }
            ApproxFn::BigPsi { psi, n, d, l2 } => {
                if *n == 0 || *d == 0 || !(l2.is_finite() && *l2 > 0.0) {
                    return Err(Error::invalid("transform needs n, d ≥ 1 and L2 > 0"));
                }
                psi.validate()
            }
        }
    }

    /// `f(h)` for `h > 0`.
    pub fn eval(&self, h: f64) -> Result<f64> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!(
                "argument must be positive, got {h}"
            )));
        }
        Ok(self.value(h))
    }

    /// Unchecked evaluation; `h` must be positive.
    pub fn value(&self, h: f64) -> f64 {
        match self {
            ApproxFn::Power { tau } => h.powf(-tau),
            ApproxFn::PowerLog { tau, sigma } => {
                h.powf(-tau) * (h + std::f64::consts::E).ln().powf(-sigma)
            }
            ApproxFn::Table { points } => {
                let i = points.partition_point(|&(x, _)| x <= h);
                points[i.saturating_sub(1)].1
            }
            ApproxFn::Clamped { c, inner } => (c / h).min(inner.value(h)),
            ApproxFn::BigPsi { psi, n, d, l2 } => {
                let e = 1.0 / (*n as f64 + 1.0);
                h.powf(-e) * psi.value(h.powf(*n as f64 * e)) / ((d * n) as f64 * l2)
            }
        }
    }
}

/// `Ψ` with `d n L2 · h Ψ(h^{n+1}) = ψ(h^n)`.
pub fn transform_to_big_psi(psi: &ApproxFn, n: usize, d: usize, l2: f64) -> ApproxFn {
    ApproxFn::BigPsi {
        psi: Box::new(psi.clone()),
        n,
        d,
        l2,
    }
}

impl FromStr for ApproxFn {
    type Err = Error;

    /// Parses `power:T`, `powerlog:T,S`, `const:V`, `clamped:C:<inner>`, or
    /// an inline JSON object.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let f: ApproxFn = serde_json::from_str(s)?;
            f.validate()?;
            return Ok(f);
        }
        let bad = || Error::invalid(format!("cannot parse approximation function '{s}'"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (family, rest) = s.split_once(':').ok_or_else(bad)?;
        let f = match family {
            "power" => ApproxFn::power(num(rest)?),
            "powerlog" => {
                let (t, g) = rest.split_once(',').ok_or_else(bad)?;
                ApproxFn::power_log(num(t)?, num(g)?)
            }
            "const" => ApproxFn::constant(num(rest)?),
            "clamped" => {
                let (c, inner) = rest.split_once(':').ok_or_else(bad)?;
                ApproxFn::clamped(num(c)?, inner.parse()?)
            }
            _ => return Err(bad()),
        };
        f.validate()?;
        Ok(f)
    }
}

impl fmt::Display for ApproxFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxFn::Power { tau } => write!(f, "power:{tau}"),
            ApproxFn::PowerLog { tau, sigma } => write!(f, "powerlog:{tau},{sigma}"),
            ApproxFn::Table { points } if points.len() == 1 => write!(f, "const:{}", points[0].1),
            ApproxFn::Clamped { c, inner } => write!(f, "clamped:{c}:{inner}"),
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
pub enum Verdict {
    Diverges,
    Converges,
    Undetermined,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Diverges => "diverges",
            Verdict::Converges => "converges",
            Verdict::Undetermined => "undetermined",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    pub verdict: Verdict,
    pub direct_verdict: Verdict,
    pub dyadic_verdict: Verdict,
    pub partial_sum_at_budget: f64,
    pub dyadic_partial_sum: f64,
    /// Geometric mean ratio of the last window of block sums.
    pub direct_ratio: f64,
    /// Geometric mean ratio of the last window of dyadic terms.
    pub dyadic_ratio: f64,
}

/// Terms inspected by the ratio test.
pub const WINDOW: usize = 8;
/// Ratio below which a window counts as geometric decay.
pub const CONVERGENCE_RATIO: f64 = 0.95;
/// Divergence needs the window terms to stay at or above this level...
pub const DIVERGENCE_FLOOR: f64 = 1e-3;
/// ...or the partial sum to pass this one.
pub const DIVERGENCE_SUM: f64 = 1e3;
/// Either way the window ratio must reach this (no visible decay).
pub const NON_DECAYING_RATIO: f64 = 0.99;
/// Smallest accepted budget.
pub const MIN_BUDGET: u64 = 1 << 10;

fn judge(terms: &[f64], partial: f64) -> (Verdict, f64) {
    let w = &terms[terms.len() - WINDOW..];
    let ratio = if w[0] > 0.0 {
        (w[WINDOW - 1] / w[0]).powf(1.0 / (WINDOW - 1) as f64)
    } else {
        f64::NAN
    };
    let verdict = if ratio < CONVERGENCE_RATIO {
        Verdict::Converges
    } else if ratio >= NON_DECAYING_RATIO
        && (w.iter().all(|&t| t >= DIVERGENCE_FLOOR) || partial > DIVERGENCE_SUM)
    {
        Verdict::Diverges
    } else {
        Verdict::Undetermined
    };
    (verdict, ratio)
}

/// Classifies `Σ h^{d-s-1} f(h)^{d-s}` by comparing the direct partial sums
/// (grouped into blocks `[2^k, 2^{k+1})`) with the condensed series
/// `Σ 2^{k(d-s)} f(2^k)^{d-s}`.
pub fn classify_series(f: &ApproxFn, d: usize, s: f64, budget: u64) -> Result<SeriesVerdict> {
    if d == 0 || !(s >= 0.0 && s < d as f64) {
        return Err(Error::invalid(format!("need 0 ≤ s < d, got s={s}, d={d}")));
    }
    if budget < MIN_BUDGET {
        return Err(Error::invalid(format!(
            "budget must be at least {MIN_BUDGET}"
        )));
    }
    f.validate()?;
    let e = d as f64 - s;
    let term = |h: f64| h.powf(e - 1.0) * f.value(h).powf(e);
    let k_max = 63 - budget.leading_zeros() as usize;

    let mut blocks = vec![0.0; k_max];
    let mut partial = 0.0;
    for h in 1..=budget {
        let t = term(h as f64);
        partial += t;
        let k = 63 - h.leading_zeros() as usize;
        if k < k_max {
            blocks[k] += t;
        }
    }
    let dyadic: Vec<f64> = (0..=k_max)
        .map(|k| {
            let h = (k as f64).exp2();
            h.powf(e) * f.value(h).powf(e)
        })
        .collect();
    let dyadic_sum = dyadic.iter().sum();

    let (direct_verdict, direct_ratio) = judge(&blocks, partial);
    let (dyadic_verdict, dyadic_ratio) = judge(&dyadic, dyadic_sum);
    let verdict = if direct_verdict == dyadic_verdict {
        direct_verdict
    } else {
        Verdict::Undetermined
    };
    Ok(SeriesVerdict {
        verdict,
        direct_verdict,
        dyadic_verdict,
        partial_sum_at_budget: partial,
        dyadic_partial_sum: dyadic_sum,
        direct_ratio,
        dyadic_ratio,
    })
}

/// The families used by the diagnostics and tests:
/// `τ ∈ {0.5, 1, 1.1, 1.5, 2}`, `σ ∈ {0, 1, 2}`.
pub fn builtin_grid() -> Vec<ApproxFn> {
    let mut out = Vec::new();
    for tau in [0.5, 1.0, 1.1, 1.5, 2.0] {
        for sigma in [0.0, 1.0, 2.0] {
            out.push(if sigma == 0.0 {
                ApproxFn::power(tau)
            } else {
                ApproxFn::power_log(tau, sigma)
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const BUDGET: u64 = 1 << 20;

    #[test]
    fn eval_examples() {
        assert_eq!(ApproxFn::power(1.0).eval(4.0).unwrap(), 0.25);
        assert_eq!(
            ApproxFn::clamped(1.0, ApproxFn::power(0.5))
                .eval(4.0)
                .unwrap(),
            0.25
        );
        assert_relative_eq!(
            ApproxFn::power(1.5).eval(100.0).unwrap(),
            0.001,
            max_relative = 1e-14
        );
        assert!(ApproxFn::power(1.0).eval(0.0).is_err());
        assert!(ApproxFn::power(1.0).eval(-1.0).is_err());
    }

    #[test]
    fn table_is_a_right_extended_step_function() {
        let t = ApproxFn::Table {
            points: vec![(1.0, 0.5), (4.0, 0.25), (10.0, 0.1)],
        };
        assert_eq!(t.value(0.5), 0.5);
        assert_eq!(t.value(3.9), 0.5);
        assert_eq!(t.value(4.0), 0.25);
        assert_eq!(t.value(1e9), 0.1);
        let bad = ApproxFn::Table {
            points: vec![(1.0, 0.1), (2.0, 0.2)],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn transform_examples() {
        // Ψ(k) = k^{-1/3} (k^{2/3})^{-1} / 4 = 1/(4k)
        let big = transform_to_big_psi(&ApproxFn::power(1.0), 2, 1, 2.0);
        assert_relative_eq!(big.value(8.0), 1.0 / 32.0, max_relative = 1e-14);
        let big = transform_to_big_psi(&ApproxFn::power(1.0), 1, 1, 1.0);
        assert_relative_eq!(big.value(9.0), 1.0 / 9.0, max_relative = 1e-14);
        // Ψ(k) = k^{-1/3} k^{-4/3} / 2 = k^{-5/3} / 2, and 8^{-5/3} = 1/32
        let big = transform_to_big_psi(&ApproxFn::power(2.0), 2, 1, 1.0);
        for k in [2.0, 8.0, 27.0, 1000.0] {
            assert_relative_eq!(big.value(k), k.powf(-5.0 / 3.0) / 2.0, max_relative = 1e-13);
        }
        assert_relative_eq!(big.value(8.0), 1.0 / 64.0, max_relative = 1e-14);
    }

    #[test]
    fn transform_satisfies_defining_identity() {
        for (psi, n, d, l2) in [
            (ApproxFn::power(1.0), 2usize, 1usize, 2.2),
            (ApproxFn::power_log(1.0, 2.0), 3, 1, 3.3),
            (ApproxFn::power(0.5), 3, 2, 1.5),
        ] {
            let big = transform_to_big_psi(&psi, n, d, l2);
            for h in [1.0f64, 3.0, 17.0, 250.0] {
                let lhs = (d * n) as f64 * l2 * h * big.value(h.powi(n as i32 + 1));
                assert_relative_eq!(lhs, psi.value(h.powi(n as i32)), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn series_examples() {
        let v = classify_series(&ApproxFn::power(1.0), 1, 0.0, BUDGET).unwrap();
        assert_eq!(v.verdict, Verdict::Diverges);
        let v = classify_series(&ApproxFn::power(1.5), 1, 0.0, BUDGET).unwrap();
        assert_eq!(v.verdict, Verdict::Converges);
        let v = classify_series(&ApproxFn::power_log(1.0, 2.0), 1, 0.0, BUDGET).unwrap();
        assert_eq!(v.verdict, Verdict::Converges);
    }

    #[test]
    fn powerlog_dyadic_terms_follow_inverse_square_log() {
        // 2^k f(2^k) = (ln(2^k + e))^{-2} ≈ (k ln 2)^{-2}; the condensed
        // partial sum stays below Σ_{k≥1} (k ln 2)^{-2} + 1 = π²/(6 ln²2) + 1.
        let f = ApproxFn::power_log(1.0, 2.0);
        for k in 10..=20 {
            let h = (k as f64).exp2();
            let t = h * f.value(h);
            let approx = (k as f64 * std::f64::consts::LN_2).powi(-2);
            assert!((t / approx - 1.0).abs() < 0.01, "k={k}");
        }
        let v = classify_series(&f, 1, 0.0, BUDGET).unwrap();
        let bound = std::f64::consts::PI.powi(2) / (6.0 * std::f64::consts::LN_2.powi(2)) + 1.0;
        assert!(v.dyadic_partial_sum < bound);
    }

    #[test]
    fn series_guards() {
        assert!(classify_series(&ApproxFn::power(1.0), 1, 0.0, 1000).is_err());
        assert!(classify_series(&ApproxFn::power(1.0), 1, 1.0, BUDGET).is_err());
        assert!(classify_series(&ApproxFn::power(1.0), 2, -0.5, BUDGET).is_err());
    }

    #[test]
    fn direct_and_dyadic_never_contradict_on_grid() {
        for f in builtin_grid() {
            let v = classify_series(&f, 1, 0.0, BUDGET).unwrap();
            let both_decided = v.direct_verdict != Verdict::Undetermined
                && v.dyadic_verdict != Verdict::Undetermined;
            assert!(
                !both_decided || v.direct_verdict == v.dyadic_verdict,
                "{f}: {v:?}"
            );
        }
    }

    #[test]
    fn clamp_preserves_divergence() {
        for f in builtin_grid() {
            if classify_series(&f, 1, 0.0, BUDGET).unwrap().verdict == Verdict::Diverges {
                let g = ApproxFn::clamped(0.5, f.clone());
                assert_eq!(
                    classify_series(&g, 1, 0.0, BUDGET).unwrap().verdict,
                    Verdict::Diverges,
                    "{f}"
                );
            }
        }
    }

    #[test]
    fn transform_preserves_divergence() {
        for f in builtin_grid() {
            if classify_series(&f, 1, 0.0, BUDGET).unwrap().verdict != Verdict::Diverges {
                continue;
            }
            for (n, d, l2) in [(2usize, 1usize, 2.2), (3, 1, 3.3), (3, 2, 2.0)] {
                let big = transform_to_big_psi(&f, n, d, l2);
                let v = classify_series(&big, d, d as f64 - 1.0, BUDGET).unwrap();
                assert_eq!(v.verdict, Verdict::Diverges, "{f} n={n} d={d}");
            }
        }
    }

    #[test]
    fn string_and_json_forms() {
        let f: ApproxFn = "clamped:0.5:powerlog:1,2".parse().unwrap();
        assert_eq!(f, ApproxFn::clamped(0.5, ApproxFn::power_log(1.0, 2.0)));
        assert_eq!(f.to_string().parse::<ApproxFn>().unwrap(), f);
        let g: ApproxFn = r#"{"family":"clamped","c":0.5,"inner":{"family":"power","tau":1.0}}"#
            .parse()
            .unwrap();
        assert_eq!(g, ApproxFn::clamped(0.5, ApproxFn::power(1.0)));
        assert!("power:-1".parse::<ApproxFn>().is_err());
        assert!("sine:1".parse::<ApproxFn>().is_err());
    }

    fn any_fn() -> impl Strategy<Value = ApproxFn> {
        let leaf = prop_oneof![
            (0.0..3.0f64).prop_map(ApproxFn::power),
            (0.0..3.0f64, 0.0..3.0f64).prop_map(|(t, s)| ApproxFn::power_log(t, s)),
            prop::collection::vec((0.1..5.0f64, 0.0..1.0f64), 1..6).prop_map(|steps| {
                let (mut h, mut v) = (0.0, 2.0);
                let points = steps
                    .into_iter()
                    .map(|(dh, dv)| {
                        h += dh;
                        v *= 1.0 - 0.9 * dv;
                        (h, v)
                    })
                    .collect();
                ApproxFn::Table { points }
            }),
        ];
        leaf.prop_recursive(2, 4, 1, |inner| {
            prop_oneof![
                (0.01..2.0f64, inner.clone()).prop_map(|(c, f)| ApproxFn::clamped(c, f)),
                (inner, 1usize..4, 1usize..3, 0.5..4.0f64)
                    .prop_map(|(f, n, d, l2)| transform_to_big_psi(&f, n, d, l2)),
            ]
        })
    }

    proptest! {
        #[test]
        fn non_increasing_and_positive(f in any_fn(), a in 0.01..1e4f64, b in 0.01..1e4f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (vl, vh) = (f.value(lo), f.value(hi));
            prop_assert!(vh > 0.0);
            prop_assert!(vl >= vh * (1.0 - 1e-12), "{} {} {} {}", lo, hi, vl, vh);
        }

        #[test]
        fn clamp_is_below_both(f in any_fn(), c in 0.01..2.0f64, h in 0.01..1e4f64) {
            let g = ApproxFn::clamped(c, f.clone());
            prop_assert!(g.value(h) <= c / h);
            prop_assert!(g.value(h) <= f.value(h));
        }
    }
}
