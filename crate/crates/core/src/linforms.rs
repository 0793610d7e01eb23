//! Integer linear forms: the residue `⟨t⟩`, exhaustive box enumeration and
//! the Minkowski linear-forms solver.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `⟨t⟩ ∈ (-1/2, 1/2]` with `t - ⟨t⟩ ∈ Z`.
pub fn residue(t: f64) -> f64 {
    t - nearest_integer(t)
}

/// The integer `t - ⟨t⟩` (ties resolved toward the residue convention).
pub fn nearest_integer(t: f64) -> f64 {
    (t - 0.5).ceil()
}

pub(crate) fn dot(a: &[i64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(&ai, &xi)| ai as f64 * xi).sum()
}

pub fn sup_norm(a: &[i64]) -> i64 {
    a.iter().map(|v| v.abs()).max().unwrap_or(0)
}

/// An integer form `(a, a0)` with `a ≠ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegerForm {
    pub a: Vec<i64>,
    pub a0: i64,
}

impl IntegerForm {
    pub fn new(a: Vec<i64>, a0: i64) -> Result<Self> {
        if a.is_empty() || a.iter().all(|&v| v == 0) {
            return Err(Error::invalid("integer form needs a nonzero vector a"));
        }
        Ok(IntegerForm { a, a0 })
    }

    /// `‖a‖∞`
    pub fn norm(&self) -> i64 {
        sup_norm(&self.a)
    }

    /// `a·y + a0`
    pub fn apply(&self, y: &[f64]) -> f64 {
        dot(&self.a, y) + self.a0 as f64
    }
}

impl fmt::Display for IntegerForm {
    /// `a1,a2,...:a0`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a: Vec<String> = self.a.iter().map(|v| v.to_string()).collect();
        write!(f, "{}:{}", a.join(","), self.a0)
    }
}

/// Box of the Minkowski system: `|a·y + a0| ≤ delta`, `|a1| ≤ a1_bound`,
/// `|ai| ≤ ai_bound` for `i ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiBox {
    pub n: usize,
    pub delta: f64,
    pub a1_bound: f64,
    pub ai_bound: f64,
}

impl MinkowskiBox {
    pub fn new(q: u64, c0: f64, n: usize, l2: f64) -> Result<Self> {
        if q == 0 {
            return Err(Error::invalid("Q must be at least 1"));
        }
        if n == 0 || !(c0 > 0.0 && c0.is_finite()) || !(l2 > 0.0 && l2.is_finite()) {
            return Err(Error::invalid("need n ≥ 1 and positive finite C0, L2"));
        }
        let q = q as f64;
        let nl2 = n as f64 * l2;
        Ok(MinkowskiBox {
            n,
            delta: 1.0 / (4.0 * c0 * q.powi(n as i32)),
            a1_bound: 4.0 * c0 * nl2.powi(n as i32 - 1) * q,
            ai_bound: q / nl2,
        })
    }

    /// Volume of the box in `(a0, a)` space.
    pub fn volume(&self) -> f64 {
        (2.0f64).powi(self.n as i32 + 1)
            * self.delta
            * self.a1_bound
            * self.ai_bound.powi(self.n as i32 - 1)
    }

    /// Slack allowed on `|F| ≤ delta` for rounding in `a·y`.
    fn tolerance(&self, t: f64) -> f64 {
        4.0 * f64::EPSILON * (t.abs() + 1.0)
    }

    pub fn contains(&self, form: &IntegerForm, y: &[f64]) -> bool {
        let t = dot(&form.a, y);
        (t + form.a0 as f64).abs() <= self.delta + self.tolerance(t)
            && form.a[0].abs() as f64 <= self.a1_bound
            && form.a[1..].iter().all(|&v| v.abs() as f64 <= self.ai_bound)
    }
}

/// `0, 1, -1, 2, -2, ..., b, -b`
pub fn centre_out(bound: i64) -> impl Iterator<Item = i64> + Clone {
    std::iter::once(0).chain((1..=bound).flat_map(|k| [k, -k]))
}

/// Every nonzero `a` with `‖a‖∞ ≤ q` and `|⟨y·a⟩| < threshold`, in
/// lexicographic order.
pub fn enumerate_solutions(y: &[f64], q: u64, threshold: f64) -> Result<Vec<Vec<i64>>> {
    if !(threshold > 0.0) {
        return Err(Error::invalid("threshold must be positive"));
    }
    if q == 0 {
        return Err(Error::invalid("Q must be at least 1"));
    }
    let n = y.len();
    let q = q as i64;
    let mut out = Vec::new();
    let mut a = vec![-q; n];
    loop {
        if a.iter().any(|&v| v != 0) && residue(dot(&a, y)).abs() < threshold {
            out.push(a.clone());
        }
        // odometer, last coordinate fastest
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(out);
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

/// Whether some nonzero `a` with `‖a‖∞ ≤ q` has `|⟨y·a⟩| < threshold`.
///
/// Only one of each pair `±a` is tested (the one whose first nonzero
/// coordinate is positive); the two agree except when `y·a` is exactly a
/// half-integer. Returns the first witness in lexicographic order of that
/// half box.
pub fn first_witness(y: &[f64], q: u64, threshold: f64) -> Option<Vec<i64>> {
    let n = y.len();
    let q = q as i64;
    let mut a = vec![0i64; n];
    // a = (0, …, 0, lead, tail…) with lead > 0 at position p
    for p in 0..n {
        for lead in 1..=q {
            a.iter_mut().for_each(|v| *v = 0);
            a[p] = lead;
            a[p + 1..].iter_mut().for_each(|v| *v = -q);
            loop {
                if residue(dot(&a, y)).abs() < threshold {
                    return Some(a);
                }
                let mut i = n;
                let mut exhausted = true;
                while i > p + 1 {
                    i -= 1;
                    if a[i] < q {
                        a[i] += 1;
                        exhausted = false;
                        break;
                    }
                    a[i] = -q;
                }
                if exhausted {
                    break;
                }
            }
        }
    }
    None
}

/// A nonzero `(a, a0)` satisfying the Minkowski system at `y`.
///
/// `a0 = -(t - ⟨t⟩)` for `t = y·a`, which minimises `|y·a + a0|` for fixed
/// `a`. The search runs `a_n, …, a_2` in the outer loops and `a_1` innermost,
/// each coordinate in the centre-out order `0, 1, -1, 2, -2, …`; the first
/// qualifying vector is returned.
pub fn minkowski_solve(
    y: &[f64],
    q: u64,
    c0: f64,
    n: usize,
    l2: f64,
) -> Result<(IntegerForm, MinkowskiBox)> {
    if y.len() != n {
        return Err(Error::invalid(format!(
            "point has {} coordinates, expected {n}",
            y.len()
        )));
    }
    let bx = MinkowskiBox::new(q, c0, n, l2)?;
    let b1 = (bx.a1_bound * (1.0 + 1e-12)).floor() as i64;
    let bi = (bx.ai_bound * (1.0 + 1e-12)).floor() as i64;
    let outer: Vec<i64> = centre_out(bi).collect();
    let mut idx = vec![0usize; n.saturating_sub(1)];
    let mut a = vec![0i64; n];
    loop {
        for (slot, &k) in a[1..].iter_mut().zip(&idx) {
            *slot = outer[k];
        }
        let rest = dot(&a[1..], &y[1..]);
        let tail_zero = a[1..].iter().all(|&v| v == 0);
        for a1 in centre_out(b1) {
            if a1 == 0 && tail_zero {
                continue;
            }
            let t = a1 as f64 * y[0] + rest;
            let r = residue(t);
            if r.abs() <= bx.delta + bx.tolerance(t) {
                a[0] = a1;
                let form = IntegerForm {
                    a0: -nearest_integer(t) as i64,
                    a: a.clone(),
                };
                return Ok((form, bx));
            }
        }
        // advance a_2 fastest among the outer coordinates
        let mut i = 0;
        loop {
            if i == idx.len() {
                return Err(Error::numeric(format!(
                    "no lattice point in the Minkowski box at Q={q}; volume {}",
                    bx.volume()
                )));
            }
            idx[i] += 1;
            if idx[i] < outer.len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}
