//! Univariate real polynomials and real-root isolation.
//!
//! Roots are isolated by the derivative cascade: the real roots of `p'`
//! split `[lo, hi]` into pieces on which `p` is monotone, and every
//! monotone piece holds at most one root, located by bisection on the
//! sign change and polished with Newton steps that stay inside the bracket.
//! A critical point where `p` itself vanishes is a multiple root; such
//! roots are reported and flagged as degenerate.

/// Dense polynomial with coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<f64>,
}

/// Result of isolating the real roots of a polynomial on an interval.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RootIsolation {
    /// Roots in ascending order.
    pub roots: Vec<f64>,
    /// Set when a multiple root (or an identically zero polynomial) was met.
    pub degenerate: bool,
}

const MAX_BISECTIONS: usize = 200;

impl UniPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        UniPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::new(vec![0.0]);
        }
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Adds a constant to the polynomial.
    pub fn shifted(&self, c: f64) -> UniPoly {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] += c;
        UniPoly::new(coeffs)
    }

    /// Scale used to decide when a computed value is zero up to rounding.
    fn magnitude_at(&self, x: f64) -> f64 {
        let ax = x.abs().max(1.0);
        let mut m = 0.0;
        let mut p = 1.0;
        for &c in &self.coeffs {
            m += c.abs() * p;
            p *= ax;
        }
        m.max(f64::MIN_POSITIVE)
    }

    /// Breakpoints `lo = b0 < b1 < ... < bk = hi` such that the polynomial is
    /// monotone on every `[b_i, b_{i+1}]`.
    pub fn monotone_pieces(&self, lo: f64, hi: f64) -> (Vec<f64>, bool) {
        let crit = self.derivative().real_roots(lo, hi);
        let mut pts = Vec::with_capacity(crit.roots.len() + 2);
        pts.push(lo);
        for r in crit.roots {
            if r > lo && r < hi {
                pts.push(r);
            }
        }
        pts.push(hi);
        pts.dedup();
        (pts, crit.degenerate)
    }

    /// All real roots in the closed interval `[lo, hi]`.
    pub fn real_roots(&self, lo: f64, hi: f64) -> RootIsolation {
        let mut out = RootIsolation::default();
        if !(lo <= hi) {
            return out;
        }
        if self.is_zero() {
            out.degenerate = true;
            return out;
        }
        match self.degree() {
            0 => return out,
            1 => {
                let r = -self.coeffs[0] / self.coeffs[1];
                if r >= lo && r <= hi {
                    out.roots.push(r);
                }
                return out;
            }
            _ => {}
        }

        let (pts, deg_inner) = self.monotone_pieces(lo, hi);
        out.degenerate |= deg_inner;
        let vals: Vec<f64> = pts.iter().map(|&x| self.eval(x)).collect();

        for i in 0..pts.len() {
            let (x, v) = (pts[i], vals[i]);
            let interior_critical = i > 0 && i + 1 < pts.len();
            let tol = 1e-12 * self.magnitude_at(x);
            if v == 0.0 || (interior_critical && v.abs() <= tol) {
                if interior_critical {
                    out.degenerate = true;
                }
                push_root(&mut out.roots, x);
            }
            if i + 1 < pts.len() {
                let (u, w) = (pts[i + 1], vals[i + 1]);
                if v != 0.0 && w != 0.0 && (v < 0.0) != (w < 0.0) {
                    let r = self.bisect(x, u, v);
                    push_root(&mut out.roots, r);
                }
            }
        }
        out
    }

    /// Root of a sign change on `[a, b]`, where `fa = p(a)` and `p(b)` has the
    /// opposite sign.
    fn bisect(&self, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
        for _ in 0..MAX_BISECTIONS {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = self.eval(m);
            if fm == 0.0 {
                return m;
            }
            if (fm < 0.0) == (fa < 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        self.polish(0.5 * (a + b), a, b)
    }

    /// A few Newton steps, rejected if they leave the bracket or do not improve.
    fn polish(&self, mut x: f64, a: f64, b: f64) -> f64 {
        let dp = self.derivative();
        for _ in 0..3 {
            let fx = self.eval(x);
            let d = dp.eval(x);
            if fx == 0.0 || d == 0.0 {
                break;
            }
            let nx = x - fx / d;
            if !(nx >= a && nx <= b) || self.eval(nx).abs() >= fx.abs() {
                break;
            }
            x = nx;
        }
        x
    }

    /// Solves `p(x) = target` on a piece `[a, b]` where `p` is monotone and
    /// `target` lies between `p(a)` and `p(b)`.
    pub fn solve_monotone(&self, a: f64, b: f64, target: f64) -> f64 {
        let shifted = self.shifted(-target);
        let fa = shifted.eval(a);
        let fb = shifted.eval(b);
        if fa == 0.0 {
            return a;
        }
        if fb == 0.0 {
            return b;
        }
        if (fa < 0.0) == (fb < 0.0) {
            // target sits on the boundary up to rounding
            return if fa.abs() <= fb.abs() { a } else { b };
        }
        shifted.bisect(a, b, fa)
    }

    /// Sublevel set `{x in [lo, hi] : |p(x) - level| < eta}` as disjoint
    /// intervals, in ascending order.
    pub fn band_preimage(&self, lo: f64, hi: f64, level: f64, eta: f64) -> Vec<(f64, f64)> {
        let (pts, _) = self.monotone_pieces(lo, hi);
        let mut out = Vec::new();
        for w in pts.windows(2) {
            self.band_on_piece(w[0], w[1], level, eta, &mut out);
        }
        out
    }

    pub(crate) fn band_on_piece(
        &self,
        a: f64,
        b: f64,
        level: f64,
        eta: f64,
        out: &mut Vec<(f64, f64)>,
    ) {
        let (ya, yb) = (self.eval(a), self.eval(b));
        let increasing = yb >= ya;
        let (ymin, ymax) = if increasing { (ya, yb) } else { (yb, ya) };
        let (lo_t, hi_t) = (level - eta, level + eta);
        if hi_t <= ymin || lo_t >= ymax {
            return;
        }
        let x_at = |t: f64| -> f64 {
            if t <= ymin {
                if increasing {
                    a
                } else {
                    b
                }
            } else if t >= ymax {
                if increasing {
                    b
                } else {
                    a
                }
            } else {
                self.solve_monotone(a, b, t)
            }
        };
        let (x1, x2) = (x_at(lo_t), x_at(hi_t));
        let (l, r) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
        if r > l {
            out.push((l, r));
        }
    }
}

fn push_root(roots: &mut Vec<f64>, r: f64) {
    if let Some(&last) = roots.last() {
        if (r - last).abs() <= 1e-15 * r.abs().max(1.0) {
            return;
        }
    }
    roots.push(r);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_roots() {
        // x^2 + x - 2 = (x - 1)(x + 2)
        let p = UniPoly::new(vec![-2.0, 1.0, 1.0]);
        let r = p.real_roots(-3.0, 3.0);
        assert_eq!(r.roots.len(), 2);
        assert_abs_diff_eq!(r.roots[0], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.roots[1], 1.0, epsilon = 1e-14);
        assert!(!r.degenerate);
    }

    #[test]
    fn cubic_with_three_roots() {
        // (x - 0.1)(x - 0.5)(x - 0.9)
        let p = UniPoly::new(vec![-0.045, 0.59, -1.5, 1.0]);
        let r = p.real_roots(0.0, 1.0);
        assert_eq!(r.roots.len(), 3);
        for (got, want) in r.roots.iter().zip([0.1, 0.5, 0.9]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-13);
        }
    }

    #[test]
    fn double_root_is_flagged() {
        // (x - 0.5)^2
        let p = UniPoly::new(vec![0.25, -1.0, 1.0]);
        let r = p.real_roots(0.0, 1.0);
        assert!(r.degenerate);
        assert_eq!(r.roots.len(), 1);
        assert_abs_diff_eq!(r.roots[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_polynomial_is_degenerate() {
        let r = UniPoly::new(vec![0.0, 0.0]).real_roots(0.0, 1.0);
        assert!(r.degenerate);
        assert!(r.roots.is_empty());
    }

    #[test]
    fn endpoint_roots_are_reported_once() {
        let p = UniPoly::new(vec![0.0, 2.0, -1.0]); // 2x - x^2
        let r = p.real_roots(0.0, 2.0);
        assert_eq!(r.roots, vec![0.0, 2.0]);
    }

    #[test]
    fn band_preimage_of_parabola() {
        // |x^2 - 0.25| < 0.01 on [0, 1]  <=>  x in (sqrt(0.24), sqrt(0.26))
        let p = UniPoly::new(vec![0.0, 0.0, 1.0]);
        let b = p.band_preimage(0.0, 1.0, 0.25, 0.01);
        assert_eq!(b.len(), 1);
        assert_abs_diff_eq!(b[0].0, 0.24f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(b[0].1, 0.26f64.sqrt(), epsilon = 1e-14);
        // straddling the turning point of (x - 0.5)^2 gives one merged piece pair
        let q = UniPoly::new(vec![0.25, -1.0, 1.0]);
        let pieces = q.band_preimage(0.0, 1.0, 0.0, 0.01);
        let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
        assert_abs_diff_eq!(total, 0.2, epsilon = 1e-12);
    }
}
