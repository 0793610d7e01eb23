//! Exact oracles shared by the integration tests.
#![allow(dead_code)]

/// The quadratic irrational `(p + √d) / q` with `q > 0` and `q | d - p²`.
#[derive(Debug, Clone, Copy)]
pub struct Quadratic {
    pub p: i128,
    pub d: i128,
    pub q: i128,
}

pub fn isqrt(n: i128) -> i128 {
    assert!(n >= 0);
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Sign of `u + v√d`.
pub fn sign_surd(u: i128, v: i128, d: i128) -> i32 {
    let su = u.signum() as i32;
    let sv = v.signum() as i32;
    if su >= 0 && sv >= 0 {
        return (su + sv).signum();
    }
    if su <= 0 && sv <= 0 {
        return -1;
    }
    // opposite signs: compare u² with v² d
    let c = (u * u).cmp(&(v * v * d));
    match (su, c) {
        (_, std::cmp::Ordering::Equal) => 0,
        (1, std::cmp::Ordering::Greater) | (-1, std::cmp::Ordering::Less) => 1,
        _ => -1,
    }
}

impl Quadratic {
    pub fn new(p: i128, d: i128, q: i128) -> Self {
        assert!(q > 0 && (d - p * p) % q == 0);
        let r = isqrt(d);
        assert!(r * r != d, "d must not be a square");
        Quadratic { p, d, q }
    }

    /// `√d - ⌊√d⌋`
    pub fn frac_sqrt(d: i128) -> Self {
        Quadratic::new(-isqrt(d), d, 1)
    }

    pub fn value(&self) -> f64 {
        (self.p as f64 + (self.d as f64).sqrt()) / self.q as f64
    }

    /// `⌊k x⌋` for `k ≥ 0`.
    pub fn floor_mul(&self, k: i128) -> i128 {
        (k * self.p + isqrt(k * k * self.d)).div_euclid(self.q)
    }

    /// Whether `‖k x‖ < 1/k`, decided exactly.
    pub fn close(&self, k: i128) -> bool {
        let f = self.floor_mul(k);
        [f, f + 1].iter().any(|&m| {
            // |k x - m| < 1/k  <=>  -q < k²p - k m q + k²√d < q
            let u = k * k * self.p - k * m * self.q;
            let v = k * k;
            sign_surd(u + self.q, v, self.d) > 0 && sign_surd(self.q - u, -v, self.d) > 0
        })
    }

    /// Partial quotients until the convergent denominators pass `limit`.
    pub fn partial_quotients(&self, limit: i128) -> Vec<i128> {
        let (mut p, mut q) = (self.p, self.q);
        let (mut k0, mut k1) = (0i128, 1i128);
        let mut out = Vec::new();
        while k0 <= limit {
            let a = (p + isqrt(self.d)).div_euclid(q);
            out.push(a);
            p = a * q - p;
            q = (self.d - p * p) / q;
            let k2 = a * k1 + k0;
            k0 = k1;
            k1 = k2;
        }
        out
    }

    /// Denominators of convergents and intermediate fractions up to `limit`.
    pub fn candidate_denominators(&self, limit: i128) -> Vec<i128> {
        let a = self.partial_quotients(limit);
        let (mut q_prev, mut q_cur) = (0i128, 1i128);
        let mut out = vec![1];
        for &ak in &a[1..] {
            for j in 1..=ak {
                let q = q_prev + j * q_cur;
                if q <= limit {
                    out.push(q);
                }
            }
            let next = q_prev + ak * q_cur;
            q_prev = q_cur;
            q_cur = next;
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `#{1 ≤ k ≤ limit : ‖k x‖ < 1/k}` from the continued fraction:
    /// a reduced `m/k` with `|x - m/k| < 1/k²` is a convergent or an
    /// intermediate fraction, and non-reduced solutions are multiples of one.
    pub fn count_cf(&self, limit: i128) -> u64 {
        // along m/k -> (jm)/(jk) the error grows and the bound shrinks, so
        // the first failing multiple ends the run
        let mut ks: Vec<i128> = Vec::new();
        for q in self.candidate_denominators(limit) {
            let mut j = 1;
            while j * q <= limit && self.close(j * q) {
                ks.push(j * q);
                j += 1;
            }
        }
        ks.sort_unstable();
        ks.dedup();
        ks.len() as u64
    }

    pub fn count_brute(&self, limit: i128) -> u64 {
        (1..=limit).filter(|&k| self.close(k)).count() as u64
    }
}

/// Twenty quadratic irrationals in `(0, 2)`.
pub fn quadratic_irrationals() -> Vec<Quadratic> {
    let mut out = vec![
        Quadratic::new(1, 5, 2),
        Quadratic::new(-1, 5, 2),
        Quadratic::new(1, 3, 2),
    ];
    let mut d = 2;
    while out.len() < 20 {
        if isqrt(d) * isqrt(d) != d {
            out.push(Quadratic::frac_sqrt(d));
        }
        d += 1;
    }
    out
}
