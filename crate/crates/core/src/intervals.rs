//! Finite unions of real intervals and their exact lengths.

use serde::{Deserialize, Serialize};

/// Sorted, pairwise-disjoint intervals. Endpoint openness is not tracked;
/// every quantity computed here is a Lebesgue measure.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    parts: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion { parts: Vec::new() }
    }

    /// Builds the union of arbitrary intervals by sorting and sweeping.
    /// Empty or reversed intervals are dropped.
    pub fn from_intervals(mut raw: Vec<(f64, f64)>) -> Self {
        raw.retain(|&(a, b)| b > a);
        raw.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut parts: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match parts.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => parts.push((a, b)),
            }
        }
        IntervalUnion { parts }
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    /// Total length.
    pub fn measure(&self) -> f64 {
        self.parts.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.parts.partition_point(|&(_, b)| b <= x);
        i < self.parts.len() && self.parts[i].0 < x
    }

    /// Restriction to `[lo, hi]`.
    pub fn clipped(&self, lo: f64, hi: f64) -> IntervalUnion {
        IntervalUnion {
            parts: self
                .parts
                .iter()
                .map(|&(a, b)| (a.max(lo), b.min(hi)))
                .filter(|(a, b)| b > a)
                .collect(),
        }
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut raw = self.parts.clone();
        raw.extend_from_slice(&other.parts);
        IntervalUnion::from_intervals(raw)
    }

    /// Length of the intersection, by a two-pointer sweep.
    pub fn intersection_measure(&self, other: &IntervalUnion) -> f64 {
        let (a, b) = (&self.parts, &other.parts);
        let (mut i, mut j) = (0, 0);
        let mut total = 0.0;
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if hi > lo {
                total += hi - lo;
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    /// True when no two of the given intervals overlap in positive length.
    pub fn pairwise_disjoint(raw: &[(f64, f64)]) -> bool {
        let mut v: Vec<(f64, f64)> = raw.iter().copied().filter(|(a, b)| b > a).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        v.windows(2).all(|w| w[1].0 >= w[0].1)
    }
}
