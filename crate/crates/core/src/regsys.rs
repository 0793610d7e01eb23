//! Regular systems of resonant sets: greedy construction, independent
//! certificate checks, and the dyadic-block overlap experiment.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approxfn::ApproxFn;
use crate::error::{Error, Result};
use crate::intervals::IntervalUnion;
use crate::linforms::IntegerForm;
use crate::manifold::{euclid, Ball, ManifoldMap};
use crate::measure::{half_box, DomainConstants, Method};
use crate::resonant::{
    anchor_for_point, tube_measure, tube_union_1d, zero_tol, AnchorOutcome, ResonantSet,
};
use crate::sampling::draw_points;

/// Where candidate points come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "sampler", rename_all = "lowercase")]
pub enum Sampler {
    /// About `m` grid points over `(3/4) B`, in lexicographic order.
    Grid { m: usize },
    /// Uniform points of `(3/4) B` in stream order.
    #[serde(rename = "montecarlo")]
    MonteCarlo { samples: usize, seed: u64 },
}

impl Sampler {
    fn points(&self, region: &Ball) -> Vec<Vec<f64>> {
        let inner = region.scaled(0.75);
        match *self {
            Sampler::MonteCarlo { samples, seed } => draw_points(&inner, samples, seed),
            Sampler::Grid { m } => {
                let d = inner.dim();
                let per = (m as f64).powf(1.0 / d as f64).ceil().max(1.0) as usize;
                let step = inner.diameter() / per as f64;
                let lo: Vec<f64> = inner.center().iter().map(|c| c - inner.radius()).collect();
                let mut out = Vec::new();
                let mut idx = vec![0usize; d];
                loop {
                    let x: Vec<f64> = idx
                        .iter()
                        .zip(&lo)
                        .map(|(&i, l)| l + (i as f64 + 0.5) * step)
                        .collect();
                    if d == 1 || inner.contains(&x) {
                        out.push(x);
                    }
                    let mut i = d;
                    loop {
                        if i == 0 {
                            return out;
                        }
                        i -= 1;
                        idx[i] += 1;
                        if idx[i] < per {
                            break;
                        }
                        idx[i] = 0;
                    }
                }
            }
        }
    }
}

/// One member `(R_i, z_i, B_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    #[serde(flatten)]
    pub form: IntegerForm,
    pub weight: f64,
    pub z: Vec<f64>,
    /// Radius of `B_i = B(z_i, radius)`, equal to `T^{-1}/2`.
    pub radius: f64,
}

impl Member {
    pub fn ball(&self) -> Ball {
        Ball::new(self.z.clone(), self.radius).expect("positive radius")
    }

    pub fn set(&self) -> ResonantSet {
        ResonantSet::new(self.form.clone())
    }
}

/// How candidates fared during a build.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub candidates: usize,
    pub anchored: usize,
    pub big_norm_violations: usize,
    pub no_sign_change: usize,
    /// Weight outside `[λ(T), T]`.
    pub outside_window: usize,
    /// `2 B_i` not inside the region.
    pub outside_region: usize,
    pub overlapping: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    /// Anchors of sampled points, via the Minkowski solver.
    Anchored,
    /// Every resonant root with weight in the window, in weight order.
    Enumerated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularSystemCertificate {
    /// `T`
    pub scale: f64,
    pub q: Option<u64>,
    /// `λ(T) = T / C3`
    pub lambda_t: f64,
    pub count: usize,
    pub members: Vec<Member>,
    pub region: Ball,
    pub consts: DomainConstants,
    pub construction: Construction,
    pub stats: BuildStats,
}

/// Greedy acceptance of balls `B(z, 1/(2T))` in the given order.
struct Packer {
    cell: f64,
    grid: HashMap<Vec<i64>, Vec<usize>>,
    zs: Vec<Vec<f64>>,
}

impl Packer {
    fn new(scale: f64) -> Self {
        Packer {
            cell: 1.0 / scale,
            grid: HashMap::new(),
            zs: Vec::new(),
        }
    }

    fn key(&self, z: &[f64]) -> Vec<i64> {
        z.iter().map(|v| (v / self.cell).floor() as i64).collect()
    }

    /// Accepts `z` if its ball misses every accepted ball.
    fn try_insert(&mut self, z: &[f64]) -> bool {
        let base = self.key(z);
        let d = z.len();
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut k = base.clone();
            for v in k.iter_mut() {
                *v += (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(list) = self.grid.get(&k) {
                if list.iter().any(|&j| euclid(&self.zs[j], z) < self.cell) {
                    return false;
                }
            }
        }
        self.grid.entry(base).or_default().push(self.zs.len());
        self.zs.push(z.to_vec());
        true
    }
}

fn in_window(weight: f64, lambda: f64, scale: f64) -> bool {
    weight >= lambda * (1.0 - 1e-12) && weight <= scale * (1.0 + 1e-12)
}

/// Suggested grid size: about eight samples per anchoring window `θ_max`
/// across `(3/4) B`, so that the member count tracks `T`.
pub fn default_grid_size(consts: &DomainConstants, region: &Ball, q: u64) -> usize {
    let theta = crate::resonant::theta_max(consts, q);
    (8.0 * 0.75 * region.diameter() / theta).ceil() as usize
}

/// Greedy maximal packing of anchors of sampled points.
pub fn build_regular_system(
    map: &ManifoldMap,
    region: &Ball,
    q: u64,
    consts: &DomainConstants,
    sampler: &Sampler,
) -> Result<RegularSystemCertificate> {
    map.require_chart()?;
    if region.dim() != map.d() {
        return Err(Error::invalid("region dimension does not match the map"));
    }
    if map.nondeg_order(region.center(), 8).is_none() {
        return Err(Error::precondition(
            "map is degenerate at the centre of the region",
        ));
    }
    if q < consts.q0 {
        return Err(Error::precondition(format!(
            "Q = {q} is below Q0 = {}",
            consts.q0
        )));
    }
    let scale = consts.scale(q);
    let lambda = consts.lambda(scale);
    let radius = 0.5 / scale;
    let points = sampler.points(region);
    let outcomes: Vec<AnchorOutcome> = points
        .par_iter()
        .map(|x| anchor_for_point(map, x, q, consts))
        .collect::<Result<_>>()?;

    let mut stats = BuildStats {
        candidates: points.len(),
        ..BuildStats::default()
    };
    let mut packer = Packer::new(scale);
    let mut members = Vec::new();
    for out in outcomes {
        let (set, anchor) = match out {
            AnchorOutcome::Anchored { set, anchor } => (set, anchor),
            AnchorOutcome::BigNormViolation { .. } => {
                stats.big_norm_violations += 1;
                continue;
            }
            AnchorOutcome::NoSignChange { .. } => {
                stats.no_sign_change += 1;
                continue;
            }
        };
        stats.anchored += 1;
        if !in_window(set.weight, lambda, scale) {
            stats.outside_window += 1;
            continue;
        }
        let ball = Ball::new(anchor.z.clone(), radius)?;
        if !region.contains_ball(&ball.scaled(2.0)) {
            stats.outside_region += 1;
            continue;
        }
        if !packer.try_insert(&anchor.z) {
            stats.overlapping += 1;
            continue;
        }
        members.push(Member {
            weight: set.weight,
            form: set.form,
            z: anchor.z,
            radius,
        });
    }
    Ok(RegularSystemCertificate {
        scale,
        q: Some(q),
        lambda_t: lambda,
        count: members.len(),
        members,
        region: region.clone(),
        consts: consts.clone(),
        construction: Construction::Anchored,
        stats,
    })
}

/// Regular system at an arbitrary scale `T` (`d = 1`): every root `z` of
/// every `a·f + a0` with `λ(T) ≤ ‖a‖∞^{n+1} ≤ T`, taken in order of
/// `(N, a, a0, z)` and packed greedily.
pub fn build_regular_system_at_scale(
    map: &ManifoldMap,
    region: &Ball,
    scale: f64,
    consts: &DomainConstants,
) -> Result<RegularSystemCertificate> {
    if map.d() != 1 {
        return Err(Error::invalid("the enumerated construction needs d = 1"));
    }
    if !(scale >= 1.0 && scale.is_finite()) {
        return Err(Error::invalid("scale must be at least 1"));
    }
    let n = map.n();
    let lambda = consts.lambda(scale);
    let radius = 0.5 / scale;
    let hmax = (scale * (1.0 + 1e-12)).powf(1.0 / (n as f64 + 1.0)).floor() as u64;
    let (lo, hi) = region.bounds_1d();

    let mut forms: Vec<Vec<i64>> = half_box(n, hmax)
        .into_iter()
        .filter(|a| {
            let w = (crate::linforms::sup_norm(a) as f64).powi(n as i32 + 1);
            in_window(w, lambda, scale)
        })
        .collect();
    forms.sort_by_key(|a| (crate::linforms::sup_norm(a), a.clone()));

    let per_form: Vec<Vec<(i64, f64)>> = forms
        .par_iter()
        .map(|a| {
            let p = map.form_poly_1d(a, 0).expect("d = 1");
            let (pts, _) = p.monotone_pieces(lo, hi);
            let vals: Vec<f64> = pts.iter().map(|&x| p.eval(x)).collect();
            let ymin = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let ymax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut roots = Vec::new();
            for level in (ymin.ceil() as i64)..=(ymax.floor() as i64) {
                let q = map.form_poly_1d(a, -level).expect("d = 1");
                for z in q.real_roots(lo, hi).roots {
                    roots.push((-level, z));
                }
            }
            roots
        })
        .collect();

    let mut stats = BuildStats::default();
    let mut packer = Packer::new(scale);
    let mut members = Vec::new();
    for (a, roots) in forms.iter().zip(per_form) {
        for (a0, z) in roots {
            stats.candidates += 1;
            stats.anchored += 1;
            let ball = Ball::new(vec![z], radius)?;
            if !region.contains_ball(&ball.scaled(2.0)) {
                stats.outside_region += 1;
                continue;
            }
            if !packer.try_insert(&[z]) {
                stats.overlapping += 1;
                continue;
            }
            let set = ResonantSet::new(IntegerForm::new(a.clone(), a0)?);
            members.push(Member {
                weight: set.weight,
                form: set.form,
                z: vec![z],
                radius,
            });
        }
    }
    Ok(RegularSystemCertificate {
        scale,
        q: None,
        lambda_t: lambda,
        count: members.len(),
        members,
        region: region.clone(),
        consts: consts.clone(),
        construction: Construction::Enumerated,
        stats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub gamma: f64,
    /// `min_i |B(R_i, γ) ∩ B_i| / (γ^{d-s} T^{-s})`
    pub k2_hat: f64,
    /// `max_i |B(R_i, γ) ∩ 2B_i| / (γ^{d-s} T^{-s})`
    pub k3_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `t / (|B| T^d)`
    pub k1_hat: f64,
    pub k2_hat: f64,
    pub k3_hat: f64,
    pub rows: Vec<GammaRow>,
    pub violations: Vec<String>,
}

/// Monte Carlo budget per tube when `d > 1`.
const TUBE_SAMPLES: usize = 20_000;

/// Re-checks a certificate from scratch and estimates `K1`, `K2`, `K3`.
pub fn verify_certificate(
    cert: &RegularSystemCertificate,
    map: &ManifoldMap,
    gammas: &[f64],
) -> Result<CertificateReport> {
    let inv_t = 1.0 / cert.scale;
    for &g in gammas {
        if !(g > 0.0 && g < inv_t) {
            return Err(Error::invalid(format!("gamma {g} outside (0, 1/T)")));
        }
    }
    let mut violations = Vec::new();
    let n = map.n();
    let d = map.d();
    if cert.count != cert.members.len() {
        violations.push(format!(
            "count {} but {} members",
            cert.count,
            cert.members.len()
        ));
    }
    for (i, m) in cert.members.iter().enumerate() {
        let norm = m.form.norm() as f64;
        if m.form.norm() == 0 {
            violations.push(format!("member {i}: zero form"));
            continue;
        }
        if (m.weight - norm.powi(n as i32 + 1)).abs() > 1e-9 * m.weight {
            violations.push(format!("member {i}: weight {} is not ‖a‖^(n+1)", m.weight));
        }
        if !in_window(m.weight, cert.lambda_t, cert.scale) {
            violations.push(format!(
                "member {i}: weight {} outside [{}, {}]",
                m.weight, cert.lambda_t, cert.scale
            ));
        }
        if ((2.0 * m.radius) * cert.scale - 1.0).abs() > 1e-9 {
            violations.push(format!(
                "member {i}: diameter {} is not 1/T",
                2.0 * m.radius
            ));
        }
        if !cert.region.contains_ball(&m.ball().scaled(2.0)) {
            violations.push(format!("member {i}: 2B_i leaves the region"));
        }
        let fz = map.form_value(&m.form.a, m.form.a0, &m.z);
        if fz.abs() > zero_tol(&m.form) {
            violations.push(format!("member {i}: |F(z)| = {fz:e} is not zero"));
        }
    }
    // pairwise disjointness, independently of the build-time hash
    let mut order: Vec<usize> = (0..cert.members.len()).collect();
    order.sort_by(|&i, &j| cert.members[i].z[0].total_cmp(&cert.members[j].z[0]));
    for (pos, &i) in order.iter().enumerate() {
        let mi = &cert.members[i];
        for &j in &order[pos + 1..] {
            let mj = &cert.members[j];
            if mj.z[0] - mi.z[0] >= mi.radius + mj.radius {
                break;
            }
            if euclid(&mi.z, &mj.z) < mi.radius + mj.radius {
                violations.push(format!("members {i} and {j}: balls overlap"));
            }
        }
    }

    let k1_hat = cert.count as f64 / (cert.region.volume() * cert.scale.powi(d as i32));
    let s = d as f64 - 1.0;
    let mut rows = Vec::new();
    for &g in gammas {
        let denom = g.powf(d as f64 - s) * cert.scale.powf(-s);
        let method = if d == 1 {
            Method::Exact1d
        } else {
            Method::MonteCarlo {
                samples: TUBE_SAMPLES,
                seed: 0,
            }
        };
        let pairs: Vec<(f64, f64)> = cert
            .members
            .par_iter()
            .map(|m| -> Result<(f64, f64)> {
                let set = m.set();
                let b = m.ball();
                let inner = tube_measure(map, &set, &b, g, &method)?.value;
                let outer = tube_measure(map, &set, &b.scaled(2.0), g, &method)?.value;
                Ok((inner / denom, outer / denom))
            })
            .collect::<Result<_>>()?;
        let k2 = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let k3 = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
        if !pairs.is_empty() && !(k2 > 0.0) {
            violations.push(format!("γ = {g:e}: some member has an empty tube in B_i"));
        }
        rows.push(GammaRow {
            gamma: g,
            k2_hat: if pairs.is_empty() { 0.0 } else { k2 },
            k3_hat: k3,
        });
    }
    Ok(CertificateReport {
        k1_hat,
        k2_hat: rows.iter().map(|r| r.k2_hat).fold(f64::INFINITY, f64::min),
        k3_hat: rows.iter().map(|r| r.k3_hat).fold(0.0, f64::max),
        rows,
        violations,
    })
}

/// One dyadic block `E_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub k: u32,
    /// `Ψ(2^k)`
    pub gamma: f64,
    pub cert: RegularSystemCertificate,
    /// `B(R_i, γ) ∩ B_i` for each member, in member order.
    pub pieces: Vec<IntervalUnion>,
    pub union: IntervalUnion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub k0: u32,
    pub k_max: u32,
    pub s: f64,
    pub region_volume: f64,
    pub members: Vec<usize>,
    /// `|E_k|`
    pub block_measures: Vec<f64>,
    /// `2^{(d-s)k} Ψ(2^k)^{d-s}`
    pub phi: Vec<f64>,
    /// `|E_l ∩ E_k|`, row `l - k0`, column `k - k0`.
    pub overlap: Vec<Vec<f64>>,
    /// `(Σ |E_k|)² / Σ Σ |E_l ∩ E_k|`
    pub ratio: f64,
    pub ratio_over_volume: f64,
    /// Pieces of one block never overlap.
    pub within_block_disjoint: bool,
}

fn check_blocks_input(map: &ManifoldMap, psi: &ApproxFn, k0: u32, k_max: u32) -> Result<()> {
    if map.d() != 1 {
        return Err(Error::invalid("exact dyadic blocks need d = 1"));
    }
    if k_max < k0 {
        return Err(Error::invalid(format!(
            "empty range: K = {k_max} < k0 = {k0}"
        )));
    }
    if k_max > 40 {
        return Err(Error::invalid("K above 40 is out of range"));
    }
    psi.validate()?;
    for k in k0..=k_max {
        let h = (k as f64).exp2();
        if psi.value(h) > 0.5 / h * (1.0 + 1e-12) {
            return Err(Error::precondition(format!(
                "Ψ(2^{k}) exceeds 2^-{k}/2; clamp it first (e.g. clamped:0.5:...)"
            )));
        }
    }
    Ok(())
}

/// The blocks `E_k`, `k0 ≤ k ≤ K`, built at `T = 2^k`.
pub fn dyadic_blocks(
    map: &ManifoldMap,
    region: &Ball,
    psi: &ApproxFn,
    k0: u32,
    k_max: u32,
    consts: &DomainConstants,
) -> Result<Vec<Block>> {
    check_blocks_input(map, psi, k0, k_max)?;
    (k0..=k_max)
        .into_par_iter()
        .map(|k| {
            let scale = (k as f64).exp2();
            let gamma = psi.value(scale);
            let cert = build_regular_system_at_scale(map, region, scale, consts)?;
            let mut pieces = Vec::with_capacity(cert.members.len());
            for m in &cert.members {
                let (lo, hi) = m.ball().bounds_1d();
                let (tube, _) = tube_union_1d(map, &m.form, lo, hi, gamma)?;
                pieces.push(tube.unwrap_or_else(|| IntervalUnion::from_intervals(vec![(lo, hi)])));
            }
            let union = IntervalUnion::from_intervals(
                pieces
                    .iter()
                    .flat_map(|p| p.parts().iter().cloned())
                    .collect(),
            );
            Ok(Block {
                k,
                gamma,
                cert,
                pieces,
                union,
            })
        })
        .collect()
}

pub fn overlap_report(blocks: &[Block], region: &Ball) -> OverlapReport {
    let d = region.dim() as f64;
    let s = d - 1.0;
    let block_measures: Vec<f64> = blocks.iter().map(|b| b.union.measure()).collect();
    let overlap: Vec<Vec<f64>> = blocks
        .iter()
        .enumerate()
        .map(|(i, bl)| {
            blocks
                .iter()
                .enumerate()
                .map(|(j, bk)| {
                    if i == j {
                        block_measures[i]
                    } else {
                        bl.union.intersection_measure(&bk.union)
                    }
                })
                .collect()
        })
        .collect();
    let total: f64 = block_measures.iter().sum();
    let denom: f64 = overlap.iter().flatten().sum();
    let ratio = if denom > 0.0 {
        total * total / denom
    } else {
        0.0
    };
    let within_block_disjoint = blocks.iter().all(|b| {
        let raw: Vec<(f64, f64)> = b
            .pieces
            .iter()
            .flat_map(|p| p.parts().iter().cloned())
            .collect();
        IntervalUnion::pairwise_disjoint(&raw)
    });
    OverlapReport {
        k0: blocks.first().map_or(0, |b| b.k),
        k_max: blocks.last().map_or(0, |b| b.k),
        s,
        region_volume: region.volume(),
        members: blocks.iter().map(|b| b.cert.count).collect(),
        phi: blocks
            .iter()
            .map(|b| {
                let h = (b.k as f64).exp2();
                (h * b.gamma).powf(d - s)
            })
            .collect(),
        block_measures,
        overlap,
        ratio,
        ratio_over_volume: ratio / region.volume(),
        within_block_disjoint,
    }
}

/// Builds the blocks and summarises their overlaps.
pub fn dyadic_overlap_experiment(
    map: &ManifoldMap,
    region: &Ball,
    psi: &ApproxFn,
    k0: u32,
    k_max: u32,
    consts: &DomainConstants,
) -> Result<OverlapReport> {
    let blocks = dyadic_blocks(map, region, psi, k0, k_max, consts)?;
    Ok(overlap_report(&blocks, region))
}

/// Smallest `k ≤ k_max` whose enumerated system has at least 10 members.
pub fn default_k0(
    map: &ManifoldMap,
    region: &Ball,
    consts: &DomainConstants,
    k_max: u32,
) -> Result<u32> {
    for k in 1..=k_max {
        let cert = build_regular_system_at_scale(map, region, (k as f64).exp2(), consts)?;
        if cert.count >= 10 {
            return Ok(k);
        }
    }
    Err(Error::numeric(format!(
        "no scale up to 2^{k_max} gives 10 members"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DomainConstants;

    fn setup() -> (ManifoldMap, Ball, DomainConstants) {
        let v = ManifoldMap::veronese(2).unwrap();
        let b = Ball::interval(0.0, 1.0).unwrap();
        let bounds = v.default_bounds(&b).unwrap();
        let k = DomainConstants::derive(&v, &b, 4.0, &bounds).unwrap();
        (v, b, k)
    }

    #[test]
    fn grid_sampler_stays_in_three_quarters() {
        let b = Ball::interval(0.0, 1.0).unwrap();
        let pts = Sampler::Grid { m: 100 }.points(&b);
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|p| p[0] > 0.125 && p[0] < 0.875));
    }

    #[test]
    fn packer_rejects_close_points() {
        let mut p = Packer::new(10.0);
        assert!(p.try_insert(&[0.5]));
        assert!(!p.try_insert(&[0.55]));
        assert!(p.try_insert(&[0.61]));
        assert!(!p.try_insert(&[0.41]));
    }

    #[test]
    fn anchored_certificate_passes_checks() {
        let (v, b, k) = setup();
        let cert = build_regular_system(&v, &b, 8, &k, &Sampler::Grid { m: 10_000 }).unwrap();
        assert!(cert.count >= 1);
        let t = cert.scale;
        let rep = verify_certificate(&cert, &v, &[0.25 / t, 1.0 / (16.0 * t)]).unwrap();
        assert!(
            rep.violations.is_empty(),
            "{:?}",
            &rep.violations[..rep.violations.len().min(5)]
        );
        assert!(rep.k2_hat > 0.0 && rep.k3_hat.is_finite());
    }

    #[test]
    fn verify_rejects_gamma_at_inverse_scale() {
        let (v, b, k) = setup();
        let cert = build_regular_system(&v, &b, 8, &k, &Sampler::Grid { m: 200 }).unwrap();
        assert!(verify_certificate(&cert, &v, &[1.0 / cert.scale]).is_err());
    }

    #[test]
    fn overlapping_members_are_reported() {
        let (v, b, k) = setup();
        let scale = 100.0;
        // 2x - 1 and 4x - 2 share the root 1/2
        let members = vec![
            Member {
                form: IntegerForm::new(vec![2, 0], -1).unwrap(),
                weight: 8.0,
                z: vec![0.5],
                radius: 0.005,
            },
            Member {
                form: IntegerForm::new(vec![4, 0], -2).unwrap(),
                weight: 64.0,
                z: vec![0.5],
                radius: 0.005,
            },
        ];
        let cert = RegularSystemCertificate {
            scale,
            q: None,
            lambda_t: k.lambda(scale),
            count: 2,
            members,
            region: b.clone(),
            consts: k.clone(),
            construction: Construction::Enumerated,
            stats: BuildStats::default(),
        };
        let rep = verify_certificate(&cert, &v, &[0.001]).unwrap();
        assert!(rep.violations.iter().any(|v| v.contains("overlap")));
    }

    #[test]
    fn build_guards() {
        let (v, b, k) = setup();
        assert!(build_regular_system(&v, &b, k.q0 - 1, &k, &Sampler::Grid { m: 10 }).is_err());
        assert!(Ball::interval(0.5, 0.5).is_err());
        let no_chart = ManifoldMap::univariate(vec![vec![0.0, 2.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(build_regular_system(&no_chart, &b, 8, &k, &Sampler::Grid { m: 10 }).is_err());
    }

    #[test]
    fn single_block_ratio_is_its_measure() {
        let (v, b, k) = setup();
        let psi = ApproxFn::clamped(0.5, ApproxFn::power(1.0));
        let r = dyadic_overlap_experiment(&v, &b, &psi, 7, 7, &k).unwrap();
        assert!((r.ratio - r.block_measures[0]).abs() < 1e-12);
        assert!(r.within_block_disjoint);
    }

    #[test]
    fn overlap_guards() {
        let (v, b, k) = setup();
        let psi = ApproxFn::clamped(0.5, ApproxFn::power(1.0));
        assert!(dyadic_overlap_experiment(&v, &b, &psi, 8, 6, &k).is_err());
        assert!(dyadic_overlap_experiment(&v, &b, &ApproxFn::power(0.5), 6, 8, &k).is_err());
    }
}
