//! Quasi-independence of the dyadic blocks E_k for a divergent and a
//! convergent Ψ.
use dioph_lab::measure::{calibrate, CALIBRATION_EPS};
use dioph_lab::regsys::dyadic_overlap_experiment;
use dioph_lab::{ApproxFn, Ball, ManifoldMap, Method};

fn main() -> dioph_lab::Result<()> {
    let map = ManifoldMap::veronese(2)?;
    let region = Ball::interval(0.0, 1.0)?;
    let k = calibrate(&map, &region, 50, &CALIBRATION_EPS, &Method::Exact1d)?.constants;

    let divergent = ApproxFn::clamped(0.5, ApproxFn::power(1.0));
    for kk in [10, 12, 14] {
        let r = dyadic_overlap_experiment(&map, &region, &divergent, 6, kk, &k)?;
        println!(
            "{divergent}  K = {kk}: ratio/|B| = {:.4}",
            r.ratio_over_volume
        );
    }
    let r = dyadic_overlap_experiment(&map, &region, &divergent, 6, 12, &k)?;
    for (i, (e, m)) in r.block_measures.iter().zip(&r.members).enumerate() {
        println!(
            "    k = {:>2}: {m:>5} members, |E_k| = {e:.4}",
            r.k0 + i as u32
        );
    }

    let convergent = ApproxFn::power(3.0);
    let r = dyadic_overlap_experiment(&map, &region, &convergent, 6, 12, &k)?;
    println!(
        "{convergent}  K = 12: ratio/|B| = {:.2e}",
        r.ratio_over_volume
    );
    Ok(())
}
