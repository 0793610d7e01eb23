//! Builds regular-system certificates on [0, 1] for Veronese(2) and checks
//! them.
use dioph_lab::measure::{calibrate, CALIBRATION_EPS};
use dioph_lab::regsys::{build_regular_system, default_grid_size, verify_certificate, Sampler};
use dioph_lab::{Ball, ManifoldMap, Method};

fn main() -> dioph_lab::Result<()> {
    let map = ManifoldMap::veronese(2)?;
    let region = Ball::interval(0.0, 1.0)?;
    let k = calibrate(&map, &region, 50, &CALIBRATION_EPS, &Method::Exact1d)?.constants;
    println!("K1 = {:.3e}, K2 = {:.3}, K3 = {:.3e}", k.k1, k.k2, k.k3);

    for q in [8, 12] {
        let cert = build_regular_system(
            &map,
            &region,
            q,
            &k,
            &Sampler::Grid {
                m: default_grid_size(&k, &region, q),
            },
        )?;
        let t = cert.scale;
        let report = verify_certificate(&cert, &map, &[0.25 / t, 0.0625 / t])?;
        println!(
            "Q = {q}: T = {t:.3e}, {} members from {} candidates, K1_hat {:.3e}, K2_hat {:.3}, K3_hat {:.3}, {} violations",
            cert.count,
            cert.stats.candidates,
            report.k1_hat,
            report.k2_hat,
            report.k3_hat,
            report.violations.len()
        );
        for m in cert.members.iter().take(3) {
            println!("    {} at {:.6}, weight {}", m.form, m.z[0], m.weight);
        }
    }
    Ok(())
}
