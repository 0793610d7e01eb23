//! Calibrates C0 on a few balls and prints the derived constants as JSON.
use dioph_lab::measure::{calibrate, CALIBRATION_EPS};
use dioph_lab::{Ball, ManifoldMap, Method};

fn main() -> dioph_lab::Result<()> {
    let map = ManifoldMap::veronese(2)?;
    for (lo, hi) in [(0.0, 1.0), (0.0, 0.5), (0.5, 1.0)] {
        let cal = calibrate(
            &map,
            &Ball::interval(lo, hi)?,
            50,
            &CALIBRATION_EPS,
            &Method::Exact1d,
        )?;
        println!(
            "[{lo}, {hi}]: slope {:.4}, C0_hat {:.4}",
            cal.scaling.slope, cal.constants.c0
        );
    }
    let cal = calibrate(
        &map,
        &Ball::interval(0.0, 1.0)?,
        50,
        &CALIBRATION_EPS,
        &Method::Exact1d,
    )?;
    println!("{}", serde_json::to_string_pretty(&cal.constants)?);
    Ok(())
}
