//! Solves the Minkowski box at a point, then anchors the resulting resonant
//! set to a nearby zero.
use dioph_lab::linforms::minkowski_solve;
use dioph_lab::measure::calibrate;
use dioph_lab::resonant::{anchor_for_point, theta_max, AnchorOutcome};
use dioph_lab::{Ball, ManifoldMap, Method};

fn main() -> dioph_lab::Result<()> {
    let map = ManifoldMap::veronese(2)?;
    let region = Ball::interval(0.0, 1.0)?;
    let k = calibrate(
        &map,
        &region,
        50,
        &[0.025, 0.05, 0.1, 0.2],
        &Method::Exact1d,
    )?
    .constants;
    let q = k.q0;
    println!(
        "C0 = {:.4}, Q0 = {q}, theta_max = {:.3e}",
        k.c0,
        theta_max(&k, q)
    );

    // fractional parts of multiples of the golden ratio: no rational shortcuts
    for i in 1..=6 {
        let x = (i as f64 * 0.618_033_988_749_895).fract();
        let (form, bx) = minkowski_solve(&map.eval(&[x]), q, k.c0, 2, k.l2)?;
        print!(
            "x = {x:.4} form {form:<10} |F| = {:.2e} <= {:.2e}  ",
            form.apply(&map.eval(&[x])).abs(),
            bx.delta
        );
        match anchor_for_point(&map, &[x], q, &k)? {
            AnchorOutcome::Anchored { set, anchor } => {
                println!(
                    "anchored at {:.6} (moved {:.2e}, weight {})",
                    anchor.z[0], anchor.displacement, set.weight
                )
            }
            AnchorOutcome::BigNormViolation { d1f, required, .. } => {
                println!("gradient too small: {d1f:.3} < {required:.3}")
            }
            AnchorOutcome::NoSignChange { .. } => println!("no sign change within theta_max"),
        }
    }
    Ok(())
}
