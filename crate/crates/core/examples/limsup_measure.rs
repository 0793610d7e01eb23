//! Measure of `{x : |<f(x)·a>| < εQ⁻ⁿ for some 0 < ‖a‖ ≤ Q}` by exact interval
//! arithmetic and by Monte Carlo, plus the big/small gradient split.
use dioph_lab::measure::{limsup_set_measure, split_big_small, verify_linear_scaling};
use dioph_lab::{Ball, ManifoldMap, Method};

fn main() -> dioph_lab::Result<()> {
    let map = ManifoldMap::veronese(2)?;
    let region = Ball::interval(0.0, 1.0)?;
    let mc = Method::MonteCarlo {
        samples: 200_000,
        seed: 1,
    };

    for (eps, q) in [(0.2, 5), (0.1, 10), (0.05, 20)] {
        let exact = limsup_set_measure(&map, &region, eps, q, &Method::Exact1d)?;
        let est = limsup_set_measure(&map, &region, eps, q, &mc)?;
        println!(
            "eps {eps:<5} Q {q:<3} exact {:.5}  mc {:.5} ± {:.5}",
            exact.value, est.value, est.std_error
        );
    }

    let scaling = verify_linear_scaling(
        &map,
        &region,
        &[0.025, 0.05, 0.1, 0.2],
        50,
        &Method::Exact1d,
    )?;
    println!(
        "Q = 50: slope {:.4}, C0_hat {:.4}",
        scaling.slope, scaling.c0_hat
    );

    for q in [25, 50, 100] {
        let s = split_big_small(&map, &region, 0.05, q, &mc)?;
        println!(
            "Q {q:<4} big {:.5} small {:.5} (threshold {:.2}), small share {:.3}",
            s.big.value,
            s.small.value,
            s.gradient_threshold,
            s.small.value / s.total.value
        );
    }
    Ok(())
}
