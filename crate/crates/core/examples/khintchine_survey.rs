//! Solution counts at random points of the parabola for ψ on both sides of
//! the convergence boundary.
use dioph_lab::counting::{khintchine_experiment, KhintchineConfig};
use dioph_lab::{ApproxFn, Ball, MapSpec};

fn main() -> dioph_lab::Result<()> {
    let cfg = KhintchineConfig {
        map: MapSpec::Veronese { n: 2 },
        region: Ball::interval(0.0, 1.0)?,
        psis: vec![
            ApproxFn::power(1.0),
            ApproxFn::power(1.5),
            ApproxFn::power_log(1.0, 2.0),
        ],
        q_ladder: vec![125, 250, 500, 1000],
        samples: 60,
        seed: 7,
        implication_events: 1000,
        c0: None,
        q_regsys: None,
        series_budget: 1 << 20,
    };
    let report = khintchine_experiment(&cfg)?;
    for row in &report.rows {
        let medians: Vec<u64> = row.ladder.iter().map(|p| p.summary.median).collect();
        println!(
            "{:<16} series {:<12} medians {:?}  implication {}/{}",
            row.psi.to_string(),
            row.series.verdict.to_string(),
            medians,
            row.implication.held,
            row.implication.events
        );
    }
    Ok(())
}
