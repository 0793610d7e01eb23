//! Builds a few maps, evaluates them, and reports derivative bounds and the
//! order of non-degeneracy.
use dioph_lab::{Ball, ManifoldMap, MapSpec};

fn main() -> dioph_lab::Result<()> {
    let region = Ball::interval(0.0, 1.0)?;

    for n in 1..=4 {
        let map = ManifoldMap::veronese(n)?;
        let b = map.default_bounds(&region)?;
        println!(
            "veronese:{n}  f(0.5) = {:?}  L1 = {:.3}  L2 = {:.3}  order = {:?}",
            map.eval(&[0.5]),
            b.l1,
            b.l2,
            map.nondeg_order(&[0.5], 8)
        );
    }

    // (x, x³): non-degenerate of order 3 at the origin, order 2 elsewhere
    let spec: MapSpec = r#"{"kind":"poly","d":1,"n":2,"coeffs":[[0,1],[0,0,0,1]]}"#.parse()?;
    let cubic = ManifoldMap::from_spec(&spec)?;
    for x in [0.0, 0.3] {
        println!("(x, x^3) at {x}: order {:?}", cubic.nondeg_order(&[x], 8));
    }

    // a line is degenerate everywhere
    let line = ManifoldMap::univariate(vec![vec![0.0, 1.0], vec![1.0, 2.0]])?;
    println!("(x, 1 + 2x): order {:?}", line.nondeg_order(&[0.5], 8));
    Ok(())
}
