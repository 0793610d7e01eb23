use dioph_lab::measure::{limsup_set_1d, limsup_set_measure};
use dioph_lab::resonant::tube_measure;
use dioph_lab::{Ball, ManifoldMap, Method, ResonantSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn tube_exact_and_monte_carlo_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let n = if case % 2 == 0 { 2 } else { 3 };
        let map = ManifoldMap::veronese(n).unwrap();
        let lo = rng.gen_range(-0.5..0.5);
        let region = Ball::interval(lo, lo + rng.gen_range(0.2..1.0)).unwrap();
        let a: Vec<i64> = loop {
            let a: Vec<i64> = (0..n).map(|_| rng.gen_range(-6..=6)).collect();
            if a.iter().any(|&v| v != 0) {
                break a;
            }
        };
        // put a zero of the form near a random point of the region
        let x0 = rng.gen_range(lo..lo + region.diameter());
        let a0 = -a
            .iter()
            .zip(map.eval(&[x0]))
            .map(|(u, v)| *u as f64 * v)
            .sum::<f64>()
            .round() as i64;
        let set = ResonantSet::from_parts(a, a0).unwrap();
        let gamma = rng.gen_range(0.005..0.2);
        let exact = tube_measure(&map, &set, &region, gamma, &Method::Exact1d).unwrap();
        let mc = tube_measure(
            &map,
            &set,
            &region,
            gamma,
            &Method::MonteCarlo {
                samples: 1_000_000,
                seed: case,
            },
        )
        .unwrap();
        assert!(exact.value <= region.volume() + 1e-12);
        if mc.std_error > 0.0 {
            worst = worst.max((mc.value - exact.value).abs() / mc.std_error);
        }
        assert!(
            mc.agrees_with(&exact, 3.0),
            "case {case}: {set:?} γ={gamma}: {exact:?} vs {mc:?}"
        );
    }
    eprintln!("worst deviation {worst:.2} standard errors");
}

#[test]
fn limsup_sets_nest_in_eps() {
    let map = ManifoldMap::veronese(2).unwrap();
    let region = Ball::interval(0.0, 1.0).unwrap();
    for q in [3u64, 7, 12] {
        let small = limsup_set_1d(&map, &region, 0.05, q).unwrap();
        let big = limsup_set_1d(&map, &region, 0.1, q).unwrap();
        for &(a, b) in small.parts() {
            let m = 0.5 * (a + b);
            assert!(big.contains(m), "Q={q}: {m} lost");
        }
    }
}

#[test]
fn monte_carlo_is_a_proportion_of_the_region() {
    let map = ManifoldMap::veronese(3).unwrap();
    let region = Ball::interval(0.2, 0.7).unwrap();
    let mc = limsup_set_measure(
        &map,
        &region,
        0.2,
        4,
        &Method::MonteCarlo {
            samples: 100_000,
            seed: 1,
        },
    )
    .unwrap();
    let exact = limsup_set_measure(&map, &region, 0.2, 4, &Method::Exact1d).unwrap();
    assert!(mc.value <= region.volume());
    assert!(mc.agrees_with(&exact, 3.0), "{mc:?} vs {exact:?}");
}
