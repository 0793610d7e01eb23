mod common;

use common::{quadratic_irrationals, Quadratic};
use dioph_lab::counting::{count_solutions, count_with, ArgConvention};
use dioph_lab::linforms::enumerate_solutions;
use dioph_lab::measure::limsup_set_measure;
use dioph_lab::{ApproxFn, Ball, ManifoldMap, Method};

#[test]
fn continued_fraction_oracle_matches_brute_force() {
    for x in quadratic_irrationals().into_iter().take(8) {
        assert_eq!(x.count_cf(3000), x.count_brute(3000), "{x:?}");
    }
}

#[test]
fn golden_ratio_solutions_are_fibonacci_numbers() {
    let phi = Quadratic::new(1, 5, 2);
    let fib = [
        1i128, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987,
    ];
    for k in 1..=1000 {
        assert_eq!(phi.close(k), fib.contains(&k), "{k}");
    }
}

#[test]
fn one_dimensional_counts_match_the_oracle() {
    let map = ManifoldMap::veronese(1).unwrap();
    let psi = ApproxFn::power(1.0);
    for x in quadratic_irrationals() {
        for q_max in [10u64, 100, 1000, 10_000] {
            let got = count_solutions(&map, &[x.value()], &psi, q_max).unwrap();
            assert_eq!(got.count, 2 * x.count_cf(q_max as i128), "{x:?} Q={q_max}");
            for w in &got.witnesses {
                assert!(x.close(w.a[0] as i128));
            }
            // ψ(hⁿ) and ψ(h) coincide when n = 1
            let legacy =
                count_with(&map, &[x.value()], &psi, q_max, ArgConvention::LegacyArg).unwrap();
            assert_eq!(legacy.count, got.count);
        }
    }
}

#[test]
fn box_enumeration_counts_match_the_oracle() {
    // |qx + a0| < 1/Q for 0 < |q| ≤ Q, with both signs
    for x in quadratic_irrationals() {
        for q in [5u64, 30] {
            let sols = enumerate_solutions(&[x.value()], q, 1.0 / q as f64).unwrap();
            let want = (1..=q as i128)
                .filter(|&k| {
                    let f = x.floor_mul(k);
                    let r = (k as f64 * x.value() - f as f64)
                        .min(f as f64 + 1.0 - k as f64 * x.value());
                    r < 1.0 / q as f64
                })
                .count();
            assert_eq!(sols.len(), 2 * want, "{x:?} Q={q}");
        }
    }
}

#[test]
fn identity_map_limsup_set_is_a_union_of_rational_windows() {
    // {x : ∃ q ≤ Q, ‖qx‖ < εQ⁻¹} is the union of windows of half-width ε/(qQ)
    // around the rationals p/q; check the exact length on a grid of fractions.
    let map = ManifoldMap::veronese(1).unwrap();
    let region = Ball::interval(0.0, 1.0).unwrap();
    for (q, eps) in [(3u64, 0.2), (5, 0.1), (8, 0.05)] {
        let exact = limsup_set_measure(&map, &region, eps, q, &Method::Exact1d)
            .unwrap()
            .value;
        let mut windows: Vec<(f64, f64)> = Vec::new();
        for den in 1..=q {
            let w = eps / (den * q) as f64;
            for num in 0..=den {
                let c = num as f64 / den as f64;
                windows.push(((c - w).max(0.0), (c + w).min(1.0)));
            }
        }
        windows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut total = 0.0;
        let mut cur = windows[0];
        for &(a, b) in &windows[1..] {
            if a <= cur.1 {
                cur.1 = cur.1.max(b);
            } else {
                total += cur.1 - cur.0;
                cur = (a, b);
            }
        }
        total += cur.1 - cur.0;
        assert!(
            (exact - total).abs() < 1e-12,
            "Q={q} ε={eps}: {exact} vs {total}"
        );
    }
}
