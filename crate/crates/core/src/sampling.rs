//! Seeded, chunked random substreams.
//!
//! Monte Carlo work is cut into fixed-size chunks; chunk `i` draws from the
//! ChaCha stream `i` of the run seed. Results are therefore identical for any
//! thread count, since neither chunk boundaries nor chunk streams depend on
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::manifold::Ball;

/// Samples per chunk.
pub const CHUNK: usize = 1 << 14;

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform point in a ball (rejection from the bounding cube for `d > 1`).
pub fn uniform_in_ball<R: Rng>(rng: &mut R, ball: &Ball) -> Vec<f64> {
    let d = ball.dim();
    let r = ball.radius();
    if d == 1 {
        return vec![ball.center()[0] + r * (2.0 * rng.gen::<f64>() - 1.0)];
    }
    loop {
        let offset: Vec<f64> = (0..d).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        if offset.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            return ball
                .center()
                .iter()
                .zip(&offset)
                .map(|(c, o)| c + r * o)
                .collect();
        }
    }
}

/// Number of uniform samples from `ball` for which `hit` holds.
pub fn count_hits<F>(ball: &Ball, samples: usize, seed: u64, hit: F) -> u64
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut hits = 0u64;
            for _ in 0..len {
                let x = uniform_in_ball(&mut rng, ball);
                if hit(&x) {
                    hits += 1;
                }
            }
            hits
        })
        .sum()
}

/// Per-class hit counts: `classify` maps a sample to a class below
/// `classes`, or to `None`.
pub fn tally<F>(ball: &Ball, samples: usize, seed: u64, classes: usize, classify: F) -> Vec<u64>
where
    F: Fn(&[f64]) -> Option<usize> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut counts = vec![0u64; classes];
            for _ in 0..len {
                let x = uniform_in_ball(&mut rng, ball);
                if let Some(k) = classify(&x) {
                    counts[k] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; classes],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Draws `samples` points from `ball`, in stream order.
pub fn draw_points(ball: &Ball, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = substream(seed, c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len)
                .map(|_| uniform_in_ball(&mut rng, ball))
                .collect::<Vec<_>>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_do_not_depend_on_thread_count() {
        let ball = Ball::new(vec![0.5], 0.5).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| count_hits(&ball, 100_000, 7, |x| x[0] < 0.3))
        };
        let one = run(1);
        assert_eq!(one, run(4));
        // binomial(1e5, 0.3): sd ~ 145
        assert!((one as f64 - 30_000.0).abs() < 1_000.0);
    }

    #[test]
    fn points_are_reproducible_and_inside() {
        let ball = Ball::new(vec![0.0, 0.0], 2.0).unwrap();
        let a = draw_points(&ball, 1000, 3);
        assert_eq!(a, draw_points(&ball, 1000, 3));
        assert!(a.iter().all(|p| p[0] * p[0] + p[1] * p[1] < 4.0));
    }
}
