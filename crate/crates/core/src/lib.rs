//! Executable experiments for metric Diophantine approximation on
//! non-degenerate manifolds.
//!
//! The crate is organised bottom-up:
//!
//! * [`manifold`]: polynomial maps, exact derivatives, derivative bounds.
//! * [`approxfn`]: error functions ψ, Ψ and series diagnostics.
//! * [`linforms`]: residues, box enumeration, the Minkowski solver.
//! * [`resonant`]: resonant sets, anchoring, tube measures.
//! * [`measure`]: measure of the limsup set and the constants chain.
//! * [`regsys`]: regular-system certificates and dyadic overlap blocks.
//! * [`counting`]: solution counts for the main inequality.
//! * [`cli`]: the config-driven experiment runner behind the `dioph-lab` binary.

// `!(x > 0.0)` rejects NaN along with the non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approxfn;
pub mod cli;
pub mod counting;
pub mod error;
pub mod intervals;
pub mod linforms;
pub mod manifold;
pub mod measure;
pub mod plot;
pub mod poly;
pub mod regsys;
pub mod resonant;
pub mod sampling;

pub use approxfn::{ApproxFn, SeriesVerdict, Verdict};
pub use error::{Error, Result};
pub use intervals::IntervalUnion;
pub use linforms::{IntegerForm, MinkowskiBox};
pub use manifold::{Ball, DerivBounds, ManifoldMap, MapSpec};
pub use measure::{DomainConstants, MeasureEstimate, Method};
pub use regsys::{OverlapReport, RegularSystemCertificate};
pub use resonant::{Anchor, ResonantSet};

/// Runs `f` on a dedicated pool with `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}
