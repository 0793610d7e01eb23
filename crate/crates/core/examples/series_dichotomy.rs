//! Convergence diagnostics for the built-in ψ families, before and after the
//! transform to Ψ.
use dioph_lab::approxfn::{builtin_grid, classify_series, transform_to_big_psi};

fn main() -> dioph_lab::Result<()> {
    println!(
        "{:<18} {:>12} {:>12} {:>14}",
        "psi", "direct", "dyadic", "Psi (n=2,d=1)"
    );
    for psi in builtin_grid() {
        let v = classify_series(&psi, 1, 0.0, 1 << 20)?;
        let big = transform_to_big_psi(&psi, 2, 1, 2.2);
        let w = classify_series(&big, 1, 0.0, 1 << 20)?;
        println!(
            "{:<18} {:>12} {:>12} {:>14}",
            psi.to_string(),
            v.direct_verdict.to_string(),
            v.dyadic_verdict.to_string(),
            w.verdict.to_string()
        );
    }
    Ok(())
}
