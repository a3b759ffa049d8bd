// Centre manifold of the equilibrium at infinity: fitted leading
// coefficient against -1/delta.

use keplerdrag::manifolds::center_manifold_fit;
use keplerdrag::Params;

pub fn run_example() -> keplerdrag::Result<()> {
    for delta in [0.5, 1.0, 2.0] {
        let fit = center_manifold_fit(&Params::new(delta)?, (0.05, 0.3))?;
        println!(
            "delta = {delta}: c = {:.8} (-1/delta = {:.8}), c2 = {:.4}, misfit {:.1e} over {} points",
            fit.c,
            -1.0 / delta,
            fit.c2,
            fit.residual,
            fit.points.len()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("center manifold");
}
