// Formal series of the stable manifold of q1: coefficients, growth rate,
// and both summation methods.

use keplerdrag::series::{compute_coefficients, evaluate_manifold, gevrey_fit, SummationMode};
use keplerdrag::Params;

pub fn run_example() -> keplerdrag::Result<()> {
    let p = Params::new(1.0)?;
    let sc = compute_coefficients(&p, 40)?;
    for n in 1..=6 {
        let [a, b] = &sc.exact[n - 1];
        println!("Y_{n} = ({a}, {b})");
    }
    println!("parity holds: {}", sc.parity_holds());

    for delta in [0.5, 1.0, 2.0] {
        let fit = gevrey_fit(&compute_coefficients(&Params::new(delta)?, 40)?)?;
        println!(
            "delta = {delta}: |Y_n| ~ {:.3} * {:.4}^n * n!  (R^2 = {:.6})",
            fit.a, fit.b, fit.r_squared
        );
    }

    println!(
        "{:>5} {:>22} {:>22} {:>10}",
        "l", "r1 (Borel-Pade)", "r1 (truncated)", "diff"
    );
    for l in [0.05, 0.1, 0.2, 0.3, 0.4] {
        let bpl = evaluate_manifold(&sc, l, SummationMode::BorelPadeLaplace)?;
        let tro = evaluate_manifold(&sc, l, SummationMode::TruncatedOptimal)?;
        println!(
            "{l:>5} {:>22.16} {:>22.16} {:>10.2e}",
            bpl.r1,
            tro.r1,
            (bpl.r1 - tro.r1).abs()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("series summation");
}
