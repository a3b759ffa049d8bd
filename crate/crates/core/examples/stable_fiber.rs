// Points at height l0 whose orbits limit onto a chosen periodic orbit.

use keplerdrag::manifolds::stable_fiber;
use keplerdrag::Params;

pub fn run_example() -> keplerdrag::Result<()> {
    let p = Params::new(1.0)?;
    let l0 = 0.1;
    for h in [0.2, 0.3] {
        for k in 0..4 {
            let phi = std::f64::consts::FRAC_PI_2 * k as f64;
            let f = stable_fiber(h, phi, l0, &p)?;
            println!(
                "h = {h}, phi = {phi:.4}: (r1, v) = ({:.10}, {:+.10}), lifted from level {:.8}, |H_inf - h| = {:.1e}",
                f.r1,
                f.v,
                f.s,
                (f.h_infinity.value - h).abs()
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("stable fiber");
}
