// The stable manifold of q1 computed twice: by shooting and by resumming
// its divergent series.

use keplerdrag::manifolds::{h_infinity_with, ws_q1_shoot, HInfinityOptions};
use keplerdrag::series::{compute_coefficients, evaluate_manifold, SummationMode};
use keplerdrag::{ChartId, ChartPoint, Params};

pub fn run_example() -> keplerdrag::Result<()> {
    let p = Params::new(1.0)?;
    let sc = compute_coefficients(&p, 40)?;
    for l in [0.1, 0.2, 0.3] {
        let shot = ws_q1_shoot(&p, l)?;
        let sum = evaluate_manifold(&sc, l, SummationMode::BorelPadeLaplace)?;
        let hinf = h_infinity_with(
            &ChartPoint::new(ChartId::C1, [shot.r1, shot.v, l]),
            &p,
            &HInfinityOptions::normalized(0.04),
        )?;
        println!(
            "l = {l}: shooting ({:.12}, {:+.12}), series ({:.12}, {:+.12}), gap {:.1e}, H_inf = {:.1e}",
            shot.r1,
            shot.v,
            sum.r1,
            sum.v,
            (shot.r1 - sum.r1).abs().max((shot.v - sum.v).abs()),
            hinf.value
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("shooting");
}
