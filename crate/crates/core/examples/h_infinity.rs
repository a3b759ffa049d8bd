// Limiting eccentricity of an orbit: both estimators, and the measured rate
// at which H and H1 settle as l decreases.

use keplerdrag::manifolds::{cutoff_profile, h_infinity_with, r1_minus, HInfinityOptions};
use keplerdrag::{ChartId, ChartPoint, Params};

pub fn run_example() -> keplerdrag::Result<()> {
    let p = Params::new(1.0)?;
    for h in [0.1, 0.25, 0.4] {
        let start = ChartPoint::new(ChartId::C1, [r1_minus(h), 0.0, 0.1]);
        let est = h_infinity_with(&start, &p, &HInfinityOptions::normalized(0.04))?;
        println!(
            "start on H = {h}, l = 0.1: H_inf = {:.10} +- {:.1e} ({} steps)",
            est.value, est.error_bound, est.steps
        );
        // H1 reaches the integration noise floor (~1e-9) below l = 0.02
        let runs: [(&str, &[f64], HInfinityOptions); 2] = [
            (
                "H1",
                &[0.08, 0.04, 0.02],
                HInfinityOptions::normalized(0.04),
            ),
            ("H ", &[0.08, 0.04, 0.02, 0.01], HInfinityOptions::raw(0.04)),
        ];
        for (name, cut, opts) in runs {
            let prof = cutoff_profile(&start, &p, cut, &opts)?;
            println!(
                "    {name} at l = {cut:?}: {:.10?}, observed order {:.2}",
                prof.values,
                prof.empirical_order().unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("h_infinity");
}
