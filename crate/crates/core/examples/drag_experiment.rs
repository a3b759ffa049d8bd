// A few orbits started near the H2 = 0.8 level set at small angular
// momentum, followed down to l = 1e-3.

use keplerdrag::cli::config::ScenarioConfig;
use keplerdrag::cli::simulate::run_orbit;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig::from_json(
        r#"{
            "delta": 1.0,
            "initial_conditions": {
                "level_set": { "h": 0.8, "count": 4, "rho2_range": [0.15, 0.2], "l_scale": [1.0, 0.1] }
            },
            "terminal": { "l_cut": 1e-3 }
        }"#,
    )?;
    for (i, (batch, start)) in cfg.initial_points()?.into_iter().enumerate() {
        let rec = run_orbit(i, batch, start, &cfg, None);
        let h = rec.h_infinity.as_ref().map_or(f64::NAN, |h| h.value);
        println!(
            "batch {batch} rho20 = {:.5}: {:?}, H_inf = {h:.9}, {} r maxima, {:?}, {} steps",
            start.c[0], rec.status, rec.itinerary.r_maxima, rec.itinerary.class, rec.accepted_steps
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("drag experiment");
}
