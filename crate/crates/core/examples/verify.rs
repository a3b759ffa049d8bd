// The analytic-identity battery, once clean and once with an injected fault.

use keplerdrag::cli::config::VerifyConfig;
use keplerdrag::cli::verify::run_battery;

pub fn run_example() -> keplerdrag::Result<()> {
    let cfg = VerifyConfig {
        samples: 2000,
        ..VerifyConfig::default()
    };
    for delta in [0.5, 1.0] {
        println!("delta = {delta}");
        for c in run_battery(delta, &cfg)?.checks {
            println!("  {}", c.line());
        }
    }
    let faulty = run_battery(
        1.0,
        &VerifyConfig {
            inject_fault: true,
            ..cfg
        },
    )?;
    println!("with injected fault: all passed = {}", faulty.all_passed());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("verify");
}
