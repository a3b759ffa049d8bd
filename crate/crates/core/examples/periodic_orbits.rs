// Periodic orbits of the l = 0 problem: turning points, period and action
// against their closed forms.

use keplerdrag::manifolds::{
    action_and_frequency, action_closed_form, gamma1, period_closed_form, r1_minus, r1_plus,
};

pub fn run_example() -> keplerdrag::Result<()> {
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12} {:>10}",
        "h", "r1-", "r1+", "period", "action", "omega0"
    );
    for h in [0.05, 0.125, 0.3, 0.45] {
        let orbit = gamma1(h)?;
        let af = action_and_frequency(h)?;
        println!(
            "{h:>6} {:>12.9} {:>12.9} {:>12.8} {:>12.8} {:>10.6}",
            orbit.r1_minus, orbit.r1_plus, orbit.period, af.action, af.omega0
        );
        println!(
            "{:>6} {:>12.1e} {:>12.1e} {:>12.1e} {:>12.1e}",
            "err",
            (orbit.r1_minus - r1_minus(h)).abs(),
            (orbit.r1_plus - r1_plus(h)).abs(),
            (orbit.period - period_closed_form(h)).abs(),
            (af.action - action_closed_form(h)).abs()
        );
    }
    let small = gamma1(1e-4)?;
    println!(
        "harmonic limit: p(1e-4) = {:.6}, 2 pi = {:.6}",
        small.period,
        std::f64::consts::TAU
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("periodic orbits");
}
