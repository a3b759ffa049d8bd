// Named equilibria of the charts and their spectra for a few drag values.

use keplerdrag::dynamics::equilibria;
use keplerdrag::{ChartId, Params};

pub fn run_example() -> keplerdrag::Result<()> {
    for delta in [0.5, 1.0, 2.0] {
        let p = Params::new(delta)?;
        println!("delta = {delta}");
        for id in [
            ChartId::C1,
            ChartId::C2,
            ChartId::C21,
            ChartId::C21Inf,
            ChartId::C23Inf,
        ] {
            for e in equilibria(id, &p) {
                let ev: Vec<String> = e
                    .eigenvalues
                    .iter()
                    .map(|z| format!("{:.4}{:+.4}i", z.re, z.im))
                    .collect();
                print!(
                    "  {:<9} {:>7} {:?}  eigenvalues [{}]",
                    e.name,
                    id.name(),
                    e.coords,
                    ev.join(", ")
                );
                if let Some(pl) = &e.in_plane {
                    let pl: Vec<String> = pl.iter().map(|z| format!("{:.4}", z.re)).collect();
                    print!("  in-plane [{}]", pl.join(", "));
                }
                println!();
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("equilibria");
}
