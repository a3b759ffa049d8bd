// One physical state expressed in every chart of the atlas, and back.

use keplerdrag::{from_physical, to_physical, transition, ChartId, PhysicalState};

pub fn run_example() -> keplerdrag::Result<()> {
    let state = PhysicalState::new(0.3, -0.4, 0.25);
    println!(
        "physical state: r = {}, rdot = {}, l = {}",
        state.r, state.rdot, state.l
    );

    let c2 = from_physical(&state, ChartId::C2)?;
    for id in ChartId::ALL {
        let p = match transition(&c2, id) {
            Ok(p) => p,
            Err(e) => {
                println!("{:>7}: not reachable here ({e})", id.name());
                continue;
            }
        };
        let back = to_physical(&p)?;
        let [a, b, c] = id.coordinate_names();
        println!(
            "{:>7}: {a} = {:+.6e}, {b} = {:+.6e}, {c} = {:+.6e}   |dr| = {:.1e}",
            id.name(),
            p.c[0],
            p.c[1],
            p.c[2],
            (back.r - state.r).abs()
        );
    }

    // the blowup boundary l = 0 is a regular plane of C1 and C2
    let collision = keplerdrag::ChartPoint::new(ChartId::C2, [0.5, -1.0, 0.0]);
    println!("l = 0 point: H = {}", collision.hamiltonian());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("charts tour");
}
