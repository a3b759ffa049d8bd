// Level sets of H on the collision plane.

use keplerdrag::cli::portrait::level_set;

pub fn run_example() -> keplerdrag::Result<()> {
    for h in [0.0, 0.125, 0.3, 0.5, 0.8] {
        let set = level_set(h, 361)?;
        println!(
            "h = {h:<5}: {} vertices, r1 in [{:.6}, {}], {}",
            set.points.len(),
            set.r1_min,
            if set.r1_max.is_finite() {
                format!("{:.6}", set.r1_max)
            } else {
                "inf".into()
            },
            if set.bounded {
                "closed oval"
            } else {
                "open in r1, closed through l2 = 0"
            }
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("portrait");
}
