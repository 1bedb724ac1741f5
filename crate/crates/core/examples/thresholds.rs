//! Dimension thresholds implied by the paraboloid bound, d = 3..12.

use decay_bounds::exponents::falconer_threshold;

fn main() -> decay_bounds::Result<()> {
    for d in 3..=12 {
        let t = falconer_threshold(d)?;
        println!("d = {d:>2}  threshold = {t:<8} ({:.5})", t.to_f64());
    }
    Ok(())
}
