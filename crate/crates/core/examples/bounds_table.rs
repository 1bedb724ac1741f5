//! Exact decay exponents for both surfaces next to the prior and lower bounds.
//!
//! cargo run --example bounds_table -- 6

use decay_bounds::experiment::{bounds_report, write_bounds_csv};
use decay_bounds::rational::q;
use decay_bounds::{Rational, Surface};

fn main() -> decay_bounds::Result<()> {
    let d: i64 = std::env::args().nth(1).map(|s| s.parse().expect("d")).unwrap_or(5);
    let grid = Rational::open_grid(q(d, 2), Rational::int(d), q(1, 4));
    for surface in [Surface::Sphere, Surface::Paraboloid] {
        println!("# {surface}, d = {d}");
        write_bounds_csv(&bounds_report(surface, d, &grid), std::io::stdout())?;
    }
    Ok(())
}
