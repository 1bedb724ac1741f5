//! Samples (x, ξ) ∈ Λ × Ω, splits R x·ξ into an integer multiple of 2π plus
//! bounded residuals, and reports the worst deviation.

use decay_bounds::construction::{build_lambda, build_omega, ConstructionConfig};
use decay_bounds::extension::{verify_phase, PhaseContext, PHASE_WINDOW};
use decay_bounds::{Rational, Surface};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> decay_bounds::Result<()> {
    let cfg = ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for e in [20, 24, 28] {
        let p = cfg.at_r(2f64.powi(e))?;
        let rep = verify_phase(&p, 10_000, 5)?;
        println!(
            "R = 2^{e}: max deviation {:.3e} (window {PHASE_WINDOW}), double-double mismatch {:.1e}",
            rep.max_deviation,
            rep.max_mismatch.unwrap_or(f64::NAN)
        );
        let (lambda, omega) = (build_lambda(&p), build_omega(&p)?);
        let (x, xi) = (lambda.sample(&mut rng)?, omega.sample(&mut rng)?);
        let dec = PhaseContext::new(&p).decompose(&x, &xi);
        println!("  one sample: integer part {}", dec.integer_part);
        for r in &dec.residuals {
            println!("  {:<28} {:>11.3e}  bound {:.3e}", r.name, r.value, r.bound);
        }
    }
    Ok(())
}
