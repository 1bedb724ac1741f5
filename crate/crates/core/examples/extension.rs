//! Evaluates the extension operator on the indicator of Ω at points of RΛ and
//! compares |Ef(Rx)| with its value at the origin.

use decay_bounds::construction::ConstructionConfig;
use decay_bounds::extension::{extension_report, ExtensionBudget};
use decay_bounds::{Rational, Surface};

fn main() -> decay_bounds::Result<()> {
    let budget = ExtensionBudget {
        x_samples: 300,
        ..ExtensionBudget::default()
    };
    let sphere = ConstructionConfig::new(Surface::Sphere, 4, 1, Rational::int(3), None)?;
    let parab = ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None)?;
    for p in [sphere.at_lattice_radius(2, 1e8)?, parab.at_r(2f64.powi(24))?] {
        let r = extension_report(&p, budget, 3)?;
        println!(
            "{} R={:.3e}: min |Ef(Rx)|/meas(Omega) = {:.7}, max phase deviation {:.2e}, L1(mu) = {:.4e} +- {:.1e}",
            p.surface(),
            p.r,
            r.min_modulus_ratio,
            r.max_phase_deviation,
            r.l1_estimate,
            r.stderr
        );
    }
    Ok(())
}
