//! Builds the spatial set Λ and frequency set Ω for one sphere and one paraboloid
//! configuration, and prints their scales and sizes.

use decay_bounds::construction::{
    build_lambda, build_omega, enumerate_gamma, lambda_volume, omega_measure, ConstructionConfig,
    ConstructionParams,
};
use decay_bounds::{Rational, Surface};

fn show(p: &ConstructionParams) -> decay_bounds::Result<()> {
    let lambda = build_lambda(p);
    let omega = build_omega(p)?;
    println!(
        "{} d={} m={} alpha={} kappa={}  R = {:.4e}",
        p.surface(),
        p.d(),
        p.m(),
        p.alpha(),
        p.kappa(),
        p.r
    );
    println!("  scales      {}", serde_json::to_string(&p.scales).unwrap());
    println!("  patches     {}", omega.patch_count());
    println!("  |Lambda|    {:.4e}", lambda_volume(&lambda, 100_000, 1)?.value);
    println!("  meas(Omega) {:.4e}", omega_measure(&omega, 64, 1)?.value);
    Ok(())
}

fn main() -> decay_bounds::Result<()> {
    for n in 1..=3 {
        let g = enumerate_gamma(n, 3)?;
        println!("|Gamma| in Z^3 at N={n}: {}", g.len());
    }
    let sphere = ConstructionConfig::new(Surface::Sphere, 4, 1, Rational::int(3), None)?;
    show(&sphere.at_lattice_radius(2, 1e8)?)?;
    let parab = ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None)?;
    show(&parab.at_r(2f64.powi(20))?)?;
    Ok(())
}
