//! Estimates c_α(μ) = sup μ(B(x,r))/r^α for the normalized measure on Λ and
//! prints the per-scale profile with the regime the exact table assigns.

use decay_bounds::construction::ConstructionConfig;
use decay_bounds::measure::{c_alpha_oracle, verify_params_balance, FractalMeasure, OracleBudget};
use decay_bounds::{Rational, Surface};

fn main() -> decay_bounds::Result<()> {
    let cfg = ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None)?;
    let p = cfg.at_r(2f64.powi(16))?;
    let mu = FractalMeasure::from_params(&p, 100_000, 1)?;
    let o = c_alpha_oracle(&mu, OracleBudget::default(), 1)?;
    println!("c_alpha ~ {:.4e} +- {:.1e}, attained at r = {:.3e}", o.value, o.stderr, o.argmax_r);
    println!("{:>11} {:>6} {:>11} {:>11}", "r", "regime", "oracle", "model");
    for row in &o.profile.rows {
        println!(
            "{:>11.3e} {:>6} {:>11.3e} {:>11.3e}",
            row.r, row.regime_label, row.oracle_value, row.model_value
        );
    }
    let bal = verify_params_balance(&p)?;
    println!("exponent balance at alpha - d = {}:", bal.target);
    for r in &bal.rows {
        println!("  {:<3} sup exponent {}", r.label, r.sup_exponent);
    }
    Ok(())
}
