//! Sweeps R, measures ‖Ef‖_{L¹(μ)} / (c_α(μ)^{1/2} ‖f‖₂) and fits its slope in log R.

use decay_bounds::construction::ConstructionConfig;
use decay_bounds::experiment::{closed_form_factors, fit_exponent, scaling_run, RList, ScaleSpec, ScalingBudget};
use decay_bounds::{Rational, Surface};

fn main() -> decay_bounds::Result<()> {
    let cfg = ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None)?;
    let rs: RList = "2^20:2^30:2^2".parse()?;
    let scales: Vec<ScaleSpec> = rs.0.into_iter().map(ScaleSpec::R).collect();
    let table = scaling_run(&cfg, &scales, ScalingBudget::default(), 11)?;
    table.write_csv(std::io::stdout())?;
    let fit = fit_exponent(&table)?;
    println!(
        "slope {:.4} +- {:.4}, target {} ({:.4})",
        fit.slope,
        fit.stderr,
        fit.target_slope,
        fit.target_slope.to_f64()
    );
    println!("measured / closed form: {:?}", closed_form_factors(&table));
    Ok(())
}
