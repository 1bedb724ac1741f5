//! R-sweeps of the dual-estimate ratio, slope fits, and exact bound tables.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::construction::{max_r_from_env, ConstructionConfig, ConstructionParams};
use crate::error::{Error, Result};
use crate::exponents::{lower_bound, prior_upper_bound, Branch, ExponentQuery, Surface};
use crate::extension::{l1_norm_on_mu, ExtensionEvaluator};
use crate::measure::{c_alpha_oracle, FractalMeasure, OracleBudget};
use crate::rational::{q, Rational};
use crate::sampling::{task_index, Estimate};

/// How a row's scale is chosen: R directly (paraboloid) or the lattice radius N (sphere).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ScaleSpec {
    R(f64),
    N(u64),
}

impl ScaleSpec {
    pub fn instantiate(&self, config: &ConstructionConfig, max_r: f64) -> Result<ConstructionParams> {
        match (*self, config.surface) {
            (ScaleSpec::R(r), Surface::Paraboloid) => config.at_r(r),
            (ScaleSpec::N(n), Surface::Sphere) => config.at_lattice_radius(n, max_r),
            (ScaleSpec::R(_), Surface::Sphere) => Err(Error::InvalidParams(
                "sphere scales are set by the lattice radius N".into(),
            )),
            (ScaleSpec::N(_), Surface::Paraboloid) => Err(Error::InvalidParams(
                "paraboloid scales are set by R".into(),
            )),
        }
    }

    /// Nominal R for ordering rows, before any construction is built.
    pub fn nominal_r(&self, kappa: Rational) -> f64 {
        match *self {
            ScaleSpec::R(r) => r,
            ScaleSpec::N(n) => (std::f64::consts::TAU * n as f64).powf(1.0 / kappa.to_f64()),
        }
    }
}

impl fmt::Display for ScaleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleSpec::R(r) => write!(f, "R={r}"),
            ScaleSpec::N(n) => write!(f, "N={n}"),
        }
    }
}

/// Parses `2^20`, `1e6` or a plain number.
pub fn parse_scale_value(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('^') {
        Some((b, e)) => {
            let b: f64 = b.trim().parse().map_err(|_| Error::parse("R", format!("bad base in {s:?}")))?;
            let e: f64 = e.trim().parse().map_err(|_| Error::parse("R", format!("bad exponent in {s:?}")))?;
            b.powf(e)
        }
        None => s.parse().map_err(|_| Error::parse("R", format!("not a number: {s:?}")))?,
    };
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::parse("R", format!("{s:?} is not a positive finite number")));
    }
    Ok(v)
}

/// An R list: comma separated values, or `start:end:factor` for a geometric range
/// such as `2^20:2^30:2^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct RList(pub Vec<f64>);

impl FromStr for RList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(RList(vec![]));
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [single] => single
                .split(',')
                .map(parse_scale_value)
                .collect::<Result<_>>()
                .map(RList),
            [a, b, f] => {
                let (a, b, f) = (parse_scale_value(a)?, parse_scale_value(b)?, parse_scale_value(f)?);
                if f <= 1.0 || b < a {
                    return Err(Error::parse("R", format!("range {s:?} needs start <= end and factor > 1")));
                }
                let mut out = vec![];
                let mut r = a;
                while r <= b * (1.0 + 1e-12) {
                    out.push(r);
                    r *= f;
                    if out.len() > 10_000 {
                        return Err(Error::parse("R", "range has too many values"));
                    }
                }
                Ok(RList(out))
            }
            _ => Err(Error::parse("R", format!("expected a list or start:end:factor, got {s:?}"))),
        }
    }
}

/// A list of lattice radii: `1,2,3` or `1..5` (inclusive).
#[derive(Clone, Debug, PartialEq)]
pub struct NList(pub Vec<u64>);

impl FromStr for NList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(NList(vec![]));
        }
        let bad = |v: &str| Error::parse("N", format!("not a positive integer: {v:?}"));
        let parse = |v: &str| -> Result<u64> {
            let n: u64 = v.trim().parse().map_err(|_| bad(v))?;
            if n == 0 {
                return Err(bad(v));
            }
            Ok(n)
        };
        if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (parse(a)?, parse(b)?);
            if b < a {
                return Err(Error::parse("N", format!("empty range {s:?}")));
            }
            return Ok(NList((a..=b).collect()));
        }
        s.split(',').map(parse).collect::<Result<_>>().map(NList)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalingBudget {
    pub x_samples: usize,
    pub phase_samples: usize,
    pub mc_samples: usize,
    pub nodes_per_patch: usize,
    pub oracle: OracleBudget,
}

impl Default for ScalingBudget {
    fn default() -> Self {
        ScalingBudget {
            x_samples: 1000,
            phase_samples: 10_000,
            mc_samples: 100_000,
            nodes_per_patch: 64,
            oracle: OracleBudget::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub scale: ScaleSpec,
    pub r: f64,
    pub l1: Estimate,
    pub c_alpha: Estimate,
    pub mass: Estimate,
    pub omega: Estimate,
    /// `meas(Ω)^{1/2}`
    pub f_l2: f64,
    pub ratio: f64,
    /// `sqrt(meas(Ω)·|Λ|)·R^{(d−α)/2}`, the ratio's closed form.
    pub closed_form: f64,
    pub failure: Option<String>,
}

impl ScalingRow {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }

    fn failed(scale: ScaleSpec, r: f64, e: &Error) -> Self {
        let nan = Estimate { value: f64::NAN, stderr: f64::NAN };
        ScalingRow {
            scale,
            r,
            l1: nan,
            c_alpha: nan,
            mass: nan,
            omega: nan,
            f_l2: f64::NAN,
            ratio: f64::NAN,
            closed_form: f64::NAN,
            failure: Some(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingTable {
    pub config: ConstructionConfig,
    pub rows: Vec<ScalingRow>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    surface: String,
    d: usize,
    m: usize,
    alpha: String,
    kappa: String,
    #[serde(rename = "R")]
    r: f64,
    l1: f64,
    l1_err: f64,
    c_alpha: f64,
    mass: f64,
    f_l2: f64,
    ratio: f64,
    closed_form: f64,
    failure: &'a str,
}

impl ScalingTable {
    pub fn ok_rows(&self) -> impl Iterator<Item = &ScalingRow> {
        self.rows.iter().filter(|r| r.ok())
    }

    /// CSV with the fixed columns followed by `closed_form` and `failure`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let c = &self.config;
        for row in &self.rows {
            w.serialize(CsvRow {
                surface: c.surface.to_string(),
                d: c.d,
                m: c.m,
                alpha: c.alpha.to_string(),
                kappa: c.kappa.to_string(),
                r: row.r,
                l1: row.l1.value,
                l1_err: row.l1.stderr,
                c_alpha: row.c_alpha.value,
                mass: row.mass.value,
                f_l2: row.f_l2,
                ratio: row.ratio,
                closed_form: row.closed_form,
                failure: row.failure.as_deref().unwrap_or(""),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

fn scaling_row(params: &ConstructionParams, budget: &ScalingBudget, seed: u64) -> Result<ScalingRow> {
    let eval = ExtensionEvaluator::new(params, budget.nodes_per_patch, seed)?;
    let mu = FractalMeasure::from_params(params, budget.mc_samples, seed)?;
    let l1 = l1_norm_on_mu(&eval, mu.mass, budget.x_samples, seed)?;
    let oracle = c_alpha_oracle(&mu, budget.oracle, seed)?;
    let c_alpha = Estimate {
        value: oracle.value,
        stderr: oracle.stderr,
    };
    let f_l2 = eval.omega.value.sqrt();
    let ratio = l1.value / ((c_alpha.value * mu.mass.value).sqrt() * f_l2);
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::EmptyConstruction(format!("ratio {ratio} is not positive")));
    }
    let d = params.d() as f64;
    let a = params.alpha().to_f64();
    let closed_form = (eval.omega.value * mu.mass.value).sqrt() * params.r.powf((d - a) / 2.0);
    Ok(ScalingRow {
        scale: ScaleSpec::R(params.r),
        r: params.r,
        l1,
        c_alpha,
        mass: mu.mass,
        omega: eval.omega,
        f_l2,
        ratio,
        closed_form,
        failure: None,
    })
}

/// One row per scale; failures are kept with their reason. Rows come back sorted by R.
pub fn scaling_run(
    config: &ConstructionConfig,
    scales: &[ScaleSpec],
    budget: ScalingBudget,
    seed: u64,
) -> Result<ScalingTable> {
    let max_r = max_r_from_env()?;
    let mut rows: Vec<ScalingRow> = scales
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let nominal = s.nominal_r(config.kappa);
            let row_seed = task_index(seed, i as u64);
            match s.instantiate(config, max_r) {
                Ok(p) => match scaling_row(&p, &budget, row_seed) {
                    Ok(mut row) => {
                        row.scale = *s;
                        row
                    }
                    Err(e) => ScalingRow::failed(*s, p.r, &e),
                },
                Err(e) => ScalingRow::failed(*s, nominal, &e),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.r.total_cmp(&b.r));
    Ok(ScalingTable {
        config: config.clone(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub target_slope: Rational,
    pub rows_used: usize,
    /// Largest |residual| in log space.
    pub max_residual: f64,
}

impl FitResult {
    pub fn within(&self, tol: f64) -> bool {
        (self.slope - self.target_slope.to_f64()).abs() <= tol
    }
}

/// `−κ + (1 − α)/2`.
pub fn target_slope(kappa: Rational, alpha: Rational) -> Rational {
    -kappa + (Rational::ONE - alpha) / 2
}

/// Ordinary least squares of `ln(ratio)` on `ln(R)` over the rows that succeeded.
pub fn fit_exponent(table: &ScalingTable) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = table.ok_rows().map(|r| (r.r.ln(), r.ratio.ln())).collect();
    let target = target_slope(table.config.kappa, table.config.alpha);
    let (slope, intercept, stderr, max_residual) = ols(&pts)?;
    Ok(FitResult {
        slope,
        intercept,
        stderr,
        target_slope: target,
        rows_used: pts.len(),
        max_residual,
    })
}

/// Slope, intercept, slope stderr and the largest absolute residual.
pub fn ols(pts: &[(f64, f64)]) -> Result<(f64, f64, f64, f64)> {
    let n = pts.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!(
            "a slope fit needs at least 4 rows, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all rows share one R".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res: Vec<f64> = pts.iter().map(|p| p.1 - intercept - slope * p.0).collect();
    let sse: f64 = res.iter().map(|r| r * r).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let max_residual = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok((slope, intercept, stderr, max_residual))
}

/// Per-row agreement of the measured ratio with its closed form.
pub fn closed_form_factors(table: &ScalingTable) -> Vec<f64> {
    table.ok_rows().map(|r| r.ratio / r.closed_form).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    pub alpha: Rational,
    pub lower: Option<Rational>,
    pub new_upper: Option<Rational>,
    pub branch: Option<Branch>,
    pub prior_upper: Option<Rational>,
    pub gap_to_prior: Option<Rational>,
    pub gap_to_lower: Option<Rational>,
    pub error: Option<String>,
}

/// Exact comparison of the lattice bound against the prior upper bound and the
/// lower bound. Out-of-domain α gives a flagged row.
pub fn bounds_report(surface: Surface, d: i64, alphas: &[Rational]) -> Vec<BoundsRow> {
    let mut seen = Vec::new();
    let mut rows = Vec::new();
    for &alpha in alphas {
        if seen.contains(&alpha) {
            continue;
        }
        seen.push(alpha);
        let res = ExponentQuery::new(surface, d, alpha).and_then(|qy| {
            let b = qy.bound()?;
            let prior = prior_upper_bound(surface, d, alpha)?;
            let lower = lower_bound(alpha, d)?;
            Ok((b, prior, lower))
        });
        rows.push(match res {
            Ok((b, prior, lower)) => BoundsRow {
                alpha,
                lower: Some(lower),
                new_upper: Some(b.beta_upper),
                branch: Some(b.branch),
                prior_upper: Some(prior),
                gap_to_prior: Some(prior - b.beta_upper),
                gap_to_lower: Some(b.beta_upper - lower),
                error: None,
            },
            Err(e) => BoundsRow {
                alpha,
                lower: None,
                new_upper: None,
                branch: None,
                prior_upper: None,
                gap_to_prior: None,
                gap_to_lower: None,
                error: Some(e.to_string()),
            },
        });
    }
    rows
}

pub fn write_bounds_csv<W: Write>(rows: &[BoundsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "lower", "new_upper", "branch", "prior_upper", "gap_to_prior", "gap_to_lower", "error"])?;
    let s = |v: &Option<Rational>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.alpha.to_string(),
            s(&r.lower),
            s(&r.new_upper),
            r.branch.map(|b| b.to_string()).unwrap_or_default(),
            s(&r.prior_upper),
            s(&r.gap_to_prior),
            s(&r.gap_to_lower),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorollaryReport {
    pub d: i64,
    /// `(α, paraboloid upper bound, lower bound)` on a step-1/16 grid of `[d−1, d)`.
    pub rows: Vec<(Rational, Rational, Rational)>,
    pub all_equal: bool,
}

/// On `[d−1, d)` the paraboloid bound equals the lower bound `(d−1)α/d`.
pub fn corollary_check(d: i64) -> Result<CorollaryReport> {
    let grid = Rational::grid(Rational::int(d - 1), Rational::int(d) - q(1, 16), q(1, 16));
    let mut rows = Vec::with_capacity(grid.len());
    for alpha in grid {
        let upper = ExponentQuery::paraboloid(d, alpha)?.bound()?.beta_upper;
        let lower = lower_bound(alpha, d)?;
        rows.push((alpha, upper, lower));
    }
    let all_equal = rows
        .iter()
        .all(|&(a, u, l)| u == l && l == a * (d - 1) / d);
    Ok(CorollaryReport { d, rows, all_equal })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_list_forms() {
        let r: RList = "2^20:2^30:2^2".parse().unwrap();
        assert_eq!(r.0.len(), 6);
        assert_eq!(r.0[5], 2f64.powi(30));
        let r: RList = "1e6, 2^10".parse().unwrap();
        assert_eq!(r.0, vec![1e6, 1024.0]);
        assert!("2^x".parse::<RList>().is_err());
        assert!("".parse::<RList>().unwrap().0.is_empty());
        let n: NList = "1..4".parse().unwrap();
        assert_eq!(n.0, vec![1, 2, 3, 4]);
        assert!("0".parse::<NList>().is_err());
    }

    #[test]
    fn target_slopes() {
        assert_eq!(target_slope(q(1, 6), Rational::int(2)), q(-2, 3));
        assert_eq!(target_slope(q(1, 6), Rational::int(3)), q(-7, 6));
    }

    #[test]
    fn constant_ratio_has_zero_slope() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 2.5f64.ln())).collect();
        let (s, _, _, _) = ols(&pts).unwrap();
        assert!(s.abs() < 1e-14);
        assert!(ols(&pts[..3]).is_err());
    }

    #[test]
    fn bounds_rows() {
        let rows = bounds_report(Surface::Paraboloid, 3, &[Rational::int(2), Rational::int(2)]);
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.lower, Some(q(4, 3)));
        assert_eq!(r.new_upper, Some(q(4, 3)));
        assert_eq!(r.prior_upper, Some(q(3, 2)));
        assert_eq!(r.gap_to_prior, Some(q(1, 6)));
        assert_eq!(r.gap_to_lower, Some(Rational::ZERO));
        let s = bounds_report(Surface::Sphere, 4, &[Rational::int(3)]);
        assert_eq!(s[0].new_upper, Some(q(7, 3)));
        assert_eq!(s[0].prior_upper, Some(q(5, 2)));
    }

    #[test]
    fn corollary_small_dims() {
        for d in [3, 4, 10] {
            assert!(corollary_check(d).unwrap().all_equal);
        }
    }

    #[test]
    fn empty_scaling_run() {
        let cfg = ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None).unwrap();
        let t = scaling_run(&cfg, &[], ScalingBudget::default(), 1).unwrap();
        assert!(t.rows.is_empty());
    }
}
