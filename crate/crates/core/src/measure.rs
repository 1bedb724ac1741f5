//! μ = χ_Λ dx: ball measures, the per-scale Frostman quantity `c_α(μ, r)` and
//! its supremum, through closed forms, a block model and a sampling oracle.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::construction::{build_lambda, lambda_volume, AxisUnion, ConstructionParams, SlabSet};
use crate::error::{Error, Result};
use crate::exponents::Surface;
use crate::rational::{q, Rational};
use crate::sampling::{norm2, task_index, task_rng, unit_ball_volume, Estimate};

/// Relative MC error at which `mu_ball` stops doubling.
pub const MU_BALL_TOLERANCE: f64 = 0.05;

/// Largest sandwich ratio accepted when MC cannot reach the tolerance.
pub const SANDWICH_GAP: f64 = 4.0;

/// Points per octave of the r-grid.
pub const GRID_STEPS_PER_OCTAVE: u32 = 4;

#[derive(Clone, Debug, Serialize)]
pub struct FractalMeasure {
    pub slabset: SlabSet,
    pub params: Option<ConstructionParams>,
    pub alpha: f64,
    /// Total mass `|Λ|`.
    pub mass: Estimate,
}

impl FractalMeasure {
    pub fn from_params(params: &ConstructionParams, mc_samples: usize, seed: u64) -> Result<Self> {
        let slabset = build_lambda(params);
        let mass = lambda_volume(&slabset, mc_samples, seed)?;
        Ok(FractalMeasure {
            slabset,
            params: Some(params.clone()),
            alpha: params.alpha().to_f64(),
            mass,
        })
    }

    /// χ_S dx for an arbitrary block set, e.g. the whole unit ball.
    pub fn from_slabset(slabset: SlabSet, alpha: f64, mc_samples: usize, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < slabset.d as f64) {
            return Err(Error::Domain(format!("alpha = {alpha} outside (0, {})", slabset.d)));
        }
        let mass = lambda_volume(&slabset, mc_samples, seed)?;
        Ok(FractalMeasure {
            slabset,
            params: None,
            alpha,
            mass,
        })
    }

    pub fn d(&self) -> usize {
        self.slabset.d
    }
}

/// `μ(B(x, r))` with the box sandwich it was refined from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallMeasure {
    pub value: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BallMeasure {
    fn exact(v: f64) -> Self {
        BallMeasure {
            value: v,
            stderr: 0.0,
            lower: v,
            upper: v,
        }
    }
}

/// Per-axis unions of cell cubes (circumscribed, or inscribed when `inner_cells`)
/// inside `x ± half_window`, clipped to `[−clip, clip]`. `None` when some axis is empty.
fn axis_unions(
    set: &SlabSet,
    x: &[f64],
    half_window: f64,
    clip: f64,
    inner_cells: bool,
) -> Option<Vec<AxisUnion>> {
    let mut out = Vec::with_capacity(set.d);
    let mut i = 0;
    for b in &set.blocks {
        let half = if inner_cells {
            b.radius / (b.dims as f64).sqrt()
        } else {
            b.radius
        };
        for _ in 0..b.dims {
            let lo = (x[i] - half_window).max(-clip);
            let hi = (x[i] + half_window).min(clip);
            out.push(AxisUnion::new(b.period, half, lo, hi)?);
            i += 1;
        }
    }
    Some(out)
}

fn product_length(axes: &Option<Vec<AxisUnion>>) -> f64 {
    axes.as_ref()
        .map_or(0.0, |a| a.iter().map(|u| u.length()).product())
}

/// `μ(B(x, r))`: inner and outer box bounds, refined by Monte-Carlo over the outer
/// box with the sample count doubled until the relative error is under 5%.
pub fn mu_ball(
    measure: &FractalMeasure,
    x: &[f64],
    r: f64,
    n_samples: usize,
    seed: u64,
) -> Result<BallMeasure> {
    let set = &measure.slabset;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("ball radius must be positive, got {r}")));
    }
    if x.len() != set.d {
        return Err(Error::InvalidParams(format!(
            "centre has {} coordinates, measure lives in R^{}",
            x.len(),
            set.d
        )));
    }
    let xn = norm2(x).sqrt();
    if xn - r >= 1.0 {
        return Ok(BallMeasure::exact(0.0));
    }
    if xn + 1.0 <= r {
        let m = measure.mass;
        return Ok(BallMeasure {
            value: m.value,
            stderr: m.stderr,
            lower: m.value,
            upper: m.value,
        });
    }
    let outer = axis_unions(set, x, r, 1.0, false);
    let upper = product_length(&outer);
    let Some(outer) = outer else {
        return Ok(BallMeasure::exact(0.0));
    };
    let d = set.d as f64;
    let lower = product_length(&axis_unions(set, x, r / d.sqrt(), 1.0 / d.sqrt(), true));
    if n_samples == 0 {
        return Err(Error::InvalidParams("mu_ball needs samples".into()));
    }

    let mut rng = task_rng(seed, 0x6d75_6261);
    let radii: Vec<(usize, f64)> = set.blocks.iter().map(|b| (b.dims, b.radius * b.radius)).collect();
    let mut coords = vec![0.0; set.d];
    let mut hits = 0usize;
    let mut total = 0usize;
    let mut target = n_samples;
    let r2 = r * r;
    loop {
        while total < target {
            total += 1;
            let mut start = 0;
            let mut ok = true;
            for &(dims, w2) in &radii {
                let mut off2 = 0.0;
                for (k, u) in outer[start..start + dims].iter().enumerate() {
                    let (cell, off) = u.sample(rng.random::<f64>());
                    off2 += off * off;
                    coords[start + k] = u.coordinate(cell, off);
                }
                start += dims;
                if off2 >= w2 {
                    ok = false;
                }
            }
            if ok && norm2(&coords) < 1.0 {
                let dist2: f64 = coords.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                if dist2 < r2 {
                    hits += 1;
                }
            }
        }
        let p = hits as f64 / total as f64;
        let value = upper * p;
        let stderr = upper * (p * (1.0 - p) / total as f64).sqrt();
        if hits == 0 {
            if total >= 16 * n_samples || lower == 0.0 {
                return Ok(BallMeasure {
                    value: lower,
                    stderr: 3.0 * upper / total as f64,
                    lower,
                    upper,
                });
            }
        } else if stderr <= MU_BALL_TOLERANCE * value {
            return Ok(BallMeasure {
                value: value.clamp(lower, upper),
                stderr,
                lower,
                upper,
            });
        }
        if total >= 16 * n_samples {
            if lower > 0.0 && upper <= SANDWICH_GAP * lower {
                return Ok(BallMeasure {
                    value: (lower * upper).sqrt(),
                    stderr: (upper - lower) / 2.0,
                    lower,
                    upper,
                });
            }
            return Err(Error::Precision(format!(
                "mu_ball at r = {r:.3e}: sandwich [{lower:.3e}, {upper:.3e}] and MC {value:.3e} ± {stderr:.1e}"
            )));
        }
        target *= 2;
    }
}

/// One bullet of the scale analysis: `c_α(μ, r) ∼ r^a R^b` for
/// `R^{lo} ≤ r ≤ R^{hi}` (`lo = None` means down to 0).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Regime {
    pub label: &'static str,
    pub lo: Option<Rational>,
    pub hi: Rational,
    pub r_exponent: Rational,
    pub big_r_exponent: Rational,
}

impl Regime {
    /// Exponent of R in `c_α(μ, R^e)`.
    pub fn exponent_at(&self, e: Rational) -> Rational {
        self.r_exponent * e + self.big_r_exponent
    }

    /// Exponent of R in the supremum over this regime, and the endpoint attaining it.
    pub fn sup_exponent(&self) -> (Rational, Rational) {
        match self.lo {
            Some(lo) if self.r_exponent < 0 => (self.exponent_at(lo), lo),
            _ => (self.exponent_at(self.hi), self.hi),
        }
    }

    pub fn value(&self, r: f64, big_r: f64) -> f64 {
        r.powf(self.r_exponent.to_f64()) * big_r.powf(self.big_r_exponent.to_f64())
    }
}

/// The closed-form regimes for `(surface, d, m, α, κ)`. The paraboloid splits on
/// `κ ≤ 1/4` (scales `R^{2κ−1} ≤ R^{−1/2}`) versus `κ > 1/4`.
pub fn regime_table(
    surface: Surface,
    d: i64,
    m: i64,
    alpha: Rational,
    kappa: Rational,
) -> Result<Vec<Regime>> {
    if !(kappa > Rational::ZERO && kappa < q(1, 2)) {
        return Err(Error::Domain(format!("kappa = {kappa} outside (0, 1/2)")));
    }
    if m < 0 || m >= d || alpha <= Rational::ZERO || alpha >= d {
        return Err(Error::Domain(format!(
            "no regime table for m = {m}, alpha = {alpha}, d = {d}"
        )));
    }
    let (dq, mq) = (Rational::int(d), Rational::int(m));
    let half = q(1, 2);
    let reg = |label, lo: Option<Rational>, hi, a, b| Regime {
        label,
        lo,
        hi,
        r_exponent: a,
        big_r_exponent: b,
    };
    let one = Rational::ONE;
    let k1 = kappa - 1;
    let k2 = kappa * 2 - 1;
    let table = match surface {
        Surface::Sphere => vec![
            reg("S1", None, -one, dq - alpha, Rational::ZERO),
            reg("S2", Some(-one), k1, mq - alpha, mq - dq),
            reg("S3", Some(k1), -half, dq - alpha, -kappa * (dq - mq)),
            reg("S4", Some(-half), Rational::ZERO, dq - mq - alpha, -kappa * (dq - mq) - mq / 2),
        ],
        Surface::Paraboloid if kappa <= q(1, 4) => vec![
            reg("P1", None, -one, dq - alpha, Rational::ZERO),
            reg("P2", Some(-one), k1, mq - alpha, mq - dq),
            reg("P3", Some(k1), k2, dq - 1 - alpha, -kappa * (dq - mq - 1) - 1),
            reg("P4", Some(k2), -half, dq - alpha, -kappa * (dq - mq + 1)),
            reg("P5", Some(-half), Rational::ZERO, dq - mq - alpha, -kappa * (dq - mq + 1) - mq / 2),
        ],
        Surface::Paraboloid => vec![
            reg("Q1", None, -one, dq - alpha, Rational::ZERO),
            reg("Q2", Some(-one), k1, mq - alpha, mq - dq),
            reg("Q3", Some(k1), -half, dq - 1 - alpha, -kappa * (dq - mq - 1) - 1),
            reg("Q4", Some(-half), k2, dq - mq - 1 - alpha, -kappa * (dq - mq - 1) - mq / 2 - 1),
            reg("Q5", Some(k2), Rational::ZERO, dq - mq - alpha, -kappa * (dq - mq + 1) - mq / 2),
        ],
    };
    Ok(table)
}

fn params_table(params: &ConstructionParams) -> Result<Vec<Regime>> {
    regime_table(
        params.surface(),
        params.d() as i64,
        params.m() as i64,
        params.alpha(),
        params.kappa(),
    )
}

/// The bare closed form `r^a R^b` of the regime containing `r ∈ (0, 1]`, with its label.
pub fn c_alpha_at_scale(params: &ConstructionParams, r: f64) -> Result<(&'static str, f64)> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("scale r = {r} outside (0, 1]")));
    }
    let big_r = params.r;
    let table = params_table(params)?;
    let e = r.ln() / big_r.ln();
    let tol = 1e-12;
    let reg = table
        .iter()
        .find(|g| e <= g.hi.to_f64() + tol)
        .unwrap_or(table.last().expect("nonempty table"));
    Ok((reg.label, reg.value(r, big_r)))
}

/// Label of the regime containing `r`; scales above 1 belong to the last one.
pub fn regime_label(params: &ConstructionParams, r: f64) -> Result<&'static str> {
    c_alpha_at_scale(params, r.min(1.0)).map(|(l, _)| l)
}

/// Block-product model of `sup_x μ(B(x, r))/r^α` that keeps the cell radii and
/// ball volumes the closed forms drop: each block contributes
/// `ω_k min(r, w)^k · max(1, ω_k (r/p)^k)` at `r ≤ 1`.
pub fn model_c_alpha_at_scale(set: &SlabSet, alpha: f64, r: f64) -> f64 {
    let s = r.min(1.0);
    let mass: f64 = set
        .blocks
        .iter()
        .map(|b| {
            let k = b.dims as i32;
            let om = unit_ball_volume(b.dims);
            let cell = om * s.min(b.radius).powi(k);
            let count = match b.period {
                Some(p) => (om * (s / p).powi(k)).max(1.0),
                None => 1.0,
            };
            cell * count
        })
        .product();
    mass / r.powf(alpha)
}

/// Geometric grid with ratio `2^{1/4}` over `[lo, 2]`, merged with `breaks`.
pub fn r_grid(lo: f64, breaks: &[f64]) -> Vec<f64> {
    let ratio = 2f64.powf(1.0 / GRID_STEPS_PER_OCTAVE as f64);
    let mut g = Vec::new();
    let mut r = lo;
    while r < 2.0 {
        g.push(r);
        r *= ratio;
    }
    g.push(2.0);
    g.extend(breaks.iter().copied().filter(|b| *b >= lo && *b <= 2.0));
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    g
}

/// The r-grid for a measure: from `min(R^{−1}, w)/2` up to 2, including every
/// regime boundary and every block length.
pub fn measure_grid(measure: &FractalMeasure) -> Vec<f64> {
    let mut breaks = vec![1.0];
    let mut lo = f64::INFINITY;
    for b in &measure.slabset.blocks {
        if b.radius > 0.0 {
            breaks.push(b.radius);
            lo = lo.min(b.radius / 2.0);
        }
        if let Some(p) = b.period {
            breaks.push(p);
        }
    }
    if let Some(p) = &measure.params {
        let big_r = p.r;
        let k = p.kappa().to_f64();
        breaks.extend([1.0 / big_r, big_r.powf(k - 1.0), big_r.powf(2.0 * k - 1.0), big_r.powf(-0.5)]);
        lo = lo.min(0.5 / big_r);
    }
    if !lo.is_finite() {
        lo = 1e-3;
    }
    r_grid(lo, &breaks)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleRow {
    pub r: f64,
    pub regime_label: String,
    pub formula_value: f64,
    pub oracle_value: f64,
    pub oracle_stderr: f64,
    pub model_value: f64,
}

/// Per-scale values over an increasing r-grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScaleProfile {
    pub rows: Vec<ScaleRow>,
}

impl ScaleProfile {
    pub fn scales(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.r).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.oracle_value).collect()
    }

    pub fn regime_labels(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.regime_label.as_str()).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleBudget {
    pub random_centers: usize,
    pub samples_per_ball: usize,
    /// Random centres sampled per scale, taken in order of their outer bound.
    pub sampled_random_centers: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            random_centers: 1000,
            samples_per_ball: 2000,
            sampled_random_centers: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub value: f64,
    pub stderr: f64,
    pub argmax_r: f64,
    pub argmax_x: Vec<f64>,
    pub profile: ScaleProfile,
}

/// Cell centres of Λ: the origin, the first neighbour along each periodic block,
/// the midpoint to that neighbour, and a cell half-way to the boundary.
pub fn lattice_centers(set: &SlabSet) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; set.d]];
    let mut start = 0;
    for b in &set.blocks {
        if let Some(p) = b.period {
            for t in [p, p / 2.0, (0.5 / p).round() * p] {
                if t > 0.0 && t < 1.0 {
                    let mut x = vec![0.0; set.d];
                    x[start] = t;
                    out.push(x);
                }
            }
        }
        start += b.dims;
    }
    out.dedup();
    out
}

/// `sup_{x, r} μ(B(x,r))/r^α` over the r-grid and the candidate centres
/// (lattice centres plus seeded points of Λ). Lattice centres are always sampled;
/// random ones only when their outer-box bound beats the best value so far, and at
/// most `sampled_random_centers` of them per scale.
pub fn c_alpha_oracle(measure: &FractalMeasure, budget: OracleBudget, seed: u64) -> Result<OracleResult> {
    let set = &measure.slabset;
    let mut centers = lattice_centers(set);
    let n_lattice = centers.len();
    let mut rng = task_rng(seed, 0x6365_6e74);
    for _ in 0..budget.random_centers {
        let p = set.sample(&mut rng)?;
        centers.push(p.coords(set));
    }
    let grid = measure_grid(measure);
    let alpha = measure.alpha;
    let d = set.d as f64;

    let rows: Vec<(ScaleRow, Vec<f64>)> = grid
        .par_iter()
        .enumerate()
        .map(|(ri, &r)| -> Result<(ScaleRow, Vec<f64>)> {
            let mut bounds: Vec<(f64, usize)> = centers
                .iter()
                .enumerate()
                .map(|(ci, x)| (product_length(&axis_unions(set, x, r, 1.0, false)), ci))
                .collect();
            bounds.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut best = BallMeasure::exact(0.0);
            let mut best_x = 0;
            let mut random_left = budget.sampled_random_centers;
            for &(upper, ci) in &bounds {
                if upper <= best.value || upper == 0.0 {
                    break;
                }
                if ci >= n_lattice {
                    if random_left == 0 {
                        continue;
                    }
                    random_left -= 1;
                }
                let bm = mu_ball(measure, &centers[ci], r, budget.samples_per_ball, task_index(ri as u64, ci as u64) ^ seed)?;
                if bm.value > best.value {
                    best = bm;
                    best_x = ci;
                }
            }
            let (label, formula) = match &measure.params {
                Some(p) => {
                    let l = regime_label(p, r)?;
                    let f = c_alpha_at_scale(p, r.min(1.0))?.1 * if r > 1.0 { r.powf(-alpha) } else { 1.0 };
                    (l.to_string(), f)
                }
                None => ("ball".to_string(), r.powf(d - alpha)),
            };
            let ra = r.powf(alpha);
            Ok((
                ScaleRow {
                    r,
                    regime_label: label,
                    formula_value: formula,
                    oracle_value: best.value / ra,
                    oracle_stderr: best.stderr / ra,
                    model_value: model_c_alpha_at_scale(set, alpha, r),
                },
                centers[best_x].clone(),
            ))
        })
        .collect::<Result<_>>()?;

    let (imax, _) = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.oracle_value.total_cmp(&b.1 .0.oracle_value))
        .ok_or_else(|| Error::Internal("empty r-grid".into()))?;
    let top = &rows[imax].0;
    Ok(OracleResult {
        value: top.oracle_value,
        stderr: top.oracle_stderr,
        argmax_r: top.r,
        argmax_x: rows[imax].1.clone(),
        profile: ScaleProfile {
            rows: rows.into_iter().map(|(r, _)| r).collect(),
        },
    })
}

/// One regime's contribution to the balance check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeExponent {
    pub label: &'static str,
    /// Exponent of R in the supremum over the regime.
    pub sup_exponent: Rational,
    /// Exponent of R of the scale attaining it.
    pub at_scale: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceReport {
    pub target: Rational,
    pub rows: Vec<RegimeExponent>,
    /// Regimes other than the first whose supremum reaches the target.
    pub balancing: Vec<&'static str>,
}

/// Checks in exact arithmetic that `c_α(μ) ∼ R^{α−d}`: no regime exceeds `α − d`
/// and some regime besides the smallest scales attains it.
pub fn verify_kappa_balances(
    surface: Surface,
    d: i64,
    m: i64,
    alpha: Rational,
    kappa: Rational,
) -> Result<BalanceReport> {
    let table = regime_table(surface, d, m, alpha, kappa)?;
    let target = alpha - d;
    let rows: Vec<RegimeExponent> = table
        .iter()
        .map(|g| {
            let (e, at) = g.sup_exponent();
            RegimeExponent {
                label: g.label,
                sup_exponent: e,
                at_scale: at,
            }
        })
        .collect();
    if let Some(bad) = rows.iter().find(|r| r.sup_exponent > target) {
        return Err(Error::BalanceViolation {
            regime: bad.label.to_string(),
            detail: format!(
                "sup exponent {} at R^{} exceeds alpha - d = {target}",
                bad.sup_exponent, bad.at_scale
            ),
        });
    }
    if rows[0].sup_exponent != target {
        return Err(Error::BalanceViolation {
            regime: rows[0].label.to_string(),
            detail: format!("smallest scales give {} instead of {target}", rows[0].sup_exponent),
        });
    }
    // Reaching the target only at the shared endpoint R^{−1} is not a balance.
    let balancing: Vec<&'static str> = rows[1..]
        .iter()
        .filter(|r| r.sup_exponent == target && r.at_scale != -Rational::ONE)
        .map(|r| r.label)
        .collect();
    if balancing.is_empty() {
        let runner = rows[1..]
            .iter()
            .max_by(|a, b| a.sup_exponent.cmp(&b.sup_exponent))
            .expect("several regimes");
        return Err(Error::BalanceViolation {
            regime: runner.label.to_string(),
            detail: format!(
                "largest other exponent {} is below alpha - d = {target}; kappa is not balanced",
                runner.sup_exponent
            ),
        });
    }
    Ok(BalanceReport {
        target,
        rows,
        balancing,
    })
}

pub fn verify_params_balance(params: &ConstructionParams) -> Result<BalanceReport> {
    verify_kappa_balances(
        params.surface(),
        params.d() as i64,
        params.m() as i64,
        params.alpha(),
        params.kappa(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{CellBlock, ConstructionConfig};
    use crate::sampling::ball_volume;

    fn parab(r: f64) -> ConstructionParams {
        ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None)
            .unwrap()
            .at_r(r)
            .unwrap()
    }

    #[test]
    fn far_and_covering_balls() {
        let p = parab(2f64.powi(16));
        let mu = FractalMeasure::from_params(&p, 100_000, 1).unwrap();
        assert_eq!(mu_ball(&mu, &[3.0, 0.0, 0.0], 1.0, 100, 1).unwrap().value, 0.0);
        assert_eq!(mu_ball(&mu, &[0.0; 3], 2.0, 100, 1).unwrap().value, mu.mass.value);
    }

    #[test]
    fn small_ball_at_origin_is_full() {
        let p = parab(2f64.powi(16));
        let mu = FractalMeasure::from_params(&p, 100_000, 1).unwrap();
        let r = p.scales.cell_radius / 4.0;
        let b = mu_ball(&mu, &[0.0; 3], r, 4000, 3).unwrap();
        let want = ball_volume(3, r);
        assert!(b.lower <= b.value && b.value <= b.upper);
        assert!((b.value / want - 1.0).abs() < 0.1, "{b:?} vs {want}");
    }

    #[test]
    fn closed_forms_at_named_scales() {
        let p = parab(2f64.powi(20));
        let big_r = p.r;
        let (l, v) = c_alpha_at_scale(&p, 1.0 / big_r).unwrap();
        assert_eq!(l, "P1");
        assert!((v / big_r.powf(-1.0) - 1.0).abs() < 1e-9);
        let (_, v) = c_alpha_at_scale(&p, big_r.powf(-0.5)).unwrap();
        // −(d−α)/2 − κ(d−m+1) = −1/2 − 1/2
        assert!((v / big_r.powf(-1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn balance_examples() {
        let s = verify_kappa_balances(Surface::Sphere, 4, 1, Rational::int(3), q(1, 6)).unwrap();
        assert_eq!(s.target, Rational::int(-1));
        let p = verify_kappa_balances(Surface::Paraboloid, 3, 1, Rational::int(2), q(1, 6)).unwrap();
        assert!(p.balancing.contains(&"P5"));
        for k in [q(1, 6) + q(1, 100), q(1, 6) - q(1, 100)] {
            assert!(matches!(
                verify_kappa_balances(Surface::Paraboloid, 3, 1, Rational::int(2), k),
                Err(Error::BalanceViolation { .. })
            ));
        }
    }

    #[test]
    fn grid_contains_breakpoints() {
        let g = r_grid(1e-3, &[0.0123, 1.0]);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.contains(&0.0123) && g.contains(&1.0) && g.contains(&2.0));
    }

    #[test]
    fn unit_ball_oracle_peaks_at_one() {
        let set = SlabSet::from_blocks(vec![CellBlock::single(3, 1.0)]).unwrap();
        let mu = FractalMeasure::from_slabset(set, 2.0, 1000, 1).unwrap();
        let o = c_alpha_oracle(&mu, OracleBudget { random_centers: 10, samples_per_ball: 4000, sampled_random_centers: 4 }, 5).unwrap();
        assert!((o.argmax_r - 1.0).abs() < 0.2, "{}", o.argmax_r);
        assert!((o.value / unit_ball_volume(3) - 1.0).abs() < 0.1);
    }
}
