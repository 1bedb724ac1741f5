//! The extension operator on Ω evaluated at `Rx`: exact phase splitting,
//! phase-window checks and quadrature of `Ef(Rx)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::construction::{
    build_lambda, build_omega, omega_measure, ConstructionParams, FreqPoint, OmegaQuadrature,
    PatchSet, SlabSet, SpatialPoint, BlockCoord,
};
use crate::error::{Error, Result};
use crate::exponents::Surface;
use crate::sampling::{dot, mean_stderr, norm2, task_rng, Estimate};

/// The naive double-double phase is only compared below this R.
pub const NAIVE_CHECK_MAX_R: f64 = 1e8;

/// Tolerance for naive versus decomposed phases, modulo 2π.
pub const REDUCTION_TOLERANCE: f64 = 1e-8;

/// Half-width of the phase window around 2πZ.
pub const PHASE_WINDOW: f64 = 0.01;

/// Signed representative of `x` modulo 2π in `(−π, π]`.
pub fn reduce_mod_2pi(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Named real term of a phase, with the bound it obeys on Λ × Ω.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
}

/// `phase = 2π·integer_part + Σ residuals`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseDecomposition {
    pub integer_part: i128,
    pub residuals: Vec<Residual>,
}

impl PhaseDecomposition {
    pub fn residual_sum(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).sum()
    }

    /// Distance of the phase from 2πZ.
    pub fn deviation(&self) -> f64 {
        reduce_mod_2pi(self.residual_sum()).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseEval {
    pub decomposition: PhaseDecomposition,
    /// Decomposed phase reduced into `(−π, π]`.
    pub reduced: f64,
    /// Double-double phase reduced into `(−π, π]`, when R is small enough to check.
    pub naive_reduced: Option<f64>,
}

impl PhaseEval {
    pub fn mismatch(&self) -> Option<f64> {
        self.naive_reduced
            .map(|n| reduce_mod_2pi(n - self.reduced).abs())
    }
}

/// Everything needed to split phases for one construction.
#[derive(Clone, Debug)]
pub struct PhaseContext {
    pub surface: Surface,
    pub d: usize,
    pub c: f64,
    r: f64,
    rk: f64,
    r_1mk: f64,
    r2k_2pi: f64,
    r_1m2k: f64,
    r_dd: TwoFloat,
    p_dd: TwoFloat,
    s_dd: TwoFloat,
    q_dd: TwoFloat,
    naive: bool,
}

impl PhaseContext {
    pub fn new(params: &ConstructionParams) -> Self {
        let s = &params.scales;
        let two_pi = twofloat::consts::TAU;
        let r_dd = s.r_dd;
        let rk_dd = s.r_kappa_dd;
        PhaseContext {
            surface: params.surface(),
            d: params.d(),
            c: params.c(),
            r: s.r,
            rk: rk_dd.hi(),
            r_1mk: (r_dd / rk_dd).hi(),
            r2k_2pi: (rk_dd * rk_dd / two_pi).hi(),
            r_1m2k: (r_dd / (rk_dd * rk_dd)).hi(),
            r_dd,
            p_dd: s.slab_period_dd(),
            s_dd: s.height_period_dd(),
            q_dd: s.freq_spacing_dd(),
            naive: s.r <= NAIVE_CHECK_MAX_R,
        }
    }

    /// Disable or force the double-double cross-check.
    pub fn with_naive_check(mut self, on: bool) -> Self {
        self.naive = on;
        self
    }

    fn parts<'a>(&self, x: &'a SpatialPoint) -> (&'a [f64], &'a BlockCoord, Option<&'a BlockCoord>) {
        let knapp = &x.blocks[0].offset;
        let mid = &x.blocks[1];
        let height = x.blocks.get(2);
        (knapp, mid, height)
    }

    /// The full split with named residuals.
    pub fn decompose(&self, x: &SpatialPoint, xi: &FreqPoint) -> PhaseDecomposition {
        let (xk, mid, height) = self.parts(x);
        let (l, u) = (&mid.cell, &mid.offset);
        let (mv, v) = (&xi.cell, &xi.offset);
        let c = self.c;
        let int_dot = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(&p, &q)| p as i128 * q as i128).sum::<i128>();
        let l_dot_v: f64 = l.iter().zip(v).map(|(&j, &w)| j as f64 * w).sum();
        let u_dot_m: f64 = u.iter().zip(mv).map(|(&w, &j)| w * j as f64).sum();
        let mut integer_part = int_dot(l, mv);
        let mut residuals = vec![
            Residual { name: "R x'.xi'", value: self.r * dot(xk, &xi.knapp), bound: c * c },
            Residual { name: "R^k l.v", value: self.rk * l_dot_v, bound: c },
            Residual { name: "2pi R^(1-k) u.m", value: TAU * self.r_1mk * u_dot_m, bound: c },
            Residual { name: "R u.v", value: self.r * dot(u, v), bound: c * c / self.r },
        ];
        if let (Surface::Paraboloid, Some(h)) = (self.surface, height) {
            let (k, eps) = (h.cell[0], h.offset[0]);
            let m2: i64 = mv.iter().map(|j| j * j).sum();
            let m_dot_v: f64 = mv.iter().zip(v).map(|(&j, &w)| j as f64 * w).sum();
            let x_d = k as f64 * self.s_dd.hi() + eps;
            let kf = k as f64;
            integer_part += k as i128 * m2 as i128;
            residuals.extend([
                Residual { name: "R x_d |xi'|^2", value: self.r * x_d * norm2(&xi.knapp), bound: c * c },
                Residual { name: "2 R^k k m.v", value: 2.0 * self.rk * kf * m_dot_v, bound: 2.0 * c },
                Residual { name: "R^2k k |v|^2 / 2pi", value: self.r2k_2pi * kf * norm2(v), bound: c * c / self.r },
                Residual { name: "4pi^2 R^(1-2k) eps |m|^2", value: 2.0 * PI * TAU * self.r_1m2k * eps * m2 as f64, bound: c },
                Residual { name: "4pi R^(1-k) eps m.v", value: 2.0 * TAU * self.r_1mk * eps * m_dot_v, bound: 2.0 * c * c / self.r },
                Residual { name: "R eps |v|^2", value: self.r * eps * norm2(v), bound: c.powi(3) / (self.r * self.r) },
            ]);
        }
        PhaseDecomposition { integer_part, residuals }
    }

    /// Σ residuals without bookkeeping; equals the phase modulo 2π.
    pub fn residual_sum(&self, x: &SpatialPoint, xi: &FreqPoint) -> f64 {
        let (xk, mid, height) = self.parts(x);
        let (l, u) = (&mid.cell, &mid.offset);
        let (mv, v) = (&xi.cell, &xi.offset);
        let mut l_dot_v = 0.0;
        let mut u_dot_m = 0.0;
        let mut u_dot_v = 0.0;
        for i in 0..l.len() {
            l_dot_v += l[i] as f64 * v[i];
            u_dot_m += u[i] * mv[i] as f64;
            u_dot_v += u[i] * v[i];
        }
        let mut s = self.r * dot(xk, &xi.knapp) + self.rk * l_dot_v + TAU * self.r_1mk * u_dot_m + self.r * u_dot_v;
        if let (Surface::Paraboloid, Some(h)) = (self.surface, height) {
            let (k, eps) = (h.cell[0] as f64, h.offset[0]);
            let mut m2 = 0.0;
            let mut m_dot_v = 0.0;
            let mut v2 = 0.0;
            for i in 0..mv.len() {
                let mj = mv[i] as f64;
                m2 += mj * mj;
                m_dot_v += mj * v[i];
                v2 += v[i] * v[i];
            }
            let x_d = k * self.s_dd.hi() + eps;
            s += self.r * x_d * norm2(&xi.knapp)
                + 2.0 * self.rk * k * m_dot_v
                + self.r2k_2pi * k * v2
                + 2.0 * PI * TAU * self.r_1m2k * eps * m2
                + 2.0 * TAU * self.r_1mk * eps * m_dot_v
                + self.r * eps * v2;
        }
        s
    }

    /// `R(x·ξ)` (plus `R x_d|ξ|²` on the paraboloid) in double-double, reduced mod 2π.
    pub fn naive_phase(&self, x: &SpatialPoint, xi: &FreqPoint) -> f64 {
        let dd = TwoFloat::from;
        let (xk, mid, height) = self.parts(x);
        let mut acc = TwoFloat::from(0.0);
        for (a, b) in xk.iter().zip(&xi.knapp) {
            acc += TwoFloat::new_mul(*a, *b);
        }
        let mut xi_fine2 = TwoFloat::from(0.0);
        for i in 0..mid.cell.len() {
            let xf = self.p_dd * dd(mid.cell[i] as f64) + dd(mid.offset[i]);
            let ff = self.q_dd * dd(xi.cell[i] as f64) + dd(xi.offset[i]);
            acc += xf * ff;
            xi_fine2 += ff * ff;
        }
        if let (Surface::Paraboloid, Some(h)) = (self.surface, height) {
            let x_d = self.s_dd * dd(h.cell[0] as f64) + dd(h.offset[0]);
            let mut xi2 = xi_fine2;
            for a in &xi.knapp {
                xi2 += TwoFloat::new_mul(*a, *a);
            }
            acc += x_d * xi2;
        }
        let phase = self.r_dd * acc;
        let n = (phase.hi() / TAU).round();
        reduce_mod_2pi((phase - twofloat::consts::TAU * dd(n)).hi())
    }

    pub fn eval(&self, x: &SpatialPoint, xi: &FreqPoint) -> PhaseEval {
        let decomposition = self.decompose(x, xi);
        let reduced = reduce_mod_2pi(decomposition.residual_sum());
        let naive_reduced = self.naive.then(|| self.naive_phase(x, xi));
        PhaseEval {
            decomposition,
            reduced,
            naive_reduced,
        }
    }

    /// Like [`PhaseContext::eval`] but fails when the two paths disagree.
    pub fn phase(&self, x: &SpatialPoint, xi: &FreqPoint) -> Result<PhaseEval> {
        let e = self.eval(x, xi);
        if let (Some(diff), Some(naive)) = (e.mismatch(), e.naive_reduced) {
            if diff > REDUCTION_TOLERANCE {
                return Err(Error::Reduction {
                    naive,
                    decomposed: e.reduced,
                    difference: diff,
                });
            }
        }
        Ok(e)
    }

    /// Lattice form of arbitrary coordinates, using double-double periods.
    pub fn locate(&self, set: &SlabSet, x: &[f64]) -> Result<SpatialPoint> {
        if x.len() != set.d || set.blocks.len() < 2 {
            return Err(Error::InvalidParams(format!(
                "point of length {} does not fit the construction",
                x.len()
            )));
        }
        let parts = set.split(x);
        let mut blocks = Vec::with_capacity(parts.len());
        for (i, (y, b)) in parts.iter().zip(&set.blocks).enumerate() {
            let period = match i {
                0 => None,
                1 => Some(self.p_dd),
                _ => Some(self.s_dd),
            };
            let bc = match (b.period, period) {
                (Some(p), Some(pdd)) => {
                    let cell: Vec<i64> = y.iter().map(|v| (v / p).round() as i64).collect();
                    let offset = y
                        .iter()
                        .zip(&cell)
                        .map(|(&v, &j)| (TwoFloat::from(v) - pdd * TwoFloat::from(j as f64)).hi())
                        .collect();
                    BlockCoord { cell, offset }
                }
                _ => b.nearest(y),
            };
            blocks.push(bc);
        }
        Ok(SpatialPoint { blocks })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseReport {
    pub samples: usize,
    pub max_deviation: f64,
    pub worst_x: Vec<f64>,
    pub worst_xi: Vec<f64>,
    /// Largest naive-versus-decomposed difference, when checked.
    pub max_mismatch: Option<f64>,
    /// Largest |residual| / bound seen for any named term.
    pub max_bound_ratio: f64,
}

/// Max distance to 2πZ over seeded samples of Λ × Ω, without judging it.
pub fn phase_profile(params: &ConstructionParams, n_samples: usize, seed: u64) -> Result<PhaseReport> {
    let lambda = build_lambda(params);
    let omega = build_omega(params)?;
    let ctx = PhaseContext::new(params);
    let mut report = PhaseReport {
        samples: n_samples,
        max_deviation: 0.0,
        worst_x: vec![],
        worst_xi: vec![],
        max_mismatch: None,
        max_bound_ratio: 0.0,
    };
    for i in 0..n_samples {
        let mut rng = task_rng(seed, i as u64);
        let x = lambda.sample(&mut rng)?;
        let xi = omega.sample(&mut rng)?;
        let e = ctx.eval(&x, &xi);
        let dev = e.decomposition.deviation();
        if dev > report.max_deviation || report.worst_x.is_empty() {
            report.max_deviation = dev;
            report.worst_x = x.coords(&lambda);
            report.worst_xi = xi.coords(&omega);
        }
        if let Some(mm) = e.mismatch() {
            report.max_mismatch = Some(report.max_mismatch.map_or(mm, |m: f64| m.max(mm)));
        }
        for r in &e.decomposition.residuals {
            if r.bound > 0.0 {
                report.max_bound_ratio = report.max_bound_ratio.max(r.value.abs() / r.bound);
            }
        }
    }
    Ok(report)
}

/// [`phase_profile`] plus the pass/fail rules: every phase within 1/100 of 2πZ and
/// the double-double cross-check within tolerance.
pub fn verify_phase(params: &ConstructionParams, n_samples: usize, seed: u64) -> Result<PhaseReport> {
    let report = phase_profile(params, n_samples, seed)?;
    if let Some(mm) = report.max_mismatch {
        if mm > REDUCTION_TOLERANCE {
            return Err(Error::Reduction {
                naive: f64::NAN,
                decomposed: f64::NAN,
                difference: mm,
            });
        }
    }
    if report.max_deviation >= PHASE_WINDOW {
        return Err(Error::PhaseEscape {
            deviation: report.max_deviation,
            x: report.worst_x.clone(),
            xi: report.worst_xi.clone(),
        });
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionSample {
    pub x: Vec<f64>,
    pub value: Complex64,
    pub quadrature_stderr: f64,
    /// `|Ef(Rx)|·(2π)^{d/2}/meas(Ω)`.
    pub modulus_ratio: f64,
}

/// Quadrature of `Ef(Rx) = (2π)^{−d/2} ∫_Ω e^{iRx·ξ} dσ(ξ)` for one construction.
#[derive(Clone, Debug)]
pub struct ExtensionEvaluator {
    pub params: ConstructionParams,
    pub lambda: SlabSet,
    pub patches: PatchSet,
    pub quadrature: OmegaQuadrature,
    pub omega: Estimate,
    pub context: PhaseContext,
    nodes_per_patch: usize,
    seed: u64,
}

impl ExtensionEvaluator {
    pub fn new(params: &ConstructionParams, nodes_per_patch: usize, seed: u64) -> Result<Self> {
        let patches = build_omega(params)?;
        let quadrature = OmegaQuadrature::build(&patches, nodes_per_patch, seed)?;
        let omega = quadrature.measure();
        if omega.value <= 0.0 {
            return Err(Error::EmptyConstruction("Ω has zero measure".into()));
        }
        Ok(ExtensionEvaluator {
            params: params.clone(),
            lambda: build_lambda(params),
            patches,
            quadrature,
            omega,
            context: PhaseContext::new(params).with_naive_check(false),
            nodes_per_patch,
            seed,
        })
    }

    pub fn normalization(&self) -> f64 {
        TAU.powf(-(self.params.d() as f64) / 2.0)
    }

    fn sum_with(&self, quad: &OmegaQuadrature, x: &SpatialPoint) -> (Complex64, f64, f64) {
        let mut total = Complex64::new(0.0, 0.0);
        let mut var = 0.0;
        let mut mass = 0.0;
        for &(a, b) in &quad.patch_ranges {
            let n = (b - a) as f64;
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sq = 0.0;
            for i in a..b {
                let w = quad.weights[i];
                if w == 0.0 {
                    continue;
                }
                let phi = self.context.residual_sum(x, &quad.nodes[i]);
                let z = Complex64::from_polar(w, phi);
                sum += z;
                sq += z.norm_sqr();
                mass += w;
            }
            total += sum;
            if n > 1.0 {
                // Var of n·w·e^{iφ} per node, scaled to the patch estimate.
                let mean = sum / n;
                let s2 = (n * sq - n * n * mean.norm_sqr()) / (n - 1.0);
                var += s2.max(0.0);
            }
        }
        (total, var.sqrt(), mass)
    }

    /// `Ef(Rx)` at a lattice-form point.
    pub fn value_at(&self, x: &SpatialPoint) -> ExtensionSample {
        let (total, stderr, mass) = self.sum_with(&self.quadrature, x);
        let norm = self.normalization();
        ExtensionSample {
            x: x.coords(&self.lambda),
            value: total * norm,
            quadrature_stderr: stderr * norm,
            modulus_ratio: total.norm() / mass,
        }
    }

    /// `Ef(Rx)` at arbitrary coordinates in the unit ball, doubling the nodes
    /// until the error is under 1% of `(2π)^{−d/2}·meas(Ω)`.
    pub fn value_at_coords(&self, x: &[f64]) -> Result<ExtensionSample> {
        if norm2(x) >= 1.0 {
            return Err(Error::Domain("extension points must lie in the unit ball".into()));
        }
        let sp = self.context.locate(&self.lambda, x)?;
        let limit = 0.01 * self.omega.value;
        let mut nodes = self.nodes_per_patch;
        let mut quad = self.quadrature.clone();
        loop {
            let (total, stderr, mass) = self.sum_with(&quad, &sp);
            if stderr <= limit {
                let norm = self.normalization();
                return Ok(ExtensionSample {
                    x: x.to_vec(),
                    value: total * norm,
                    quadrature_stderr: stderr * norm,
                    modulus_ratio: total.norm() / mass,
                });
            }
            if nodes >= 16 * self.nodes_per_patch {
                return Err(Error::Precision(format!(
                    "Ef stderr {:.3e} above 1% of the zero-phase value after {nodes} nodes per patch",
                    stderr * self.normalization()
                )));
            }
            nodes *= 2;
            quad = OmegaQuadrature::build(&self.patches, nodes, self.seed ^ nodes as u64)?;
        }
    }
}

/// `∫|Ef(Rx)| dμ(x) ≈ |Λ|·mean_{x∈Λ}|Ef(Rx)|`.
pub fn l1_norm_on_mu(
    eval: &ExtensionEvaluator,
    lambda_mass: Estimate,
    n_x_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if lambda_mass.value == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    if n_x_samples == 0 {
        return Err(Error::InvalidParams("l1 norm needs x samples".into()));
    }
    let moduli: Vec<f64> = (0..n_x_samples)
        .map(|i| {
            let mut rng = task_rng(seed, i as u64);
            eval.lambda.sample(&mut rng).map(|x| eval.value_at(&x).value.norm())
        })
        .collect::<Result<_>>()?;
    let (mean, se) = mean_stderr(&moduli);
    let est = Estimate {
        value: lambda_mass.value * mean,
        stderr: ((lambda_mass.value * se).powi(2) + (mean * lambda_mass.stderr).powi(2)).sqrt(),
    };
    if est.relative_error() > 0.01 {
        return Err(Error::Precision(format!(
            "L1 estimate {:.4e} ± {:.2e}",
            est.value, est.stderr
        )));
    }
    Ok(est)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionReport {
    pub config: ConstructionParams,
    pub max_phase_deviation: f64,
    pub min_modulus_ratio: f64,
    pub l1_estimate: f64,
    pub stderr: f64,
    pub omega_measure: Estimate,
    pub lambda_volume: Estimate,
}

/// Budgets for one extension sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExtensionBudget {
    pub x_samples: usize,
    pub phase_samples: usize,
    pub nodes_per_patch: usize,
    pub mc_samples: usize,
}

impl Default for ExtensionBudget {
    fn default() -> Self {
        ExtensionBudget {
            x_samples: 1000,
            phase_samples: 10_000,
            nodes_per_patch: 64,
            mc_samples: 100_000,
        }
    }
}

/// Phase window, modulus floor and L¹ norm for one construction.
pub fn extension_report(
    params: &ConstructionParams,
    budget: ExtensionBudget,
    seed: u64,
) -> Result<ExtensionReport> {
    let phase = phase_profile(params, budget.phase_samples, seed)?;
    let eval = ExtensionEvaluator::new(params, budget.nodes_per_patch, seed)?;
    let omega = omega_measure(&eval.patches, budget.nodes_per_patch, seed)?;
    let lambda = crate::construction::lambda_volume(&eval.lambda, budget.mc_samples, seed)?;
    let mut min_ratio = f64::INFINITY;
    for i in 0..budget.x_samples {
        let mut rng = task_rng(seed ^ 0x5851_f42d, i as u64);
        let x = eval.lambda.sample(&mut rng)?;
        min_ratio = min_ratio.min(eval.value_at(&x).modulus_ratio);
    }
    let l1 = l1_norm_on_mu(&eval, lambda, budget.x_samples, seed ^ 0x5851_f42d)?;
    Ok(ExtensionReport {
        config: params.clone(),
        max_phase_deviation: phase.max_deviation,
        min_modulus_ratio: min_ratio,
        l1_estimate: l1.value,
        stderr: l1.stderr,
        omega_measure: omega,
        lambda_volume: lambda,
    })
}
