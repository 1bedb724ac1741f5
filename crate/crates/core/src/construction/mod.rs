//! Finite-R geometry of the lattice counterexamples: the direction set Γ, the
//! frequency set Ω and the spatial set Λ.

mod lambda;
mod lattice;
mod omega;

pub(crate) use lambda::AxisUnion;
pub use lambda::{build_lambda, lambda_volume, BlockCoord, CellBlock, SlabSet, SpatialPoint};
pub use lattice::{enumerate_gamma, LatticeSphereSet};
pub use omega::{build_omega, omega_measure, FreqPoint, OmegaQuadrature, PatchCenters, PatchSet};

use std::f64::consts::TAU;

use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::exponents::{lemma_kappa_selector, Surface};
use crate::rational::{q, Rational};

pub const DEFAULT_WIDTH_CONSTANT: f64 = 1e-3;

/// Default cap on the sphere's admissible R.
pub const DEFAULT_MAX_R: f64 = 1e8;

/// Environment variable overriding [`DEFAULT_MAX_R`].
pub const MAX_R_ENV: &str = "DECAY_BOUNDS_MAX_R";

/// Hard ceiling for any R, past which `R^κ` products lose double precision.
pub const ABSOLUTE_MAX_R: f64 = 1e13;

/// Largest dimension the numerical side accepts.
pub const MAX_NUMERIC_DIMENSION: usize = 12;

/// The max-R cap, honouring [`MAX_R_ENV`] when it parses as a positive number.
pub fn max_r_from_env() -> Result<f64> {
    match std::env::var(MAX_R_ENV) {
        Ok(v) => {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::parse(MAX_R_ENV, format!("not a number: {v:?}")))?;
            if !(x.is_finite() && x > 1.0) {
                return Err(Error::parse(MAX_R_ENV, format!("must exceed 1, got {v}")));
            }
            Ok(x)
        }
        Err(_) => Ok(DEFAULT_MAX_R),
    }
}

/// A construction without its scale R.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstructionConfig {
    pub surface: Surface,
    pub d: usize,
    pub m: usize,
    pub alpha: Rational,
    pub kappa: Rational,
    pub c: f64,
}

impl ConstructionConfig {
    /// κ defaults to the lemma's choice for `(m, α, d)`.
    pub fn new(
        surface: Surface,
        d: usize,
        m: usize,
        alpha: Rational,
        kappa: Option<Rational>,
    ) -> Result<Self> {
        let min_d = match surface {
            Surface::Sphere => 4,
            Surface::Paraboloid => 3,
        };
        if d < min_d || d > MAX_NUMERIC_DIMENSION {
            return Err(Error::InvalidParams(format!(
                "{surface} construction needs {min_d} <= d <= {MAX_NUMERIC_DIMENSION}, got {d}"
            )));
        }
        let m_ok = match surface {
            Surface::Sphere => m >= 1 && 2 * m < d,
            Surface::Paraboloid => m >= 1 && 2 * m <= d,
        };
        if !m_ok {
            return Err(Error::InvalidParams(format!(
                "block dimension m = {m} not allowed for {surface} in d = {d}"
            )));
        }
        if alpha <= Rational::ZERO || alpha >= d as i64 {
            return Err(Error::InvalidParams(format!(
                "alpha = {alpha} outside (0, {d})"
            )));
        }
        let kappa = match kappa {
            Some(k) => k,
            None => lemma_kappa_selector(surface, m as i64, alpha, d as i64)?.kappa,
        };
        if kappa <= Rational::ZERO || kappa >= q(1, 2) {
            return Err(Error::InvalidParams(format!(
                "kappa = {kappa} outside (0, 1/2)"
            )));
        }
        if kappa.numer() > 64 || kappa.denom() > 64 {
            return Err(Error::InvalidParams(format!(
                "kappa = {kappa} has numerator or denominator above 64"
            )));
        }
        Ok(ConstructionConfig {
            surface,
            d,
            m,
            alpha,
            kappa,
            c: DEFAULT_WIDTH_CONSTANT,
        })
    }

    /// Replaces the width constant. Values above the default are allowed for
    /// sharpness experiments only.
    pub fn with_width_constant(mut self, c: f64) -> Result<Self> {
        if !(c.is_finite() && (0.0..0.25).contains(&c)) {
            return Err(Error::InvalidParams(format!(
                "width constant c = {c} outside [0, 1/4)"
            )));
        }
        self.c = c;
        Ok(self)
    }

    /// Dimension of the periodic slab block on both sides.
    pub fn fine_dims(&self) -> usize {
        match self.surface {
            Surface::Sphere => self.d - self.m,
            Surface::Paraboloid => self.d - self.m - 1,
        }
    }

    /// Sphere: `R = (2πN)^{1/κ}`, so that `R^κ/(2π) = N`. Paraboloid: not lattice
    /// constrained; use [`ConstructionConfig::at_r`].
    pub fn admissible_r(&self, n: u64, max_r: f64) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidParams("lattice radius N must be positive".into()));
        }
        match self.surface {
            Surface::Sphere => {
                let r = (TAU * n as f64).powf(1.0 / self.kappa.to_f64());
                if !r.is_finite() || r > max_r.min(ABSOLUTE_MAX_R) {
                    return Err(Error::Overflow { r, max: max_r.min(ABSOLUTE_MAX_R) });
                }
                Ok(r)
            }
            Surface::Paraboloid => Err(Error::InvalidParams(
                "the paraboloid takes R directly, not a lattice radius".into(),
            )),
        }
    }

    /// Instantiate the sphere construction at lattice radius `n`.
    pub fn at_lattice_radius(&self, n: u64, max_r: f64) -> Result<ConstructionParams> {
        let r = self.admissible_r(n, max_r)?;
        let y = twofloat::consts::TAU * TwoFloat::from(n as f64);
        let r_dd = dd_pow_ratio(y, self.kappa.denom(), self.kappa.numer());
        ConstructionParams::from_parts(self.clone(), r, Some(n), r_dd, y)
    }

    /// Instantiate the paraboloid construction at scale `r`.
    pub fn at_r(&self, r: f64) -> Result<ConstructionParams> {
        if self.surface == Surface::Sphere {
            return Err(Error::InvalidParams(
                "the sphere needs an admissible R; use at_lattice_radius".into(),
            ));
        }
        if !(r.is_finite() && r >= 2.0 && r <= ABSOLUTE_MAX_R) {
            return Err(Error::Overflow { r, max: ABSOLUTE_MAX_R });
        }
        let r_dd = TwoFloat::from(r);
        let rk = dd_pow_ratio(r_dd, self.kappa.numer(), self.kappa.denom());
        ConstructionParams::from_parts(self.clone(), r, None, r_dd, rk)
    }
}

/// `base^{num/den}` in double-double via Newton on `z^den = base^num`.
pub(crate) fn dd_pow_ratio(base: TwoFloat, num: i64, den: i64) -> TwoFloat {
    let guess = base.hi().powf(num as f64 / den as f64);
    let target = base.powi(num as i32);
    if !target.hi().is_finite() || !guess.is_finite() {
        return TwoFloat::from(guess);
    }
    let mut z = TwoFloat::from(guess);
    for _ in 0..3 {
        let zp = z.powi((den - 1) as i32);
        let f = zp * z - target;
        let step = f / (zp * TwoFloat::from(den as f64));
        if !step.hi().is_finite() {
            break;
        }
        z -= step;
    }
    z
}

/// Every length scale of one construction.
#[derive(Clone, Debug, Serialize)]
pub struct Scales {
    pub r: f64,
    /// `R^κ`
    pub r_kappa: f64,
    /// `cR^{−1/2}`, radius of the first block on both sides.
    pub knapp_radius: f64,
    /// `cR^{−1}`, radius of every fine cell.
    pub cell_radius: f64,
    /// `R^{κ−1}`
    pub slab_period: f64,
    /// `R^{2κ−1}/(2π)`
    pub height_period: f64,
    /// `2πR^{−κ}`
    pub freq_spacing: f64,
    #[serde(skip)]
    pub(crate) r_dd: TwoFloat,
    #[serde(skip)]
    pub(crate) r_kappa_dd: TwoFloat,
}

impl Scales {
    fn new(c: f64, r_dd: TwoFloat, r_kappa_dd: TwoFloat) -> Self {
        let r = r_dd.hi();
        let two_pi = twofloat::consts::TAU;
        Scales {
            r,
            r_kappa: r_kappa_dd.hi(),
            knapp_radius: c / r.sqrt(),
            cell_radius: c / r,
            slab_period: (r_kappa_dd / r_dd).hi(),
            height_period: (r_kappa_dd * r_kappa_dd / (two_pi * r_dd)).hi(),
            freq_spacing: (two_pi / r_kappa_dd).hi(),
            r_dd,
            r_kappa_dd,
        }
    }

    pub(crate) fn slab_period_dd(&self) -> TwoFloat {
        self.r_kappa_dd / self.r_dd
    }

    pub(crate) fn height_period_dd(&self) -> TwoFloat {
        self.r_kappa_dd * self.r_kappa_dd / (twofloat::consts::TAU * self.r_dd)
    }

    pub(crate) fn freq_spacing_dd(&self) -> TwoFloat {
        twofloat::consts::TAU / self.r_kappa_dd
    }
}

/// One fully instantiated construction.
#[derive(Clone, Debug, Serialize)]
pub struct ConstructionParams {
    #[serde(flatten)]
    pub config: ConstructionConfig,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "N")]
    pub lattice_radius: Option<u64>,
    #[serde(skip)]
    pub scales: Scales,
}

impl ConstructionParams {
    fn from_parts(
        config: ConstructionConfig,
        r: f64,
        lattice_radius: Option<u64>,
        r_dd: TwoFloat,
        r_kappa_dd: TwoFloat,
    ) -> Result<Self> {
        let scales = Scales::new(config.c, r_dd, r_kappa_dd);
        if config.c > 0.0 && scales.slab_period <= 4.0 * scales.cell_radius {
            return Err(Error::InvalidParams(format!(
                "R = {r:.3e} too small: slabs of period {:.3e} overlap cells of radius {:.3e}",
                scales.slab_period, scales.cell_radius
            )));
        }
        Ok(ConstructionParams {
            config,
            r,
            lattice_radius,
            scales,
        })
    }

    pub fn surface(&self) -> Surface {
        self.config.surface
    }

    pub fn d(&self) -> usize {
        self.config.d
    }

    pub fn m(&self) -> usize {
        self.config.m
    }

    pub fn alpha(&self) -> Rational {
        self.config.alpha
    }

    pub fn kappa(&self) -> Rational {
        self.config.kappa
    }

    pub fn c(&self) -> f64 {
        self.config.c
    }

    pub fn fine_dims(&self) -> usize {
        self.config.fine_dims()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn admissible_r_examples() {
        let sph = ConstructionConfig::new(Surface::Sphere, 4, 1, r("3"), Some(r("1/6"))).unwrap();
        let r1 = sph.admissible_r(1, DEFAULT_MAX_R).unwrap();
        assert!((r1 / TAU.powi(6) - 1.0).abs() < 1e-12);
        assert!((r1 / 6.1e4 - 1.0).abs() < 0.01);

        let k4 = ConstructionConfig::new(Surface::Sphere, 4, 1, r("3"), Some(r("1/4"))).unwrap();
        let r2 = k4.admissible_r(2, DEFAULT_MAX_R).unwrap();
        assert!((r2 - 24936.7).abs() < 0.1);

        assert!(matches!(
            sph.admissible_r(4, DEFAULT_MAX_R),
            Err(Error::Overflow { .. })
        ));

        let par = ConstructionConfig::new(Surface::Paraboloid, 3, 1, r("2"), None).unwrap();
        assert_eq!(par.kappa, r("1/6"));
        assert_eq!(par.at_r(1e4).unwrap().r, 1e4);
    }

    #[test]
    fn sphere_scales_are_lattice_exact() {
        let sph = ConstructionConfig::new(Surface::Sphere, 4, 1, r("3"), None).unwrap();
        for n in 1..=3u64 {
            let p = sph.at_lattice_radius(n, DEFAULT_MAX_R).unwrap();
            let s = &p.scales;
            assert!((s.r_kappa / (TAU * n as f64) - 1.0).abs() < 1e-15);
            assert!((s.freq_spacing * n as f64 - 1.0).abs() < 1e-15);
            let back = dd_pow_ratio(s.r_dd, 1, 6);
            assert!(((back - s.r_kappa_dd) / s.r_kappa_dd).hi().abs() < 1e-28);
        }
    }

    #[test]
    fn paraboloid_root_is_double_double_accurate() {
        let r_dd = TwoFloat::from(2f64.powi(28));
        let rk = dd_pow_ratio(r_dd, 1, 6);
        let err = (rk.powi(6) - r_dd) / r_dd;
        assert!(err.hi().abs() < 1e-29, "{err:?}");
    }

    #[test]
    fn config_validation() {
        assert!(ConstructionConfig::new(Surface::Sphere, 4, 2, r("3"), Some(r("1/6"))).is_err());
        assert!(ConstructionConfig::new(Surface::Paraboloid, 4, 2, r("3"), Some(r("1/2"))).is_err());
        let c = ConstructionConfig::new(Surface::Paraboloid, 3, 1, r("2"), None).unwrap();
        assert!(c.clone().with_width_constant(0.1).is_ok());
        assert!(c.with_width_constant(-1.0).is_err());
    }
}
