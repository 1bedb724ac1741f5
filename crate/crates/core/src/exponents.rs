//! Exact exponent calculus: the five κ families, the piecewise-optimal κ for the
//! sphere and the paraboloid, prior and lower bounds, lemma κ selection and the
//! Falconer threshold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{q, Rational};

/// Largest dimension accepted anywhere; keeps every intermediate well inside `i64`.
pub const MAX_DIMENSION: i64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    Sphere,
    Paraboloid,
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Surface::Sphere => "sphere",
            Surface::Paraboloid => "paraboloid",
        })
    }
}

impl FromStr for Surface {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sphere" | "s" => Ok(Surface::Sphere),
            "parab" | "paraboloid" | "p" => Ok(Surface::Paraboloid),
            other => Err(Error::parse(
                "surface",
                format!("expected sphere or parab, got {other:?}"),
            )),
        }
    }
}

/// A validated (surface, d, α) triple inside the open domain of the main bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExponentQuery {
    pub surface: Surface,
    pub d: i64,
    pub alpha: Rational,
}

impl ExponentQuery {
    pub fn new(surface: Surface, d: i64, alpha: Rational) -> Result<Self> {
        let (min_d, lo) = match surface {
            Surface::Sphere => (4, q(d, 2)),
            Surface::Paraboloid => (3, q(d - 1, 2)),
        };
        if d < min_d || d > MAX_DIMENSION {
            return Err(Error::Domain(format!(
                "{surface} bound needs {min_d} <= d <= {MAX_DIMENSION}, got d = {d}"
            )));
        }
        if alpha <= lo || alpha >= d {
            return Err(Error::Domain(format!(
                "{surface} bound needs {lo} < alpha < {d}, got alpha = {alpha}"
            )));
        }
        Ok(ExponentQuery { surface, d, alpha })
    }

    pub fn sphere(d: i64, alpha: Rational) -> Result<Self> {
        Self::new(Surface::Sphere, d, alpha)
    }

    pub fn paraboloid(d: i64, alpha: Rational) -> Result<Self> {
        Self::new(Surface::Paraboloid, d, alpha)
    }

    /// `sphere_kappa` or `parab_kappa` depending on the surface.
    pub fn bound(&self) -> Result<BoundResult> {
        match self.surface {
            Surface::Sphere => sphere_kappa(self),
            Surface::Paraboloid => parab_kappa(self),
        }
    }
}

/// One member `κ_index(m; ·, ·)` of the five families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct KappaFn {
    pub index: u8,
    pub m: i64,
}

impl KappaFn {
    pub const fn new(index: u8, m: i64) -> Self {
        KappaFn { index, m }
    }

    pub fn eval(self, alpha: Rational, d: i64) -> Result<Rational> {
        kappa_i(self.index, self.m, alpha, d)
    }

    /// Coefficients `(s, t)` with `κ(α) = s·α + t`.
    pub fn affine(self, d: i64) -> Result<(Rational, Rational)> {
        let t = self.eval(Rational::ZERO, d)?;
        let s = self.eval(Rational::ONE, d)? - t;
        Ok((s, t))
    }
}

impl fmt::Display for KappaFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kappa{}({})", self.index, self.m)
    }
}

impl Serialize for KappaFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `κ_i(m; α, d)` for `i ∈ 1..=5`.
///
/// | i | formula | m range |
/// |---|---------|---------|
/// | 1 | (d − m/2 − α)/(d − m) | 0 ≤ m < d/2 |
/// | 2 | (d − α)/(2(d − m)) | 1 ≤ m < d/2 |
/// | 3 | (d − m/2 − α)/(d − m + 1) | 0 ≤ m < d/2 |
/// | 4 | (d − α)/(2(d − m + 1)) | 1 ≤ m ≤ d/2 |
/// | 5 | (d − α − 1)/(2(d − m − 1)) | 1 ≤ m ≤ d/2 |
pub fn kappa_i(i: u8, m: i64, alpha: Rational, d: i64) -> Result<Rational> {
    if !(1..=MAX_DIMENSION).contains(&d) {
        return Err(Error::Domain(format!("dimension d = {d} out of range")));
    }
    let (m_min, m_ok) = match i {
        1 | 3 => (0, 2 * m < d),
        2 => (1, 2 * m < d),
        4 | 5 => (1, 2 * m <= d),
        _ => return Err(Error::Domain(format!("no kappa family with index {i}"))),
    };
    if m < m_min || !m_ok {
        return Err(Error::Domain(format!(
            "kappa{i}(m) undefined for m = {m}, d = {d}"
        )));
    }
    let da = Rational::int(d) - alpha;
    let half_m = q(m, 2);
    let (num, den) = match i {
        1 => (da - half_m, d - m),
        2 => (da, 2 * (d - m)),
        3 => (da - half_m, d - m + 1),
        4 => (da, 2 * (d - m + 1)),
        _ => (da - 1, 2 * (d - m - 1)),
    };
    if den == 0 {
        return Err(Error::Domain(format!(
            "kappa{i}(m) has a vanishing denominator at m = {m}, d = {d}"
        )));
    }
    Ok(num / den)
}

/// Which part of the piecewise formula produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Part::A => 'a',
            Part::B => 'b',
            Part::C => 'c',
            Part::D => 'd',
            Part::E => 'e',
            Part::F => 'f',
        };
        write!(f, "({c})")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Branch {
    pub part: Part,
    pub j: Option<i64>,
    pub formula: KappaFn,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.j {
            Some(j) => write!(f, "{} j={} {}", self.part, j, self.formula),
            None => write!(f, "{} {}", self.part, self.formula),
        }
    }
}

impl Serialize for Branch {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundResult {
    pub kappa: Rational,
    pub beta_upper: Rational,
    pub branch: Branch,
    pub m_star: i64,
}

fn finish(query: &ExponentQuery, part: Part, j: Option<i64>, formula: KappaFn) -> Result<BoundResult> {
    let kappa = formula.eval(query.alpha, query.d)?;
    if kappa <= Rational::ZERO || kappa >= q(1, 2) {
        return Err(Error::Internal(format!(
            "kappa = {kappa} outside (0, 1/2) at {} d={} alpha={}",
            query.surface, query.d, query.alpha
        )));
    }
    Ok(BoundResult {
        kappa,
        beta_upper: query.alpha - 1 + kappa * 2,
        branch: Branch { part, j, formula },
        m_star: formula.m,
    })
}

fn expect(query: &ExponentQuery, surface: Surface) -> Result<()> {
    if query.surface != surface {
        return Err(Error::Domain(format!(
            "expected a {surface} query, got {}",
            query.surface
        )));
    }
    // Re-validate: the fields are public.
    ExponentQuery::new(surface, query.d, query.alpha)?;
    Ok(())
}

fn min_of(alpha: Rational, d: i64, fs: &[KappaFn]) -> Result<(Rational, KappaFn)> {
    let mut best: Option<(Rational, KappaFn)> = None;
    for &f in fs {
        let v = f.eval(alpha, d)?;
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, f));
        }
    }
    best.ok_or_else(|| Error::Internal("empty candidate list".into()))
}

/// Optimal κ for the sphere, `d ≥ 4`, `α ∈ (d/2, d)`.
pub fn sphere_kappa(query: &ExponentQuery) -> Result<BoundResult> {
    expect(query, Surface::Sphere)?;
    let (d, a) = (query.d, query.alpha);
    if a >= d - 1 {
        return finish(query, Part::A, None, KappaFn::new(2, 1));
    }
    for j in 2..=(d - 1) / 2 {
        if a >= d - j && a <= d - j + 1 {
            let k1 = KappaFn::new(1, j - 1);
            let k2 = KappaFn::new(2, j);
            let cross = Rational::int(d - j) + Rational::new(d - 2 * j, d - j - 1);
            let shown = if a <= cross { k2 } else { k1 };
            let (v, _) = min_of(a, d, &[k2, k1])?;
            if shown.eval(a, d)? != v {
                return Err(Error::Internal(format!(
                    "sphere two-case form disagrees with the min at d={d}, alpha={a}"
                )));
            }
            return finish(query, Part::B, Some(j), shown);
        }
    }
    if d % 2 == 0 {
        if a <= q(d, 2) + 1 {
            return finish(query, Part::C, None, KappaFn::new(1, d / 2 - 1));
        }
    } else if a <= q(d + 1, 2) {
        return finish(query, Part::D, None, KappaFn::new(1, (d - 1) / 2));
    }
    Err(Error::Internal(format!(
        "no sphere branch covers d={d}, alpha={a}"
    )))
}

/// Optimal κ for the paraboloid, `d ≥ 3`, `α ∈ ((d−1)/2, d)`.
pub fn parab_kappa(query: &ExponentQuery) -> Result<BoundResult> {
    expect(query, Surface::Paraboloid)?;
    let (d, a) = (query.d, query.alpha);
    let f = (d + 1) / 3;
    let in_j = |j: i64| a >= d - j && a <= d - j + 1;

    if a >= d - 1 {
        return finish(query, Part::A, None, KappaFn::new(4, 1));
    }
    for j in 2..=f {
        if in_j(j) {
            let k3 = KappaFn::new(3, j - 1);
            let k4 = KappaFn::new(4, j);
            let cross = Rational::int(d - j) + Rational::new(d - 2 * j + 1, d - j);
            let shown = if a <= cross { k4 } else { k3 };
            let (v, _) = min_of(a, d, &[k4, k3])?;
            if shown.eval(a, d)? != v {
                return Err(Error::Internal(format!(
                    "paraboloid two-case form disagrees with the min at d={d}, alpha={a}"
                )));
            }
            return finish(query, Part::B, Some(j), shown);
        }
    }
    if in_j(f + 1) {
        return finish(query, Part::C, Some(f + 1), KappaFn::new(3, f));
    }
    for j in (f + 2)..=(d / 2) {
        if in_j(j) {
            let three = part_d_three_way(a, d, j)?;
            let (two, shown) = part_d_two_case(a, d, j)?;
            if three != two {
                return Err(Error::Internal(format!(
                    "part (d) forms disagree at d={d}, alpha={a}, j={j}: {three} vs {two}"
                )));
            }
            return finish(query, Part::D, Some(j), shown);
        }
    }
    if d % 2 == 1 && d >= 7 && a <= q(d + 1, 2) {
        return finish(query, Part::E, None, KappaFn::new(3, (d - 3) / 2));
    }
    if d % 2 == 0 && a <= q(d, 2) {
        return finish(query, Part::F, None, KappaFn::new(3, d / 2 - 1));
    }
    Err(Error::Internal(format!(
        "no paraboloid branch covers d={d}, alpha={a}"
    )))
}

/// `min{κ3(j−2), max{κ3(j−1), κ5(j−1)}, κ5(j)}`.
pub fn part_d_three_way(alpha: Rational, d: i64, j: i64) -> Result<Rational> {
    let inner = kappa_i(3, j - 1, alpha, d)?.max(kappa_i(5, j - 1, alpha, d)?);
    Ok(kappa_i(3, j - 2, alpha, d)?
        .min(inner)
        .min(kappa_i(5, j, alpha, d)?))
}

/// The displayed two-case simplification of the part (d) minimum, with the
/// formula attaining it.
pub fn part_d_two_case(alpha: Rational, d: i64, j: i64) -> Result<(Rational, KappaFn)> {
    let cross = Rational::int(d - j) + Rational::new(2 * (d - 2 * j + 1), d - j - 2);
    let pair = if alpha <= cross {
        [KappaFn::new(3, j - 1), KappaFn::new(5, j)]
    } else {
        [KappaFn::new(3, j - 2), KappaFn::new(5, j - 1)]
    };
    min_of(alpha, d, &pair)
}

/// Best bound known before the lattice constructions.
pub fn prior_upper_bound(surface: Surface, d: i64, alpha: Rational) -> Result<Rational> {
    let min_d = match surface {
        Surface::Sphere => 4,
        Surface::Paraboloid => 2,
    };
    if d < min_d || d > MAX_DIMENSION {
        return Err(Error::Domain(format!(
            "prior {surface} bound needs {min_d} <= d <= {MAX_DIMENSION}, got {d}"
        )));
    }
    if alpha <= Rational::ZERO || alpha >= d {
        return Err(Error::Domain(format!("need 0 < alpha < {d}, got {alpha}")));
    }
    Ok(match surface {
        Surface::Sphere if alpha <= q(d, 2) => alpha,
        Surface::Sphere => alpha - 1 + kappa_i(1, 0, alpha, d)? * 2,
        Surface::Paraboloid if alpha <= q(d - 1, 2) => alpha,
        Surface::Paraboloid => (alpha + 1) * (d - 1) / (d + 1),
    })
}

/// Best known lower bound for either surface.
pub fn lower_bound(alpha: Rational, d: i64) -> Result<Rational> {
    if !(2..=MAX_DIMENSION).contains(&d) {
        return Err(Error::Domain(format!("lower bound needs d >= 2, got {d}")));
    }
    if alpha <= Rational::ZERO || alpha >= d {
        return Err(Error::Domain(format!("need 0 < alpha < {d}, got {alpha}")));
    }
    Ok(if alpha <= q(d - 1, 2) {
        alpha
    } else if alpha <= q(d, 2) {
        q(d - 1, 2)
    } else {
        alpha * (d - 1) / d
    })
}

/// The α at which `α − 1 + 2κ̃(α, d) = d − α` for the paraboloid bound.
pub fn falconer_threshold(d: i64) -> Result<Rational> {
    if !(3..=MAX_DIMENSION).contains(&d) {
        return Err(Error::Domain(format!("threshold needs d >= 3, got {d}")));
    }
    let mut candidates = Vec::new();
    for m in 0..=d / 2 {
        for i in [3u8, 4, 5] {
            candidates.push(KappaFn::new(i, m));
        }
    }
    let lo = q(d - 1, 2);
    let mut roots: Vec<Rational> = Vec::new();
    for f in candidates {
        let Ok((s, t)) = f.affine(d) else { continue };
        let denom = (s + 1) * 2;
        if denom == 0 {
            continue;
        }
        let root = (Rational::int(d + 1) - t * 2) / denom;
        if root <= lo || root >= d {
            continue;
        }
        let actual = parab_kappa(&ExponentQuery::paraboloid(d, root)?)?;
        if actual.kappa == f.eval(root, d)? && !roots.contains(&root) {
            roots.push(root);
        }
    }
    match roots.as_slice() {
        [r] => Ok(*r),
        [] => Err(Error::NoSolution(format!("no threshold root for d = {d}"))),
        many => Err(Error::Internal(format!(
            "several threshold roots for d = {d}: {many:?}"
        ))),
    }
}

/// Which window of the construction lemmas prescribed κ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum LemmaClause {
    /// Sphere, `d/2 < α < d − m`: κ1(m).
    SphereLow,
    /// Sphere, `d − m ≤ α < d`: κ2(m).
    SphereHigh,
    /// Paraboloid, small m, `m ≤ α ≤ d − m`: κ3(m).
    ParabSmallLow,
    /// Paraboloid, small m, `d − m ≤ α < d`: κ4(m).
    ParabSmallHigh,
    /// Paraboloid, large m, `m ≤ α ≤ d − m − 1`: κ3(m).
    ParabLargeLow,
    /// Paraboloid, large m, `d − m − 1 ≤ α ≤ d − m`: max{κ3(m), κ5(m)}.
    ParabLargeMax,
    /// Paraboloid, large m, `d − m ≤ α ≤ (d + m − 1)/2`: κ5(m).
    ParabLargeMid,
    /// Paraboloid, large m, `(d + m − 1)/2 ≤ α < d`: κ4(m).
    ParabLargeHigh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaChoice {
    pub kappa: Rational,
    pub formula: KappaFn,
    pub clause: LemmaClause,
}

/// κ prescribed by the construction lemma for block dimension `m`.
pub fn lemma_kappa_selector(
    surface: Surface,
    m: i64,
    alpha: Rational,
    d: i64,
) -> Result<LemmaChoice> {
    let pick = |f: KappaFn, clause| -> Result<LemmaChoice> {
        Ok(LemmaChoice {
            kappa: f.eval(alpha, d)?,
            formula: f,
            clause,
        })
    };
    let outside = || {
        Error::Domain(format!(
            "no {surface} lemma window contains m = {m}, alpha = {alpha}, d = {d}"
        ))
    };
    if alpha <= Rational::ZERO || alpha >= d || d > MAX_DIMENSION {
        return Err(outside());
    }
    match surface {
        Surface::Sphere => {
            if d < 4 || m < 1 || 2 * m >= d || alpha <= q(d, 2) {
                return Err(outside());
            }
            if alpha < d - m {
                pick(KappaFn::new(1, m), LemmaClause::SphereLow)
            } else {
                pick(KappaFn::new(2, m), LemmaClause::SphereHigh)
            }
        }
        Surface::Paraboloid => {
            if d < 3 || m < 1 || 2 * m > d {
                return Err(outside());
            }
            let (k3, k4, k5) = (KappaFn::new(3, m), KappaFn::new(4, m), KappaFn::new(5, m));
            if 3 * m <= d + 1 {
                if alpha < m {
                    Err(outside())
                } else if alpha <= d - m {
                    pick(k3, LemmaClause::ParabSmallLow)
                } else {
                    pick(k4, LemmaClause::ParabSmallHigh)
                }
            } else if 2 * m < d && alpha < m {
                Err(outside())
            } else if 2 * m < d && alpha <= d - m - 1 {
                pick(k3, LemmaClause::ParabLargeLow)
            } else if 2 * m < d && alpha <= d - m {
                let v3 = k3.eval(alpha, d)?;
                let v5 = k5.eval(alpha, d)?;
                let winner = if v3 >= v5 { k3 } else { k5 };
                // The solved crossover is undefined when d − m − 3 = 0; the
                // direct comparison above is the primitive form.
                if d - m - 3 != 0 {
                    let cross =
                        Rational::int(d - m - 1) + Rational::new(2 * (d - 2 * m - 1), d - m - 3);
                    if (alpha <= cross) != (v3 >= v5) && v3 != v5 {
                        return Err(Error::Internal(format!(
                            "max(kappa3, kappa5) crossover mismatch at m={m}, alpha={alpha}, d={d}"
                        )));
                    }
                }
                pick(winner, LemmaClause::ParabLargeMax)
            } else if alpha < d - m {
                Err(outside())
            } else if alpha <= q(d + m - 1, 2) {
                pick(k5, LemmaClause::ParabLargeMid)
            } else {
                pick(k4, LemmaClause::ParabLargeHigh)
            }
        }
    }
}
