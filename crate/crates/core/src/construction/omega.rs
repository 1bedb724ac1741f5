use rand::Rng;
use serde::Serialize;

use super::{enumerate_gamma, ConstructionParams, LatticeSphereSet};
use crate::error::{Error, Result};
use crate::exponents::Surface;
use crate::sampling::{ball_volume, fill_in_ball, norm2, task_rng, Estimate};

/// Patch counts above this are never listed explicitly.
pub const MAX_MATERIALIZED_PATCHES: usize = 1_000_000;

/// Quadrature node budgets above this are refused.
pub const MAX_QUADRATURE_NODES: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PatchCenters {
    /// Sphere: unit directions `v/N` for `v ∈ Γ`.
    Directions(LatticeSphereSet),
    /// Paraboloid: `spacing·mvec` for every `mvec ∈ Z^dim` with
    /// `spacing·|mvec| + cell_radius ≤ 1`; stored as a count only.
    Lattice {
        dim: usize,
        spacing: f64,
        max_index: i64,
        count: usize,
    },
}

/// Ω: Knapp ball in the first `m` frequency coordinates times small cells
/// around lattice centres in the rest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchSet {
    pub surface: Surface,
    pub d: usize,
    pub m: usize,
    pub fine_dims: usize,
    pub knapp_radius: f64,
    pub cell_radius: f64,
    /// Distance between adjacent centres in lattice units (`2πR^{−κ}`; `1/N` on the sphere).
    pub spacing: f64,
    pub centers: PatchCenters,
    /// Tangential oversampling factor used by the sphere chart.
    pub chart_margin: f64,
}

/// A frequency point, `ξ = (knapp, spacing·cell + offset)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreqPoint {
    pub knapp: Vec<f64>,
    pub cell: Vec<i64>,
    pub offset: Vec<f64>,
}

impl FreqPoint {
    pub fn coords(&self, patches: &PatchSet) -> Vec<f64> {
        let mut out = self.knapp.clone();
        out.extend(
            self.cell
                .iter()
                .zip(&self.offset)
                .map(|(&j, &o)| j as f64 * patches.spacing + o),
        );
        out
    }

    pub fn negated(&self) -> FreqPoint {
        FreqPoint {
            knapp: self.knapp.iter().map(|x| -x).collect(),
            cell: self.cell.iter().map(|j| -j).collect(),
            offset: self.offset.iter().map(|x| -x).collect(),
        }
    }
}

fn lattice_points_in_ball(dim: usize, radius2: f64, mut f: impl FnMut(&[i64])) {
    fn rec(i: usize, rem: f64, cur: &mut Vec<i64>, f: &mut dyn FnMut(&[i64])) {
        if i == cur.len() {
            f(cur);
            return;
        }
        let b = rem.max(0.0).sqrt().floor() as i64;
        for v in -b..=b {
            let left = rem - (v * v) as f64;
            if left < 0.0 {
                continue;
            }
            cur[i] = v;
            rec(i + 1, left, cur, f);
        }
        cur[i] = 0;
    }
    let mut cur = vec![0i64; dim];
    rec(0, radius2, &mut cur, &mut f);
}

impl PatchSet {
    pub fn patch_count(&self) -> usize {
        match &self.centers {
            PatchCenters::Directions(g) => g.len(),
            PatchCenters::Lattice { count, .. } => *count,
        }
    }

    fn lattice_radius2(&self) -> f64 {
        ((1.0 - self.cell_radius) / self.spacing).powi(2)
    }

    fn center_allowed(&self, mvec: &[i64]) -> bool {
        match &self.centers {
            PatchCenters::Directions(g) => {
                let n2: i64 = mvec.iter().map(|v| v * v).sum();
                n2 == (g.radius * g.radius) as i64
            }
            PatchCenters::Lattice { .. } => {
                let n2: i64 = mvec.iter().map(|v| v * v).sum();
                (n2 as f64) <= self.lattice_radius2()
            }
        }
    }

    /// Every patch centre in enumeration order; refuses very large sets.
    pub fn center_list(&self) -> Result<Vec<Vec<i64>>> {
        match &self.centers {
            PatchCenters::Directions(g) => Ok(g.points.clone()),
            PatchCenters::Lattice { dim, count, .. } => {
                if *count > MAX_MATERIALIZED_PATCHES {
                    return Err(Error::InvalidParams(format!(
                        "{count} patches is too many to list"
                    )));
                }
                let mut out = Vec::with_capacity(*count);
                lattice_points_in_ball(*dim, self.lattice_radius2(), |p| out.push(p.to_vec()));
                Ok(out)
            }
        }
    }

    /// Uniformly chosen patch centre.
    pub fn sample_center<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        match &self.centers {
            PatchCenters::Directions(g) => g.points[rng.random_range(0..g.len())].clone(),
            PatchCenters::Lattice { dim, max_index, .. } => loop {
                let mvec: Vec<i64> = (0..*dim)
                    .map(|_| rng.random_range(-max_index..=*max_index))
                    .collect();
                if self.center_allowed(&mvec) {
                    return mvec;
                }
            },
        }
    }

    /// Membership straight from the set definition.
    pub fn contains(&self, xi: &[f64]) -> bool {
        let (knapp, fine) = xi.split_at(self.m.min(xi.len()));
        let expected_len = match self.surface {
            Surface::Sphere => self.d,
            Surface::Paraboloid => self.d - 1,
        };
        if xi.len() != expected_len || norm2(knapp) >= self.knapp_radius.powi(2) {
            return false;
        }
        let mvec: Vec<i64> = fine.iter().map(|v| (v / self.spacing).round() as i64).collect();
        if !self.center_allowed(&mvec) {
            return false;
        }
        let off2: f64 = fine
            .iter()
            .zip(&mvec)
            .map(|(v, &j)| (v - j as f64 * self.spacing).powi(2))
            .sum();
        if off2 >= self.cell_radius.powi(2) {
            return false;
        }
        match self.surface {
            Surface::Sphere => (norm2(xi).sqrt() - 1.0).abs() < 1e-12,
            Surface::Paraboloid => norm2(xi) < 1.0,
        }
    }

    /// One chart sample in the patch around `mvec`: the point and its weight
    /// relative to the chart's parameter measure (zero when rejected).
    fn chart_sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        mvec: &[i64],
        frame: Option<&[Vec<f64>]>,
    ) -> (FreqPoint, f64) {
        let mut knapp = vec![0.0; self.m];
        fill_in_ball(rng, self.knapp_radius, &mut knapp);
        let k = self.fine_dims;
        match self.surface {
            Surface::Paraboloid => {
                let mut offset = vec![0.0; k];
                fill_in_ball(rng, self.cell_radius, &mut offset);
                let p = FreqPoint {
                    knapp,
                    cell: mvec.to_vec(),
                    offset,
                };
                let inside = norm2(&p.coords(self)) < 1.0;
                (p, if inside { 1.0 } else { 0.0 })
            }
            Surface::Sphere => {
                let frame = frame.expect("sphere chart needs a tangent frame");
                let inv_n = self.spacing;
                let gamma: Vec<f64> = mvec.iter().map(|&v| v as f64 * inv_n).collect();
                let mut t = vec![0.0; k - 1];
                fill_in_ball(rng, self.cell_radius * self.chart_margin, &mut t);
                let mut w = vec![0.0; k];
                for (ti, b) in t.iter().zip(frame) {
                    for (wj, bj) in w.iter_mut().zip(b) {
                        *wj += ti * bj;
                    }
                }
                let kn2 = norm2(&knapp);
                let w2 = norm2(&w);
                let rho = (1.0 - kn2).sqrt();
                let s = (1.0 + w2).sqrt();
                // ρ/s − 1 without cancellation.
                let shrink = -(kn2 + w2) / ((rho + s) * s);
                let ratio = rho / s;
                let offset: Vec<f64> = gamma
                    .iter()
                    .zip(&w)
                    .map(|(g, wi)| g * shrink + ratio * wi)
                    .collect();
                let jac = (1.0 - kn2).powf((k as f64 - 2.0) / 2.0) * (1.0 + w2).powf(-(k as f64) / 2.0);
                let keep = norm2(&offset) < self.cell_radius.powi(2);
                let p = FreqPoint {
                    knapp,
                    cell: mvec.to_vec(),
                    offset,
                };
                (p, if keep { jac } else { 0.0 })
            }
        }
    }

    /// Parameter-space volume of one patch's chart domain.
    fn chart_volume(&self) -> f64 {
        let knapp = ball_volume(self.m, self.knapp_radius);
        match self.surface {
            Surface::Paraboloid => knapp * ball_volume(self.fine_dims, self.cell_radius),
            Surface::Sphere => {
                knapp * ball_volume(self.fine_dims - 1, self.cell_radius * self.chart_margin)
            }
        }
    }

    /// Whether a paraboloid patch lies inside the unit ball without clipping.
    fn unclipped(&self, mvec: &[i64]) -> bool {
        match self.surface {
            Surface::Sphere => false,
            Surface::Paraboloid => {
                let c = (mvec.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt() * self.spacing;
                self.knapp_radius.powi(2) + (c + self.cell_radius).powi(2) < 1.0
            }
        }
    }

    /// A member of Ω: uniform patch, then a chart sample inside it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FreqPoint> {
        for _ in 0..100_000 {
            let mvec = self.sample_center(rng);
            let frame = match self.surface {
                Surface::Sphere => Some(tangent_frame(&mvec)),
                Surface::Paraboloid => None,
            };
            let (p, w) = self.chart_sample(rng, &mvec, frame.as_deref());
            if w > 0.0 {
                return Ok(p);
            }
        }
        Err(Error::EmptyConstruction("could not sample a point of Ω".into()))
    }
}

/// Orthonormal basis of the hyperplane orthogonal to `v`.
fn tangent_frame(v: &[i64]) -> Vec<Vec<f64>> {
    let k = v.len();
    let n = (v.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt();
    let unit: Vec<f64> = v.iter().map(|&x| x as f64 / n).collect();
    let skip = (0..k)
        .max_by(|&a, &b| unit[a].abs().total_cmp(&unit[b].abs()))
        .unwrap_or(0);
    let mut basis: Vec<Vec<f64>> = vec![unit.clone()];
    for i in (0..k).filter(|&i| i != skip) {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        for b in &basis {
            let proj: f64 = e.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in e.iter_mut().zip(b) {
                *x -= proj * y;
            }
        }
        let len = norm2(&e).sqrt();
        e.iter_mut().for_each(|x| *x /= len);
        basis.push(e);
    }
    basis.remove(0);
    basis
}

/// Ω for a construction.
pub fn build_omega(params: &ConstructionParams) -> Result<PatchSet> {
    let s = &params.scales;
    let k = params.fine_dims();
    let (spacing, centers) = match params.surface() {
        Surface::Sphere => {
            let n = params.lattice_radius.ok_or_else(|| {
                Error::InvalidParams("sphere Ω needs R from an admissible lattice radius".into())
            })?;
            let gamma = enumerate_gamma(n, k)?;
            if gamma.is_empty() {
                return Err(Error::EmptyConstruction(format!(
                    "no integer points of norm {n} in dimension {k}"
                )));
            }
            (1.0 / n as f64, PatchCenters::Directions(gamma))
        }
        Surface::Paraboloid => {
            let spacing = s.freq_spacing;
            let radius = (1.0 - s.cell_radius) / spacing;
            if radius < 0.0 {
                return Err(Error::EmptyConstruction("cells wider than the unit ball".into()));
            }
            let estimate = ball_volume(k, radius + 1.0);
            if estimate > 1e9 {
                return Err(Error::InvalidParams(format!(
                    "about {estimate:.2e} patches is too many to count"
                )));
            }
            let mut count = 0usize;
            lattice_points_in_ball(k, radius * radius, |_| count += 1);
            (
                spacing,
                PatchCenters::Lattice {
                    dim: k,
                    spacing,
                    max_index: radius.floor() as i64,
                    count,
                },
            )
        }
    };
    let patches = PatchSet {
        surface: params.surface(),
        d: params.d(),
        m: params.m(),
        fine_dims: k,
        knapp_radius: s.knapp_radius,
        cell_radius: s.cell_radius,
        spacing,
        centers,
        chart_margin: 1.0 + params.c().max(1e-3),
    };
    if patches.patch_count() == 0 {
        return Err(Error::EmptyConstruction("no patch survives the clip".into()));
    }
    Ok(patches)
}

/// Weighted nodes covering Ω, laid out patch by patch.
#[derive(Clone, Debug)]
pub struct OmegaQuadrature {
    pub nodes: Vec<FreqPoint>,
    pub weights: Vec<f64>,
    /// `[start, end)` node ranges, one per patch.
    pub patch_ranges: Vec<(usize, usize)>,
}

impl OmegaQuadrature {
    /// `nodes_per_patch` chart samples in every patch; patch `i` uses stream `i` of `seed`.
    pub fn build(patches: &PatchSet, nodes_per_patch: usize, seed: u64) -> Result<Self> {
        if nodes_per_patch == 0 {
            return Err(Error::InvalidParams("quadrature needs nodes".into()));
        }
        let centers = patches.center_list()?;
        let total = centers.len().saturating_mul(nodes_per_patch);
        if total > MAX_QUADRATURE_NODES {
            return Err(Error::InvalidParams(format!(
                "{total} quadrature nodes exceeds the limit {MAX_QUADRATURE_NODES}"
            )));
        }
        let vol = patches.chart_volume() / nodes_per_patch as f64;
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut patch_ranges = Vec::with_capacity(centers.len());
        for (i, mvec) in centers.iter().enumerate() {
            let mut rng = task_rng(seed, i as u64);
            let frame = match patches.surface {
                Surface::Sphere => Some(tangent_frame(mvec)),
                Surface::Paraboloid => None,
            };
            let exact = patches.unclipped(mvec);
            let start = nodes.len();
            for _ in 0..nodes_per_patch {
                let (p, w) = patches.chart_sample(&mut rng, mvec, frame.as_deref());
                nodes.push(p);
                weights.push(if exact { vol } else { vol * w });
            }
            patch_ranges.push((start, nodes.len()));
        }
        Ok(OmegaQuadrature {
            nodes,
            weights,
            patch_ranges,
        })
    }

    /// Σ weights, with the per-patch sampling error.
    pub fn measure(&self) -> Estimate {
        let mut value = 0.0;
        let mut var = 0.0;
        for &(a, b) in &self.patch_ranges {
            let w = &self.weights[a..b];
            let n = w.len() as f64;
            let sum: f64 = w.iter().sum();
            value += sum;
            if w.len() > 1 {
                let mean = sum / n;
                let s2 = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                var += n * s2;
            }
        }
        Estimate {
            value,
            stderr: var.sqrt(),
        }
    }
}

/// meas(Ω): exact for unclipped paraboloid patches, chart Monte-Carlo otherwise.
pub fn omega_measure(patches: &PatchSet, nodes_per_patch: usize, seed: u64) -> Result<Estimate> {
    let est = OmegaQuadrature::build(patches, nodes_per_patch, seed)?.measure();
    if est.value <= 0.0 || est.relative_error() > 0.02 {
        return Err(Error::Precision(format!(
            "meas(Ω) = {:.4e} ± {:.2e} with {nodes_per_patch} nodes per patch",
            est.value, est.stderr
        )));
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::ConstructionConfig;
    use crate::rational::Rational;

    fn parab(r: f64) -> ConstructionParams {
        ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None)
            .unwrap()
            .at_r(r)
            .unwrap()
    }

    #[test]
    fn paraboloid_membership() {
        let p = parab(2f64.powi(24));
        let om = build_omega(&p).unwrap();
        assert!(om.contains(&[0.0, 0.0]));
        assert!(!om.contains(&[2.0 * p.scales.knapp_radius, 0.0]));
        assert!(om.contains(&[0.0, om.spacing + 0.5 * om.cell_radius]));
        assert!(!om.contains(&[0.0, om.spacing + 1.5 * om.cell_radius]));
    }

    #[test]
    fn tangent_frames_are_orthonormal() {
        for v in [vec![1, 0, 0], vec![2, 1, 2], vec![0, 0, -3, 4]] {
            let f = tangent_frame(&v);
            assert_eq!(f.len(), v.len() - 1);
            for (i, a) in f.iter().enumerate() {
                let along: f64 = a.iter().zip(&v).map(|(x, &y)| x * y as f64).sum();
                assert!(along.abs() < 1e-12);
                for (j, b) in f.iter().enumerate() {
                    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sphere_samples_are_members() {
        let cfg = ConstructionConfig::new(Surface::Sphere, 4, 1, Rational::int(3), None).unwrap();
        let p = cfg.at_lattice_radius(2, 1e8).unwrap();
        let om = build_omega(&p).unwrap();
        let mut rng = task_rng(3, 0);
        for _ in 0..500 {
            let xi = om.sample(&mut rng).unwrap();
            assert!(om.contains(&xi.coords(&om)));
        }
    }

    #[test]
    fn unclipped_paraboloid_measure_is_exact() {
        let p = parab(2f64.powi(20));
        let om = build_omega(&p).unwrap();
        let est = omega_measure(&om, 8, 1).unwrap();
        let one = ball_volume(1, p.scales.knapp_radius) * ball_volume(1, p.scales.cell_radius);
        assert_eq!(est.stderr, 0.0);
        assert!((est.value / (one * om.patch_count() as f64) - 1.0).abs() < 1e-12);
    }
}
