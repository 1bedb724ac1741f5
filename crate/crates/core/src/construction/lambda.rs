use rand::Rng;
use serde::Serialize;

use super::ConstructionParams;
use crate::error::{Error, Result};
use crate::exponents::Surface;
use crate::sampling::{ball_volume, fill_in_ball, task_rng, Estimate};

/// A block of coordinates: either one ball at the origin or a periodic lattice of balls.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellBlock {
    pub dims: usize,
    pub period: Option<f64>,
    pub radius: f64,
}

impl CellBlock {
    pub fn single(dims: usize, radius: f64) -> Self {
        CellBlock {
            dims,
            period: None,
            radius,
        }
    }

    pub fn periodic(dims: usize, period: f64, radius: f64) -> Self {
        CellBlock {
            dims,
            period: Some(period),
            radius,
        }
    }

    /// Largest cell index whose cube can meet `[−1, 1]`.
    pub fn max_index(&self) -> i64 {
        match self.period {
            Some(p) => ((1.0 + self.radius) / p).floor() as i64,
            None => 0,
        }
    }

    /// Number of cells in the unit cube's bounding box.
    pub fn cells_in_box(&self) -> f64 {
        (2.0 * self.max_index() as f64 + 1.0).powi(self.dims as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        ball_volume(self.dims, self.radius)
    }

    /// Nearest cell and the offset from its centre.
    pub fn nearest(&self, y: &[f64]) -> BlockCoord {
        match self.period {
            Some(p) => {
                let cell: Vec<i64> = y.iter().map(|v| (v / p).round() as i64).collect();
                let offset = y
                    .iter()
                    .zip(&cell)
                    .map(|(v, &j)| v - j as f64 * p)
                    .collect();
                BlockCoord { cell, offset }
            }
            None => BlockCoord {
                cell: vec![0; y.len()],
                offset: y.to_vec(),
            },
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        let bc = self.nearest(y);
        bc.offset.iter().map(|o| o * o).sum::<f64>() < self.radius * self.radius
    }

    fn max_norm(&self) -> f64 {
        match self.period {
            Some(p) => self.max_index() as f64 * p * (self.dims as f64).sqrt() + self.radius,
            None => self.radius,
        }
    }
}

/// Position of a point within one block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockCoord {
    pub cell: Vec<i64>,
    pub offset: Vec<f64>,
}

/// A point of Λ kept in lattice form, so phases can be split exactly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpatialPoint {
    pub blocks: Vec<BlockCoord>,
}

impl SpatialPoint {
    pub fn coords(&self, set: &SlabSet) -> Vec<f64> {
        let mut out = Vec::with_capacity(set.d);
        for (b, bc) in set.blocks.iter().zip(&self.blocks) {
            let p = b.period.unwrap_or(0.0);
            for (&j, &o) in bc.cell.iter().zip(&bc.offset) {
                out.push(j as f64 * p + o);
            }
        }
        out
    }

    /// Point reflection through the origin.
    pub fn negated(&self) -> SpatialPoint {
        SpatialPoint {
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockCoord {
                    cell: b.cell.iter().map(|j| -j).collect(),
                    offset: b.offset.iter().map(|o| -o).collect(),
                })
                .collect(),
        }
    }
}

/// Λ: a product of cell blocks intersected with the unit ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlabSet {
    pub surface: Option<Surface>,
    pub d: usize,
    pub blocks: Vec<CellBlock>,
}

impl SlabSet {
    /// Arbitrary block products, e.g. the whole unit ball as one block of radius 1.
    pub fn from_blocks(blocks: Vec<CellBlock>) -> Result<Self> {
        for b in &blocks {
            if b.dims == 0 || !(b.radius >= 0.0 && b.radius.is_finite()) {
                return Err(Error::InvalidParams(format!("bad cell block {b:?}")));
            }
            if let Some(p) = b.period {
                if !(p.is_finite() && p > 2.0 * b.radius) {
                    return Err(Error::InvalidParams(format!(
                        "period {p} must exceed the cell diameter {}",
                        2.0 * b.radius
                    )));
                }
            }
        }
        let d = blocks.iter().map(|b| b.dims).sum();
        Ok(SlabSet {
            surface: None,
            d,
            blocks,
        })
    }

    pub fn split<'a>(&self, x: &'a [f64]) -> Vec<&'a [f64]> {
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut start = 0;
        for b in &self.blocks {
            out.push(&x[start..start + b.dims]);
            start += b.dims;
        }
        out
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.d
            && x.iter().map(|v| v * v).sum::<f64>() < 1.0
            && self
                .split(x)
                .iter()
                .zip(&self.blocks)
                .all(|(y, b)| b.contains(y))
    }

    /// Measure of the union of cells meeting the bounding cube, before the ball clip.
    pub fn box_volume(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.cells_in_box() * b.cell_volume())
            .product()
    }

    /// Whether the unit-ball clip can remove anything.
    pub fn clip_active(&self) -> bool {
        self.blocks.iter().map(|b| b.max_norm().powi(2)).sum::<f64>() >= 1.0
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (SpatialPoint, f64) {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        let mut norm2 = 0.0;
        for b in &self.blocks {
            let jmax = b.max_index();
            let cell: Vec<i64> = (0..b.dims)
                .map(|_| if jmax == 0 { 0 } else { rng.random_range(-jmax..=jmax) })
                .collect();
            let mut offset = vec![0.0; b.dims];
            fill_in_ball(rng, b.radius, &mut offset);
            let p = b.period.unwrap_or(0.0);
            for (&j, &o) in cell.iter().zip(&offset) {
                norm2 += (j as f64 * p + o).powi(2);
            }
            blocks.push(BlockCoord { cell, offset });
        }
        (SpatialPoint { blocks }, norm2)
    }

    /// Uniform point of Λ by rejection from the bounding cell union.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SpatialPoint> {
        if self.box_volume() == 0.0 {
            return Err(Error::EmptyConstruction("Λ has zero measure".into()));
        }
        for _ in 0..10_000_000 {
            let (p, n2) = self.draw(rng);
            if n2 < 1.0 {
                return Ok(p);
            }
        }
        Err(Error::EmptyConstruction(
            "no sample of Λ landed in the unit ball".into(),
        ))
    }
}

/// Λ for a construction: `B^m(cR^{−1/2}) × (R^{κ−1}Z^k + B^k(cR^{−1}))`, and for the
/// paraboloid one more factor `R^{2κ−1}/(2π)·Z + (−cR^{−1}, cR^{−1})`.
pub fn build_lambda(params: &ConstructionParams) -> SlabSet {
    let s = &params.scales;
    let mut blocks = vec![
        CellBlock::single(params.m(), s.knapp_radius),
        CellBlock::periodic(params.fine_dims(), s.slab_period, s.cell_radius),
    ];
    if params.surface() == Surface::Paraboloid {
        blocks.push(CellBlock::periodic(1, s.height_period, s.cell_radius));
    }
    SlabSet {
        surface: Some(params.surface()),
        d: params.d(),
        blocks,
    }
}

/// |Λ|: exact cell counting in the bounding box, times a Monte-Carlo acceptance
/// fraction for the unit-ball clip when it is active.
pub fn lambda_volume(set: &SlabSet, n_samples: usize, seed: u64) -> Result<Estimate> {
    let box_volume = set.box_volume();
    if box_volume == 0.0 || !set.clip_active() {
        return Ok(Estimate::exact(box_volume));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParams("lambda_volume needs samples".into()));
    }
    let mut rng = task_rng(seed, 0x4c41_4d42);
    let hits = (0..n_samples)
        .filter(|_| set.draw(&mut rng).1 < 1.0)
        .count();
    let p = hits as f64 / n_samples as f64;
    let est = Estimate {
        value: box_volume * p,
        stderr: box_volume * (p * (1.0 - p) / n_samples as f64).sqrt(),
    };
    if est.value == 0.0 || est.relative_error() > 0.02 {
        return Err(Error::Precision(format!(
            "|Λ| estimate {:.4e} ± {:.2e} from {n_samples} samples",
            est.value, est.stderr
        )));
    }
    Ok(est)
}

/// The cells of one axis that meet a window, as a first partial interval, a run
/// of full intervals and a last partial interval.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AxisUnion {
    period: f64,
    half: f64,
    first: i64,
    last: i64,
    first_range: (f64, f64),
    last_range: (f64, f64),
}

impl AxisUnion {
    /// Cells `jp + (−half, half)` (or the single cell at 0) intersected with `[lo, hi]`.
    pub(crate) fn new(period: Option<f64>, half: f64, lo: f64, hi: f64) -> Option<AxisUnion> {
        if half <= 0.0 || hi <= lo {
            return None;
        }
        let p = period.unwrap_or(0.0);
        let range = |j: i64| {
            let c = j as f64 * p;
            ((lo - c).max(-half), (hi - c).min(half))
        };
        let (mut first, mut last) = match period {
            Some(p) => (((lo - half) / p).ceil() as i64, ((hi + half) / p).floor() as i64),
            None => (0, 0),
        };
        while first <= last && range(first).0 >= range(first).1 {
            first += 1;
        }
        while last >= first && range(last).0 >= range(last).1 {
            last -= 1;
        }
        if first > last {
            return None;
        }
        Some(AxisUnion {
            period: p,
            half,
            first,
            last,
            first_range: range(first),
            last_range: range(last),
        })
    }

    fn first_len(&self) -> f64 {
        self.first_range.1 - self.first_range.0
    }

    fn last_len(&self) -> f64 {
        if self.last > self.first {
            self.last_range.1 - self.last_range.0
        } else {
            0.0
        }
    }

    fn middle(&self) -> i64 {
        (self.last - self.first - 1).max(0)
    }

    pub(crate) fn length(&self) -> f64 {
        self.first_len() + self.last_len() + self.middle() as f64 * 2.0 * self.half
    }

    /// Maps `u ∈ [0, 1)` to (cell, offset) uniformly along the union.
    pub(crate) fn sample(&self, u: f64) -> (i64, f64) {
        let mut t = u * self.length();
        let f = self.first_len();
        if t < f || (self.middle() == 0 && self.last_len() == 0.0) {
            return (self.first, (self.first_range.0 + t).min(self.first_range.1));
        }
        t -= f;
        let full = 2.0 * self.half;
        let mid = self.middle() as f64 * full;
        if t < mid {
            let idx = ((t / full).floor() as i64).min(self.middle() - 1);
            let off = -self.half + (t - idx as f64 * full);
            return (self.first + 1 + idx, off.min(self.half));
        }
        t -= mid;
        (self.last, (self.last_range.0 + t).min(self.last_range.1))
    }

    pub(crate) fn coordinate(&self, cell: i64, offset: f64) -> f64 {
        cell as f64 * self.period + offset
    }
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
    fn origin_is_a_member_and_midpoints_are_not() {
        let p = parab(2f64.powi(24));
        let set = build_lambda(&p);
        assert!(set.contains(&[0.0, 0.0, 0.0]));
        let mid = p.scales.slab_period / 2.0;
        assert!(!set.contains(&[0.0, mid, 0.0]));
        assert!(!set.contains(&[0.0, 0.0, p.scales.height_period / 2.0]));
        assert!(!set.contains(&[0.0, 1.0, 0.0]));
    }

    #[test]
    fn sampler_output_satisfies_predicate() {
        let p = parab(2f64.powi(20));
        let set = build_lambda(&p);
        let mut rng = task_rng(5, 0);
        for _ in 0..2000 {
            let x = set.sample(&mut rng).unwrap();
            assert!(set.contains(&x.coords(&set)));
        }
    }

    #[test]
    fn zero_width_gives_zero_volume() {
        let cfg = ConstructionConfig::new(Surface::Paraboloid, 3, 1, Rational::int(2), None)
            .unwrap()
            .with_width_constant(0.0)
            .unwrap();
        let set = build_lambda(&cfg.at_r(1e6).unwrap());
        assert_eq!(lambda_volume(&set, 1000, 1).unwrap().value, 0.0);
    }

    #[test]
    fn axis_union_lengths() {
        // Cells of half-width 0.1 every 1.0, window [−1.05, 2.3].
        let u = AxisUnion::new(Some(1.0), 0.1, -1.05, 2.3).unwrap();
        // cell −1: [−1.05, −0.9] = 0.15, cells 0, 1: 0.2 each, cell 2: [1.9, 2.1] = 0.2
        assert!((u.length() - 0.75).abs() < 1e-12);
        let s = AxisUnion::new(None, 0.5, 0.2, 3.0).unwrap();
        assert!((s.length() - 0.3).abs() < 1e-12);
        assert!(AxisUnion::new(Some(1.0), 0.1, 0.2, 0.8).is_none());
        for k in 0..1000 {
            let (j, o) = u.sample(k as f64 / 1000.0);
            let x = u.coordinate(j, o);
            assert!(o.abs() <= 0.1 + 1e-12 && (-1.05..=2.3).contains(&x), "{j} {o}");
        }
    }
}
