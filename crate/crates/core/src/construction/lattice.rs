use serde::Serialize;

use crate::error::{Error, Result};

/// All integer vectors of a given Euclidean norm, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LatticeSphereSet {
    pub dim: usize,
    pub radius: u64,
    pub points: Vec<Vec<i64>>,
}

impl LatticeSphereSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Enumerates `{v ∈ Z^dim : |v| = n}` by depth-first search with a remaining-norm budget.
/// An empty result is a valid answer, not an error.
pub fn enumerate_gamma(n: u64, dim: usize) -> Result<LatticeSphereSet> {
    if n == 0 || dim < 2 {
        return Err(Error::InvalidParams(format!(
            "enumerate_gamma needs n >= 1 and dim >= 2, got n = {n}, dim = {dim}"
        )));
    }
    if n > 1_000_000 {
        return Err(Error::InvalidParams(format!("lattice radius {n} too large")));
    }
    let target = (n * n) as i64;
    let mut points = Vec::new();
    let mut current = vec![0i64; dim];
    search(0, target, &mut current, &mut points);
    Ok(LatticeSphereSet {
        dim,
        radius: n,
        points,
    })
}

fn isqrt(x: i64) -> i64 {
    let mut s = (x as f64).sqrt() as i64;
    while s * s > x {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= x {
        s += 1;
    }
    s
}

fn search(i: usize, remaining: i64, current: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    let dim = current.len();
    if i == dim - 1 {
        let s = isqrt(remaining);
        if s * s == remaining {
            for v in if s == 0 { vec![0] } else { vec![-s, s] } {
                current[i] = v;
                out.push(current.clone());
            }
        }
        return;
    }
    let bound = isqrt(remaining);
    for v in -bound..=bound {
        current[i] = v;
        search(i + 1, remaining - v * v, current, out);
    }
    current[i] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_gamma(1, 4).unwrap().len(), 8);
        assert_eq!(enumerate_gamma(2, 4).unwrap().len(), 24);
        assert_eq!(enumerate_gamma(1, 3).unwrap().len(), 6);
        assert_eq!(enumerate_gamma(3, 3).unwrap().len(), 30);
    }

    #[test]
    fn every_point_has_the_right_norm() {
        let g = enumerate_gamma(5, 3).unwrap();
        for p in &g.points {
            assert_eq!(p.iter().map(|x| x * x).sum::<i64>(), 25);
        }
        let mut sorted = g.points.clone();
        sorted.sort();
        assert_eq!(sorted, g.points);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(enumerate_gamma(0, 3).is_err());
        assert!(enumerate_gamma(1, 1).is_err());
    }
}
