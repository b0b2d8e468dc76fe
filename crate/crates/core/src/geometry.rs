//! Axis-aligned boxes shared by partitions, measurable sets and grained regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Volumes below this are treated as empty.
pub const VOLUME_EPS: f64 = 1e-15;

/// A closed axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "box corners have lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "box corners out of order: {lo:?} / {hi:?}"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// The unit box `[0,1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// Intersection with positive volume, if any.
    pub fn intersect(&self, other: &AxisBox) -> Option<AxisBox> {
        if self.dim() != other.dim() {
            return None;
        }
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return None;
        }
        let b = AxisBox { lo, hi };
        (b.volume() > VOLUME_EPS).then_some(b)
    }

    pub fn overlap_volume(&self, other: &AxisBox) -> f64 {
        self.intersect(other).map_or(0.0, |b| b.volume())
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Parses `lo0,lo1,...,hi0,hi1,...`.
    pub fn parse_flat(s: &str) -> Result<Self> {
        let vals: Vec<f64> = s
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidParameter(format!("box `{s}`: {e}")))?;
        if vals.is_empty() || !vals.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "box `{s}` needs an even number of coordinates"
            )));
        }
        let d = vals.len() / 2;
        AxisBox::new(vals[..d].to_vec(), vals[d..].to_vec())
    }
}

/// Cell index of `x` on a uniform grid of `n` cells over `[0,1]`.
///
/// Points on an interior edge belong to the lower-index cell.
pub fn grid_index(x: f64, n: usize) -> usize {
    let s = x * n as f64;
    let k = s.floor();
    let idx = if s == k && k > 0.0 { k - 1.0 } else { k };
    (idx.max(0.0) as usize).min(n - 1)
}

/// Shortest distance between two points of the unit torus.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs().rem_euclid(1.0);
            let d = d.min(1.0 - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_go_to_lower_cell() {
        assert_eq!(grid_index(0.5, 2), 0);
        assert_eq!(grid_index(0.0, 2), 0);
        assert_eq!(grid_index(0.75, 2), 1);
        assert_eq!(grid_index(1.0, 4), 3);
        assert_eq!(grid_index(0.25, 4), 0);
        assert_eq!(grid_index(0.2500001, 4), 1);
    }

    #[test]
    fn intersections() {
        let a = AxisBox::new(vec![0.0, 0.0], vec![0.5, 1.0]).unwrap();
        let b = AxisBox::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        let c = a.intersect(&b).unwrap();
        assert_eq!(c.volume(), 0.25);
        let right = AxisBox::new(vec![0.5, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(a.intersect(&right).is_none());
    }

    #[test]
    fn torus_wraps() {
        assert!((torus_distance(&[0.01, 0.5], &[0.99, 0.5]) - 0.02).abs() < 1e-12);
    }

    #[test]
    fn parse_box() {
        let b = AxisBox::parse_flat("0,0,0.5,1").unwrap();
        assert_eq!(b.lo, vec![0.0, 0.0]);
        assert_eq!(b.hi, vec![0.5, 1.0]);
        assert!(AxisBox::parse_flat("0,1,2").is_err());
        assert!(AxisBox::parse_flat("1,0").is_err());
    }
}
