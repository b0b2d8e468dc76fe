//! Finite partitions of the unit box, their entropy, joins and dynamical
//! refinements.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::MapSpec;
use crate::error::{Error, Result};
use crate::geometry::{grid_index, AxisBox, VOLUME_EPS};

/// Tolerance on `Σ μ(A_i) = 1`.
pub const MEASURE_TOL: f64 = 1e-9;

/// Default cap on the number of cells a refinement may produce.
pub const DEFAULT_CELL_CAP: u128 = 10_000_000;

/// How cells are represented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Cells {
    /// Uniform product grid, `counts[k]` cells along axis `k`, row-major
    /// index with axis 0 varying slowest.
    Grid { counts: Vec<usize> },
    /// Each cell is a union of closed boxes; a point belongs to the first
    /// cell containing it.
    Boxes { cells: Vec<Vec<AxisBox>> },
    /// Cylinder sets of `base` along forward orbits: the cell of `x` is the
    /// word `(s(x), s(Tx), …, s(T^depth x))`, encoded base-`m` little-endian.
    Words {
        base: Box<Partition>,
        map: MapSpec,
        depth: usize,
        words: Vec<u128>,
    },
}

/// A finite measurable partition of `[0,1]^dim` with cell measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub dim: usize,
    pub cells: Cells,
    pub measures: Vec<f64>,
}

fn check_measures(measures: &[f64]) -> Result<()> {
    if let Some(m) = measures.iter().find(|m| !(**m >= 0.0)) {
        return Err(Error::InvalidMeasure(format!("negative or NaN cell measure {m}")));
    }
    let total: f64 = measures.iter().sum();
    if (total - 1.0).abs() > MEASURE_TOL {
        return Err(Error::InvalidMeasure(format!("cell measures sum to {total}")));
    }
    Ok(())
}

impl Partition {
    /// The trivial partition `{Γ}`.
    pub fn trivial(dim: usize) -> Self {
        Self::grid(&vec![1; dim]).expect("trivial grid is valid")
    }

    pub fn grid(counts: &[usize]) -> Result<Self> {
        if counts.is_empty() || counts.contains(&0) {
            return Err(Error::InvalidParameter(format!("grid counts {counts:?}")));
        }
        let total: usize = counts.iter().product();
        Ok(Self {
            dim: counts.len(),
            cells: Cells::Grid {
                counts: counts.to_vec(),
            },
            measures: vec![1.0 / total as f64; total],
        })
    }

    /// Two cells split at `x = 1/2` (the generating partition of the baker
    /// and doubling maps).
    pub fn binary_x(dim: usize) -> Self {
        let mut counts = vec![1; dim];
        counts[0] = 2;
        Self::grid(&counts).expect("binary grid is valid")
    }

    /// Cells given as box unions; measures are the box volumes.
    pub fn from_boxes(cells: Vec<Vec<AxisBox>>) -> Result<Self> {
        let dim = cells
            .iter()
            .flatten()
            .map(AxisBox::dim)
            .next()
            .ok_or_else(|| Error::InvalidParameter("partition has no cells".into()))?;
        if cells.iter().flatten().any(|b| b.dim() != dim) {
            return Err(Error::RegionMismatch("cell boxes of mixed dimension".into()));
        }
        let unit = AxisBox::unit(dim);
        let measures: Vec<f64> = cells
            .iter()
            .map(|c| c.iter().map(|b| b.overlap_volume(&unit)).sum())
            .collect();
        check_measures(&measures)?;
        Ok(Self {
            dim,
            cells: Cells::Boxes { cells },
            measures,
        })
    }

    /// Intervals `[b_i, b_{i+1}]` of `[0,1]` with the given breakpoints.
    pub fn intervals(breaks: &[f64]) -> Result<Self> {
        let mut edges = vec![0.0];
        edges.extend_from_slice(breaks);
        edges.push(1.0);
        let cells = edges
            .windows(2)
            .map(|w| AxisBox::new(vec![w[0]], vec![w[1]]).map(|b| vec![b]))
            .collect::<Result<Vec<_>>>()?;
        Self::from_boxes(cells)
    }

    /// Number of cells `m`.
    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    /// Cell index of `x`, or `None` if `x` lies outside every cell.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        match &self.cells {
            Cells::Grid { counts } => {
                let mut idx = 0;
                for (v, n) in x.iter().zip(counts) {
                    if !(0.0..=1.0).contains(v) {
                        return None;
                    }
                    idx = idx * n + grid_index(*v, *n);
                }
                Some(idx)
            }
            Cells::Boxes { cells } => cells.iter().position(|c| c.iter().any(|b| b.contains(x))),
            Cells::Words {
                base,
                map,
                depth,
                words,
            } => {
                let key = forward_word(base, map, x, *depth)?;
                words.binary_search(&key).ok()
            }
        }
    }

    /// Cell boxes, when the partition is box-representable.
    pub fn to_boxes(&self) -> Option<Vec<Vec<AxisBox>>> {
        match &self.cells {
            Cells::Grid { counts } => {
                let total: usize = counts.iter().product();
                let cells = (0..total)
                    .map(|mut idx| {
                        let mut lo = vec![0.0; counts.len()];
                        let mut hi = vec![0.0; counts.len()];
                        for k in (0..counts.len()).rev() {
                            let i = idx % counts[k];
                            idx /= counts[k];
                            lo[k] = i as f64 / counts[k] as f64;
                            hi[k] = (i + 1) as f64 / counts[k] as f64;
                        }
                        vec![AxisBox { lo, hi }]
                    })
                    .collect();
                Some(cells)
            }
            Cells::Boxes { cells } => Some(cells.clone()),
            Cells::Words { .. } => None,
        }
    }
}

/// Base-`m` code of the forward word of `x` of length `depth + 1`.
pub(crate) fn forward_word(base: &Partition, map: &MapSpec, x: &[f64], depth: usize) -> Option<u128> {
    let m = base.len() as u128;
    let mut y = x.to_vec();
    let mut key = 0u128;
    let mut weight = 1u128;
    for j in 0..=depth {
        if j > 0 {
            map.forward(&mut y);
        }
        key += base.cell_of(&y)? as u128 * weight;
        weight = weight.saturating_mul(m);
    }
    Some(key)
}

/// Shannon entropy `−Σ μ ln μ` of a probability vector, with `0 ln 0 = 0`.
pub fn entropy_of_measures(measures: &[f64]) -> Result<f64> {
    check_measures(measures)?;
    Ok(measures
        .iter()
        .filter(|m| **m > 0.0)
        .map(|m| -m * m.ln())
        .sum())
}

/// `H(Q)` in nats.
pub fn partition_entropy(q: &Partition) -> Result<f64> {
    entropy_of_measures(&q.measures)
}

/// The common refinement `{a_i ∩ b_j}`, empty intersections dropped.
pub fn join(q1: &Partition, q2: &Partition) -> Result<Partition> {
    if q1.dim != q2.dim {
        return Err(Error::RegionMismatch(format!(
            "partitions of dimension {} and {}",
            q1.dim, q2.dim
        )));
    }
    if let (Cells::Grid { counts: a }, Cells::Grid { counts: b }) = (&q1.cells, &q2.cells) {
        // Nested grids join to the finer one.
        if a.iter().zip(b).all(|(x, y)| y % x == 0) {
            return Ok(q2.clone());
        }
        if a.iter().zip(b).all(|(x, y)| x % y == 0) {
            return Ok(q1.clone());
        }
    }
    let (Some(c1), Some(c2)) = (q1.to_boxes(), q2.to_boxes()) else {
        return Err(Error::InvalidParameter(
            "join needs box-representable partitions".into(),
        ));
    };
    let mut cells = Vec::new();
    for a in &c1 {
        for b in &c2 {
            let cell: Vec<AxisBox> = a
                .iter()
                .flat_map(|x| b.iter().filter_map(move |y| x.intersect(y)))
                .collect();
            let vol: f64 = cell.iter().map(AxisBox::volume).sum();
            if vol > VOLUME_EPS {
                cells.push(cell);
            }
        }
    }
    Partition::from_boxes(cells)
}

/// Options for [`dynamical_refinement`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementOptions {
    /// Grid points per axis used to resolve cylinder sets and their measures.
    pub resolution: usize,
    pub cap: u128,
}

impl Default for RefinementOptions {
    fn default() -> Self {
        Self {
            resolution: 1 << 10,
            cap: DEFAULT_CELL_CAP,
        }
    }
}

/// `∨_{j=0}^{n} T^{-j} Q`, built from forward symbolic words.
///
/// Cylinder sets are resolved on a midpoint grid of `resolution` points per
/// axis; cells thinner than the grid spacing are not seen.
pub fn dynamical_refinement(
    map: &MapSpec,
    q: &Partition,
    n: usize,
    opts: RefinementOptions,
) -> Result<Partition> {
    if q.dim != map.coord_len() {
        return Err(Error::RegionMismatch(format!(
            "partition of dimension {} for map `{map}` on {} coordinates",
            q.dim,
            map.coord_len()
        )));
    }
    if n == 0 {
        return Ok(q.clone());
    }
    let samples = (opts.resolution as u128).saturating_pow(q.dim as u32);
    let words_bound = (q.len() as u128)
        .checked_pow(n as u32 + 1)
        .ok_or(Error::DepthOverflow {
            predicted: u128::MAX,
            cap: opts.cap,
        })?;
    let predicted = words_bound.min(samples);
    if predicted > opts.cap {
        return Err(Error::DepthOverflow {
            predicted,
            cap: opts.cap,
        });
    }
    let res = opts.resolution;
    let dim = q.dim;
    let total = res.pow(dim as u32);
    let mut keys: Vec<u128> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0.0; dim];
            for k in (0..dim).rev() {
                x[k] = ((idx % res) as f64 + 0.5) / res as f64;
                idx /= res;
            }
            forward_word(q, map, &x, n).ok_or_else(|| {
                Error::InvalidMeasure(format!("point {x:?} lies outside every cell"))
            })
        })
        .collect::<Result<_>>()?;
    keys.par_sort_unstable();
    let mut words = Vec::new();
    let mut measures = Vec::new();
    for run in keys.chunk_by(|a, b| a == b) {
        words.push(run[0]);
        measures.push(run.len() as f64 / total as f64);
    }
    Ok(Partition {
        dim,
        cells: Cells::Words {
            base: Box::new(q.clone()),
            map: map.clone(),
            depth: n,
            words,
        },
        measures,
    })
}
