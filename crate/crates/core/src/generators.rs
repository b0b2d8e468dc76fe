//! Generator checks, the finite-generator cardinality window, and the
//! ħ-lattice graining of phase-space regions.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{wrap01, MapSpec};
use crate::error::{Error, Result};
use crate::geometry::{torus_distance, AxisBox};
use crate::partition::{forward_word, Partition};
use crate::rng::stream_rng;

/// Slack used when snapping `e^h` window edges onto integers.
pub const WINDOW_TOL: f64 = 1e-9;

/// The window `[e^h, e^h + 1]` and the integers it contains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardinalityWindow {
    pub lower: f64,
    pub upper: f64,
    pub feasible: Vec<u64>,
}

impl CardinalityWindow {
    pub fn contains(&self, n: u64) -> bool {
        self.feasible.contains(&n)
    }
}

pub fn generator_cardinality_bounds(h: f64) -> Result<CardinalityWindow> {
    if !h.is_finite() {
        return Err(Error::InfiniteEntropy(h));
    }
    if h < 0.0 {
        return Err(Error::InvalidParameter(format!("entropy {h} is negative")));
    }
    let lower = h.exp();
    let upper = lower + 1.0;
    let first = (lower - WINDOW_TOL).ceil() as u64;
    let last = (upper + WINDOW_TOL).floor() as u64;
    Ok(CardinalityWindow {
        lower,
        upper,
        feasible: (first..=last).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coding {
    /// Symbols of `T^{-depth} x, …, T^{depth} x`.
    TwoSided,
    /// Symbols of `x, …, T^{depth} x`; usable for non-invertible maps.
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub is_generator: bool,
    pub depth_used: usize,
    /// Largest torus distance between two probes sharing a code; codes
    /// separate every probe pair farther apart than this.
    pub separation_resolution: f64,
    pub epsilon: f64,
    pub cardinality: usize,
    pub probes: usize,
    pub coding: Coding,
}

fn code(map: &MapSpec, q: &Partition, x: &[f64], depth: usize, coding: Coding) -> Result<Vec<u32>> {
    let outside = |y: &[f64]| Error::InvalidMeasure(format!("point {y:?} lies outside every cell"));
    let cell = |y: &[f64]| q.cell_of(y).map(|c| c as u32).ok_or_else(|| outside(y));
    let mut out = Vec::with_capacity(2 * depth + 1);
    if coding == Coding::TwoSided {
        let mut y = x.to_vec();
        let mut past = Vec::with_capacity(depth);
        for _ in 0..depth {
            map.step_in_place(&mut y, -1)?;
            past.push(cell(&y)?);
        }
        out.extend(past.into_iter().rev());
    }
    let mut y = x.to_vec();
    out.push(cell(&y)?);
    for _ in 0..depth {
        map.forward(&mut y);
        out.push(cell(&y)?);
    }
    Ok(out)
}

/// Checks whether symbolic codes under `q` separate random probe pairs at
/// torus distance above `epsilon`.
///
/// Pair distances are log-uniform between `epsilon/4` and the torus
/// diameter, so both the threshold scale and coarse scales are probed.
pub fn verify_generator(
    map: &MapSpec,
    q: &Partition,
    depth: usize,
    probes: usize,
    epsilon: f64,
    seed: u64,
    coding: Coding,
) -> Result<GeneratorReport> {
    if coding == Coding::TwoSided && !map.is_invertible() {
        return Err(Error::NonInvertibleMap(map.name().into()));
    }
    if depth == 0 || probes == 0 || !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(
            "depth, probes and epsilon must be positive".into(),
        ));
    }
    if q.dim != map.coord_len() {
        return Err(Error::RegionMismatch(format!(
            "partition of dimension {} for map `{map}`",
            q.dim
        )));
    }
    let dim = q.dim;
    let diam = (dim as f64).sqrt() / 2.0;
    let (lo, hi) = ((epsilon / 4.0).ln(), diam.ln());
    const PROBE_CHUNK: usize = 1024;
    let chunks = probes.div_ceil(PROBE_CHUNK);
    let worst = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<f64> {
            let mut rng = stream_rng(seed, chunk as u64);
            let mut worst: f64 = 0.0;
            for _ in 0..PROBE_CHUNK.min(probes - chunk * PROBE_CHUNK) {
                let x = map.sample_uniform(&mut rng).0;
                let r = rng.random_range(lo.min(hi)..=hi).exp();
                let dir: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                let y: Vec<f64> = x
                    .iter()
                    .zip(&dir)
                    .map(|(a, d)| wrap01(a + r * d / norm))
                    .collect();
                if code(map, q, &x, depth, coding)? == code(map, q, &y, depth, coding)? {
                    worst = worst.max(torus_distance(&x, &y));
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(GeneratorReport {
        is_generator: worst <= epsilon,
        depth_used: depth,
        separation_resolution: worst,
        epsilon,
        cardinality: q.len(),
        probes,
        coding,
    })
}

/// Number of distinct forward words of length `depth + 1` seen from
/// `samples` uniform points.
pub fn distinct_codes(map: &MapSpec, q: &Partition, depth: usize, samples: usize, seed: u64) -> Result<usize> {
    if (q.len() as u128).checked_pow(depth as u32 + 1).is_none() {
        return Err(Error::DepthOverflow {
            predicted: u128::MAX,
            cap: u128::MAX,
        });
    }
    let mut rng = stream_rng(seed, 0);
    let mut keys = (0..samples)
        .map(|_| {
            let x = map.sample_uniform(&mut rng);
            forward_word(q, map, &x, depth)
                .ok_or_else(|| Error::InvalidMeasure(format!("point {x:?} lies outside every cell")))
        })
        .collect::<Result<Vec<u128>>>()?;
    keys.par_sort_unstable();
    keys.dedup();
    Ok(keys.len())
}

/// How a lattice cell meets a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Inside,
    Boundary,
    Outside,
}

/// A phase-space region that can be compared against lattice cells.
pub trait PhaseRegion: Sync {
    fn dim(&self) -> usize;
    fn volume(&self) -> f64;
    /// Bounding box; the grain lattice is anchored at its lower corner.
    fn bounds(&self) -> AxisBox;
    fn classify(&self, cell: &AxisBox) -> CellClass;
    fn describe(&self) -> String;
}

/// Union of pairwise disjoint boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub boxes: Vec<AxisBox>,
}

impl BoxRegion {
    pub fn new(boxes: Vec<AxisBox>) -> Result<Self> {
        let Some(first) = boxes.first() else {
            return Err(Error::DegenerateRegion);
        };
        let dim = first.dim();
        if boxes.iter().any(|b| b.dim() != dim) {
            return Err(Error::RegionMismatch("region boxes of mixed dimension".into()));
        }
        Ok(Self { boxes })
    }

    pub fn unit_square() -> Self {
        Self {
            boxes: vec![AxisBox::unit(2)],
        }
    }
}

impl PhaseRegion for BoxRegion {
    fn dim(&self) -> usize {
        self.boxes[0].dim()
    }

    fn volume(&self) -> f64 {
        self.boxes.iter().map(AxisBox::volume).sum()
    }

    fn bounds(&self) -> AxisBox {
        let d = self.dim();
        let lo = (0..d)
            .map(|k| self.boxes.iter().map(|b| b.lo[k]).fold(f64::INFINITY, f64::min))
            .collect();
        let hi = (0..d)
            .map(|k| self.boxes.iter().map(|b| b.hi[k]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        AxisBox { lo, hi }
    }

    fn classify(&self, cell: &AxisBox) -> CellClass {
        let vol = cell.volume();
        let overlap: f64 = self.boxes.iter().map(|b| b.overlap_volume(cell)).sum();
        if overlap >= vol * (1.0 - 1e-9) {
            CellClass::Inside
        } else if overlap <= vol * 1e-9 {
            CellClass::Outside
        } else {
            CellClass::Boundary
        }
    }

    fn describe(&self) -> String {
        format!("boxes({})", self.boxes.len())
    }
}

/// `{(x, y) : x, y ≥ 0, x² + y² ≤ r²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarterDisk {
    pub radius: f64,
}

impl QuarterDisk {
    /// Arc plus the two straight edges.
    pub fn perimeter(&self) -> f64 {
        self.radius * (std::f64::consts::FRAC_PI_2 + 2.0)
    }
}

impl PhaseRegion for QuarterDisk {
    fn dim(&self) -> usize {
        2
    }

    fn volume(&self) -> f64 {
        std::f64::consts::FRAC_PI_4 * self.radius * self.radius
    }

    fn bounds(&self) -> AxisBox {
        AxisBox {
            lo: vec![0.0, 0.0],
            hi: vec![self.radius, self.radius],
        }
    }

    fn classify(&self, cell: &AxisBox) -> CellClass {
        let r2 = self.radius * self.radius;
        let far = cell.hi[0].powi(2) + cell.hi[1].powi(2);
        let near = cell.lo[0].max(0.0).powi(2) + cell.lo[1].max(0.0).powi(2);
        if far <= r2 {
            CellClass::Inside
        } else if near >= r2 {
            CellClass::Outside
        } else {
            CellClass::Boundary
        }
    }

    fn describe(&self) -> String {
        format!("quarter-disk(r={})", self.radius)
    }
}

/// Rigid grain `Δq × Δp`; its area plays the role of ħ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grain {
    pub dq: f64,
    pub dp: f64,
}

impl Grain {
    /// Square grain of the given side.
    pub fn square(side: f64) -> Self {
        Self { dq: side, dp: side }
    }

    /// Grain of area `hbar` with `dp / dq = aspect`.
    pub fn from_hbar(hbar: f64, aspect: f64) -> Self {
        let dq = (hbar / aspect).sqrt();
        Self { dq, dp: dq * aspect }
    }

    pub fn hbar_eff(&self) -> f64 {
        self.dq * self.dp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrainedRegion {
    pub region: String,
    pub region_volume: f64,
    pub grain: Grain,
    pub hbar_eff: f64,
    #[serde(rename = "D")]
    pub d: usize,
    pub interior_boxes: u64,
    /// Lattice cells meeting the frontier of the region.
    pub boundary_boxes: u64,
    pub q: f64,
    /// No grain fits inside the region.
    pub grain_too_coarse: bool,
    #[serde(skip)]
    pub interior: Vec<AxisBox>,
    #[serde(skip)]
    pub boundary: Vec<AxisBox>,
}

impl GrainedRegion {
    /// Cell volume `ħ^D`.
    pub fn cell_volume(&self) -> f64 {
        self.hbar_eff.powi(self.d as i32)
    }

    /// The interior cells as a partition of the unit box, each boundary
    /// fragment merged into the interior cell with the nearest centre.
    pub fn to_partition(&self) -> Result<Partition> {
        let dim = 2 * self.d;
        if self.interior.is_empty() {
            return Err(Error::DegenerateRegion);
        }
        let unit = AxisBox::unit(dim);
        if (self.region_volume - 1.0).abs() > 1e-12
            || self.interior.iter().chain(&self.boundary).any(|b| b.dim() != dim)
        {
            return Err(Error::RegionMismatch("graining does not cover the unit box".into()));
        }
        let mut cells: Vec<Vec<AxisBox>> = self.interior.iter().map(|b| vec![b.clone()]).collect();
        for frag in self.boundary.iter().filter_map(|b| b.intersect(&unit)) {
            let c = frag.center();
            let nearest = (0..self.interior.len())
                .min_by(|&i, &j| {
                    let di = torus_distance(&c, &self.interior[i].center());
                    let dj = torus_distance(&c, &self.interior[j].center());
                    di.total_cmp(&dj).then(i.cmp(&j))
                })
                .expect("interior is non-empty");
            cells[nearest].push(frag);
        }
        Partition::from_boxes(cells)
    }
}

/// Counts grain cells of the lattice anchored at the region's lower corner.
///
/// Axes `0..D` use side `dq` and axes `D..2D` use side `dp`.
pub fn grain_region<R: PhaseRegion + ?Sized>(region: &R, grain: Grain, d: usize) -> Result<GrainedRegion> {
    if !(grain.dq > 0.0 && grain.dp > 0.0) || !grain.dq.is_finite() || !grain.dp.is_finite() {
        return Err(Error::InvalidParameter(format!("grain {grain:?} must be positive")));
    }
    if d == 0 || region.dim() != 2 * d {
        return Err(Error::RegionMismatch(format!(
            "region of dimension {} for D = {d}",
            region.dim()
        )));
    }
    let vol = region.volume();
    if !(vol > 0.0) {
        return Err(Error::DegenerateRegion);
    }
    let bounds = region.bounds();
    let dim = 2 * d;
    let sides: Vec<f64> = (0..dim).map(|k| if k < d { grain.dq } else { grain.dp }).collect();
    let counts: Vec<usize> = (0..dim)
        .map(|k| {
            let extent = (bounds.hi[k] - bounds.lo[k]) / sides[k];
            (extent - 1e-9).ceil().max(1.0) as usize
        })
        .collect();
    let total = counts
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(*c))
        .filter(|t| *t <= 1 << 32)
        .ok_or_else(|| Error::InvalidParameter("grain lattice too fine".into()))?;
    let rows = counts[0];
    let per_row = total / rows;
    let scanned: Vec<(Vec<AxisBox>, Vec<AxisBox>)> = (0..rows)
        .into_par_iter()
        .map(|row| {
            let mut inside = Vec::new();
            let mut edge = Vec::new();
            for mut idx in 0..per_row {
                let mut lo = vec![0.0; dim];
                let mut hi = vec![0.0; dim];
                for k in (0..dim).rev() {
                    let i = if k == 0 { row } else { idx % counts[k] };
                    if k > 0 {
                        idx /= counts[k];
                    }
                    lo[k] = bounds.lo[k] + i as f64 * sides[k];
                    hi[k] = bounds.lo[k] + (i + 1) as f64 * sides[k];
                }
                let cell = AxisBox { lo, hi };
                match region.classify(&cell) {
                    CellClass::Inside => inside.push(cell),
                    CellClass::Boundary => edge.push(cell),
                    CellClass::Outside => {}
                }
            }
            (inside, edge)
        })
        .collect();
    let (mut interior, mut boundary) = (Vec::new(), Vec::new());
    for (i, b) in scanned {
        interior.extend(i);
        boundary.extend(b);
    }
    let hbar_eff = grain.hbar_eff();
    Ok(GrainedRegion {
        region: region.describe(),
        region_volume: vol,
        grain,
        hbar_eff,
        d,
        interior_boxes: interior.len() as u64,
        boundary_boxes: boundary.len() as u64,
        q: vol / hbar_eff.powi(d as i32),
        grain_too_coarse: interior.is_empty(),
        interior,
        boundary,
    })
}
