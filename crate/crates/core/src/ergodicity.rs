//! Monte Carlo correlations `C(T_t A, B) = μ(T_t A ∩ B) − μ(A) μ(B)` between
//! box-union sets and their Cesàro averages.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::MapSpec;
use crate::error::{Error, Result};
use crate::geometry::AxisBox;
use crate::rng::{stream_rng, CHUNK};

/// Default threshold on `|running_average|` for the ergodic verdict.
pub const DEFAULT_ERGODIC_EPS: f64 = 0.01;

/// A finite union of pairwise disjoint boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurableSet {
    pub dim: usize,
    pub boxes: Vec<AxisBox>,
    pub measure: f64,
}

impl MeasurableSet {
    pub fn new(dim: usize, boxes: Vec<AxisBox>) -> Result<Self> {
        if boxes.iter().any(|b| b.dim() != dim) {
            return Err(Error::RegionMismatch(format!("set boxes must be {dim}-dimensional")));
        }
        let unit = AxisBox::unit(dim);
        if boxes.iter().any(|b| (b.overlap_volume(&unit) - b.volume()).abs() > 1e-12) {
            return Err(Error::RegionMismatch("set box leaves the unit region".into()));
        }
        for (i, a) in boxes.iter().enumerate() {
            for b in &boxes[i + 1..] {
                if a.overlap_volume(b) > 1e-12 {
                    return Err(Error::InvalidMeasure(format!(
                        "set boxes overlap: {a:?} and {b:?}"
                    )));
                }
            }
        }
        let measure = boxes.iter().map(AxisBox::volume).sum();
        Ok(Self { dim, boxes, measure })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            boxes: Vec::new(),
            measure: 0.0,
        }
    }

    pub fn full(dim: usize) -> Self {
        Self::new(dim, vec![AxisBox::unit(dim)]).expect("unit box is valid")
    }

    /// `{x : lo ≤ x_axis ≤ hi}`.
    pub fn slab(dim: usize, axis: usize, lo: f64, hi: f64) -> Result<Self> {
        let mut b = AxisBox::unit(dim);
        b.lo[axis] = lo;
        b.hi[axis] = hi;
        Self::new(dim, vec![AxisBox::new(b.lo, b.hi)?])
    }

    pub fn left_half(dim: usize) -> Self {
        Self::slab(dim, 0, 0.0, 0.5).expect("half slab is valid")
    }

    pub fn bottom_half() -> Self {
        Self::slab(2, 1, 0.0, 0.5).expect("half slab is valid")
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    /// `C[t]` for lags `t = 0..t_max`.
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    /// `running_average[t] = (1/(t+1)) Σ_{s≤t} C[s]`; the last entry is the
    /// Cesàro average over `T_max` lags.
    pub running_average: Vec<f64>,
    pub sampler_size: usize,
}

impl CorrelationCurve {
    pub fn final_average(&self) -> f64 {
        *self.running_average.last().expect("curve has at least one lag")
    }

    pub fn is_ergodic(&self, eps: f64) -> bool {
        self.final_average().abs() < eps
    }

    /// CSV rows `t,C_t,running_average`.
    pub fn to_csv(&self) -> String {
        use crate::export::fmt_f64;
        let mut out = String::from("t,C_t,running_average\n");
        for (t, (c, r)) in self.c.iter().zip(&self.running_average).enumerate() {
            out.push_str(&format!("{t},{},{}\n", fmt_f64(*c), fmt_f64(*r)));
        }
        out
    }
}

// Integer tallies per lag; summing them is exact, so the estimate does not
// depend on how samples are split across threads.
#[derive(Clone)]
struct Tally {
    n: u64,
    a: u64,
    b: Vec<u64>,
    ab: Vec<u64>,
}

impl Tally {
    fn new(lags: usize) -> Self {
        Self {
            n: 0,
            a: 0,
            b: vec![0; lags],
            ab: vec![0; lags],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        self.a += other.a;
        for (x, y) in self.b.iter_mut().zip(&other.b) {
            *x += y;
        }
        for (x, y) in self.ab.iter_mut().zip(&other.ab) {
            *x += y;
        }
        self
    }

    // Empirical covariance of 1_A(x) and 1_B(T_t x).
    fn covariance(&self, t: usize) -> f64 {
        let n = self.n as i128;
        let num = self.ab[t] as i128 * n - self.a as i128 * self.b[t] as i128;
        num as f64 / (n * n) as f64
    }
}

fn check_sets(map: &MapSpec, a: &MeasurableSet, b: &MeasurableSet) -> Result<()> {
    let d = map.coord_len();
    if a.dim != d || b.dim != d {
        return Err(Error::RegionMismatch(format!(
            "sets of dimension {}/{} for map `{map}` on {d} coordinates",
            a.dim, b.dim
        )));
    }
    Ok(())
}

fn tally_lags(map: &MapSpec, a: &MeasurableSet, b: &MeasurableSet, lags: &[usize], samples: usize, seed: u64) -> Tally {
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk as u64);
            let len = CHUNK.min(samples - chunk * CHUNK);
            let mut tally = Tally::new(lags.len());
            for _ in 0..len {
                let mut x = map.sample_uniform(&mut rng).0;
                let in_a = a.contains(&x);
                tally.n += 1;
                tally.a += in_a as u64;
                let mut now = 0;
                for (k, &t) in lags.iter().enumerate() {
                    while now < t {
                        map.step_typical(&mut x, &mut rng);
                        now += 1;
                    }
                    if b.contains(&x) {
                        tally.b[k] += 1;
                        tally.ab[k] += in_a as u64;
                    }
                }
            }
            tally
        })
        .reduce(|| Tally::new(lags.len()), Tally::merge)
}

/// Monte Carlo estimate of `μ(T_t A ∩ B) − μ(A) μ(B)`, as the sample
/// covariance of `1_A(x)` and `1_B(T_t x)` over uniform `x`.
pub fn correlation(
    map: &MapSpec,
    a: &MeasurableSet,
    b: &MeasurableSet,
    t: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    check_sets(map, a, b)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    Ok(tally_lags(map, a, b, &[t], samples, seed).covariance(0))
}

/// Per-lag correlations for `t = 0..t_max` and their running Cesàro average.
pub fn ergodic_average(
    map: &MapSpec,
    a: &MeasurableSet,
    b: &MeasurableSet,
    t_max: usize,
    samples: usize,
    seed: u64,
) -> Result<CorrelationCurve> {
    check_sets(map, a, b)?;
    if t_max == 0 || samples == 0 {
        return Err(Error::InvalidParameter("T_max and samples must be >= 1".into()));
    }
    let lags: Vec<usize> = (0..t_max).collect();
    let tally = tally_lags(map, a, b, &lags, samples, seed);
    let c: Vec<f64> = (0..t_max).map(|t| tally.covariance(t)).collect();
    let mut sum = 0.0;
    let running_average = c
        .iter()
        .enumerate()
        .map(|(t, v)| {
            sum += v;
            sum / (t + 1) as f64
        })
        .collect();
    Ok(CorrelationCurve {
        c,
        running_average,
        sampler_size: samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn full_and_empty_sets_are_exact() {
        let b = MeasurableSet::slab(2, 0, 0.2, 0.7).unwrap();
        for t in [0, 3, 17] {
            assert_eq!(correlation(&MapSpec::Cat, &MeasurableSet::full(2), &b, t, 5000, 1).unwrap(), 0.0);
            assert_eq!(correlation(&MapSpec::Cat, &b, &MeasurableSet::empty(2), t, 5000, 1).unwrap(), 0.0);
        }
    }

    #[test]
    fn lag_zero_closed_form() {
        let a = MeasurableSet::left_half(2);
        let c = correlation(&MapSpec::Cat, &a, &a, 0, 100_000, 2).unwrap();
        assert_abs_diff_eq!(c, 0.25, epsilon = 3.0 / 100_000f64.sqrt());
    }

    #[test]
    fn identity_never_decays() {
        let a = MeasurableSet::left_half(2);
        let curve = ergodic_average(&MapSpec::Identity, &a, &a, 50, 20_000, 3).unwrap();
        let first = curve.c[0];
        assert!(curve.c.iter().all(|c| *c == first));
        assert!(!curve.is_ergodic(DEFAULT_ERGODIC_EPS));
        assert!(curve.final_average() > 0.1);
    }

    #[test]
    fn swap_settles_at_one_eighth() {
        let a = MeasurableSet::left_half(2);
        let curve = ergodic_average(&MapSpec::Swap, &a, &a, 100, 50_000, 4).unwrap();
        // Alternates between 1/4 at even lags and 0 at odd lags.
        assert_abs_diff_eq!(curve.final_average(), 0.125, epsilon = 0.01);
        assert!(curve.final_average() > 0.1);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = MeasurableSet::left_half(2);
        let b = MeasurableSet::bottom_half();
        let x = ergodic_average(&MapSpec::Baker, &a, &b, 20, 40_000, 9).unwrap();
        let y = ergodic_average(&MapSpec::Baker, &a, &b, 20, 40_000, 9).unwrap();
        assert_eq!(x, y);
        assert!(x.to_csv().starts_with("t,C_t,running_average\n0,"));
    }

    #[test]
    fn set_validation() {
        let b1 = AxisBox::new(vec![0.0, 0.0], vec![0.6, 1.0]).unwrap();
        let b2 = AxisBox::new(vec![0.5, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(MeasurableSet::new(2, vec![b1, b2]), Err(Error::InvalidMeasure(_))));
        let a = MeasurableSet::left_half(1);
        assert!(matches!(
            correlation(&MapSpec::Cat, &a, &a, 0, 10, 0),
            Err(Error::RegionMismatch(_))
        ));
    }

    #[test]
    fn correlations_are_bounded() {
        let a = MeasurableSet::slab(2, 0, 0.1, 0.4).unwrap();
        let b = MeasurableSet::slab(2, 1, 0.3, 0.9).unwrap();
        let curve = ergodic_average(&MapSpec::Standard { k: 10.0 }, &a, &b, 30, 20_000, 5).unwrap();
        assert!(curve.c.iter().all(|c| c.abs() <= 0.25 + 0.02));
    }
}
