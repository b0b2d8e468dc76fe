//! Discrete-time measure-preserving maps on the unit box, their orbits and
//! tangent dynamics.
//!
//! Every built-in map acts on `[0,1)^d` with `d` coordinates (one for the
//! circle maps, two for the area-preserving ones) and preserves Lebesgue
//! measure. Toral coordinates are reduced into `[0,1)` after every step.

use std::fmt;
use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{grid_index, AxisBox};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Noise scale used to refill the low-order bits that a binary shift
/// discards on every step (see [`MapSpec::step_typical`]).
pub const REFILL_SCALE: f64 = 1.0 / (1u64 << 48) as f64;

/// Tangent steps run before Lyapunov sums start, so the frame is aligned
/// with the Oseledets directions.
pub const LYAPUNOV_WARMUP: usize = 64;

/// A point of the phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhasePoint(pub Vec<f64>);

impl PhasePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }
}

impl Deref for PhasePoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for PhasePoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// The built-in dynamical systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum MapSpec {
    /// Baker's map `(x,y) -> (2x, y/2)` or `(2x-1, (y+1)/2)`.
    Baker,
    /// Arnold cat map `[[2,1],[1,1]]` on the 2-torus.
    Cat,
    /// `x -> 2x mod 1`; not invertible.
    Doubling,
    /// Circle rotation `x -> x + alpha mod 1`.
    Rotation { alpha: f64 },
    /// Chirikov standard map in unit-torus coordinates `x = θ/2π`, `y = p/2π`.
    Standard { k: f64 },
    /// Identity on the unit square (non-ergodic control).
    Identity,
    /// Coordinate swap `(x,y) -> (y,x)`, period two (non-ergodic control).
    Swap,
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[inline]
pub(crate) fn wrap01(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl MapSpec {
    pub fn golden_rotation() -> Self {
        MapSpec::Rotation {
            alpha: (5f64.sqrt() - 1.0) / 2.0,
        }
    }

    /// Builds a map from its CLI name and `key=value` parameters.
    pub fn from_name(name: &str, params: &[(String, f64)]) -> Result<Self> {
        let get = |key: &str| params.iter().find(|(k, _)| k.eq_ignore_ascii_case(key)).map(|p| p.1);
        let map = match name.to_ascii_lowercase().as_str() {
            "baker" => MapSpec::Baker,
            "cat" => MapSpec::Cat,
            "doubling" => MapSpec::Doubling,
            "rotation" | "golden-rotation" => match get("alpha") {
                Some(alpha) => MapSpec::Rotation { alpha },
                None => MapSpec::golden_rotation(),
            },
            "standard" => MapSpec::Standard {
                k: get("k").unwrap_or(10.0),
            },
            "identity" => MapSpec::Identity,
            "swap" => MapSpec::Swap,
            other => return Err(Error::InvalidParameter(format!("unknown map `{other}`"))),
        };
        Ok(map)
    }

    pub fn name(&self) -> &'static str {
        match self {
            MapSpec::Baker => "baker",
            MapSpec::Cat => "cat",
            MapSpec::Doubling => "doubling",
            MapSpec::Rotation { .. } => "rotation",
            MapSpec::Standard { .. } => "standard",
            MapSpec::Identity => "identity",
            MapSpec::Swap => "swap",
        }
    }

    /// Half-dimension `D` of the phase space.
    pub fn half_dim(&self) -> usize {
        1
    }

    /// Number of stored coordinates per point.
    pub fn coord_len(&self) -> usize {
        match self {
            MapSpec::Doubling | MapSpec::Rotation { .. } => 1,
            _ => 2,
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self {
            MapSpec::Rotation { alpha } => vec![("alpha", *alpha)],
            MapSpec::Standard { k } => vec![("k", *k)],
            _ => Vec::new(),
        }
    }

    pub fn is_invertible(&self) -> bool {
        !matches!(self, MapSpec::Doubling)
    }

    pub fn has_jacobian(&self) -> bool {
        true
    }

    /// The phase region: the unit box.
    pub fn region(&self) -> AxisBox {
        AxisBox::unit(self.coord_len())
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coord_len(),
                got: len,
            });
        }
        Ok(())
    }

    /// One forward step, in place. The slice length is not checked.
    #[inline]
    pub fn forward(&self, x: &mut [f64]) {
        match self {
            MapSpec::Baker => {
                if grid_index(x[0], 2) == 0 {
                    x[0] = wrap01(2.0 * x[0]);
                    x[1] *= 0.5;
                } else {
                    x[0] = wrap01(2.0 * x[0] - 1.0);
                    x[1] = 0.5 * (x[1] + 1.0);
                }
            }
            MapSpec::Cat => {
                let (a, b) = (x[0], x[1]);
                x[0] = wrap01(2.0 * a + b);
                x[1] = wrap01(a + b);
            }
            MapSpec::Doubling => x[0] = wrap01(2.0 * x[0]),
            MapSpec::Rotation { alpha } => x[0] = wrap01(x[0] + alpha),
            MapSpec::Standard { k } => {
                let y = wrap01(x[1] + k / TWO_PI * (TWO_PI * x[0]).sin());
                x[1] = y;
                x[0] = wrap01(x[0] + y);
            }
            MapSpec::Identity => {}
            MapSpec::Swap => x.swap(0, 1),
        }
    }

    /// One inverse step, in place. Callers must check invertibility.
    #[inline]
    fn backward(&self, x: &mut [f64]) {
        match self {
            MapSpec::Baker => {
                if grid_index(x[1], 2) == 0 {
                    x[0] *= 0.5;
                    x[1] = wrap01(2.0 * x[1]);
                } else {
                    x[0] = 0.5 * (x[0] + 1.0);
                    x[1] = wrap01(2.0 * x[1] - 1.0);
                }
            }
            MapSpec::Cat => {
                let (a, b) = (x[0], x[1]);
                x[0] = wrap01(a - b);
                x[1] = wrap01(2.0 * b - a);
            }
            MapSpec::Doubling => unreachable!("doubling map has no inverse"),
            MapSpec::Rotation { alpha } => x[0] = wrap01(x[0] - alpha),
            MapSpec::Standard { k } => {
                let xp = wrap01(x[0] - x[1]);
                x[1] = wrap01(x[1] - k / TWO_PI * (TWO_PI * xp).sin());
                x[0] = xp;
            }
            MapSpec::Identity => {}
            MapSpec::Swap => x.swap(0, 1),
        }
    }

    /// Applies `T_t` in place; negative `t` uses the inverse.
    pub fn step_in_place(&self, x: &mut [f64], t: i64) -> Result<()> {
        self.check_dim(x.len())?;
        if t < 0 && !self.is_invertible() {
            return Err(Error::NonInvertibleMap(self.name().into()));
        }
        if t >= 0 {
            for _ in 0..t {
                self.forward(x);
            }
        } else {
            for _ in 0..t.unsigned_abs() {
                self.backward(x);
            }
        }
        Ok(())
    }

    /// `T_t(x)`.
    pub fn step(&self, x: &PhasePoint, t: i64) -> Result<PhasePoint> {
        let mut y = x.clone();
        self.step_in_place(&mut y.0, t)?;
        Ok(y)
    }

    /// Forward step of a Lebesgue-typical point.
    ///
    /// The baker and doubling maps shift one binary digit out of `x` per
    /// step, so an `f64` orbit collapses onto 0 within ~55 steps. For a
    /// uniformly distributed real the discarded tail is itself uniform, so
    /// it is refilled with fresh random low-order bits. Other maps step
    /// exactly as [`MapSpec::forward`].
    #[inline]
    pub fn step_typical<R: Rng + ?Sized>(&self, x: &mut [f64], rng: &mut R) {
        self.forward(x);
        if matches!(self, MapSpec::Baker | MapSpec::Doubling) {
            x[0] = wrap01(x[0] + rng.random::<f64>() * REFILL_SCALE);
        }
    }

    /// Draws a point from the invariant (Lebesgue) measure.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> PhasePoint {
        PhasePoint((0..self.coord_len()).map(|_| rng.random::<f64>()).collect())
    }

    /// Row-major Jacobian `∂T(x)_i / ∂x_j`.
    pub fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        match self {
            MapSpec::Baker => vec![2.0, 0.0, 0.0, 0.5],
            MapSpec::Cat => vec![2.0, 1.0, 1.0, 1.0],
            MapSpec::Doubling => vec![2.0],
            MapSpec::Rotation { .. } => vec![1.0],
            MapSpec::Standard { k } => {
                let c = k * (TWO_PI * x[0]).cos();
                vec![1.0 + c, 1.0, c, 1.0]
            }
            MapSpec::Identity => vec![1.0, 0.0, 0.0, 1.0],
            MapSpec::Swap => vec![0.0, 1.0, 1.0, 0.0],
        }
    }

    /// `n + 1` points `x0, T_stride x0, …, T_{n·stride} x0`.
    pub fn orbit(&self, x0: &PhasePoint, n: usize, stride: usize) -> Result<Orbit> {
        if n == 0 || stride == 0 {
            return Err(Error::InvalidParameter("orbit needs n >= 1 and stride >= 1".into()));
        }
        self.check_dim(x0.len())?;
        let mut points = Vec::with_capacity(n + 1);
        let mut x = x0.0.clone();
        points.push(PhasePoint(x.clone()));
        for _ in 0..n {
            for _ in 0..stride {
                self.forward(&mut x);
            }
            points.push(PhasePoint(x.clone()));
        }
        Ok(Orbit {
            points,
            stride,
            seed: None,
        })
    }

    /// Orbit from a seeded uniform initial point.
    pub fn random_orbit(&self, n: usize, stride: usize, seed: u64) -> Result<Orbit> {
        let mut rng = crate::rng::stream_rng(seed, 0);
        let x0 = self.sample_uniform(&mut rng);
        let mut orbit = self.orbit(&x0, n, stride)?;
        orbit.seed = Some(seed);
        Ok(orbit)
    }

    /// Lyapunov spectrum along the orbit of `x0`, sorted descending.
    ///
    /// The tangent frame is re-orthonormalised (modified Gram–Schmidt) every
    /// step and the exponents are the averaged logs of the diagonal of R,
    /// accumulated after a short unrecorded alignment of the frame.
    pub fn lyapunov_spectrum(&self, x0: &PhasePoint, n: usize) -> Result<Vec<f64>> {
        if !self.has_jacobian() {
            return Err(Error::NoJacobian(self.name().into()));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("lyapunov_spectrum needs n >= 1".into()));
        }
        self.check_dim(x0.len())?;
        let d = self.coord_len();
        let mut x = x0.0.clone();
        // Columns of the frame, stored column-major.
        let mut frame = vec![0.0; d * d];
        for i in 0..d {
            frame[i * d + i] = 1.0;
        }
        let mut sums = vec![0.0; d];
        let mut w = vec![0.0; d * d];
        for step in 0..LYAPUNOV_WARMUP + n {
            let jac = self.jacobian(&x);
            for c in 0..d {
                for r in 0..d {
                    w[c * d + r] = (0..d).map(|k| jac[r * d + k] * frame[c * d + k]).sum();
                }
            }
            for c in 0..d {
                for prev in 0..c {
                    let dot: f64 = (0..d).map(|r| frame[prev * d + r] * w[c * d + r]).sum();
                    for r in 0..d {
                        w[c * d + r] -= dot * frame[prev * d + r];
                    }
                }
                let norm = (0..d).map(|r| w[c * d + r].powi(2)).sum::<f64>().sqrt();
                if step >= LYAPUNOV_WARMUP {
                    sums[c] += norm.ln();
                }
                for r in 0..d {
                    frame[c * d + r] = w[c * d + r] / norm;
                }
            }
            self.forward(&mut x);
        }
        let mut exps: Vec<f64> = sums.into_iter().map(|s| s / n as f64).collect();
        exps.sort_by(|a, b| b.total_cmp(a));
        Ok(exps)
    }
}

/// A materialised orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub points: Vec<PhasePoint>,
    pub stride: usize,
    pub seed: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> PhasePoint {
        PhasePoint(v.to_vec())
    }

    #[test]
    fn baker_left_branch() {
        let y = MapSpec::Baker.step(&p(&[0.25, 0.5]), 1).unwrap();
        assert_eq!(y.0, vec![0.5, 0.25]);
    }

    #[test]
    fn cat_fixed_point() {
        let y = MapSpec::Cat.step(&p(&[0.0, 0.0]), 10).unwrap();
        assert_eq!(y.0, vec![0.0, 0.0]);
    }

    #[test]
    fn cat_inverse_identity() {
        let x = p(&[0.3, 0.7]);
        let y = MapSpec::Cat.step(&x, 1).unwrap();
        let z = MapSpec::Cat.step(&y, -1).unwrap();
        assert_abs_diff_eq!(z[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(z[1], 0.7, epsilon = 1e-12);
    }

    #[test]
    fn step_zero_is_identity() {
        let x = p(&[0.123, 0.456]);
        assert_eq!(MapSpec::Standard { k: 10.0 }.step(&x, 0).unwrap(), x);
    }

    #[test]
    fn doubling_orbit() {
        let o = MapSpec::Doubling.orbit(&p(&[0.1]), 3, 1).unwrap();
        let xs: Vec<f64> = o.points.iter().map(|q| q[0]).collect();
        for (a, b) in xs.iter().zip([0.1, 0.2, 0.4, 0.8]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn orbit_single_stride() {
        let map = MapSpec::Cat;
        let x0 = p(&[0.2, 0.9]);
        let o = map.orbit(&x0, 1, 5).unwrap();
        assert_eq!(o.points.len(), 2);
        assert_eq!(o.points[1], map.step(&x0, 5).unwrap());
    }

    #[test]
    fn standard_orbit_is_deterministic() {
        let map = MapSpec::Standard { k: 10.0 };
        let a = map.random_orbit(1000, 1, 99).unwrap();
        let b = map.random_orbit(1000, 1, 99).unwrap();
        assert_eq!(a, b);
        for w in a.points.windows(2) {
            assert_eq!(map.step(&w[0], 1).unwrap(), w[1]);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(
            MapSpec::Doubling.step(&p(&[0.3]), -1),
            Err(Error::NonInvertibleMap("doubling".into()))
        );
        assert!(matches!(
            MapSpec::Cat.step(&p(&[0.3]), 1),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn refill_keeps_doubling_orbits_alive() {
        let mut rng = crate::rng::stream_rng(5, 0);
        let mut plain = [0.3];
        let mut typical = [0.3];
        for _ in 0..200 {
            MapSpec::Doubling.forward(&mut plain);
            MapSpec::Doubling.step_typical(&mut typical, &mut rng);
        }
        assert_eq!(plain[0], 0.0);
        assert!(typical[0] > 0.0);
    }

    // Eigenvalue oracle for the constant cat Jacobian: roots of λ² − 3λ + 1.
    fn cat_eigen_oracle() -> f64 {
        let (tr, det): (f64, f64) = (3.0, 1.0);
        ((tr + (tr * tr - 4.0 * det).sqrt()) / 2.0).ln()
    }

    #[test]
    fn cat_lyapunov() {
        let l = MapSpec::Cat.lyapunov_spectrum(&p(&[0.1, 0.2]), 2000).unwrap();
        assert_abs_diff_eq!(l[0], cat_eigen_oracle(), epsilon = 1e-6);
        assert_abs_diff_eq!(l[0] + l[1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn baker_lyapunov() {
        let l = MapSpec::Baker.lyapunov_spectrum(&p(&[0.1, 0.2]), 100).unwrap();
        assert_abs_diff_eq!(l[0], 2f64.ln(), epsilon = 1e-6);
        assert_abs_diff_eq!(l[1], -(2f64.ln()), epsilon = 1e-6);
    }

    proptest! {
        #[test]
        fn group_law(x in 0.0f64..1.0, y in 0.0f64..1.0, s in 0i64..20, t in 0i64..20) {
            for map in [MapSpec::Cat, MapSpec::Baker, MapSpec::Standard { k: 3.0 }, MapSpec::Swap] {
                let x0 = p(&[x, y]);
                let a = map.step(&map.step(&x0, s).unwrap(), t).unwrap();
                let b = map.step(&x0, s + t).unwrap();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn forward_then_inverse(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            for map in [MapSpec::Cat, MapSpec::Baker, MapSpec::Standard { k: 10.0 }, MapSpec::golden_rotation()] {
                let x0 = p(&[x, y][..map.coord_len()]);
                let back = map.step(&map.step(&x0, 1).unwrap(), -1).unwrap();
                for (a, b) in back.iter().zip(x0.iter()) {
                    let d = (a - b).abs();
                    prop_assert!(d.min(1.0 - d) < 1e-12, "{map}: {a} vs {b}");
                }
            }
        }
    }
}
