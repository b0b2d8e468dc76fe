//! Break time across a sweep of `ħ = 2π r / N`.
//!
//! Each sweep point compares the momentum IPR of quantum Gaussian packets
//! with that of matching classical clouds, averaged over packets whose
//! centres are drawn once per sweep. Packets are minimum-uncertainty
//! Gaussians stretched along the locally expanding direction, so their
//! classical spread grows like `ħ e^{λt}` and reaches the `O(1)` scale
//! after `≈ ln(1/ħ)/λ` kicks.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::breaktime::{break_time_with, breaktime_scaling_fit, BreakTimeResult, ScalingFit};
use super::classical::GaussianEnsemble;
use super::quantum::{KickedRotor, QuantumState};
use super::Observable;
use crate::dynamics::{MapSpec, PhasePoint};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, DEFAULT_SEED};

const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BreakTimeSweep {
    pub k: f64,
    /// Momentum period `2π r`.
    pub r: u32,
    /// Hilbert-space dimensions `N`, one sweep point each.
    pub dims: Vec<usize>,
    pub packets: usize,
    pub particles: usize,
    pub steps: usize,
    pub delta: f64,
    pub persistence: usize,
    /// Packet width along the contracting direction.
    pub sigma_stable: f64,
    /// Kicks used to find the expanding direction at each packet centre.
    pub alignment_steps: usize,
    /// Orbit length for the classical Lyapunov exponent.
    pub lyapunov_steps: usize,
    pub seed: u64,
}

impl Default for BreakTimeSweep {
    fn default() -> Self {
        Self {
            k: 10.0,
            r: 1,
            dims: (8..=13).map(|k| 1usize << k).collect(),
            packets: 16,
            particles: 200_000,
            steps: 25,
            delta: 0.1,
            persistence: super::DEFAULT_PERSISTENCE,
            sigma_stable: 0.05,
            alignment_steps: 12,
            lyapunov_steps: 1_000_000,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub lambda: f64,
    pub results: Vec<BreakTimeResult>,
    /// `None` when fewer than four points broke.
    pub fit: Option<ScalingFit>,
}

impl SweepOutcome {
    /// `t_b` per sweep point, in sweep order.
    pub fn break_times(&self) -> Vec<Option<u64>> {
        self.results.iter().map(|r| r.t_b).collect()
    }

    /// Number of strict decreases of `t_b` along increasing `q`.
    pub fn inversions(&self) -> usize {
        let mut pts: Vec<(f64, u64)> = self
            .results
            .iter()
            .filter_map(|r| r.t_b.map(|t| (r.q, t)))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.windows(2).filter(|w| w[1].1 < w[0].1).count()
    }
}

/// Unit vector of the direction most expanded by `steps` standard-map kicks
/// from `(theta, p)`, in `(θ, p)` coordinates.
pub fn expanding_direction(k: f64, theta: f64, p: f64, steps: usize) -> [f64; 2] {
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    let (mut th, mut pp) = (theta, p);
    for _ in 0..steps {
        let c = k * th.cos();
        let j = [[1.0 + c, 1.0], [c, 1.0]];
        m = [
            [j[0][0] * m[0][0] + j[0][1] * m[1][0], j[0][0] * m[0][1] + j[0][1] * m[1][1]],
            [j[1][0] * m[0][0] + j[1][1] * m[1][0], j[1][0] * m[0][1] + j[1][1] * m[1][1]],
        ];
        pp += k * th.sin();
        th = (th + pp).rem_euclid(TWO_PI);
    }
    // Leading eigenvector of MᵀM.
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let d = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let l = 0.5 * (a + d) + (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (u, v) = ([b, l - a], [l - d, b]);
    let w = if u[0].hypot(u[1]) >= v[0].hypot(v[1]) { u } else { v };
    let n = w[0].hypot(w[1]);
    if n > 0.0 {
        [w[0] / n, w[1] / n]
    } else {
        [1.0, 0.0]
    }
}

impl BreakTimeSweep {
    fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.packets == 0 || self.steps == 0 || self.r == 0 {
            return Err(Error::InvalidParameter(
                "sweep needs dims, packets, steps and r >= 1".into(),
            ));
        }
        if let Some(n) = self.dims.iter().find(|n| **n < super::quantum::MIN_DIM) {
            return Err(Error::DimensionTooSmall(*n));
        }
        if !(self.sigma_stable > 0.0) {
            return Err(Error::InvalidParameter("sigma_stable must be positive".into()));
        }
        Ok(())
    }

    /// Packet centres `(θ0, p0)`, shared by all sweep points.
    pub fn centres(&self) -> Vec<(f64, f64)> {
        let mut rng = stream_rng(self.seed, 0);
        let period = TWO_PI * self.r as f64;
        (0..self.packets)
            .map(|_| {
                let th = rng.random::<f64>() * TWO_PI;
                let p = (rng.random::<f64>() - 0.5) * period;
                (th, p)
            })
            .collect()
    }

    /// Packet-averaged quantum and classical IPR curves at dimension `n`.
    pub fn point(&self, n: usize) -> Result<BreakTimeResult> {
        let hbar = QuantumState::torus_hbar(n, self.r);
        let period = TWO_PI * self.r as f64;
        let mut rotor = KickedRotor::new(self.k, n, hbar)?;
        let mut quantum = vec![0.0; self.steps + 1];
        let mut classical = vec![0.0; self.steps + 1];
        let (mut qc, mut cc) = (None, None);
        for (i, (th0, p0)) in self.centres().into_iter().enumerate() {
            let m0 = (p0 / hbar).round() as i64;
            let m0 = m0.clamp(-(n as i64) / 2, n as i64 / 2 - 1);
            let pc = m0 as f64 * hbar;
            let vu = expanding_direction(self.k, th0, pc, self.alignment_steps);
            let vs = [-vu[1], vu[0]];
            let (ss, su) = (self.sigma_stable, hbar / (2.0 * self.sigma_stable));
            let cov = [
                [ss * ss * vs[0] * vs[0] + su * su * vu[0] * vu[0], ss * ss * vs[0] * vs[1] + su * su * vu[0] * vu[1]],
                [ss * ss * vs[0] * vs[1] + su * su * vu[0] * vu[1], ss * ss * vs[1] * vs[1] + su * su * vu[1] * vu[1]],
            ];
            let mut state = QuantumState::gaussian(n, hbar, th0, m0, cov)?;
            let qcurve = rotor.evolve(&mut state, self.steps, Observable::MomentumIpr)?;
            let cloud = GaussianEnsemble {
                theta0: th0,
                p0: pc,
                cov,
                period,
                n,
            };
            let ccurve = cloud.momentum_ipr(self.k, self.particles, self.steps, self.seed.wrapping_add(1 + i as u64))?;
            for (acc, v) in quantum.iter_mut().zip(&qcurve.value) {
                *acc += v / self.packets as f64;
            }
            for (acc, v) in classical.iter_mut().zip(&ccurve.value) {
                *acc += v / self.packets as f64;
            }
            qc.get_or_insert(qcurve);
            cc.get_or_insert(ccurve);
        }
        let (mut qc, mut cc) = (qc.expect("packets >= 1"), cc.expect("packets >= 1"));
        qc.value = quantum;
        cc.value = classical;
        break_time_with(&qc, &cc, self.delta, self.persistence, hbar, n as f64)
    }

    /// Runs every sweep point and fits `t_b` against `ln N` with `h = λ₁`.
    pub fn run(&self) -> Result<SweepOutcome> {
        self.validate()?;
        let x0 = PhasePoint(vec![0.1234, 0.5678]);
        let lambda = MapSpec::Standard { k: self.k }.lyapunov_spectrum(&x0, self.lyapunov_steps)?[0];
        let results = self
            .dims
            .par_iter()
            .map(|&n| self.point(n))
            .collect::<Result<Vec<_>>>()?;
        let fit = match breaktime_scaling_fit(&results, lambda) {
            Ok(f) => Some(f),
            Err(Error::InsufficientPoints { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(SweepOutcome { lambda, results, fit })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expanding_direction_of_free_shear() {
        // With K = 0 the map is the shear (θ, p) -> (θ + p, p); MᵀM for n
        // shears has its leading eigenvector tilted towards p.
        let v = expanding_direction(0.0, 0.0, 0.0, 1);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((v[1] / v[0] - golden).abs() < 1e-12 || (v[1] / v[0] + golden).abs() < 1e-12);
    }

    #[test]
    fn small_sweep_runs() {
        let sweep = BreakTimeSweep {
            dims: vec![64, 128],
            packets: 2,
            particles: 5000,
            steps: 12,
            lyapunov_steps: 10_000,
            ..Default::default()
        };
        let out = sweep.run().unwrap();
        assert_eq!(out.results.len(), 2);
        assert!(out.fit.is_none());
        assert_eq!(out.results[0].q, 64.0);
        assert!(out.lambda > 1.0);
    }

    #[test]
    fn rejects_tiny_dimension() {
        let sweep = BreakTimeSweep {
            dims: vec![8],
            ..Default::default()
        };
        assert_eq!(sweep.run().unwrap_err(), Error::DimensionTooSmall(8));
    }
}
