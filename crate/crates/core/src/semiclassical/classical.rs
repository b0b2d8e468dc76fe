use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{CurveKind, Observable, ObservableCurve};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, CHUNK};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Fewest particles accepted by the diffusion ensemble.
pub const MIN_PARTICLES: usize = 1000;

/// Standard map `p' = p + K sin θ`, `θ' = θ + p'` on the cylinder.
#[inline]
pub fn standard_step(k: f64, theta: &mut f64, p: &mut f64) {
    *p += k * theta.sin();
    *theta = (*theta + *p).rem_euclid(TWO_PI);
}

/// `⟨p²⟩(t)` of particles started at uniform `θ` with `p = 0`, unbounded in
/// momentum.
pub fn classical_ensemble_diffusion(k: f64, n_particles: usize, steps: usize, seed: u64) -> Result<ObservableCurve> {
    if n_particles < MIN_PARTICLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_PARTICLES} particles, got {n_particles}"
        )));
    }
    let chunks = n_particles.div_ceil(CHUNK);
    // Per-chunk sums added in chunk order: the result does not depend on
    // the thread count.
    let partial: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk as u64);
            let len = CHUNK.min(n_particles - chunk * CHUNK);
            let mut theta: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * TWO_PI).collect();
            let mut p = vec![0.0; len];
            let mut sums = Vec::with_capacity(steps + 1);
            sums.push(0.0);
            for _ in 0..steps {
                let mut s = 0.0;
                for (th, pp) in theta.iter_mut().zip(p.iter_mut()) {
                    standard_step(k, th, pp);
                    s += *pp * *pp;
                }
                sums.push(s);
            }
            sums
        })
        .collect();
    let values = (0..=steps)
        .map(|t| partial.iter().map(|s| s[t]).sum::<f64>() / n_particles as f64)
        .collect();
    ObservableCurve::new(
        (0..=steps as u64).collect(),
        values,
        CurveKind::Classical,
        Observable::MomentumSecondMoment,
    )
}

/// Gaussian cloud on the torus `[0,2π) × [−πr, πr)`, the classical
/// counterpart of a quantum Gaussian on `N` momentum states.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEnsemble {
    pub theta0: f64,
    pub p0: f64,
    pub cov: [[f64; 2]; 2],
    /// Momentum period `2π r`.
    pub period: f64,
    pub n: usize,
}

fn wrap_centered(v: f64, period: f64) -> f64 {
    (v + period / 2.0).rem_euclid(period) - period / 2.0
}

impl GaussianEnsemble {
    /// IPR of the momentum histogram on the `N` bins of width `ħ`, using
    /// the unbiased pair estimator `Σ c(c−1) / (n(n−1))`, for
    /// `t = 0..=steps`.
    pub fn momentum_ipr(&self, k: f64, n_particles: usize, steps: usize, seed: u64) -> Result<ObservableCurve> {
        if n_particles < 2 {
            return Err(Error::InvalidParameter("IPR needs two particles".into()));
        }
        let [[a, b], [_, d]] = self.cov;
        // Cholesky factor of the covariance.
        let l11 = a.sqrt();
        let l21 = b / l11;
        let l22 = (d - l21 * l21).max(0.0).sqrt();
        if !(l11 > 0.0) {
            return Err(Error::InvalidParameter("covariance is not positive definite".into()));
        }
        let n = self.n;
        let period = self.period;
        let chunks = n_particles.div_ceil(CHUNK);
        let partial: Vec<Vec<Vec<u32>>> = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = stream_rng(seed, chunk as u64);
                let len = CHUNK.min(n_particles - chunk * CHUNK);
                let mut pts: Vec<(f64, f64)> = (0..len)
                    .map(|_| {
                        let z0: f64 = rng.sample(StandardNormal);
                        let z1: f64 = rng.sample(StandardNormal);
                        let th = (self.theta0 + l11 * z0).rem_euclid(TWO_PI);
                        let p = wrap_centered(self.p0 + l21 * z0 + l22 * z1, period);
                        (th, p)
                    })
                    .collect();
                let mut hists = Vec::with_capacity(steps + 1);
                for t in 0..=steps {
                    if t > 0 {
                        for (th, p) in pts.iter_mut() {
                            *p = wrap_centered(*p + k * th.sin(), period);
                            *th = (*th + *p).rem_euclid(TWO_PI);
                        }
                    }
                    let mut h = vec![0u32; n];
                    for (_, p) in &pts {
                        let bin = (((p + period / 2.0) / period * n as f64 + 0.5).floor() as i64).rem_euclid(n as i64);
                        h[bin as usize] += 1;
                    }
                    hists.push(h);
                }
                hists
            })
            .collect();
        let pairs = n_particles as f64 * (n_particles as f64 - 1.0);
        let values = (0..=steps)
            .map(|t| {
                let mut s = 0u128;
                for bin in 0..n {
                    let c: u64 = partial.iter().map(|h| h[t][bin] as u64).sum();
                    s += (c as u128) * (c.saturating_sub(1) as u128);
                }
                s as f64 / pairs
            })
            .collect();
        ObservableCurve::new((0..=steps as u64).collect(), values, CurveKind::Classical, Observable::MomentumIpr)
    }
}
