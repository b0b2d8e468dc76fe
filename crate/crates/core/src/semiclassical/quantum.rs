use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{CurveKind, Observable, ObservableCurve};
use crate::error::{Error, Result};

/// Largest tolerated drift of `Σ |c_m|²` from one.
pub const NORM_TOL: f64 = 1e-8;

/// Smallest admitted Hilbert-space dimension.
pub const MIN_DIM: usize = 16;

const TWO_PI: f64 = std::f64::consts::TAU;

/// Momentum of FFT slot `k`.
#[inline]
pub fn momentum_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Rotor state in the momentum basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    #[serde(skip)]
    pub amplitudes: Vec<Complex64>,
    pub n: usize,
    pub hbar_eff: f64,
}

fn check_dim(n: usize) -> Result<()> {
    if n < MIN_DIM {
        return Err(Error::DimensionTooSmall(n));
    }
    Ok(())
}

impl QuantumState {
    /// `ħ = 2π r / N`.
    pub fn torus_hbar(n: usize, r: u32) -> f64 {
        TWO_PI * r as f64 / n as f64
    }

    pub fn momentum_eigenstate(n: usize, hbar_eff: f64, m0: i64) -> Result<Self> {
        check_dim(n)?;
        let half = (n / 2) as i64;
        if !(-half..half).contains(&m0) {
            return Err(Error::InvalidParameter(format!("momentum index {m0} outside the lattice")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
        amplitudes[m0.rem_euclid(n as i64) as usize] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            n,
            hbar_eff,
        })
    }

    /// Pure Gaussian with Wigner covariance `cov = [[Σθθ, Σθp], [Σθp, Σpp]]`
    /// centred at angle `theta0` and momentum `ħ·m0`, periodised in angle.
    ///
    /// The covariance must have determinant `ħ²/4`; only `Σθθ` and `Σθp`
    /// enter the wavefunction.
    pub fn gaussian(n: usize, hbar_eff: f64, theta0: f64, m0: i64, cov: [[f64; 2]; 2]) -> Result<Self> {
        check_dim(n)?;
        let s_tt = cov[0][0];
        if !(s_tt > 0.0) {
            return Err(Error::InvalidParameter("angle variance must be positive".into()));
        }
        let a = Complex64::new(1.0 / (4.0 * s_tt), -cov[0][1] / (2.0 * hbar_eff * s_tt));
        // Enough periodic images that the tails are below round-off.
        let images = ((10.0 * s_tt.sqrt()) / TWO_PI).ceil() as i64 + 1;
        let mut psi: Vec<Complex64> = (0..n)
            .map(|j| {
                let th = TWO_PI * j as f64 / n as f64;
                (-images..=images)
                    .map(|k| {
                        let d = th - theta0 + TWO_PI * k as f64;
                        (-a * d * d + Complex64::new(0.0, m0 as f64 * th)).exp()
                    })
                    .sum()
            })
            .collect();
        let norm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut psi {
            *c /= norm;
        }
        let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
        fft.process(&mut psi);
        let scale = 1.0 / (n as f64).sqrt();
        for c in &mut psi {
            *c *= scale;
        }
        Ok(Self {
            amplitudes: psi,
            n,
            hbar_eff,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn momentum(&self, k: usize) -> f64 {
        self.hbar_eff * momentum_index(k, self.n) as f64
    }

    /// `⟨p²⟩`.
    pub fn p2(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(k, c)| self.momentum(k).powi(2) * c.norm_sqr())
            .sum()
    }

    /// Inverse participation ratio of the momentum distribution.
    pub fn ipr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr().powi(2)).sum()
    }

    pub fn observe(&self, obs: Observable) -> f64 {
        match obs {
            Observable::MomentumSecondMoment => self.p2(),
            Observable::MomentumIpr => self.ipr(),
        }
    }
}

/// One period: kick `e^{−i(K/ħ)cos θ}` in the angle basis, then free motion
/// `e^{−iħm²/2}` in the momentum basis.
pub struct KickedRotor {
    pub k: f64,
    pub n: usize,
    pub hbar_eff: f64,
    kick: Vec<Complex64>,
    free: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl KickedRotor {
    pub fn new(k: f64, n: usize, hbar_eff: f64) -> Result<Self> {
        check_dim(n)?;
        if !(k >= 0.0) || !(hbar_eff > 0.0) {
            return Err(Error::InvalidParameter(format!("need K >= 0 and ħ > 0 (got {k}, {hbar_eff})")));
        }
        let kick = (0..n)
            .map(|j| {
                let th = TWO_PI * j as f64 / n as f64;
                Complex64::from_polar(1.0, -(k / hbar_eff) * th.cos())
            })
            .collect();
        let free = (0..n)
            .map(|s| {
                let m = momentum_index(s, n) as f64;
                Complex64::from_polar(1.0, -hbar_eff * m * m / 2.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len().max(ifft.get_inplace_scratch_len())];
        Ok(Self {
            k,
            n,
            hbar_eff,
            kick,
            free,
            fft,
            ifft,
            scratch,
        })
    }

    pub fn step(&mut self, state: &mut QuantumState) {
        let scale = 1.0 / self.n as f64;
        let amps = &mut state.amplitudes;
        self.ifft.process_with_scratch(amps, &mut self.scratch);
        for (c, u) in amps.iter_mut().zip(&self.kick) {
            *c *= u;
        }
        self.fft.process_with_scratch(amps, &mut self.scratch);
        // The unnormalised inverse/forward pair scales by N.
        for (c, u) in amps.iter_mut().zip(&self.free) {
            *c *= u * scale;
        }
    }

    /// Evolves `steps` periods, recording `obs` at `t = 0..=steps`.
    pub fn evolve(&mut self, state: &mut QuantumState, steps: usize, obs: Observable) -> Result<ObservableCurve> {
        if state.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: state.n,
            });
        }
        let mut values = Vec::with_capacity(steps + 1);
        values.push(state.observe(obs));
        for _ in 0..steps {
            self.step(state);
            let drift = (state.norm_sqr() - 1.0).abs();
            if drift > NORM_TOL {
                return Err(Error::NonUnitary(drift));
            }
            values.push(state.observe(obs));
        }
        ObservableCurve::new((0..=steps as u64).collect(), values, CurveKind::Quantum, obs)
    }
}

/// Evolves `state` for `steps` kicks of strength `k`, returning the final
/// state and the `⟨p²⟩` curve.
pub fn evolve_quantum_kicked_rotor(
    state: &QuantumState,
    k: f64,
    steps: usize,
) -> Result<(QuantumState, ObservableCurve)> {
    let mut rotor = KickedRotor::new(k, state.n, state.hbar_eff)?;
    let mut out = state.clone();
    let curve = rotor.evolve(&mut out, steps, Observable::MomentumSecondMoment)?;
    Ok((out, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn free_rotor_conserves_momentum() {
        let hbar = QuantumState::torus_hbar(64, 1);
        let s = QuantumState::momentum_eigenstate(64, hbar, 5).unwrap();
        let (out, curve) = evolve_quantum_kicked_rotor(&s, 0.0, 50).unwrap();
        for (a, b) in out.amplitudes.iter().zip(&s.amplitudes) {
            assert_abs_diff_eq!(a.norm(), b.norm(), epsilon = 1e-12);
        }
        for v in curve.value {
            assert_abs_diff_eq!(v, (5.0 * hbar).powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn norm_is_preserved() {
        let n = 512;
        let hbar = QuantumState::torus_hbar(n, 3);
        let s = QuantumState::momentum_eigenstate(n, hbar, 0).unwrap();
        let (out, _) = evolve_quantum_kicked_rotor(&s, 10.0, 1000).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn small_dimension_rejected() {
        assert_eq!(
            QuantumState::momentum_eigenstate(8, 0.1, 0).unwrap_err(),
            Error::DimensionTooSmall(8)
        );
        assert!(KickedRotor::new(1.0, 8, 0.1).is_err());
    }

    // A Gaussian's momentum marginal has variance Σpp = (ħ²/4 + Σθp²)/Σθθ.
    #[test]
    fn gaussian_moments() {
        let n = 1024;
        let hbar = QuantumState::torus_hbar(n, 1);
        let (s_tt, s_tp) = (0.04f64, 0.01);
        let s_pp = (hbar * hbar / 4.0 + s_tp * s_tp) / s_tt;
        let s = QuantumState::gaussian(n, hbar, 2.0, 0, [[s_tt, s_tp], [s_tp, s_pp]]).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);
        assert!((s.p2() / s_pp - 1.0).abs() < 1e-6, "{} vs {s_pp}", s.p2());
        let ipr_gauss = hbar / (2.0 * std::f64::consts::PI.sqrt() * s_pp.sqrt());
        assert!((s.ipr() / ipr_gauss - 1.0).abs() < 0.01);
    }

    #[test]
    fn rotor_is_deterministic() {
        let n = 256;
        let hbar = QuantumState::torus_hbar(n, 1);
        let s = QuantumState::momentum_eigenstate(n, hbar, 0).unwrap();
        let (a, ca) = evolve_quantum_kicked_rotor(&s, 10.0, 100).unwrap();
        let (b, cb) = evolve_quantum_kicked_rotor(&s, 10.0, 100).unwrap();
        assert_eq!(a.amplitudes, b.amplitudes);
        assert_eq!(ca, cb);
    }
}
