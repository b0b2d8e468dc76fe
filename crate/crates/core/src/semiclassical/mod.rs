//! Quantum kicked rotor against its classical standard-map ensemble.
//!
//! Angles live on `[0, 2π)`. The quantum rotor has `N` momentum states
//! `p = ħ m`, `m = −N/2 … N/2 − 1` stored in FFT order, and `ħ = 2π r / N`,
//! so the quantum phase space is a torus of momentum period `2π r` holding
//! `q = N` cells of area `ħ`.

pub mod breaktime;
pub mod classical;
pub mod quantum;
pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::fmt_f64;

pub use breaktime::{break_time, breaktime_scaling_fit, BreakTimeResult, ScalingFit, DEFAULT_PERSISTENCE};
pub use classical::{classical_ensemble_diffusion, GaussianEnsemble};
pub use quantum::{evolve_quantum_kicked_rotor, KickedRotor, QuantumState, NORM_TOL};
pub use sweep::{BreakTimeSweep, SweepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Quantum,
    Classical,
}

impl CurveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveKind::Quantum => "quantum",
            CurveKind::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// `⟨p²⟩`.
    MomentumSecondMoment,
    /// `Σ P(m)²` of the momentum distribution on `ħ`-wide bins.
    MomentumIpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableCurve {
    pub t: Vec<u64>,
    pub value: Vec<f64>,
    pub kind: CurveKind,
    pub observable: Observable,
}

impl ObservableCurve {
    pub fn new(t: Vec<u64>, value: Vec<f64>, kind: CurveKind, observable: Observable) -> Result<Self> {
        if t.len() != value.len() {
            return Err(Error::GridMismatch(format!(
                "{} times for {} values",
                t.len(),
                value.len()
            )));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridMismatch("times must be strictly increasing".into()));
        }
        Ok(Self {
            t,
            value,
            kind,
            observable,
        })
    }

    /// CSV rows `t,value,kind`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,kind\n");
        for (t, v) in self.t.iter().zip(&self.value) {
            out.push_str(&format!("{t},{},{}\n", fmt_f64(*v), self.kind.as_str()));
        }
        out
    }
}
