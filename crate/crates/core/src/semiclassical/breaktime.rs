use serde::{Deserialize, Serialize};

use super::ObservableCurve;
use crate::error::{Error, Result};

/// Consecutive steps the deviation must stay above `delta`.
pub const DEFAULT_PERSISTENCE: usize = 5;

/// Relative floor on the classical denominator, as a fraction of its peak.
pub const FLOOR_FRACTION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakTimeResult {
    pub t_b: Option<u64>,
    pub delta: f64,
    pub persistence: usize,
    pub quantum: ObservableCurve,
    pub classical: ObservableCurve,
    pub hbar_eff: f64,
    pub q: f64,
}

impl BreakTimeResult {
    /// `|quantum − classical| / max(|classical|, floor)` per time.
    pub fn deviation(&self) -> Vec<f64> {
        relative_deviation(&self.quantum, &self.classical)
    }
}

fn relative_deviation(quantum: &ObservableCurve, classical: &ObservableCurve) -> Vec<f64> {
    let peak = classical.value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (FLOOR_FRACTION * peak).max(f64::MIN_POSITIVE);
    quantum
        .value
        .iter()
        .zip(&classical.value)
        .map(|(q, c)| (q - c).abs() / c.abs().max(floor))
        .collect()
}

/// First time from which the relative deviation stays `≥ delta` for
/// `persistence` consecutive samples.
pub fn break_time_with(
    quantum: &ObservableCurve,
    classical: &ObservableCurve,
    delta: f64,
    persistence: usize,
    hbar_eff: f64,
    q: f64,
) -> Result<BreakTimeResult> {
    if quantum.t != classical.t {
        return Err(Error::GridMismatch(format!(
            "quantum curve has {} times, classical {}",
            quantum.t.len(),
            classical.t.len()
        )));
    }
    if !(delta > 0.0 && delta < 1.0) || persistence == 0 {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} must lie in (0,1) and persistence must be >= 1"
        )));
    }
    let rel = relative_deviation(quantum, classical);
    let t_b = rel
        .windows(persistence)
        .position(|w| w.iter().all(|r| *r >= delta))
        .map(|i| quantum.t[i]);
    Ok(BreakTimeResult {
        t_b,
        delta,
        persistence,
        quantum: quantum.clone(),
        classical: classical.clone(),
        hbar_eff,
        q,
    })
}

/// [`break_time_with`] at the default persistence; `ħ` and `q` are left at
/// zero for the caller to fill.
pub fn break_time(quantum: &ObservableCurve, classical: &ObservableCurve, delta: f64) -> Result<BreakTimeResult> {
    break_time_with(quantum, classical, delta, DEFAULT_PERSISTENCE, 0.0, 0.0)
}

/// Least-squares fit `t_b = slope · ln q + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// `slope / (1/h)`; one when `t_b = ln q / h`.
    pub slope_over_inverse_h: f64,
    pub pearson: f64,
    pub points: usize,
    pub h: f64,
}

pub fn breaktime_scaling_fit(results: &[BreakTimeResult], h: f64) -> Result<ScalingFit> {
    if !(h > 0.0) {
        return Err(Error::NonChaotic(h));
    }
    let mut pts: Vec<(f64, f64, f64)> = results
        .iter()
        .filter_map(|r| r.t_b.map(|t| (r.hbar_eff, r.q.ln(), t as f64)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < 4 {
        return Err(Error::InsufficientPoints {
            needed: 4,
            got: pts.len(),
        });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.2).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.1 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.2 - my).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.1 - mx) * (p.2 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientPoints { needed: 4, got: 1 });
    }
    let slope = sxy / sxx;
    Ok(ScalingFit {
        slope,
        intercept: my - slope * mx,
        slope_over_inverse_h: slope * h,
        pearson: if syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 },
        points: pts.len(),
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{CurveKind, Observable};
    use super::*;
    use approx::assert_abs_diff_eq;

    fn curve(values: Vec<f64>, kind: CurveKind) -> ObservableCurve {
        ObservableCurve::new((0..values.len() as u64).collect(), values, kind, Observable::MomentumSecondMoment)
            .unwrap()
    }

    #[test]
    fn identical_curves_never_break() {
        let v: Vec<f64> = (0..50).map(|t| t as f64 + 1.0).collect();
        let r = break_time(&curve(v.clone(), CurveKind::Quantum), &curve(v, CurveKind::Classical), 0.1).unwrap();
        assert_eq!(r.t_b, None);
    }

    #[test]
    fn step_divergence() {
        let c: Vec<f64> = (0..80).map(|t| 2.0 + t as f64).collect();
        let q: Vec<f64> = c
            .iter()
            .enumerate()
            .map(|(t, v)| if t < 37 { *v } else { v * (1.0 + 0.2) })
            .collect();
        let r = break_time(&curve(q, CurveKind::Quantum), &curve(c, CurveKind::Classical), 0.1).unwrap();
        assert_eq!(r.t_b, Some(37));
    }

    #[test]
    fn short_spikes_are_filtered() {
        let c = vec![1.0; 30];
        let mut q = c.clone();
        q[5] = 2.0;
        q[6] = 2.0;
        let r = break_time(&curve(q, CurveKind::Quantum), &curve(c, CurveKind::Classical), 0.1).unwrap();
        assert_eq!(r.t_b, None);
    }

    #[test]
    fn grid_mismatch() {
        let a = curve(vec![1.0; 10], CurveKind::Quantum);
        let b = curve(vec![1.0; 11], CurveKind::Classical);
        assert!(matches!(break_time(&a, &b, 0.1), Err(Error::GridMismatch(_))));
    }

    fn synthetic(q: f64, t_b: u64) -> BreakTimeResult {
        let c = curve(vec![1.0; 5], CurveKind::Classical);
        BreakTimeResult {
            t_b: Some(t_b),
            delta: 0.1,
            persistence: 5,
            quantum: c.clone(),
            classical: c,
            hbar_eff: 1.0 / q,
            q,
        }
    }

    #[test]
    fn exact_fits() {
        let h = 2f64.ln();
        // q = 2^k makes ln q / h integral.
        let rs: Vec<_> = (3..9).map(|k| synthetic(2f64.powi(k), k as u64)).collect();
        let f = breaktime_scaling_fit(&rs, h).unwrap();
        assert_abs_diff_eq!(f.slope, 1.0 / h, epsilon = 1e-12);
        assert_abs_diff_eq!(f.slope_over_inverse_h, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 0.0, epsilon = 1e-12);
        let rs: Vec<_> = (3..9).map(|k| synthetic(2f64.powi(k), 2 + k as u64)).collect();
        let f = breaktime_scaling_fit(&rs, h).unwrap();
        assert_abs_diff_eq!(f.intercept, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.pearson, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn too_few_points() {
        let rs: Vec<_> = (3..6).map(|k| synthetic(2f64.powi(k), k as u64)).collect();
        assert_eq!(
            breaktime_scaling_fit(&rs, 1.0).unwrap_err(),
            Error::InsufficientPoints { needed: 4, got: 3 }
        );
    }
}
