//! The logarithmic timescale `τ = ln q / h` and its companions.
//!
//! `τ` is measured in steps of the base map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entropy of the time-`τ` map, `τ · h`.
pub fn time_rescaled_entropy(h: f64, tau: f64) -> f64 {
    tau * h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimescaleResult {
    pub tau: f64,
    pub q: f64,
    pub h: f64,
    /// `τ` itself: the bracket's lower edge, `ln(e^{τh}) / h`.
    pub lower: f64,
    /// `ln(e^{τh} + 1) / h`, the value before dropping the `+1`.
    pub upper: f64,
    /// `upper − lower = ln(1 + e^{−τh}) / h`.
    pub gap: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Region volume when the result came from a region; `None` for a bare `q`.
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::NonChaotic(h));
    }
    Ok(())
}

pub fn log_timescale(q: f64, h: f64) -> Result<TimescaleResult> {
    check_h(h)?;
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::SubPlanck(q));
    }
    let tau = q.ln() / h;
    let th = tau * h;
    // ln(e^{th} + 1) = th + ln(1 + e^{-th}), stable for large th.
    let gap = (-th).exp().ln_1p() / h;
    Ok(TimescaleResult {
        tau,
        q,
        h,
        lower: tau,
        upper: (th + (-th).exp().ln_1p()) / h,
        gap,
        c1: 1.0 / h,
        c2: None,
    })
}

/// `τ` for the region of volume `vol_r` grained at `ħ^D`.
pub fn timescale_from_region(vol_r: f64, hbar: f64, d: usize, h: f64) -> Result<TimescaleResult> {
    if !(vol_r > 0.0) {
        return Err(Error::DegenerateRegion);
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidParameter(format!("hbar {hbar} must be positive")));
    }
    let mut r = log_timescale(vol_r / hbar.powi(d as i32), h)?;
    r.c2 = Some(vol_r);
    Ok(r)
}

/// `(C1, C2) = (1/h, vol(R))` of `τ_ħ = C1 ln(C2 / ħ^D)`.
pub fn universal_constants(h: f64, vol_r: f64, d: usize) -> Result<(f64, f64)> {
    check_h(h)?;
    if !(vol_r > 0.0) || d == 0 {
        return Err(Error::DegenerateRegion);
    }
    Ok((1.0 / h, vol_r))
}

/// `C1 · ln(C2 / ħ^D)`.
pub fn universal_timescale(c1: f64, c2: f64, hbar: f64, d: usize) -> f64 {
    c1 * (c2 / hbar.powi(d as i32)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavepacketSpread {
    pub lambda: f64,
    pub tau_hbar: f64,
    #[serde(rename = "delta_I")]
    pub delta_i: f64,
    pub kappa: f64,
    pub hbar_eff: f64,
}

/// `ΔI = ħ e^{λτ}` and `κ = ΔI / ħ`.
pub fn wavepacket_spread(lambda: f64, tau_hbar: f64, hbar_eff: f64) -> Result<WavepacketSpread> {
    if !(lambda > 0.0 && tau_hbar > 0.0 && hbar_eff > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "wavepacket spread needs positive λ, τ, ħ (got {lambda}, {tau_hbar}, {hbar_eff})"
        )));
    }
    let kappa = (lambda * tau_hbar).exp();
    Ok(WavepacketSpread {
        lambda,
        tau_hbar,
        delta_i: hbar_eff * kappa,
        kappa,
        hbar_eff,
    })
}

/// Rows `hbar,q,tau,lower,upper,gap` for a sweep over `ħ`.
pub fn hbar_sweep(vol_r: f64, d: usize, h: f64, hbars: &[f64]) -> Result<Vec<(f64, TimescaleResult)>> {
    hbars
        .iter()
        .map(|&hb| timescale_from_region(vol_r, hb, d, h).map(|r| (hb, r)))
        .collect()
}

pub fn sweep_to_csv(rows: &[(f64, TimescaleResult)]) -> String {
    use crate::export::fmt_f64;
    let mut out = String::from("hbar,q,tau,lower,upper,gap\n");
    for (hb, r) in rows {
        let cols = [*hb, r.q, r.tau, r.lower, r.upper, r.gap].map(fmt_f64);
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let h: f64 = 0.8;
        assert_relative_eq!(log_timescale(h.exp(), h).unwrap().tau, 1.0, max_relative = 1e-15);
        assert_relative_eq!(log_timescale(1024.0, 2f64.ln()).unwrap().tau, 10.0, max_relative = 1e-15);
        let r = log_timescale(256.0, 0.9624).unwrap();
        assert!((r.tau - 5.762).abs() < 1e-3);
        assert!((r.gap - 0.0040).abs() < 1e-4);
        assert_eq!(time_rescaled_entropy(0.4, 1.0), 0.4);
        assert_eq!(time_rescaled_entropy(2f64.ln(), 3.0), 3.0 * 2f64.ln());
    }

    #[test]
    fn error_paths() {
        assert_eq!(log_timescale(0.5, 1.0).unwrap_err(), Error::SubPlanck(0.5));
        assert_eq!(log_timescale(10.0, 0.0).unwrap_err(), Error::NonChaotic(0.0));
        assert_eq!(universal_constants(-1.0, 1.0, 1).unwrap_err().kind(), "NonChaotic");
    }

    #[test]
    fn universal_form() {
        assert_eq!(universal_constants(1.0, 1.0, 1).unwrap(), (1.0, 1.0));
        let vol = 4.0 * std::f64::consts::PI.powi(2);
        let hbar = 2.0 * std::f64::consts::PI / 1024.0;
        let (c1, c2) = universal_constants(2f64.ln(), vol, 1).unwrap();
        let t = universal_timescale(c1, c2, hbar, 1);
        assert!((t - 12.65).abs() < 5e-3);
        let r = timescale_from_region(vol, hbar, 1, 2f64.ln()).unwrap();
        assert_relative_eq!(r.tau, t, max_relative = 1e-12);
    }

    #[test]
    fn spread_examples() {
        let w = wavepacket_spread(1.0, 10f64.ln(), 0.01).unwrap();
        assert_relative_eq!(w.delta_i, 0.1, max_relative = 1e-12);
        assert_relative_eq!(w.kappa, 10.0, max_relative = 1e-12);
        let w = wavepacket_spread(1.0, 1e-12, 0.01).unwrap();
        assert_relative_eq!(w.kappa, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn sweep_csv() {
        let rows = hbar_sweep(1.0, 1, 1.0, &[0.1, 0.01]).unwrap();
        let csv = sweep_to_csv(&rows);
        assert!(csv.starts_with("hbar,q,tau,lower,upper,gap\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn algebra(lq in 1e-6f64..23.0, h in 0.01f64..10.0) {
            let q = lq.exp();
            let r = log_timescale(q, h).unwrap();
            prop_assert!((r.tau * h - q.ln()).abs() <= 1e-12 * q.ln().abs().max(1e-300));
            prop_assert!(r.lower <= q.ln() / h && q.ln() / h <= r.upper);
            let r2 = log_timescale(q * q, h).unwrap();
            prop_assert!((r2.tau - 2.0 * r.tau).abs() <= 1e-12 * r.tau);
            let rh = log_timescale(q, 2.0 * h).unwrap();
            prop_assert!((rh.tau - r.tau / 2.0).abs() <= 1e-12 * r.tau);
        }

        #[test]
        fn spread_round_trip(lambda in 0.05f64..5.0, tau in 0.01f64..20.0, hbar in 1e-4f64..1.0) {
            let w = wavepacket_spread(lambda, tau, hbar).unwrap();
            let back = log_timescale(w.kappa, lambda).unwrap().tau;
            prop_assert!((back - tau).abs() <= 1e-12 * tau.max(1.0));
        }
    }
}
