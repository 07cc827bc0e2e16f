//! Closed-form post-transition oscillations of the NN chain.

use serde::{Deserialize, Serialize};

use super::kink_density_closed;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `57 sqrt(6π) / 80`, amplitude prefactor of the `ρ²` oscillation.
pub const OSCILLATION_PREFACTOR: f64 = 3.093_395_363_236_594;
/// Amplitude of the Gaussian fit to `sqrt(p(1-p))` (19/20).
pub const VARIATIONAL_A: f64 = 0.95;
/// Exponent factor of the same fit (4/3).
pub const VARIATIONAL_A_EXP: f64 = 4.0 / 3.0;

/// Kibble-Zurek scales of a linear ramp across `g_c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KzmScales<T> {
    pub tau_q: T,
    /// Final kink density per site.
    pub rho: T,
    /// KZ length `1/ρ` in sites.
    pub xi_hat: T,
    /// KZ time `sqrt(τ_Q)`.
    pub t_hat: T,
}

pub fn kzm_scales<T: Real>(tau_q: T) -> KzmScales<T> {
    let rho = kink_density_closed(tau_q);
    KzmScales {
        tau_q,
        rho,
        xi_hat: T::one() / rho,
        t_hat: tau_q.sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KzmOscillation<T> {
    /// Dephasing argument.
    pub f: T,
    /// Dephasing factor `(1 + f²)^(-3/4)`.
    pub d: T,
    pub phi: T,
    pub rho: T,
    pub delta_x: T,
    pub delta_zz: T,
    pub delta_yy: T,
    /// Evaluated before `t_c + t̂`, where the expansion is not valid.
    pub extrapolated: bool,
}

/// Transverse magnetization and NN correlator deviations from the adiabatic
/// ground state, `t_rel = t - t_c` after a linear ramp with quench time `tau_q`
/// at instantaneous field `g`.
pub fn kzm_oscillation<T: Real>(tau_q: T, t_rel: T, g: T) -> KzmOscillation<T> {
    let scales = kzm_scales(tau_q);
    let rho = scales.rho;
    let two = T::lit(2.0);
    let f = T::lit(3.0) / (T::lit(4.0) * T::PI())
        * (T::euler_gamma() - two * t_rel / tau_q + (T::lit(4.0) * t_rel * t_rel / tau_q).ln());
    let d = (T::one() + f * f).powf(T::lit(-0.75));
    let phi = T::FRAC_PI_4() + two * t_rel * t_rel / tau_q + T::lit(1.5) * f.atan();
    let osc = rho * rho * d * T::lit(OSCILLATION_PREFACTOR) * phi.cos();
    KzmOscillation {
        f,
        d,
        phi,
        rho,
        delta_x: two * rho + osc,
        delta_zz: -two * rho - g * osc,
        delta_yy: -two * rho - (two - g) * osc,
        extrapolated: t_rel < scales.t_hat,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodAndQ<T> {
    /// `π / (2(1-g))`.
    pub period: T,
    /// `2 τ_Q (1-g)² / g`; infinite at `g = 0`.
    pub q: T,
    /// Flat dispersion (`g = 0`): no dephasing.
    pub dispersionless: bool,
}

/// Oscillation period and dephasing quality factor at field `0 <= g < 1`.
pub fn period_and_q<T: Real>(tau_q: T, g: T) -> Result<PeriodAndQ<T>> {
    if !(g >= T::zero() && g < T::one()) {
        return Err(Error::invalid("period_and_q", "requires 0 <= g < 1"));
    }
    let gap = T::one() - g;
    let period = T::PI() / (T::lit(2.0) * gap);
    if g == T::zero() {
        return Ok(PeriodAndQ {
            period,
            q: T::infinity(),
            dispersionless: true,
        });
    }
    Ok(PeriodAndQ {
        period,
        q: T::lit(2.0) * tau_q * gap * gap / g,
        dispersionless: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn prefactor_constant() {
        assert!((OSCILLATION_PREFACTOR - 57.0 * (6.0 * PI).sqrt() / 80.0).abs() < 1e-15);
        assert!((VARIATIONAL_A - 19.0 / 20.0).abs() < 1e-16);
    }

    #[test]
    fn scales_are_consistent() {
        let s = kzm_scales(8.0);
        assert_eq!(s.xi_hat * s.rho, 1.0);
        assert!((s.t_hat - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn node_of_cosine_leaves_offset() {
        // choose t_rel where phi = π/2 + nπ: solve by bisection on cos(phi)
        let tau = 16.0;
        let (mut a, mut b) = (6.0, 6.5);
        let c = |t: f64| kzm_oscillation(tau, t, 0.2).phi.cos();
        // find a bracket
        while c(a).signum() == c(b).signum() {
            b += 0.25;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if c(a).signum() == c(m).signum() {
                a = m
            } else {
                b = m
            }
        }
        let o = kzm_oscillation(tau, 0.5 * (a + b), 0.2);
        assert!((o.delta_x - 2.0 * o.rho).abs() < 1e-15);
    }

    #[test]
    fn extended_kzm_identity() {
        for &(tau, t, g) in &[(8.0, 3.0, 0.6), (64.0, 30.0, 0.4), (16.0, 16.0, 0.0)] {
            let o = kzm_oscillation::<f64>(tau, t, g);
            let lhs = -o.delta_zz - g * o.delta_x;
            assert!((lhs - 2.0 * (1.0 - g) * o.rho).abs() < 1e-15);
        }
    }

    #[test]
    fn end_of_ramp_value() {
        let o = kzm_oscillation(8.0f64, 8.0, 0.0);
        assert!(!o.extrapolated);
        // f = 3/(4π)(γ_E - 2 + ln 32), independently evaluated
        assert!((o.f - 0.487_718_760_745_488).abs() < 1e-12, "f = {}", o.f);
        assert!((o.d - 0.852_106_404_670_186).abs() < 1e-12, "d = {}", o.d);
        let corr = o.delta_x - 2.0 * o.rho;
        assert!(corr.abs() <= o.rho * o.rho * 3.0934 * o.d);
        assert!((o.delta_x - 0.080_354_515_489_641).abs() < 1e-12, "{}", o.delta_x);
        assert!(kzm_oscillation(8.0, 1.0, 0.5).extrapolated);
    }

    #[test]
    fn period_and_quality() {
        let r = period_and_q(16.0f64, 0.5).unwrap();
        assert!((r.period - PI).abs() < 1e-15);
        assert!((r.q - 16.0).abs() < 1e-14);
        let tau: f64 = 400.0;
        let g = 1.0 - 1.0 / tau.sqrt();
        assert!((period_and_q(tau, g).unwrap().q - 2.0).abs() < 0.15);
        let z = period_and_q(8.0f64, 0.0).unwrap();
        assert!(z.dispersionless && z.q.is_infinite());
        assert!((z.period - PI / 2.0).abs() < 1e-15);
        assert!(period_and_q(8.0, 1.2).is_err());
    }
}
