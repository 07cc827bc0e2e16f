//! Exact solution of the nearest-neighbour chain (`J2 = 0`) through its
//! Jordan-Wigner fermions.
//!
//! Each positive quasimomentum carries one Bogoliubov mode `(u_k, v_k)`; the
//! negative partner follows from `u` even, `v` odd. The state is the vacuum of
//! the time-dependent quasiparticles, so the modes alone determine every
//! observable.

mod dynamics;
mod observables;
mod oscillation;

pub use dynamics::{
    default_step, evolve_modes, evolve_modes_fixed, kz_ramp_start_field, ramp_series, EvolveReport, RampRow, RampSeries,
};
pub use observables::{free_fermion_ground_energy, observables, ChainObservables};
pub use oscillation::{
    kzm_oscillation, kzm_scales, period_and_q, KzmOscillation, KzmScales, PeriodAndQ, OSCILLATION_PREFACTOR,
    VARIATIONAL_A, VARIATIONAL_A_EXP,
};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::protocols::MomentumGrid;
use crate::scalar::{Cplx, Real};

/// Particle/hole amplitudes of one quasimomentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovMode<T> {
    pub k: T,
    pub u: Cplx<T>,
    pub v: Cplx<T>,
}

impl<T: Real> BogoliubovMode<T> {
    pub fn norm_sqr(&self) -> T {
        self.u.norm_sqr() + self.v.norm_sqr()
    }

    /// Partner at `-k`: `u` even, `v` odd.
    pub fn mirrored(&self) -> Self {
        Self {
            k: -self.k,
            u: self.u,
            v: -self.v,
        }
    }
}

/// Single-particle energy `ε_k = 2 sqrt((g - cos k)^2 + sin^2 k)`.
pub fn quasiparticle_energy<T: Real>(g: T, k: T) -> T {
    let a = g - k.cos();
    let b = k.sin();
    T::lit(2.0) * (a * a + b * b).sqrt()
}

/// Positive-frequency eigenmode `(cos θ/2, sin θ/2)` of the stationary BdG
/// problem and its energy.
pub fn stationary_mode<T: Real>(g: T, k: T) -> (BogoliubovMode<T>, T) {
    let theta = k.sin().atan2(g - k.cos());
    let half = theta / T::lit(2.0);
    let mode = BogoliubovMode {
        k,
        u: Complex::new(half.cos(), T::zero()),
        v: Complex::new(half.sin(), T::zero()),
    };
    (mode, quasiparticle_energy(g, k))
}

/// Probability `|<negative-frequency mode | (u, v)>|^2` of the `(k, -k)` pair
/// being excited relative to the instantaneous ground state at `g`.
pub fn excitation_probability<T: Real>(mode: &BogoliubovMode<T>, g: T) -> T {
    let (plus, _) = stationary_mode(g, mode.k);
    // negative-frequency mode is (v+, -u+), real
    let overlap = mode.u * plus.v.re - mode.v * plus.u.re;
    overlap.norm_sqr().min(T::one())
}

/// Landau-Zener excitation probability `exp(-2π τ_Q k²)` for a slow linear
/// ramp across `g_c = 1`.
pub fn lz_probability<T: Real>(tau_q: T, k: T) -> T {
    (-T::TAU() * tau_q * k * k).exp()
}

/// Final kink density after a linear ramp to `g = 0`: `1 / (2π sqrt(2 τ_Q))`.
pub fn kink_density_closed<T: Real>(tau_q: T) -> T {
    T::one() / (T::TAU() * (T::lit(2.0) * tau_q).sqrt())
}

/// All positive-k modes plus the current time and field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEnsemble<T> {
    /// Positive quasimomenta and their quadrature weights; weights sum to π.
    pub grid: MomentumGrid<T>,
    pub modes: Vec<BogoliubovMode<T>>,
    pub t: T,
    pub g: T,
}

impl<T: Real> ModeEnsemble<T> {
    /// Ground state at field `g`: every mode in its positive-frequency state.
    pub fn ground_state(grid: &MomentumGrid<T>, g: T, t: T) -> Self {
        let positive = positive_half(grid);
        let modes = positive.values.iter().map(|&k| stationary_mode(g, k).0).collect();
        Self {
            grid: positive,
            modes,
            t,
            g,
        }
    }

    pub fn max_norm_error(&self) -> T {
        self.modes
            .iter()
            .map(|m| (m.norm_sqr() - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    /// Excitation probabilities relative to the ground state at the current field.
    pub fn excitation_probabilities(&self) -> Vec<T> {
        self.modes.iter().map(|m| excitation_probability(m, self.g)).collect()
    }

    /// Density of excited quasiparticles per site, `∫_0^π p_k dk/π`.
    pub fn excitation_density(&self) -> T {
        let p = self.excitation_probabilities();
        let s = crate::scalar::ordered_sum(p.iter().zip(&self.grid.weights).map(|(&p, &w)| p * w));
        s / T::PI()
    }
}

fn positive_half<T: Real>(grid: &MomentumGrid<T>) -> MomentumGrid<T> {
    let (values, weights): (Vec<T>, Vec<T>) = grid.positive().unzip();
    MomentumGrid {
        values,
        weights,
        boundary: grid.boundary,
        nodes: grid.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn stationary_energies() {
        for k in [0.1, 0.7, 2.0, 3.0] {
            assert!((stationary_mode(0.0f64, k).1 - 2.0).abs() < 1e-14);
        }
        assert_eq!(stationary_mode(1.0, 0.0).1, 0.0);
        assert!((stationary_mode(2.0, PI / 2.0).1 - 2.0 * 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn stationary_mode_solves_bdg() {
        for &(g, k) in &[(0.3, 0.4), (1.7, 2.9), (1.0, 0.01), (0.0, -1.2)] {
            let (m, e) = stationary_mode(g, k);
            let (u, v) = (m.u.re, m.v.re);
            let a = 2.0 * (g - f64::cos(k));
            let b = 2.0 * f64::sin(k);
            assert!((a * u + b * v - e * u).abs() < 1e-13);
            assert!((b * u - a * v - e * v).abs() < 1e-13);
            assert!(u >= 0.0);
            assert!((m.norm_sqr() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn parity_of_modes() {
        let (p, _) = stationary_mode(0.6, 0.8);
        let (m, _) = stationary_mode(0.6, -0.8);
        assert!((p.u - m.u).norm() < 1e-15);
        assert!((p.v + m.v).norm() < 1e-15);
        assert_eq!(p.mirrored().v, -p.v);
    }

    #[test]
    fn excitation_probability_limits() {
        let (plus, _) = stationary_mode(0.4f64, 0.9);
        assert!(excitation_probability(&plus, 0.4) < 1e-30);
        let minus = BogoliubovMode {
            k: 0.9,
            u: plus.v,
            v: -plus.u,
        };
        assert!((excitation_probability(&minus, 0.4) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lz_values() {
        assert_eq!(lz_probability(4.0, 0.0), 1.0);
        assert!((lz_probability(4.0, 0.05) - (-0.02f64 * PI).exp()).abs() < 1e-15);
        assert!((lz_probability(4.0f64, 0.05) - 0.939_101).abs() < 1e-6);
        assert!(lz_probability(8.0, PI / 2.0) < 1e-30);
    }

    #[test]
    fn closed_density() {
        assert!((kink_density_closed(8.0) - 1.0 / (8.0 * PI)).abs() < 1e-16);
        assert!((kink_density_closed(8.0f64) - 0.039_789).abs() < 1e-6);
        assert!((kink_density_closed(32.0f64) * 2.0 - kink_density_closed(8.0)).abs() < 1e-16);
    }

    #[test]
    fn lz_integral_matches_closed_density() {
        // midpoint quadrature of (1/π)∫_0^π exp(-2π τ k²) dk
        let tau = 8.0;
        let n = 20_000;
        let h = PI / n as f64;
        let s: f64 = (0..n)
            .map(|j| lz_probability(tau, (j as f64 + 0.5) * h) * h)
            .sum::<f64>()
            / PI;
        let rel = (s - kink_density_closed(tau)).abs() / kink_density_closed(tau);
        assert!(rel < 0.02, "rel = {rel}");
    }

    #[test]
    fn ground_state_drops_negative_k() {
        let grid = MomentumGrid::<f64>::antiperiodic(8).unwrap();
        let ens = ModeEnsemble::ground_state(&grid, 0.5, 0.0);
        assert_eq!(ens.modes.len(), 4);
        let w: f64 = ens.grid.weights.iter().sum();
        assert!((w - PI).abs() < 1e-14);
        assert!(ens.excitation_density() < 1e-30);
    }
}
