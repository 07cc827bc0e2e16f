//! Time-dependent BdG integration.
//!
//! Each mode obeys `i d/dt (u, v) = H_k(t) (u, v)` with
//! `H_k = 2(g(t) - cos k) σ_z + 2 sin k σ_x`. Steps use the fourth-order
//! commutator-free Magnus scheme; every factor is an exact SU(2) rotation, so
//! the norm is preserved to rounding.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{observables, BogoliubovMode, ChainObservables, ModeEnsemble};
use crate::error::{Error, Result};
use crate::magnus::Cf4;
use crate::protocols::RampProtocol;
use crate::scalar::{Cplx, Real};

const MAX_HALVINGS: usize = 6;

/// Field at which a linear KZ ramp is started: `max(5, 1 + 10/sqrt(τ_Q))`.
pub fn kz_ramp_start_field<T: Real>(tau_q: T) -> T {
    T::lit(5.0).max(T::one() + T::lit(10.0) / tau_q.sqrt())
}

/// Default step `min(0.01, 0.001 τ_Q)`.
pub fn default_step<T: Real>(tau_q: T) -> T {
    T::lit(0.01).min(T::lit(0.001) * tau_q)
}

/// `exp(-i τ (a σ_z + b σ_x)) (u, v)`.
#[inline]
fn rotate<T: Real>(u: Cplx<T>, v: Cplx<T>, a: T, b: T, tau: T) -> (Cplx<T>, Cplx<T>) {
    let r = (a * a + b * b).sqrt();
    let phase = tau * r;
    let c = phase.cos();
    let s = if r > T::zero() { phase.sin() / r } else { tau };
    let mi = Complex::new(T::zero(), -s);
    let hu = u * a + v * b;
    let hv = u * b - v * a;
    (u * c + mi * hu, v * c + mi * hv)
}

/// Advances one mode from `t0` over `n` equal steps of size `h`.
fn evolve_mode<T: Real>(
    mode: &BogoliubovMode<T>,
    protocol: &RampProtocol<T>,
    t0: T,
    h: T,
    n: usize,
) -> Result<BogoliubovMode<T>> {
    let cf = Cf4::<T>::new();
    let two = T::lit(2.0);
    let (cos_k, sin_k) = (mode.k.cos(), mode.k.sin());
    let b = two * sin_k;
    let half = h / two;
    let (mut u, mut v) = (mode.u, mode.v);
    for step in 0..n {
        let t = t0 + T::from_usize_lossy(step) * h;
        let (g_first, g_second) = cf.fields(protocol, t, h);
        (u, v) = rotate(u, v, two * (g_first - cos_k), b, half);
        (u, v) = rotate(u, v, two * (g_second - cos_k), b, half);
    }
    if !(u.re.is_finite() && u.im.is_finite() && v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::IntegrationFailure {
            op: "evolve_modes",
            k: mode.k.to_f64_lossy(),
            msg: "non-finite amplitude".into(),
        });
    }
    Ok(BogoliubovMode { k: mode.k, u, v })
}

fn check_window<T: Real>(protocol: &RampProtocol<T>, t0: T, t1: T) -> Result<()> {
    protocol.ramp_value(t0)?;
    protocol.ramp_value(t1)?;
    if t1 < t0 {
        return Err(Error::invalid("evolve_modes", "t_end precedes the ensemble time"));
    }
    Ok(())
}

fn steps_for<T: Real>(span: T, dt: T) -> usize {
    if span <= T::zero() {
        0
    } else {
        (span / dt).ceil().to_usize().unwrap_or(usize::MAX).max(1)
    }
}

/// Fixed-step evolution without a convergence check.
pub fn evolve_modes_fixed<T: Real>(
    ensemble: &ModeEnsemble<T>,
    protocol: &RampProtocol<T>,
    t_end: T,
    dt: T,
) -> Result<ModeEnsemble<T>> {
    if !(dt > T::zero()) {
        return Err(Error::invalid("evolve_modes", "dt must be positive"));
    }
    check_window(protocol, ensemble.t, t_end)?;
    let n = steps_for(t_end - ensemble.t, dt);
    let h = if n == 0 {
        T::zero()
    } else {
        (t_end - ensemble.t) / T::from_usize_lossy(n)
    };
    let modes = ensemble
        .modes
        .par_iter()
        .map(|m| evolve_mode(m, protocol, ensemble.t, h, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeEnsemble {
        grid: ensemble.grid.clone(),
        modes,
        t: t_end,
        g: protocol.value_unchecked(t_end),
    })
}

/// How an `evolve_modes` result was accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveReport<T> {
    pub dt: T,
    pub halvings: usize,
    /// Largest change of any `|v_k|^2` between the last two step sizes.
    pub max_change: T,
}

/// Evolves to `t_end`, halving `dt` until every `|v_k|^2` changes by less than
/// `1e-8` (or a few hundred ulps for `f32`). Returns the finer result.
pub fn evolve_modes<T: Real>(
    ensemble: &ModeEnsemble<T>,
    protocol: &RampProtocol<T>,
    t_end: T,
    dt: T,
) -> Result<(ModeEnsemble<T>, EvolveReport<T>)> {
    let tol = T::lit(1e-8).max(T::epsilon() * T::lit(300.0));
    // a step longer than the window would be compared with itself
    let span = t_end - ensemble.t;
    let dt = if span > T::zero() && dt > span { span } else { dt };
    let mut coarse = evolve_modes_fixed(ensemble, protocol, t_end, dt)?;
    let mut h = dt;
    let mut max_change = T::infinity();
    for halvings in 1..=MAX_HALVINGS {
        h = h / T::lit(2.0);
        let fine = evolve_modes_fixed(ensemble, protocol, t_end, h)?;
        max_change = coarse
            .modes
            .iter()
            .zip(&fine.modes)
            .map(|(a, b)| (a.v.norm_sqr() - b.v.norm_sqr()).abs())
            .fold(T::zero(), T::max);
        if max_change < tol {
            return Ok((
                fine,
                EvolveReport {
                    dt: h,
                    halvings,
                    max_change,
                },
            ));
        }
        coarse = fine;
    }
    Err(Error::NoConvergence {
        op: "evolve_modes",
        iterations: MAX_HALVINGS,
        residual: max_change.to_f64_lossy(),
    })
}

/// One sample of a ramp time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampRow<T> {
    pub t: T,
    /// `t - t_c`, or `t` when the protocol never crosses `g_c`.
    pub t_rel: T,
    pub g: T,
    pub state: ChainObservables<T>,
    /// Observables of the instantaneous ground state at `g`.
    pub ground: ChainObservables<T>,
    /// Density of excited quasiparticles relative to the ground state at `g`.
    pub rho_exc: T,
}

impl<T: Real> RampRow<T> {
    pub fn delta_x(&self) -> T {
        self.state.sx - self.ground.sx
    }
    pub fn delta_zz(&self) -> T {
        self.state.zz - self.ground.zz
    }
    pub fn delta_yy(&self) -> T {
        self.state.yy - self.ground.yy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampSeries<T> {
    pub rows: Vec<RampRow<T>>,
    pub last: ModeEnsemble<T>,
}

impl<T: Real> RampSeries<T> {
    pub const CSV_HEADER: &'static str = "t,t_minus_tc,g,sx,zz,yy,rho_exc,sx_gs,zz_gs,yy_gs,delta_x,delta_zz,delta_yy";

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.10e},{:.10e},{:.10e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                r.t,
                r.t_rel,
                r.g,
                r.state.sx,
                r.state.zz,
                r.state.yy,
                r.rho_exc,
                r.ground.sx,
                r.ground.zz,
                r.ground.yy,
                r.delta_x(),
                r.delta_zz(),
                r.delta_yy()
            )?;
        }
        Ok(())
    }
}

fn sample_row<T: Real>(ens: &ModeEnsemble<T>, t_c: Option<T>) -> RampRow<T> {
    let ground = ModeEnsemble::ground_state(&ens.grid, ens.g, ens.t);
    RampRow {
        t: ens.t,
        t_rel: t_c.map_or(ens.t, |tc| ens.t - tc),
        g: ens.g,
        state: observables(ens),
        ground: observables(&ground),
        rho_exc: ens.excitation_density(),
    }
}

/// Fixed-step evolution to `t_end`, sampling observables every `sample_dt`
/// (rounded so that it is an integer number of steps).
pub fn ramp_series<T: Real>(
    ensemble: &ModeEnsemble<T>,
    protocol: &RampProtocol<T>,
    t_end: T,
    dt: T,
    sample_dt: T,
) -> Result<RampSeries<T>> {
    if !(dt > T::zero()) || !(sample_dt > T::zero()) {
        return Err(Error::invalid("ramp_series", "dt and sample_dt must be positive"));
    }
    check_window(protocol, ensemble.t, t_end)?;
    let sub = (sample_dt / dt).round().to_usize().unwrap_or(1).max(1);
    let total = steps_for(t_end - ensemble.t, dt);
    let h = if total == 0 {
        T::zero()
    } else {
        (t_end - ensemble.t) / T::from_usize_lossy(total)
    };
    let t_c = protocol.critical_time();

    let mut ens = ensemble.clone();
    let mut rows = vec![sample_row(&ens, t_c)];
    let mut done = 0usize;
    while done < total {
        let n = sub.min(total - done);
        let t0 = ensemble.t + T::from_usize_lossy(done) * h;
        let modes = ens
            .modes
            .par_iter()
            .map(|m| evolve_mode(m, protocol, t0, h, n))
            .collect::<Result<Vec<_>>>()?;
        done += n;
        let t = if done == total {
            t_end
        } else {
            ensemble.t + T::from_usize_lossy(done) * h
        };
        ens = ModeEnsemble {
            grid: ens.grid,
            modes,
            t,
            g: protocol.value_unchecked(t),
        };
        rows.push(sample_row(&ens, t_c));
    }
    Ok(RampSeries { rows, last: ens })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrable::{excitation_probability, lz_probability, stationary_mode};
    use crate::protocols::MomentumGrid;
    use std::f64::consts::PI;

    fn kz_start(tau: f64, grid: &MomentumGrid<f64>) -> (RampProtocol<f64>, ModeEnsemble<f64>) {
        let p = RampProtocol::linear(1.0, tau, 0.0).unwrap();
        let g0 = kz_ramp_start_field(tau);
        let t0 = -tau * g0;
        (p, ModeEnsemble::ground_state(grid, g0, t0))
    }

    #[test]
    fn oversized_step_is_not_accepted_blindly() {
        let grid = MomentumGrid::infinite(64).unwrap();
        let (p, start) = kz_start(8.0, &grid);
        match evolve_modes(&start, &p, 0.0, 200.0) {
            Ok((_, report)) => assert!(report.dt < 1.0, "accepted dt {}", report.dt),
            Err(e) => assert!(matches!(e, Error::NoConvergence { .. })),
        }
    }

    #[test]
    fn stationary_mode_returns_after_one_period() {
        let g = 0.7;
        let grid = MomentumGrid::<f64>::infinite(16).unwrap();
        let ens = ModeEnsemble::ground_state(&grid, g, 0.0);
        let p = RampProtocol::constant(g);
        for (m0, k) in ens.modes.iter().zip(&ens.grid.values) {
            let (_, eps) = stationary_mode(g, *k);
            let single = ModeEnsemble {
                grid: MomentumGrid::infinite(2).unwrap(),
                modes: vec![*m0],
                t: 0.0,
                g,
            };
            let period = 2.0 * PI / eps;
            let out = evolve_modes_fixed(&single, &p, period, 1e-3).unwrap();
            let m = out.modes[0];
            // global phase exp(-i ε T) = 1
            assert!((m.u - m0.u).norm() < 1e-10, "k={k}");
            assert!((m.v - m0.v).norm() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn adiabatic_limit_suppresses_excitation() {
        let grid = MomentumGrid::<f64>::antiperiodic(64).unwrap();
        let (p, ens) = kz_start(512.0, &grid);
        let out = evolve_modes_fixed(&ens, &p, 0.0, 0.05).unwrap();
        let k_min = out.grid.values[0];
        let pk = excitation_probability(&out.modes[0], 0.0);
        assert!((k_min - PI / 64.0).abs() < 1e-15);
        assert!(pk < 1e-3, "p = {pk}");
    }

    #[test]
    fn small_k_follows_landau_zener() {
        let tau = 8.0;
        let k = PI / 8.0 / 64.0;
        let grid = MomentumGrid {
            values: vec![k],
            weights: vec![1.0],
            boundary: crate::protocols::Boundary::QuadratureInfinite,
            nodes: 1,
        };
        let (p, ens) = kz_start(tau, &grid);
        let (out, rep) = evolve_modes(&ens, &p, 0.0, 0.01).unwrap();
        let pk = excitation_probability(&out.modes[0], 0.0);
        let lz = lz_probability(tau, k);
        assert!((pk - lz).abs() / lz < 0.01, "{pk} vs {lz}");
        assert!(rep.max_change < 1e-8);
        assert!(out.max_norm_error() < 1e-12);
    }

    #[test]
    fn negative_k_is_mirror_image() {
        let tau = 4.0;
        let grid = MomentumGrid::<f64>::antiperiodic(8).unwrap();
        let p = RampProtocol::linear(1.0, tau, 0.0).unwrap();
        let t0 = -tau * 5.0;
        for &k in &grid.values[4..] {
            let run = |kk: f64| {
                let (m, _) = stationary_mode(5.0, kk);
                let e = ModeEnsemble {
                    grid: grid.clone(),
                    modes: vec![m],
                    t: t0,
                    g: 5.0,
                };
                evolve_modes_fixed(&e, &p, 0.0, 0.01).unwrap().modes[0]
            };
            let (a, b) = (run(k), run(-k));
            assert!((a.u - b.u).norm() < 1e-12);
            assert!((a.v + b.v).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_windows() {
        let grid = MomentumGrid::<f64>::infinite(4).unwrap();
        let p = RampProtocol::linear(1.0, 8.0, 0.0).unwrap();
        let ens = ModeEnsemble::ground_state(&grid, 5.0, -40.0);
        assert!(evolve_modes_fixed(&ens, &p, 1.0, 0.01).is_err());
        assert!(evolve_modes_fixed(&ens, &p, -50.0, 0.01).is_err());
        assert!(evolve_modes_fixed(&ens, &p, 0.0, 0.0).is_err());
    }

    #[test]
    fn f32_evolution_keeps_norm() {
        let grid = MomentumGrid::<f32>::infinite(32).unwrap();
        let p = RampProtocol::linear(1.0f32, 4.0, 0.0).unwrap();
        let ens = ModeEnsemble::ground_state(&grid, 5.0f32, -20.0);
        let out = evolve_modes_fixed(&ens, &p, 0.0, 0.01).unwrap();
        assert!(out.max_norm_error() < 1e-4);
    }
}
