//! Bound pairs of kinks treated as bosons: coefficient assembly, pair
//! dispersion and gap, the driven-oscillator response of the transverse
//! magnetization, and kink-train energies at zero field.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::Signal;
use crate::error::{Error, Result};
use crate::protocols::{RampKind, RampProtocol};
use crate::scalar::{Exact, Real};

/// Which pair coefficient a partial term contributes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairTerm {
    OnSite,
    Hopping,
    NextHopping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution<T> {
    pub label: &'static str,
    pub term: PairTerm,
    pub value: T,
}

/// Coefficients of `ω_b Σ b†b − t_b Σ (b†b + h.c.) − t'_b Σ (b†b + h.c.)`
/// for nearest and next-nearest pair hopping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCoefficients<T> {
    pub g: T,
    pub omega_b: T,
    pub t_b: T,
    pub t_b_prime: T,
    pub contributions: Vec<Contribution<T>>,
    /// Second order in `g` is trusted only for `g < 1`.
    pub valid: bool,
}

/// Single-kink constants of the small-field dispersion
/// `ω_k = ω_γ − 2 t_γ cos k − 2 t'_γ cos 2k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinkConstants<T> {
    pub omega_gamma: T,
    pub t_gamma: T,
    pub t_gamma_prime: T,
}

pub fn kink_constants<T: Exact>(g: T) -> KinkConstants<T> {
    let g2 = g.clone() * g.clone();
    KinkConstants {
        omega_gamma: T::ratio(6, 1) + g2.clone() * T::ratio(1, 8),
        t_gamma: g,
        t_gamma_prime: g2 * T::ratio(3, 16),
    }
}

/// Assembles the pair coefficients term by term from the single-kink
/// constants and second-order processes.
pub fn pair_coefficients<T: Exact>(g: T) -> PairCoefficients<T> {
    let k = kink_constants(g.clone());
    let g2 = g.clone() * g.clone();
    let half_g = g.clone() * T::ratio(1, 2);
    let quarter = T::ratio(1, 4);
    let two = T::ratio(2, 1);
    use PairTerm::*;
    let contributions = vec![
        Contribution {
            label: "omega_b(1): two kinks minus shared-bond energy",
            term: OnSite,
            value: two.clone() * k.omega_gamma.clone() - (T::ratio(4, 1) - g2.clone() * T::ratio(1, 8)),
        },
        Contribution {
            label: "omega_b(2): virtual kink hopping",
            term: OnSite,
            value: T::zero() - two.clone() * k.t_gamma.clone() * k.t_gamma.clone() * quarter.clone(),
        },
        Contribution {
            label: "omega_b(3): virtual pair breaking",
            term: OnSite,
            value: T::zero() - two.clone() * half_g.clone() * half_g.clone() * quarter.clone(),
        },
        Contribution {
            label: "t_b(1): correlated hopping",
            term: Hopping,
            value: T::zero() - k.t_gamma_prime.clone() + g2.clone() * T::ratio(1, 16),
        },
        Contribution {
            label: "t_b(2): sequential kink hops",
            term: Hopping,
            value: k.t_gamma.clone() * k.t_gamma.clone() * quarter.clone(),
        },
        Contribution {
            label: "t'_b(1): second-order pair hop",
            term: NextHopping,
            value: g2 * T::ratio(1, 16),
        },
        Contribution {
            label: "t'_b(3): pair hop through a broken pair",
            term: NextHopping,
            value: half_g.clone() * half_g * quarter,
        },
    ];
    let total = |term| {
        contributions
            .iter()
            .filter(|c| c.term == term)
            .fold(T::zero(), |acc, c| acc + c.value.clone())
    };
    PairCoefficients {
        omega_b: total(OnSite),
        t_b: total(Hopping),
        t_b_prime: total(NextHopping),
        valid: g < T::one() && g > T::zero() - T::one(),
        g,
        contributions,
    }
}

/// `ω = ω_b − 2 t_b − 2 t'_b = 8 − 3g²/4`.
pub fn pair_gap<T: Exact>(g: T) -> T {
    let c = pair_coefficients(g);
    c.omega_b - T::ratio(2, 1) * (c.t_b + c.t_b_prime)
}

/// `ω_{b,k} = ω_b − 2 t_b cos k − 2 t'_b cos 2k`.
pub fn pair_dispersion<T: Real>(g: T, k: T) -> T {
    let c = pair_coefficients(g);
    let two = T::lit(2.0);
    c.omega_b - two * c.t_b * k.cos() - two * c.t_b_prime * (two * k).cos()
}

/// Energy of a train of `n` adjacent kinks at zero field, `2n + 4`; the
/// empty train is the vacuum.
pub fn train_energy<T: Exact>(n: u32) -> T {
    if n == 0 {
        T::zero()
    } else {
        T::ratio(2 * i64::from(n) + 4, 1)
    }
}

/// Response of `x(t) = ⟨σˣ⟩ − ⟨σˣ⟩_GS` per site to a field modulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrivenResponse<T> {
    pub g: T,
    pub omega: T,
    pub drive: RampProtocol<T>,
    /// `δg(t) = g − g(t)`, the reduction of the field.
    pub delta_g: Signal<T>,
    pub signal: Signal<T>,
    /// Per-site `(g/2) x(t)`; the pair-density term is not included.
    pub zz_prediction: Signal<T>,
    /// Internal step after halving.
    pub step: T,
}

impl<T: Real> DrivenResponse<T> {
    pub const CSV_HEADER: &'static str = "t,delta_g,x,zz_prediction";

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for i in 0..self.signal.len() {
            writeln!(
                w,
                "{:.10e},{:.10e},{:.10e},{:.10e}",
                self.signal.time(i),
                self.delta_g.values[i],
                self.signal.values[i],
                self.zz_prediction.values[i]
            )?;
        }
        Ok(())
    }

    /// Post-drive amplitude `sqrt(x² + (x'/ω)²)` from the last two samples.
    pub fn final_amplitude(&self) -> T {
        let n = self.signal.len();
        if n < 2 {
            return T::zero();
        }
        let x1 = self.signal.values[n - 1];
        let x0 = self.signal.values[n - 2];
        let xm = (x1 + x0) / T::lit(2.0);
        let v = (x1 - x0) / self.signal.dt;
        (xm * xm + (v / self.omega).powi(2)).sqrt()
    }
}

fn rk4_run<T: Real>(omega: T, dg: &dyn Fn(T) -> T, n_out: usize, dt: T, sub: usize) -> Vec<T> {
    let h = dt / T::from_usize_lossy(sub);
    let two = T::lit(2.0);
    let f = |t: T, x: T, v: T| (v, -omega * omega * x - two * omega * dg(t));
    let (mut x, mut v) = (T::zero(), T::zero());
    let mut out = Vec::with_capacity(n_out);
    out.push(x);
    for i in 1..n_out {
        let t_base = T::from_usize_lossy(i - 1) * dt;
        for s in 0..sub {
            let t = t_base + T::from_usize_lossy(s) * h;
            let half = h / two;
            let (k1x, k1v) = f(t, x, v);
            let (k2x, k2v) = f(t + half, x + half * k1x, v + half * k1v);
            let (k3x, k3v) = f(t + half, x + half * k2x, v + half * k2v);
            let (k4x, k4v) = f(t + h, x + h * k3x, v + h * k3v);
            x += h / T::lit(6.0) * (k1x + two * k2x + two * k3x + k4x);
            v += h / T::lit(6.0) * (k1v + two * k2v + two * k3v + k4v);
        }
        out.push(x);
    }
    out
}

/// Integrates `x'' + ω² x = −2ω δg(t)` from rest with `ω = pair_gap(g)`,
/// sampling every `dt` up to `t_end`. The internal RK4 step is halved until
/// two successive refinements agree to `1e-9` of the response scale.
pub fn driven_response<T: Real>(g: T, drive: RampProtocol<T>, t_end: T, dt: T) -> Result<DrivenResponse<T>> {
    const OP: &str = "driven_response";
    if !matches!(drive.kind(), RampKind::SinusoidalDrive | RampKind::Constant) {
        return Err(Error::invalid(OP, "drive must be sinusoidal_drive or constant"));
    }
    if !(dt > T::zero()) || !(t_end >= T::zero()) || !t_end.is_finite() {
        return Err(Error::invalid(OP, "need dt > 0 and finite t_end >= 0"));
    }
    let omega = pair_gap(g);
    let dg = move |t: T| g - drive.value_unchecked(t);
    let n_out = (t_end / dt).round().to_usize().unwrap_or(0) + 1;
    // start with about 40 steps per period
    let mut sub = ((dt * omega / T::lit(0.15)).ceil().to_usize().unwrap_or(1)).max(1);
    let mut prev = rk4_run(omega, &dg, n_out, dt, sub);
    let mut converged = false;
    for _ in 0..8 {
        sub *= 2;
        let next = rk4_run(omega, &dg, n_out, dt, sub);
        let scale = next.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let change = prev
            .iter()
            .zip(&next)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        prev = next;
        if change <= T::lit(1e-9) * scale.max(T::min_positive_value()) || scale == T::zero() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::IntegrationFailure {
            op: OP,
            k: 0.0,
            msg: "oscillator step did not converge".into(),
        });
    }
    let half_g = g / T::lit(2.0);
    let signal = Signal::new(T::zero(), dt, prev)?;
    let zz = Signal::new(T::zero(), dt, signal.values.iter().map(|&x| half_g * x).collect())?;
    let delta_g = Signal::new(
        T::zero(),
        dt,
        (0..n_out).map(|i| dg(T::from_usize_lossy(i) * dt)).collect(),
    )?;
    Ok(DrivenResponse {
        g,
        omega,
        drive,
        delta_g,
        signal,
        zz_prediction: zz,
        step: dt / T::from_usize_lossy(sub),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    #[test]
    fn coefficients_at_zero_and_half() {
        let c = pair_coefficients(0.0f64);
        assert_eq!((c.omega_b, c.t_b, c.t_b_prime), (8.0, 0.0, 0.0));
        let c = pair_coefficients(0.5f64);
        assert_eq!((c.omega_b, c.t_b, c.t_b_prime), (7.9375, 0.03125, 0.03125));
        assert_eq!(c.contributions.len(), 7);
        assert!(c.valid);
        assert!(!pair_coefficients(1.2f64).valid);
    }

    #[test]
    fn exact_partial_terms() {
        let g = Q::new(1, 1);
        let c = pair_coefficients(g);
        assert_eq!(c.contributions[1].value, Q::new(-1, 2));
        let g = Q::new(3, 7);
        let c = pair_coefficients(g);
        let g2 = g * g;
        let want = [
            Q::from(8) + g2 * Q::new(3, 8),
            -g2 / Q::from(2),
            -g2 / Q::from(8),
            -g2 / Q::from(8),
            g2 / Q::from(4),
            g2 / Q::from(16),
            g2 / Q::from(16),
        ];
        for (have, want) in c.contributions.iter().zip(want) {
            assert_eq!(have.value, want, "{}", have.label);
        }
        assert_eq!(c.omega_b, Q::from(8) - g2 / Q::from(4));
        assert_eq!(c.t_b, g2 / Q::from(8));
        assert_eq!(c.t_b_prime, g2 / Q::from(8));
        assert_eq!(pair_gap(g), Q::from(8) - g2 * Q::new(3, 4));
        let k = kink_constants(Q::new(1, 2));
        assert_eq!(k.omega_gamma, Q::new(193, 32));
        assert_eq!(k.t_gamma_prime, Q::new(3, 64));
    }

    #[test]
    fn gap_and_dispersion() {
        assert_eq!(pair_gap(0.0f64), 8.0);
        assert_eq!(pair_gap(Q::new(1, 2)), Q::new(125, 16));
        assert!((pair_gap(1.12f64) - 7.0592).abs() < 1e-12);
        assert!((pair_dispersion(0.5f64, 0.0) - 7.8125).abs() < 1e-15);
        assert!((pair_dispersion(0.5f64, std::f64::consts::PI) - 7.9375).abs() < 1e-15);
        for k in 0..20 {
            assert_eq!(pair_dispersion(0.0f64, k as f64 * 0.3), 8.0);
        }
    }

    #[test]
    fn trains() {
        assert_eq!(train_energy::<i64>(0), 0);
        assert_eq!(train_energy::<i64>(1), 6);
        assert_eq!(train_energy::<i64>(2), 8);
        assert_eq!(train_energy::<i64>(4) - train_energy::<i64>(2), 4);
        assert_eq!(train_energy::<i64>(2), pair_gap(0i64));
    }

    #[test]
    fn undriven_stays_at_rest() {
        let r = driven_response(0.3f64, RampProtocol::constant(0.3), 10.0, 0.01).unwrap();
        assert!(r.signal.values.iter().all(|&x| x == 0.0));
        let bad = RampProtocol::linear(1.0, 8.0, 0.0).unwrap();
        assert!(driven_response(0.3f64, bad, 10.0, 0.01).is_err());
    }

    #[test]
    fn static_shift_averages() {
        // field lowered by 0.01 permanently
        let g = 0.5f64;
        let r = driven_response(g, RampProtocol::constant(g - 0.01), 400.0, 0.01).unwrap();
        let mean = r.signal.values.iter().sum::<f64>() / r.signal.len() as f64;
        let want = -2.0 * 0.01 / r.omega;
        assert!((mean - want).abs() < 0.01 * want.abs(), "{mean} vs {want}");
    }

    #[test]
    fn resonant_closed_form() {
        // δg = g - g(t) = 0.005 sin(8t) at ω = 8
        let a = 0.005;
        let drive = RampProtocol::sinusoidal_drive(0.0f64, -a, 8.0, std::f64::consts::TAU).unwrap();
        let r = driven_response(0.0, drive, 12.0, 0.005).unwrap();
        for i in 0..r.signal.len() {
            let t = r.signal.time(i);
            let want = if t <= std::f64::consts::TAU {
                a * t * (8.0 * t).cos() - a / 8.0 * (8.0 * t).sin()
            } else {
                let t1 = std::f64::consts::TAU;
                // free oscillation continuing from the end of the drive
                let x1 = a * t1;
                x1 * (8.0 * (t - t1)).cos()
            };
            assert!((r.signal.values[i] - want).abs() < 1e-8, "t={t}");
        }
        assert!((r.final_amplitude() - a * std::f64::consts::TAU).abs() < 1e-3 * a);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("t,delta_g,x,zz_prediction\n"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn sums_match_closed_forms(num in -400i64..400, den in 1i64..200) {
                let g = Q::new(num, den);
                let c = pair_coefficients(g);
                let g2 = g * g;
                prop_assert_eq!(c.omega_b, Q::from(8) - g2 / Q::from(4));
                prop_assert_eq!(c.t_b, g2 / Q::from(8));
                prop_assert_eq!(c.t_b_prime, g2 / Q::from(8));
            }

            #[test]
            fn band_minimum_at_zero(g in 0.01f64..1.0, k in -3.2f64..3.2) {
                prop_assert!(pair_dispersion(g, k) - pair_dispersion(g, 0.0) >= -1e-14);
            }

            #[test]
            fn free_energy_conserved(g in 0.0f64..0.9, amp in 0.001f64..0.05) {
                let w = pair_gap(g);
                let drive = RampProtocol::sinusoidal_drive(g, amp, w, 3.0).unwrap();
                let r = driven_response(g, drive, 20.0, 0.002).unwrap();
                let dt = r.signal.dt;
                let start = (3.0 / dt) as usize + 2;
                let energy = |i: usize| {
                    let x = r.signal.values[i];
                    let v = (r.signal.values[i + 1] - r.signal.values[i - 1]) / (2.0 * dt);
                    v * v + w * w * x * x
                };
                let e0 = energy(start);
                let scale = (amp * w).powi(2) * 9.0;
                for i in (start..r.signal.len() - 1).step_by(97) {
                    // central difference error dominates; energy itself is exact
                    prop_assert!((energy(i) - e0).abs() < 1e-4 * scale.max(e0));
                }
            }
        }
    }
}
