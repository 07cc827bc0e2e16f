//! Model parameters, field protocols and momentum grids.
//!
//! Time convention: a linear ramp stops at `t = 0` and crosses the critical
//! field at `t_c = -tau_q * (1 - g_target / g_c)`. Scenario output reports
//! both `t` and `t - t_c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Critical field of the NN+NNN chain (`J2 = 1`) used when building ramps.
pub const GC_NNN_CHAIN: f64 = 2.47725;
/// Critical field of the NN chain.
pub const GC_NN_CHAIN: f64 = 1.0;
/// Default node count for infinite-chain momentum quadrature.
pub const DEFAULT_QUADRATURE_NODES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainSize {
    Finite(usize),
    Infinite,
}

/// Couplings of `H = -sum(g sx_n + sz_n sz_{n+1} + J2 sz_n sz_{n+2})`, with the
/// NN coupling fixed to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub g: T,
    pub j2: T,
    pub size: ChainSize,
}

impl<T: Real> ModelParams<T> {
    pub fn new(g: T, j2: T, size: ChainSize) -> Result<Self> {
        if let ChainSize::Finite(l) = size {
            if l == 0 || l % 2 != 0 {
                return Err(Error::invalid(
                    "ModelParams::new",
                    format!("L = {l} must be even and positive"),
                ));
            }
        }
        if !g.is_finite() || !j2.is_finite() {
            return Err(Error::invalid("ModelParams::new", "non-finite coupling"));
        }
        Ok(Self { g, j2, size })
    }

    /// `J2` outside `{0, 1}` is accepted but lies beyond the analysed models.
    pub fn is_extrapolation(&self) -> bool {
        self.j2 != T::zero() && self.j2 != T::one()
    }

    /// Critical field appropriate for this `J2` (exact for the NN chain).
    pub fn default_critical_field(&self) -> T {
        if self.j2 == T::zero() {
            T::lit(GC_NN_CHAIN)
        } else {
            T::lit(GC_NNN_CHAIN)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RampKind {
    Linear,
    SmoothSine,
    Constant,
    SinusoidalDrive,
}

/// Time dependence of the transverse field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RampProtocol<T> {
    /// `g(t) = g_c - g_c (t - t_c) / tau_q`, stopping at `t = 0` where
    /// `g = g_target`.
    Linear {
        g_c: T,
        tau_q: T,
        g_target: T,
    },
    /// `g(t) = g_c [2 - (1 - g_target/(2 g_c))(1 + sin(t/tau_q))]` on
    /// `[-tau_q pi/2, tau_q pi/2]`.
    SmoothSine {
        g_c: T,
        tau_q: T,
        g_target: T,
    },
    Constant {
        g: T,
    },
    /// `g(t) = g + A sin(w t)` on `[0, duration]`, then `g`.
    SinusoidalDrive {
        g: T,
        amplitude: T,
        frequency: T,
        duration: T,
    },
}

impl<T: Real> RampProtocol<T> {
    pub fn linear(g_c: T, tau_q: T, g_target: T) -> Result<Self> {
        if !(tau_q > T::zero()) || !(g_c > T::zero()) {
            return Err(Error::invalid("RampProtocol::linear", "tau_q and g_c must be positive"));
        }
        if g_target > g_c {
            return Err(Error::invalid("RampProtocol::linear", "the ramp must end below g_c"));
        }
        Ok(RampProtocol::Linear { g_c, tau_q, g_target })
    }

    pub fn smooth_sine(g_c: T, tau_q: T, g_target: T) -> Result<Self> {
        if !(tau_q > T::zero()) || !(g_c > T::zero()) {
            return Err(Error::invalid(
                "RampProtocol::smooth_sine",
                "tau_q and g_c must be positive",
            ));
        }
        Ok(RampProtocol::SmoothSine { g_c, tau_q, g_target })
    }

    pub fn constant(g: T) -> Self {
        RampProtocol::Constant { g }
    }

    pub fn sinusoidal_drive(g: T, amplitude: T, frequency: T, duration: T) -> Result<Self> {
        if duration < T::zero() {
            return Err(Error::invalid(
                "RampProtocol::sinusoidal_drive",
                "negative drive duration",
            ));
        }
        Ok(RampProtocol::SinusoidalDrive {
            g,
            amplitude,
            frequency,
            duration,
        })
    }

    pub fn kind(&self) -> RampKind {
        match self {
            RampProtocol::Linear { .. } => RampKind::Linear,
            RampProtocol::SmoothSine { .. } => RampKind::SmoothSine,
            RampProtocol::Constant { .. } => RampKind::Constant,
            RampProtocol::SinusoidalDrive { .. } => RampKind::SinusoidalDrive,
        }
    }

    /// Closed interval on which `ramp_value` is defined.
    pub fn domain(&self) -> (T, T) {
        match *self {
            RampProtocol::Linear { .. } => (T::neg_infinity(), T::zero()),
            RampProtocol::SmoothSine { tau_q, .. } => {
                let half = tau_q * T::FRAC_PI_2();
                (-half, half)
            }
            RampProtocol::Constant { .. } => (T::neg_infinity(), T::infinity()),
            RampProtocol::SinusoidalDrive { .. } => (T::zero(), T::infinity()),
        }
    }

    /// Time at which the field crosses `g_c`, when the protocol has one.
    pub fn critical_time(&self) -> Option<T> {
        match *self {
            RampProtocol::Linear { g_c, tau_q, g_target } => Some(-tau_q * (T::one() - g_target / g_c)),
            RampProtocol::SmoothSine { g_c, tau_q, g_target } => {
                // 2 - (1 - g_t/(2 g_c))(1 + s) = 1
                let s = T::one() / (T::one() - g_target / (T::lit(2.0) * g_c)) - T::one();
                if s.abs() <= T::one() {
                    Some(tau_q * s.asin())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Time at which the ramp reaches its final field.
    pub fn stop_time(&self) -> T {
        match *self {
            RampProtocol::Linear { .. } => T::zero(),
            RampProtocol::SmoothSine { tau_q, .. } => tau_q * T::FRAC_PI_2(),
            RampProtocol::Constant { .. } => T::zero(),
            RampProtocol::SinusoidalDrive { duration, .. } => duration,
        }
    }

    /// Field after the protocol has finished.
    pub fn final_field(&self) -> T {
        match *self {
            RampProtocol::Linear { g_target, .. } | RampProtocol::SmoothSine { g_target, .. } => g_target,
            RampProtocol::Constant { g } | RampProtocol::SinusoidalDrive { g, .. } => g,
        }
    }

    /// `g(t)`.
    pub fn ramp_value(&self, t: T) -> Result<T> {
        let (lo, hi) = self.domain();
        let outside = match self.kind() {
            RampKind::Linear => t > hi,
            _ => t < lo || t > hi,
        };
        if outside || t.is_nan() {
            return Err(Error::OutsideDomain {
                op: "ramp_value",
                t: t.to_f64_lossy(),
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
        Ok(self.value_unchecked(t))
    }

    pub(crate) fn value_unchecked(&self, t: T) -> T {
        match *self {
            RampProtocol::Linear { g_c, tau_q, g_target } => {
                let t_c = -tau_q * (T::one() - g_target / g_c);
                g_c * (T::one() - (t - t_c) / tau_q)
            }
            RampProtocol::SmoothSine { g_c, tau_q, g_target } => {
                let two = T::lit(2.0);
                g_c * (two - (T::one() - g_target / (two * g_c)) * (T::one() + (t / tau_q).sin()))
            }
            RampProtocol::Constant { g } => g,
            RampProtocol::SinusoidalDrive {
                g,
                amplitude,
                frequency,
                duration,
            } => {
                if t <= duration {
                    g + amplitude * (frequency * t).sin()
                } else {
                    g
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Even-parity sector of a periodic chain: `k = ±(2m-1)π/L`.
    Antiperiodic,
    /// Midpoint nodes on `(0, π)` approximating the infinite chain.
    QuadratureInfinite,
}

/// Ordered quasimomenta with quadrature weights.
///
/// For `Antiperiodic` the weights are `2π/L` and cover `(-π, π)`; for
/// `QuadratureInfinite` only positive nodes are stored and the weights sum to
/// `π`. In both cases `sum_{k>0} w_k f(k) ≈ ∫_0^π f(k) dk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid<T> {
    pub values: Vec<T>,
    pub weights: Vec<T>,
    pub boundary: Boundary,
    pub nodes: usize,
}

impl<T: Real> MomentumGrid<T> {
    pub fn antiperiodic(l: usize) -> Result<Self> {
        if l == 0 || l % 2 != 0 {
            return Err(Error::invalid(
                "momentum_grid",
                format!("L = {l} must be even and positive"),
            ));
        }
        let lf = T::from_usize_lossy(l);
        let w = T::TAU() / lf;
        let positive: Vec<T> = (1..=l / 2)
            .map(|m| T::from_usize_lossy(2 * m - 1) * T::PI() / lf)
            .collect();
        let values: Vec<T> = positive
            .iter()
            .rev()
            .map(|&k| -k)
            .chain(positive.iter().copied())
            .collect();
        Ok(Self {
            weights: vec![w; values.len()],
            values,
            boundary: Boundary::Antiperiodic,
            nodes: l,
        })
    }

    pub fn infinite(nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::invalid("momentum_grid", "need at least two quadrature nodes"));
        }
        let n = T::from_usize_lossy(nodes);
        let h = T::PI() / n;
        let values = (0..nodes).map(|j| (T::from_usize_lossy(j) + T::lit(0.5)) * h).collect();
        Ok(Self {
            values,
            weights: vec![h; nodes],
            boundary: Boundary::QuadratureInfinite,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(k, w)` pairs with `k > 0`, ascending.
    pub fn positive(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.values
            .iter()
            .zip(&self.weights)
            .filter(|(k, _)| **k > T::zero())
            .map(|(&k, &w)| (k, w))
    }
}

/// Grid for a chain size: antiperiodic for finite `L`, midpoint quadrature
/// with `nodes` points for the infinite chain.
pub fn momentum_grid<T: Real>(size: ChainSize, nodes: usize) -> Result<MomentumGrid<T>> {
    match size {
        ChainSize::Finite(l) => MomentumGrid::antiperiodic(l),
        ChainSize::Infinite => MomentumGrid::infinite(nodes),
    }
}
