//! Post-processing of sampled observables: spectral peaks, damped-sinusoid
//! fits with quality factors, and log-log power-law fits.
//!
//! Frequencies are angular (`cos(ω t)` has frequency `ω`).

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::optimize::golden_max;
use crate::scalar::{ordered_sum, Real};

/// Minimum sample count for any spectral estimate or fit.
pub const MIN_SAMPLES: usize = 16;

/// Uniformly sampled real time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal<T> {
    pub t0: T,
    pub dt: T,
    pub values: Vec<T>,
}

impl<T: Real> Signal<T> {
    pub fn new(t0: T, dt: T, values: Vec<T>) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::invalid("Signal::new", "dt must be positive"));
        }
        Ok(Self { t0, dt, values })
    }

    /// Samples `f` at `t0 + i dt`, `i < n`.
    pub fn sample<F: Fn(T) -> T>(t0: T, dt: T, n: usize, f: F) -> Result<Self> {
        let values = (0..n).map(|i| f(t0 + T::from_usize_lossy(i) * dt)).collect();
        Self::new(t0, dt, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> T {
        self.t0 + T::from_usize_lossy(i) * self.dt
    }

    /// Span covered by the samples, `n dt`.
    pub fn duration(&self) -> T {
        T::from_usize_lossy(self.len()) * self.dt
    }

    /// Samples with `t_from <= t <= t_to`.
    pub fn window(&self, t_from: T, t_to: T) -> Result<Self> {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| {
                let t = self.time(i);
                t >= t_from && t <= t_to
            })
            .collect();
        let first = *idx
            .first()
            .ok_or_else(|| Error::invalid("Signal::window", "empty window"))?;
        Self::new(self.time(first), self.dt, idx.iter().map(|&i| self.values[i]).collect())
    }

    fn mean(&self) -> T {
        ordered_sum(self.values.iter().copied()) / T::from_usize_lossy(self.len())
    }

    fn require_samples(&self, op: &'static str) -> Result<()> {
        if self.len() < MIN_SAMPLES {
            return Err(Error::invalid(
                op,
                format!("need at least {MIN_SAMPLES} samples, got {}", self.len()),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(op, "non-finite sample"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Taper {
    None,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    pub taper: Taper,
    /// Zero padding factor of the coarse FFT grid.
    pub padding: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            taper: Taper::None,
            padding: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak<T> {
    /// Angular frequency.
    pub frequency: T,
    /// Amplitude of the matching cosine component.
    pub amplitude: T,
}

/// Mean-removed, tapered samples plus the coherent gain of the taper.
struct Prepared<T> {
    x: Vec<T>,
    gain: T,
    dt: T,
}

impl<T: Real> Prepared<T> {
    fn new(signal: &Signal<T>, taper: Taper) -> Self {
        let mean = signal.mean();
        let n = signal.len();
        let w: Vec<T> = match taper {
            Taper::None => vec![T::one(); n],
            Taper::Hann => (0..n)
                .map(|j| {
                    let arg = T::TAU() * T::from_usize_lossy(j) / T::from_usize_lossy(n - 1);
                    T::lit(0.5) * (T::one() - arg.cos())
                })
                .collect(),
        };
        let x = signal.values.iter().zip(&w).map(|(&v, &wj)| (v - mean) * wj).collect();
        Self {
            x,
            gain: ordered_sum(w.iter().copied()),
            dt: signal.dt,
        }
    }

    /// `|sum_j x_j exp(-i ω j dt)|`, evaluated with a rotating phasor.
    fn dtft_abs(&self, omega: T) -> T {
        let step = Complex::from_polar(T::one(), -omega * self.dt);
        let mut ph = Complex::new(T::one(), T::zero());
        let mut acc = Complex::new(T::zero(), T::zero());
        for (j, &xj) in self.x.iter().enumerate() {
            if j % 1024 == 0 {
                // re-anchor the phasor to avoid drift
                ph = Complex::from_polar(T::one(), -omega * self.dt * T::from_usize_lossy(j));
            }
            acc = acc + ph * xj;
            ph = ph * step;
        }
        acc.norm()
    }

    fn amplitude(&self, omega: T) -> T {
        T::lit(2.0) * self.dtft_abs(omega) / self.gain
    }

    /// Magnitudes on the zero-padded FFT grid, bins `0..=n_pad/2`, and the
    /// angular bin width.
    fn coarse_spectrum(&self, padding: usize) -> (Vec<T>, T) {
        let n_pad = (self.x.len() * padding.max(1)).next_power_of_two();
        let mut buf: Vec<Complex<T>> = self
            .x
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .chain(std::iter::repeat(Complex::new(T::zero(), T::zero())))
            .take(n_pad)
            .collect();
        FftPlanner::new().plan_fft_forward(n_pad).process(&mut buf);
        let mags = buf[..=n_pad / 2].iter().map(|z| z.norm()).collect();
        (mags, T::TAU() / (T::from_usize_lossy(n_pad) * self.dt))
    }

    /// Parabolic interpolation around `bin`, then golden-section polish on
    /// the exact DTFT within one bin.
    fn refine(&self, mags: &[T], bin: usize, width: T) -> SpectralPeak<T> {
        let mut centre = T::from_usize_lossy(bin);
        if bin > 0 && bin + 1 < mags.len() {
            let (a, b, c) = (mags[bin - 1], mags[bin], mags[bin + 1]);
            let denom = a - T::lit(2.0) * b + c;
            if denom < T::zero() {
                centre += T::lit(0.5) * (a - c) / denom;
            }
        }
        let w0 = centre * width;
        let lo = (w0 - width).max(T::zero());
        let hi = w0 + width;
        let tol = width * T::lit(1e-9);
        let omega = golden_max(|w| self.dtft_abs(w), lo, hi, tol);
        SpectralPeak {
            frequency: omega,
            amplitude: self.amplitude(omega),
        }
    }
}

fn noise_floor<T: Real>(mags: &[T]) -> T {
    let peak = mags.iter().copied().fold(T::zero(), T::max);
    peak * T::lit(1e-12)
}

/// Strongest spectral line (DC excluded) with default options.
pub fn dominant_frequency<T: Real>(signal: &Signal<T>) -> Result<SpectralPeak<T>> {
    dominant_frequency_with(signal, &SpectralOptions::default())
}

pub fn dominant_frequency_with<T: Real>(signal: &Signal<T>, opts: &SpectralOptions) -> Result<SpectralPeak<T>> {
    dominant_in_band(signal, opts, T::zero(), T::infinity())
}

fn dominant_in_band<T: Real>(signal: &Signal<T>, opts: &SpectralOptions, lo: T, hi: T) -> Result<SpectralPeak<T>> {
    signal.require_samples("dominant_frequency")?;
    let prep = Prepared::new(signal, opts.taper);
    let scale = prep.x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(scale > T::zero()) {
        return Err(Error::numerical("dominant_frequency", "no peak: signal is constant"));
    }
    let (mags, width) = prep.coarse_spectrum(opts.padding);
    let best = (1..mags.len())
        .filter(|&i| {
            let w = T::from_usize_lossy(i) * width;
            w >= lo && w <= hi
        })
        .max_by(|&a, &b| mags[a].partial_cmp(&mags[b]).unwrap())
        .ok_or_else(|| Error::numerical("dominant_frequency", "no peak: empty band"))?;
    if mags[best] <= scale * T::lit(1e-9) {
        return Err(Error::numerical("dominant_frequency", "no peak above the noise floor"));
    }
    Ok(prep.refine(&mags, best, width))
}

/// Up to `max_peaks` local maxima of the amplitude spectrum above
/// `rel_threshold` times the strongest line, strongest first. Peaks closer
/// than two resolution widths `2π/duration` are merged.
pub fn spectral_peaks<T: Real>(
    signal: &Signal<T>,
    opts: &SpectralOptions,
    max_peaks: usize,
    rel_threshold: T,
) -> Result<Vec<SpectralPeak<T>>> {
    signal.require_samples("spectral_peaks")?;
    let prep = Prepared::new(signal, opts.taper);
    let (mags, width) = prep.coarse_spectrum(opts.padding);
    let top = mags[1..].iter().copied().fold(T::zero(), T::max);
    if !(top > noise_floor(&mags)) || top == T::zero() {
        return Err(Error::numerical("spectral_peaks", "no peak above the noise floor"));
    }
    let mut candidates: Vec<usize> = (1..mags.len() - 1)
        .filter(|&i| mags[i] >= mags[i - 1] && mags[i] > mags[i + 1] && mags[i] >= rel_threshold * top)
        .collect();
    candidates.sort_by(|&a, &b| mags[b].partial_cmp(&mags[a]).unwrap());
    let resolution = T::TAU() / signal.duration();
    let mut peaks: Vec<SpectralPeak<T>> = Vec::new();
    for bin in candidates {
        let p = prep.refine(&mags, bin, width);
        if peaks
            .iter()
            .all(|q| (q.frequency - p.frequency).abs() > T::lit(2.0) * resolution)
        {
            peaks.push(p);
        }
        if peaks.len() == max_peaks {
            break;
        }
    }
    Ok(peaks)
}

/// Least-squares fit of `A exp(-(t - t0)/τ_D) cos(ω t + φ) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationFit<T> {
    /// Envelope at the first sample.
    pub amplitude: T,
    pub frequency: T,
    /// Phase relative to absolute time `t`.
    pub phase: T,
    pub offset: T,
    /// `1/γ`; infinite for `γ = 0`, negative for a growing envelope.
    pub decay_time: T,
    /// `τ_D / T` with `T = 2π/ω`; infinite when `undamped`.
    pub q: T,
    /// `|τ_D|` exceeds 100 windows.
    pub undamped: bool,
    pub residual_rms: T,
    pub iterations: usize,
}

/// Model `a e^{-γτ} cos(ωτ) + b e^{-γτ} sin(ωτ) + c` in the unit window time
/// `τ = (t - t0)/D`; parameters `[a, b, c, ω D, γ D]`.
fn accumulate<T: Real>(p: &[T; 5], taus: &[T], y: &[T], with_jac: bool) -> (T, [T; 25], [T; 5]) {
    let mut jtj = [T::zero(); 25];
    let mut jtr = [T::zero(); 5];
    let mut cost = T::zero();
    for (&tau, &yi) in taus.iter().zip(y) {
        let env = (-p[4] * tau).exp();
        let (s, c) = (p[3] * tau).sin_cos();
        let osc = p[0] * c + p[1] * s;
        let model = env * osc + p[2];
        let r = yi - model;
        cost += r * r;
        if with_jac {
            let j = [
                env * c,
                env * s,
                T::one(),
                env * tau * (p[1] * c - p[0] * s),
                -tau * env * osc,
            ];
            for a in 0..5 {
                jtr[a] += j[a] * r;
                for b in a..5 {
                    jtj[a * 5 + b] += j[a] * j[b];
                }
            }
        }
    }
    for a in 0..5 {
        for b in 0..a {
            jtj[a * 5 + b] = jtj[b * 5 + a];
        }
    }
    (cost, jtj, jtr)
}

/// Linear least squares for `[a, b, c]` at fixed `ωD`, `γ = 0`.
fn linear_start<T: Real>(omega_d: T, taus: &[T], y: &[T]) -> Option<[T; 3]> {
    let mut m = vec![T::zero(); 9];
    let mut rhs = vec![T::zero(); 3];
    for (&tau, &yi) in taus.iter().zip(y) {
        let (s, c) = (omega_d * tau).sin_cos();
        let basis = [c, s, T::one()];
        for a in 0..3 {
            rhs[a] += basis[a] * yi;
            for b in 0..3 {
                m[a * 3 + b] += basis[a] * basis[b];
            }
        }
    }
    let x = solve_dense(m, rhs, 3)?;
    Some([x[0], x[1], x[2]])
}

/// Fits a damped sinusoid. `f_guess` (angular) must lie within 20% of the
/// true line; the start is the strongest spectral line in that band with
/// zero damping and linear least-squares amplitudes, refined by
/// Levenberg-Marquardt.
pub fn fit_damped_sinusoid<T: Real>(signal: &Signal<T>, f_guess: T) -> Result<OscillationFit<T>> {
    const OP: &str = "fit_damped_sinusoid";
    signal.require_samples(OP)?;
    if !(f_guess > T::zero()) {
        return Err(Error::invalid(OP, "f_guess must be positive"));
    }
    let peak = dominant_in_band(
        signal,
        &SpectralOptions::default(),
        f_guess * T::lit(0.8),
        f_guess * T::lit(1.2),
    )?;
    let n = signal.len();
    let span = signal.dt * T::from_usize_lossy(n - 1);
    let taus: Vec<T> = (0..n)
        .map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(n - 1))
        .collect();
    let y = &signal.values;
    let omega_d = peak.frequency * span;
    let [a, b, c] =
        linear_start(omega_d, &taus, y).ok_or_else(|| Error::numerical(OP, "singular start-up least squares"))?;
    let mut p = [a, b, c, omega_d, T::zero()];
    let (mut cost, mut jtj, mut jtr) = accumulate(&p, &taus, y, true);
    let mut lambda = T::lit(1e-3);
    let mut iterations = 0;
    let mut converged = false;
    let tiny = T::epsilon() * T::lit(16.0);
    // cost at the level of rounding the data themselves
    let floor = tiny * tiny * ordered_sum(y.iter().map(|&v| v * v));
    for it in 0..300 {
        iterations = it + 1;
        let mut lhs = jtj.to_vec();
        for d in 0..5 {
            lhs[d * 5 + d] += lambda * jtj[d * 5 + d].max(T::min_positive_value());
        }
        let Some(step) = solve_dense(lhs, jtr.to_vec(), 5) else {
            lambda = lambda * T::lit(10.0);
            continue;
        };
        let mut trial = p;
        for d in 0..5 {
            trial[d] += step[d];
        }
        let (tc, _, _) = accumulate(&trial, &taus, y, false);
        // a, b and c are measured against the amplitude
        let amp = trial[0].hypot(trial[1]);
        let small_step = (0..5).all(|d| {
            let scale = if d < 3 { trial[d].abs() + amp } else { trial[d].abs() };
            step[d].abs() <= tiny * scale + T::lit(1e-300)
        });
        if tc.is_finite() && tc <= cost {
            let gain = cost - tc;
            p = trial;
            (cost, jtj, jtr) = accumulate(&p, &taus, y, true);
            lambda = (lambda / T::lit(10.0)).max(T::lit(1e-15));
            if gain <= tiny * cost || small_step || cost <= floor {
                converged = true;
                break;
            }
        } else {
            lambda = lambda * T::lit(10.0);
            if small_step || cost <= floor || lambda > T::lit(1e16) {
                converged = true;
                break;
            }
        }
    }
    let residual_rms = (cost / T::from_usize_lossy(n)).sqrt();
    if !converged || !residual_rms.is_finite() {
        return Err(Error::NoConvergence {
            op: OP,
            iterations,
            residual: residual_rms.to_f64_lossy(),
        });
    }
    let frequency = p[3] / span;
    let gamma = p[4] / span;
    let amplitude = p[0].hypot(p[1]);
    // a cos + b sin = A cos(ω s - θ)
    let theta = p[1].atan2(p[0]);
    let mut phase = -theta - frequency * signal.t0;
    phase = phase - T::TAU() * ((phase + T::PI()) / T::TAU()).floor();
    let window = span.max(signal.dt);
    let undamped = gamma.abs() * window < T::lit(0.01);
    let decay_time = if gamma == T::zero() {
        T::infinity()
    } else {
        T::one() / gamma
    };
    let q = if undamped {
        T::infinity()
    } else {
        decay_time * frequency / T::TAU()
    };
    Ok(OscillationFit {
        amplitude,
        frequency,
        phase,
        offset: p[2],
        decay_time,
        q,
        undamped,
        residual_rms,
        iterations,
    })
}

impl<T: Real> OscillationFit<T> {
    /// Model value at absolute time `t` for a fit whose window starts at `t0`.
    pub fn eval(&self, t0: T, t: T) -> T {
        let env = if self.decay_time.is_infinite() {
            T::one()
        } else {
            (-(t - t0) / self.decay_time).exp()
        };
        self.amplitude * env * (self.frequency * t + self.phase).cos() + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T> {
    pub exponent: T,
    pub prefactor: T,
    pub r_squared: T,
}

/// Least squares of `ln y = ln c + e ln x`.
pub fn fit_power_law<T: Real>(xs: &[T], ys: &[T]) -> Result<PowerLawFit<T>> {
    const OP: &str = "fit_power_law";
    if xs.len() != ys.len() {
        return Err(Error::invalid(OP, "xs and ys differ in length"));
    }
    if xs.len() < 3 {
        return Err(Error::invalid(OP, "need at least three points"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(Error::invalid(OP, "data must be positive and finite"));
    }
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    let n = T::from_usize_lossy(xs.len());
    let mx = ordered_sum(lx.iter().copied()) / n;
    let my = ordered_sum(ly.iter().copied()) / n;
    let sxx = ordered_sum(lx.iter().map(|&x| (x - mx) * (x - mx)));
    let sxy = ordered_sum(lx.iter().zip(&ly).map(|(&x, &y)| (x - mx) * (y - my)));
    if sxx == T::zero() {
        return Err(Error::invalid(OP, "xs are all equal"));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss_res = ordered_sum(lx.iter().zip(&ly).map(|(&x, &y)| {
        let r = y - intercept - exponent * x;
        r * r
    }));
    let ss_tot = ordered_sum(ly.iter().map(|&y| (y - my) * (y - my)));
    let r_squared = if ss_tot == T::zero() {
        T::one()
    } else {
        T::one() - ss_res / ss_tot
    };
    Ok(PowerLawFit {
        exponent,
        prefactor: intercept.exp(),
        r_squared,
    })
}
