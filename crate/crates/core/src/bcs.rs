//! Self-consistent BCS theory of the frustrated chain (`J2 = 1`) in the kink
//! representation.
//!
//! The Bogoliubov Hamiltonian of the kink fermions is
//! `H_k = 2(3 − 4ρ) − 2(g − 4t_f) cos k`, `D_k = −2(g + 4Δ) sin k`, and the
//! mean fields are `ρ = ⟨v²⟩`, `t_f = ⟨v² cos k⟩`, `Δ = −⟨u v sin k⟩`
//! averaged over the Brillouin zone.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{bisect, golden_max};
use crate::pairmodel::{kink_constants, pair_gap};
use crate::protocols::MomentumGrid;
use crate::scalar::Real;

/// Default bracket for the critical-field search.
pub const CRITICAL_BRACKET: (f64, f64) = (2.2, 2.7);
/// Step of the five-point derivative stencil in `g`.
pub const DERIVATIVE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcsState<T> {
    pub g: T,
    pub rho: T,
    pub delta: T,
    pub t_f: T,
    pub e0_per_site: T,
    pub residual: T,
    pub iterations: usize,
    pub n_k: usize,
}

impl<T: Real> BcsState<T> {
    pub const CSV_HEADER: &'static str = "g,rho,Delta,t_f,E0,residual,iterations";

    fn fields(&self) -> [T; 3] {
        [self.rho, self.delta, self.t_f]
    }

    /// `(H_k, D_k)`.
    pub fn bdg(&self, k: T) -> (T, T) {
        bdg(self.g, &self.fields(), k)
    }

    /// `ω_k = sqrt(H_k² + D_k²)`.
    pub fn omega(&self, k: T) -> T {
        let (h, d) = self.bdg(k);
        h.hypot(d)
    }

    /// Minimum of `ω_k` over the zone.
    pub fn min_omega(&self) -> T {
        let n = 2048;
        let (best, _) = (0..=n)
            .map(|j| T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(n))
            .map(|k| (k, self.omega(k)))
            .fold(
                (T::zero(), T::infinity()),
                |acc, (k, w)| if w < acc.1 { (k, w) } else { acc },
            );
        let width = T::PI() / T::from_usize_lossy(n);
        let lo = (best - width).max(T::zero());
        let hi = (best + width).min(T::PI());
        let k = golden_max(|k| -self.omega(k), lo, hi, T::epsilon().sqrt() * T::lit(1e-3));
        self.omega(k).min(self.omega(best))
    }
}

fn bdg<T: Real>(g: T, x: &[T; 3], k: T) -> (T, T) {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let h = two * (T::lit(3.0) - four * x[0]) - two * (g - four * x[2]) * k.cos();
    let d = -two * (g + four * x[1]) * k.sin();
    (h, d)
}

/// `E/N = −2 + 6ρ − 2g(t_f + Δ) − 4(ρ² + Δ² − t_f²)`.
pub fn energy_per_site<T: Real>(g: T, rho: T, delta: T, t_f: T) -> T {
    -T::lit(2.0) + T::lit(6.0) * rho
        - T::lit(2.0) * g * (t_f + delta)
        - T::lit(4.0) * (rho * rho + delta * delta - t_f * t_f)
}

/// Midpoint rule on `(0, π)`; the integrands are even in `k`, so this is
/// the periodic trapezoid rule on the full zone with `2m` nodes.
struct Quadrature<T> {
    cos: Vec<T>,
    sin: Vec<T>,
}

impl<T: Real> Quadrature<T> {
    fn new(n_k: usize) -> Self {
        let m = n_k / 2;
        let (sin, cos) = (0..m)
            .map(|j| (T::from_usize_lossy(j) + T::lit(0.5)) * T::PI() / T::from_usize_lossy(m))
            .map(|k| k.sin_cos())
            .unzip();
        Self { cos, sin }
    }

    /// Right-hand side of the self-consistency map `(ρ, Δ, t_f)`.
    fn map(&self, g: T, x: &[T; 3]) -> [T; 3] {
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let h0 = two * (T::lit(3.0) - four * x[0]);
        let hc = two * (g - four * x[2]);
        let dc = -two * (g + four * x[1]);
        let mut acc = [T::zero(); 3];
        for (&c, &s) in self.cos.iter().zip(&self.sin) {
            let h = h0 - hc * c;
            let d = dc * s;
            let w = h.hypot(d);
            let v2 = (T::one() - h / w) / two;
            let uv = d / (two * w);
            acc[0] += v2;
            acc[1] -= uv * s;
            acc[2] += v2 * c;
        }
        let m = T::from_usize_lossy(self.cos.len());
        acc.map(|a| a / m)
    }
}

fn max_abs_diff<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    (0..3).fold(T::zero(), |m, i| m.max((a[i] - b[i]).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcsOptions<T> {
    pub n_k: usize,
    pub tol: T,
    pub max_iter: usize,
    pub alpha: T,
    /// Mixing used when `alpha` fails to converge.
    pub fallback_alpha: T,
}

impl<T: Real> Default for BcsOptions<T> {
    fn default() -> Self {
        Self {
            n_k: 4096,
            tol: T::epsilon() * T::lit(1000.0),
            max_iter: 20_000,
            alpha: T::lit(0.5),
            fallback_alpha: T::lit(0.1),
        }
    }
}

/// Solve with default mixing and a cold start.
pub fn solve_self_consistent<T: Real>(g: T, n_k: usize, tol: T, max_iter: usize) -> Result<BcsState<T>> {
    let opts = BcsOptions {
        n_k,
        tol,
        max_iter,
        ..Default::default()
    };
    solve_with(g, &opts, None)
}

/// Damped fixed-point iteration `x ← (1 − α) x + α F(x)`, started from
/// `init` or from [`initial_guess`]. The returned fields are `F(x)` of the
/// last iterate, so `residual` bounds their own mismatch.
pub fn solve_with<T: Real>(g: T, opts: &BcsOptions<T>, init: Option<&BcsState<T>>) -> Result<BcsState<T>> {
    const OP: &str = "solve_self_consistent";
    if opts.n_k < 64 || opts.n_k % 2 != 0 {
        return Err(Error::invalid(OP, "n_k must be even and at least 64"));
    }
    if !(opts.tol > T::zero()) || !g.is_finite() || g < T::zero() {
        return Err(Error::invalid(OP, "need tol > 0 and finite g >= 0"));
    }
    let quad = Quadrature::new(opts.n_k);
    let x0 = match init {
        Some(s) => s.fields(),
        None => initial_guess(g, &quad, opts)?,
    };
    let mut last = T::infinity();
    let mut total = 0;
    for alpha in [opts.alpha, opts.fallback_alpha] {
        match iterate(g, &quad, x0, alpha, opts.tol, opts.max_iter) {
            Ok((x, residual, it)) => {
                return Ok(BcsState {
                    g,
                    rho: x[0],
                    delta: x[1],
                    t_f: x[2],
                    e0_per_site: energy_per_site(g, x[0], x[1], x[2]),
                    residual,
                    iterations: total + it,
                    n_k: opts.n_k,
                })
            }
            Err(r) => {
                last = r;
                total += opts.max_iter;
            }
        }
    }
    Err(Error::NoConvergence {
        op: OP,
        iterations: total,
        residual: last.to_f64_lossy(),
    })
}

fn iterate<T: Real>(
    g: T,
    quad: &Quadrature<T>,
    mut x: [T; 3],
    alpha: T,
    tol: T,
    max_iter: usize,
) -> std::result::Result<([T; 3], T, usize), T> {
    let mut r = T::infinity();
    for it in 0..max_iter {
        let mut fx = quad.map(g, &x);
        // Δ → −Δ is a gauge copy; keep the Δ ≥ 0 branch
        if fx[1] < T::zero() {
            fx[1] = -fx[1];
        }
        r = max_abs_diff(&fx, &x);
        if !r.is_finite() {
            return Err(r);
        }
        if r < tol {
            return Ok((fx, r, it + 1));
        }
        for i in 0..3 {
            x[i] = (T::one() - alpha) * x[i] + alpha * fx[i];
        }
    }
    Err(r)
}

/// Start point for a cold solve: the small-field expansion for `g < 1`,
/// otherwise a coarse continuation in steps of at most 0.25 from `g = 0.5`.
fn initial_guess<T: Real>(g: T, quad: &Quadrature<T>, opts: &BcsOptions<T>) -> Result<[T; 3]> {
    let p = perturbative_state(g.min(T::lit(0.9)));
    let mut x = [p.rho, p.delta, p.t_f];
    if g < T::one() {
        return Ok(x);
    }
    let start = T::lit(0.5);
    let steps = ((g - start) / T::lit(0.25)).ceil().to_usize().unwrap_or(1).max(1);
    let coarse_tol = opts.tol.max(T::lit(1e-6));
    for s in 0..steps {
        let gs = start + (g - start) * T::from_usize_lossy(s) / T::from_usize_lossy(steps);
        if let Ok((fx, _, _)) = iterate(gs, quad, x, opts.alpha, coarse_tol, opts.max_iter) {
            x = fx;
        }
    }
    Ok(x)
}

/// Residual of `state` re-evaluated on `n_k` quadrature nodes.
pub fn residual<T: Real>(state: &BcsState<T>, n_k: usize) -> T {
    let quad = Quadrature::new(n_k.max(2));
    let fx = quad.map(state.g, &state.fields());
    max_abs_diff(&fx, &state.fields())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinkMode<T> {
    pub k: T,
    pub u: T,
    pub v: T,
    pub omega: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkDispersion<T> {
    pub g: T,
    pub samples: Vec<KinkMode<T>>,
}

/// Positive-frequency eigenvectors of `[[H_k, D_k], [D_k, −H_k]]` on every
/// grid node, with `u ≥ 0`.
pub fn dispersion<T: Real>(state: &BcsState<T>, grid: &MomentumGrid<T>) -> KinkDispersion<T> {
    let two = T::lit(2.0);
    let samples = grid
        .values
        .iter()
        .map(|&k| {
            let (h, d) = state.bdg(k);
            let omega = h.hypot(d);
            let (u, v) = if omega == T::zero() {
                (T::one(), T::zero())
            } else {
                let u = ((T::one() + h / omega) / two).max(T::zero()).sqrt();
                let v = ((T::one() - h / omega) / two).max(T::zero()).sqrt();
                (u, v.copysign(d))
            };
            KinkMode { k, u, v, omega }
        })
        .collect();
    KinkDispersion { g: state.g, samples }
}

/// Small-field closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeState<T> {
    pub g: T,
    pub rho: T,
    pub delta: T,
    pub t_f: T,
    pub omega_gamma: T,
    pub t_gamma: T,
    pub t_gamma_prime: T,
    /// The expansion is trusted for `g < 1`.
    pub valid: bool,
}

pub fn perturbative_state<T: Real>(g: T) -> PerturbativeState<T> {
    let c = kink_constants(g);
    PerturbativeState {
        g,
        rho: g * g / T::lit(32.0),
        delta: g / T::lit(8.0),
        t_f: T::zero(),
        omega_gamma: c.omega_gamma,
        t_gamma: c.t_gamma,
        t_gamma_prime: c.t_gamma_prime,
        valid: g < T::one(),
    }
}

impl<T: Real> PerturbativeState<T> {
    /// `v_k = −(g/4) sin k − (g²/24) sin 2k`.
    pub fn v(&self, k: T) -> T {
        -self.g / T::lit(4.0) * k.sin() - self.g * self.g / T::lit(24.0) * (T::lit(2.0) * k).sin()
    }

    pub fn u(&self, k: T) -> T {
        let v = self.v(k);
        (T::one() - v * v).max(T::zero()).sqrt()
    }

    /// `ω_k = ω_γ − 2 t_γ cos k − 2 t'_γ cos 2k`.
    pub fn omega(&self, k: T) -> T {
        let two = T::lit(2.0);
        self.omega_gamma - two * self.t_gamma * k.cos() - two * self.t_gamma_prime * (two * k).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcsDerivative<T> {
    pub g: T,
    pub d_delta: T,
    pub d_rho: T,
    pub d_tf: T,
}

impl<T: Real> BcsDerivative<T> {
    pub const CSV_HEADER: &'static str = "g,dDelta_dg,dRho_dg,dTf_dg";
}

/// Five-point central derivative of the mean fields at `g`, each stencil
/// solve continued from `at`.
pub fn derivative<T: Real>(at: &BcsState<T>, opts: &BcsOptions<T>, h: T) -> Result<BcsDerivative<T>> {
    let mut f = [[T::zero(); 3]; 4];
    for (slot, m) in [-2.0, -1.0, 1.0, 2.0].into_iter().enumerate() {
        f[slot] = solve_with(at.g + T::lit(m) * h, opts, Some(at))?.fields();
    }
    let d = |i: usize| (f[0][i] - T::lit(8.0) * f[1][i] + T::lit(8.0) * f[2][i] - f[3][i]) / (T::lit(12.0) * h);
    Ok(BcsDerivative {
        g: at.g,
        d_rho: d(0),
        d_delta: d(1),
        d_tf: d(2),
    })
}

/// Solves every field in `gs`. The list is cut into contiguous chunks of
/// `chunk` points that run in parallel; inside a chunk each solve continues
/// from its predecessor and the first point of a chunk starts cold, so the
/// result does not depend on the number of workers.
pub fn sweep<T: Real>(gs: &[T], opts: &BcsOptions<T>, chunk: usize) -> Result<Vec<BcsState<T>>> {
    let chunk = chunk.max(1);
    let parts: Vec<Result<Vec<BcsState<T>>>> = gs
        .par_chunks(chunk)
        .map(|part| {
            let mut out: Vec<BcsState<T>> = Vec::with_capacity(part.len());
            for &g in part {
                let s = solve_with(g, opts, out.last())?;
                out.push(s);
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(gs.len());
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

/// Sweep followed by stencil derivatives at every point.
pub fn sweep_derivatives<T: Real>(gs: &[T], opts: &BcsOptions<T>, chunk: usize) -> Result<Vec<BcsDerivative<T>>> {
    let states = sweep(gs, opts, chunk)?;
    states
        .par_iter()
        .map(|s| derivative(s, opts, T::lit(DERIVATIVE_STEP)))
        .collect()
}

pub fn write_sweep_csv<T: Real, W: Write>(states: &[BcsState<T>], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", BcsState::<T>::CSV_HEADER)?;
    for s in states {
        writeln!(
            w,
            "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.3e},{}",
            s.g, s.rho, s.delta, s.t_f, s.e0_per_site, s.residual, s.iterations
        )?;
    }
    Ok(())
}

pub fn write_derivative_csv<T: Real, W: Write>(rows: &[BcsDerivative<T>], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", BcsDerivative::<T>::CSV_HEADER)?;
    for r in rows {
        writeln!(w, "{},{:.12e},{:.12e},{:.12e}", r.g, r.d_delta, r.d_rho, r.d_tf)?;
    }
    Ok(())
}

/// Field of steepest change of `Δ(g)`: stencil derivatives on `n_g` grid
/// points in `[g_lo, g_hi]`, then golden-section refinement between the
/// neighbours of the grid maximum.
pub fn locate_critical<T: Real>(g_lo: T, g_hi: T, n_g: usize) -> Result<T> {
    locate_critical_with(g_lo, g_hi, n_g, &BcsOptions::default())
}

pub fn locate_critical_with<T: Real>(g_lo: T, g_hi: T, n_g: usize, opts: &BcsOptions<T>) -> Result<T> {
    const OP: &str = "locate_critical";
    if n_g < 3 || !(g_hi > g_lo) || g_lo < T::zero() {
        return Err(Error::invalid(OP, "need n_g >= 3 and 0 <= g_lo < g_hi"));
    }
    let h = T::lit(DERIVATIVE_STEP);
    let step = (g_hi - g_lo) / T::from_usize_lossy(n_g - 1);
    let gs: Vec<T> = (0..n_g).map(|i| g_lo + step * T::from_usize_lossy(i)).collect();
    let states = sweep(&gs, opts, n_g)?;
    let slopes: Vec<T> = states
        .par_iter()
        .map(|s| derivative(s, opts, h).map(|d| d.d_delta.abs()))
        .collect::<Result<_>>()?;
    let best = (0..n_g)
        .max_by(|&a, &b| slopes[a].partial_cmp(&slopes[b]).unwrap())
        .unwrap();
    if best == 0 || best == n_g - 1 {
        return Err(Error::invalid(OP, "bracket too narrow: peak on the boundary"));
    }
    let anchor = states[best];
    let mut failure = None;
    let g = golden_max(
        |g| {
            let s = match solve_with(g, opts, Some(&anchor)) {
                Ok(s) => s,
                Err(e) => {
                    failure.get_or_insert(e);
                    return T::zero();
                }
            };
            match derivative(&s, opts, h) {
                Ok(d) => d.d_delta.abs(),
                Err(e) => {
                    failure.get_or_insert(e);
                    T::zero()
                }
            }
        },
        gs[best - 1],
        gs[best + 1],
        T::lit(1e-7),
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(g),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossoverMethod {
    /// Small-field kink dispersion.
    Perturbative,
    /// Self-consistent kink dispersion.
    FullBcs,
}

/// Root of `ω(g) − 2 min_k ω_k(g)` on `[0.5, 2]`, where `ω` is the pair gap.
pub fn locate_crossover<T: Real>(method: CrossoverMethod) -> Result<T> {
    locate_crossover_in(method, T::lit(0.5), T::lit(2.0))
}

pub fn locate_crossover_in<T: Real>(method: CrossoverMethod, lo: T, hi: T) -> Result<T> {
    const OP: &str = "locate_crossover";
    let opts = BcsOptions::default();
    let mut failure = None;
    let f = |g: T| -> T {
        let w0 = match method {
            CrossoverMethod::Perturbative => perturbative_state(g).omega(T::zero()),
            CrossoverMethod::FullBcs => match solve_with(g, &opts, None) {
                Ok(s) => s.min_omega(),
                Err(e) => {
                    failure.get_or_insert(e);
                    T::nan()
                }
            },
        };
        pair_gap(g) - T::lit(2.0) * w0
    };
    let tol = match method {
        CrossoverMethod::Perturbative => T::zero(),
        CrossoverMethod::FullBcs => T::lit(1e-7),
    };
    let root = bisect(f, lo, hi, tol);
    if let Some(e) = failure {
        return Err(e);
    }
    root.ok_or_else(|| Error::invalid(OP, "no sign change in the bracket"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(g: f64) -> BcsState<f64> {
        solve_self_consistent(g, 4096, 1e-13, 20_000).unwrap()
    }

    #[test]
    fn zero_field_vacuum() {
        let s = solve(0.0);
        assert_eq!((s.rho, s.delta, s.t_f), (0.0, 0.0, 0.0));
        assert_eq!(s.e0_per_site, -2.0);
        let grid = MomentumGrid::infinite(64).unwrap();
        assert!(dispersion(&s, &grid).samples.iter().all(|m| m.omega == 6.0));
    }

    #[test]
    fn small_field_matches_expansion() {
        for g in [0.05, 0.1, 0.2, 0.4] {
            let s = solve(g);
            assert!((s.delta - g / 8.0).abs() <= 0.01 * g * g * g, "g={g}");
            assert!((s.rho - g * g / 32.0).abs() <= 0.001 * g.powi(4), "g={g}");
            assert!(s.t_f.abs() <= g.powi(3));
            assert!(s.residual < 1e-13);
        }
    }

    #[test]
    fn dispersion_checks() {
        let s = solve(0.5);
        let w0 = s.omega(0.0);
        assert!((w0 - 4.9375).abs() < 0.5f64.powi(3), "{w0}");
        let s = solve(0.3);
        let grid = MomentumGrid {
            values: vec![0.2, -0.2],
            ..MomentumGrid::infinite(2).unwrap()
        };
        let d = dispersion(&s, &grid);
        let p = perturbative_state(0.3);
        assert!((d.samples[0].v - p.v(0.2)).abs() < 0.3f64.powi(3));
        assert_eq!(d.samples[0].v, -d.samples[1].v);
        assert_eq!(d.samples[0].u, d.samples[1].u);
        let m = d.samples[0];
        assert!((m.u * m.u + m.v * m.v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn perturbative_constants() {
        let p = perturbative_state(0.5f64);
        assert_eq!((p.omega_gamma, p.t_gamma, p.t_gamma_prime), (6.03125, 0.5, 0.046875));
        assert_eq!(perturbative_state(0.4f64).delta, 0.05);
        let z = perturbative_state(0.0f64);
        assert_eq!((z.rho, z.delta, z.omega(1.0), z.v(1.0)), (0.0, 0.0, 6.0, 0.0));
        assert!(!perturbative_state(1.5f64).valid);
    }

    #[test]
    fn refined_residual_and_branch() {
        for g in [0.3, 1.2, 2.0, 3.0] {
            let s = solve(g);
            assert!(residual(&s, 4 * 4096) < 1e-12, "g={g}");
            assert!(s.delta >= 0.0 && (0.0..=1.0).contains(&s.rho));
        }
    }

    #[test]
    fn sweep_shapes() {
        let gs: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
        let opts = BcsOptions::default();
        let a = sweep(&gs, &opts, 5).unwrap();
        let b = sweep(&gs, &opts, 21).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.delta - y.delta).abs() < 1e-11);
        }
        for w in a.windows(2) {
            assert!(w[1].rho > w[0].rho && w[1].delta > w[0].delta);
            assert!(w[1].e0_per_site < w[0].e0_per_site);
        }
        for w in a.windows(3) {
            let second = w[2].e0_per_site - 2.0 * w[1].e0_per_site + w[0].e0_per_site;
            assert!(second < 1e-9);
        }
        let mut csv = Vec::new();
        write_sweep_csv(&a, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("g,rho,Delta,t_f,E0,residual,iterations\n"));
        assert_eq!(csv.lines().count(), 22);
    }

    #[test]
    fn critical_point_and_brackets() {
        let g = locate_critical(2.2f64, 2.7, 51).unwrap();
        assert!((g - 2.48135).abs() < 0.005, "{g}");
        let shifted = locate_critical(2.3f64, 2.6, 31).unwrap();
        assert!((g - shifted).abs() < 1e-3);
        let coarse = locate_critical(2.2f64, 2.7, 21).unwrap();
        assert!((g - coarse).abs() < 0.01);
        assert!(locate_critical(2.55f64, 2.7, 11).is_err());
    }

    #[test]
    fn crossovers() {
        let p: f64 = locate_crossover(CrossoverMethod::Perturbative).unwrap();
        assert!((p - (8.0 - 4.0 * 3f64.sqrt())).abs() < 4.0 * f64::EPSILON);
        let f: f64 = locate_crossover(CrossoverMethod::FullBcs).unwrap();
        assert!((1.05..=1.15).contains(&f), "{f}");
        assert!(locate_crossover_in::<f64>(CrossoverMethod::Perturbative, 1.5, 2.0).is_err());
    }
}
