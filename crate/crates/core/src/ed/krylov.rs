//! Krylov-space kernels on complex vectors: the lowest eigenpairs by
//! Lanczos with full reorthogonalisation and locking, and the action of
//! `exp(−i τ H)`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::EdHamiltonian;
use crate::error::{Error, Result};
use crate::linalg::tridiagonal_eigen;
use crate::scalar::Real;

type C<T> = Complex<T>;

const CHUNK: usize = 4096;

/// `⟨a|b⟩`, summed per fixed chunk and then in chunk order.
pub(crate) fn dot<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    let parts: Vec<C<T>> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| {
            x.iter()
                .zip(y)
                .fold(C::new(T::zero(), T::zero()), |s, (p, q)| s + p.conj() * q)
        })
        .collect();
    parts.into_iter().fold(C::new(T::zero(), T::zero()), |s, p| s + p)
}

pub(crate) fn norm<T: Real>(a: &[C<T>]) -> T {
    dot(a, a).re.max(T::zero()).sqrt()
}

/// `y ← y + α x`.
fn axpy<T: Real>(alpha: C<T>, x: &[C<T>], y: &mut [C<T>]) {
    y.par_iter_mut()
        .zip(x.par_iter())
        .with_min_len(CHUNK)
        .for_each(|(yi, xi)| *yi = *yi + alpha * xi);
}

fn scale<T: Real>(alpha: T, x: &mut [C<T>]) {
    x.par_iter_mut().with_min_len(CHUNK).for_each(|v| *v = *v * alpha);
}

/// Two passes of classical Gram-Schmidt against `basis`.
fn orthogonalise<T: Real>(w: &mut [C<T>], basis: &[Vec<C<T>>]) {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            axpy(-c, v, w);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions<T> {
    /// Bound on `‖H v − E v‖` for a normalised `v`.
    pub tol: T,
    pub max_krylov: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10).max(T::epsilon() * T::lit(1e4)),
            max_krylov: 120,
            max_restarts: 60,
            seed: 0x5eed_2024,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair<T> {
    pub value: T,
    pub vector: Vec<C<T>>,
    pub residual: T,
}

fn random_vector<T: Real>(n: usize, seed: u64) -> Vec<C<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let re: f64 = rng.random::<f64>() - 0.5;
            let im: f64 = rng.random::<f64>() - 0.5;
            C::new(T::lit(re), T::lit(im))
        })
        .collect()
}

/// Lowest Ritz pair of one Lanczos run from `start` in the complement of
/// `locked`. Returns `None` if the start vector has no component there.
fn lanczos_run<T: Real>(
    h: &EdHamiltonian<T>,
    g: T,
    start: Vec<C<T>>,
    locked: &[Vec<C<T>>],
    kmax: usize,
    tol: T,
) -> Option<(T, Vec<C<T>>)> {
    let n = h.dim();
    let mut v = start;
    orthogonalise(&mut v, locked);
    let nv = norm(&v);
    if !(nv > T::epsilon()) {
        return None;
    }
    scale(T::one() / nv, &mut v);
    let mut basis = vec![v];
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let mut w = vec![C::new(T::zero(), T::zero()); n];
    let mut ritz: (T, Vec<T>);
    loop {
        let j = basis.len() - 1;
        h.apply(g, &basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        orthogonalise(&mut w, locked);
        orthogonalise(&mut w, &basis);
        let b = norm(&w);
        let m = alpha.len();
        let (vals, vecs) = tridiagonal_eigen(&alpha, &beta);
        let z: Vec<T> = (0..m).map(|i| vecs[i * m]).collect();
        ritz = (vals[0], z);
        let estimate = b * ritz.1[m - 1].abs();
        let scale_h = vals[0].abs().max(vals[m - 1].abs()).max(T::one());
        if estimate < tol * T::lit(0.1) || b <= T::epsilon() * scale_h || m >= kmax || m >= n - locked.len() {
            break;
        }
        beta.push(b);
        let mut next = w.clone();
        scale(T::one() / b, &mut next);
        basis.push(next);
    }
    let mut y = vec![C::new(T::zero(), T::zero()); n];
    for (zi, vi) in ritz.1.iter().zip(&basis) {
        axpy(C::new(*zi, T::zero()), vi, &mut y);
    }
    orthogonalise(&mut y, locked);
    let ny = norm(&y);
    scale(T::one() / ny, &mut y);
    Some((ritz.0, y))
}

/// Up to `m` lowest eigenpairs of `H(g)` in ascending order; fewer if the
/// sector is smaller than `m`. Each pair is found by restarted Lanczos in
/// the orthogonal complement of the pairs already locked.
pub fn lowest_eigenpairs_in<T: Real>(
    h: &EdHamiltonian<T>,
    g: T,
    m: usize,
    opts: &EigenOptions<T>,
) -> Result<Vec<EigenPair<T>>> {
    let n = h.dim();
    let mut locked: Vec<Vec<C<T>>> = Vec::new();
    let mut pairs = Vec::new();
    let mut hy = vec![C::new(T::zero(), T::zero()); n];
    for idx in 0..m.min(n) {
        let mut start = random_vector(n, opts.seed.wrapping_add(idx as u64));
        let mut last = T::infinity();
        let mut done = None;
        for _ in 0..opts.max_restarts {
            let Some((_, y)) = lanczos_run(h, g, start, &locked, opts.max_krylov, opts.tol) else {
                break;
            };
            h.apply(g, &y, &mut hy);
            let value = dot(&y, &hy).re;
            axpy(C::new(-value, T::zero()), &y, &mut hy);
            last = norm(&hy);
            if last < opts.tol {
                done = Some(EigenPair {
                    value,
                    vector: y,
                    residual: last,
                });
                break;
            }
            start = y;
        }
        match done {
            Some(p) => {
                locked.push(p.vector.clone());
                pairs.push(p);
            }
            None if locked.len() + 1 >= n && last.is_infinite() => break,
            None => {
                return Err(Error::NoConvergence {
                    op: "lowest_eigenpairs",
                    iterations: opts.max_restarts,
                    residual: last.to_f64_lossy(),
                })
            }
        }
    }
    pairs.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    Ok(pairs)
}

/// `ψ ← exp(−i τ H(g)) ψ` with Krylov subspaces of dimension at most
/// `max_dim`; `τ` is split whenever the a-posteriori error estimate exceeds
/// `tol ‖ψ‖`.
pub fn expm_apply<T: Real>(
    h: &EdHamiltonian<T>,
    g: T,
    tau: T,
    psi: &mut Vec<C<T>>,
    max_dim: usize,
    tol: T,
) -> Result<()> {
    let n = h.dim();
    let mut remaining = tau;
    let mut step = tau;
    let mut w = vec![C::new(T::zero(), T::zero()); n];
    let mut guard = 0;
    while remaining.abs() > T::zero() {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::numerical("expm_apply", "step size collapsed"));
        }
        if step.abs() > remaining.abs() {
            step = remaining;
        }
        let beta0 = norm(psi);
        if beta0 == T::zero() {
            return Ok(());
        }
        let mut v0 = psi.clone();
        scale(T::one() / beta0, &mut v0);
        let mut basis = vec![v0];
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        let accepted = loop {
            let j = basis.len() - 1;
            h.apply(g, &basis[j], &mut w);
            alpha.push(dot(&basis[j], &w).re);
            orthogonalise(&mut w, &basis);
            let b = norm(&w);
            let m = alpha.len();
            let (vals, vecs) = tridiagonal_eigen(&alpha, &beta);
            // c = exp(−i τ T) e_1
            let c: Vec<C<T>> = (0..m)
                .map(|i| {
                    (0..m).fold(C::new(T::zero(), T::zero()), |acc, l| {
                        acc + C::from_polar(vecs[i * m + l] * vecs[l], -step * vals[l])
                    })
                })
                .collect();
            let err = b * c[m - 1].norm();
            let exhausted = b <= T::epsilon() * (vals[0].abs().max(vals[m - 1].abs()) + T::one());
            if err <= tol || exhausted {
                break Some(c);
            }
            if m >= max_dim.min(n) {
                break None;
            }
            beta.push(b);
            let mut next = w.clone();
            scale(T::one() / b, &mut next);
            basis.push(next);
        };
        match accepted {
            Some(c) => {
                psi.iter_mut().for_each(|p| *p = C::new(T::zero(), T::zero()));
                for (ci, vi) in c.iter().zip(&basis) {
                    axpy(*ci * beta0, vi, psi);
                }
                remaining = remaining - step;
            }
            None => step = step / T::lit(2.0),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::sector::{build_sector, Parity};
    use nalgebra::{Complex as NC, DMatrix};
    use std::sync::Arc;

    fn dense_eigs(h: &EdHamiltonian<f64>, g: f64) -> Vec<f64> {
        let n = h.dim();
        let d = h.to_dense(g);
        let m = DMatrix::from_fn(n, n, |i, j| NC::new(d[i * n + j].re, d[i * n + j].im));
        let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    #[test]
    fn matches_dense_full_space() {
        let sec = Arc::new(build_sector::<f64>(4, None, None).unwrap());
        let h = EdHamiltonian::new(sec, 1.0);
        let want = dense_eigs(&h, 0.3);
        let got = lowest_eigenpairs_in(&h, 0.3, 6, &EigenOptions::default()).unwrap();
        for (p, w) in got.iter().zip(&want) {
            assert!((p.value - w).abs() < 1e-10, "{} vs {}", p.value, w);
            assert!(p.residual < 1e-10);
        }
    }

    #[test]
    fn degenerate_levels_found_by_locking() {
        // g = 0: diagonal with large degeneracies
        let sec = Arc::new(build_sector::<f64>(8, None, None).unwrap());
        let h = EdHamiltonian::new(sec, 1.0);
        let got = lowest_eigenpairs_in(&h, 0.0, 4, &EigenOptions::default()).unwrap();
        let vals: Vec<f64> = got.iter().map(|p| p.value).collect();
        assert!((vals[0] + 16.0).abs() < 1e-10 && (vals[1] + 16.0).abs() < 1e-10);
        assert!((vals[2] + 8.0).abs() < 1e-10 && (vals[3] + 8.0).abs() < 1e-10);
    }

    #[test]
    fn complex_sector_against_dense() {
        let sec = Arc::new(build_sector::<f64>(10, Some(3), Some(Parity::Odd)).unwrap());
        let h = EdHamiltonian::new(sec, 1.0);
        let want = dense_eigs(&h, 0.9);
        let got = lowest_eigenpairs_in(&h, 0.9, 3, &EigenOptions::default()).unwrap();
        for (p, w) in got.iter().zip(&want) {
            assert!((p.value - w).abs() < 1e-10);
        }
    }

    #[test]
    fn propagator_against_spectral_sum() {
        let sec = Arc::new(build_sector::<f64>(8, Some(0), Some(Parity::Even)).unwrap());
        let h = EdHamiltonian::new(sec, 1.0);
        let pairs = lowest_eigenpairs_in(&h, 0.4, 2, &EigenOptions::default()).unwrap();
        let n = h.dim();
        let mut psi: Vec<C<f64>> = (0..n)
            .map(|a| (pairs[0].vector[a] + pairs[1].vector[a]) * std::f64::consts::FRAC_1_SQRT_2)
            .collect();
        let tau = 1.7;
        expm_apply(&h, 0.4, tau, &mut psi, 30, 1e-13).unwrap();
        for a in 0..n {
            let want = (pairs[0].vector[a] * C::from_polar(1.0, -tau * pairs[0].value)
                + pairs[1].vector[a] * C::from_polar(1.0, -tau * pairs[1].value))
                * std::f64::consts::FRAC_1_SQRT_2;
            assert!((psi[a] - want).norm() < 1e-10);
        }
        assert!((norm(&psi) - 1.0).abs() < 1e-12);
    }
}
