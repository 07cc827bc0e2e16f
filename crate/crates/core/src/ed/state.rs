//! States, observables and kink-train censuses.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::EdHamiltonian;
use super::krylov::{dot, norm};
use super::sector::{mask, translate, SpinSector};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Longest kink train counted by [`train_densities`].
pub const MAX_TRAIN: usize = 6;

#[derive(Debug, Clone)]
pub struct EdState<T> {
    pub sector: Arc<SpinSector<T>>,
    pub amplitudes: Vec<Complex<T>>,
    pub t: T,
    /// Field of the Hamiltonian the state currently evolves under.
    pub g: T,
    pub j2: T,
}

impl<T: Real> EdState<T> {
    pub fn new(sector: Arc<SpinSector<T>>, amplitudes: Vec<Complex<T>>, t: T, g: T, j2: T) -> Result<Self> {
        if amplitudes.len() != sector.dim() {
            return Err(Error::invalid(
                "EdState::new",
                "amplitude count differs from the sector dimension",
            ));
        }
        Ok(Self {
            sector,
            amplitudes,
            t,
            g,
            j2,
        })
    }

    /// A single configuration, projected into `sector` and normalised.
    pub fn product(sector: Arc<SpinSector<T>>, config: u32, g: T, j2: T) -> Result<Self> {
        let size = 1usize << sector.l;
        if config as usize >= size {
            return Err(Error::invalid("EdState::product", "configuration has too many bits"));
        }
        let mut full = vec![Complex::new(T::zero(), T::zero()); size];
        full[config as usize] = Complex::new(T::one(), T::zero());
        Self::from_full(sector, &full, g, j2)
    }

    /// Projection of a full-space vector; fails if it has no weight in the
    /// sector.
    pub fn from_full(sector: Arc<SpinSector<T>>, full: &[Complex<T>], g: T, j2: T) -> Result<Self> {
        let mut x = sector.project(full);
        let n = norm(&x);
        if !(n > T::epsilon()) {
            return Err(Error::invalid(
                "EdState::from_full",
                "vector has no weight in the sector",
            ));
        }
        x.iter_mut().for_each(|v| *v = *v / n);
        Self::new(sector, x, T::zero(), g, j2)
    }

    pub fn norm(&self) -> T {
        norm(&self.amplitudes)
    }

    pub fn full_amplitudes(&self) -> Vec<Complex<T>> {
        self.sector.expand(&self.amplitudes)
    }

    /// `⟨H(g)⟩` with the state's own field.
    pub fn energy(&self, h: &EdHamiltonian<T>) -> T {
        let mut y = vec![Complex::new(T::zero(), T::zero()); self.amplitudes.len()];
        h.apply(self.g, &self.amplitudes, &mut y);
        dot(&self.amplitudes, &y).re
    }
}

/// Translation-averaged observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdObservables<T> {
    pub sx: T,
    pub zz_nn: T,
    pub zz_nnn: T,
    /// Total `⟨H⟩` at the state's field.
    pub energy: T,
}

/// Fixed-order chunked reduction over all configurations.
fn reduce<T: Real, F: Fn(usize) -> T + Sync>(size: usize, f: F) -> T {
    let chunk = 4096;
    let parts: Vec<T> = (0..size.div_ceil(chunk))
        .into_par_iter()
        .map(|c| (c * chunk..((c + 1) * chunk).min(size)).fold(T::zero(), |acc, s| acc + f(s)))
        .collect();
    parts.into_iter().fold(T::zero(), |a, b| a + b)
}

fn observables_full<T: Real>(full: &[Complex<T>], l: usize, g: T, j2: T) -> EdObservables<T> {
    let l_t = T::from_usize_lossy(l);
    let two = T::lit(2.0);
    let sx = reduce(full.len(), |s| {
        (0..l).fold(T::zero(), |acc, i| acc + (full[s ^ (1 << i)].conj() * full[s]).re)
    }) / l_t;
    let bond = |shift: usize| {
        reduce(full.len(), |s| {
            let broken = T::from_u32((s as u32 ^ translate(s as u32, shift, l)).count_ones()).unwrap();
            full[s].norm_sqr() * (l_t - two * broken)
        }) / l_t
    };
    let zz_nn = bond(1);
    let zz_nnn = bond(2);
    EdObservables {
        sx,
        zz_nn,
        zz_nnn,
        energy: -l_t * (g * sx + zz_nn + j2 * zz_nnn),
    }
}

pub fn measure<T: Real>(state: &EdState<T>) -> EdObservables<T> {
    observables_full(&state.full_amplitudes(), state.sector.l, state.g, state.j2)
}

/// Exact-length train counts `1..=max_len` on the ring of kink bits `k`.
fn count_trains(k: u32, l: usize, max_len: usize, out: &mut [usize]) {
    let full = mask(l);
    if k == full || k == 0 {
        return;
    }
    // rotate so that bond 0 carries no kink and start runs from there
    let start = (0..l).find(|&j| k & (1 << j) == 0).unwrap();
    let mut run = 0;
    for step in 1..=l {
        let j = (start + step) % l;
        if k & (1 << j) != 0 {
            run += 1;
        } else {
            if (1..=max_len).contains(&run) {
                out[run - 1] += 1;
            }
            run = 0;
        }
    }
}

/// Kink bits `k_j = s_j xor s_{j+1}`.
#[inline]
pub fn kinks(s: u32, l: usize) -> u32 {
    s ^ translate(s, l - 1, l)
}

/// Densities per site of trains of exactly `n` adjacent kinks, `n = 1..=max_len`.
pub fn train_densities<T: Real>(state: &EdState<T>, max_len: usize) -> Result<Vec<T>> {
    if max_len == 0 || max_len > MAX_TRAIN {
        return Err(Error::invalid(
            "train_densities",
            format!("max_len must be in [1, {MAX_TRAIN}]"),
        ));
    }
    Ok(trains_full(&state.full_amplitudes(), state.sector.l, max_len))
}

fn trains_full<T: Real>(full: &[Complex<T>], l: usize, max_len: usize) -> Vec<T> {
    let l_t = T::from_usize_lossy(l);
    (0..max_len)
        .map(|n| {
            reduce(full.len(), |s| {
                let p = full[s].norm_sqr();
                if p == T::zero() {
                    return T::zero();
                }
                let mut counts = [0usize; MAX_TRAIN];
                count_trains(kinks(s as u32, l), l, max_len, &mut counts);
                p * T::from_usize_lossy(counts[n])
            }) / l_t
        })
        .collect()
}

/// `⟨∏σˣ⟩`.
pub fn parity_expectation<T: Real>(state: &EdState<T>) -> T {
    let full = state.full_amplitudes();
    let m = mask(state.sector.l) as usize;
    reduce(full.len(), |s| (full[s ^ m].conj() * full[s]).re)
}

/// Observables and trains `1..=4` in one expansion.
pub(crate) fn sample<T: Real>(state: &EdState<T>) -> (EdObservables<T>, [T; 4]) {
    let full = state.full_amplitudes();
    let l = state.sector.l;
    let obs = observables_full(&full, l, state.g, state.j2);
    let tr = trains_full(&full, l, 4);
    (obs, [tr[0], tr[1], tr[2], tr[3]])
}

/// Classical energy of `s` from its kink trains, `−2L + Σ (2n + 4)`; a
/// ring made entirely of kinks has energy `0` at `J2 = 1`.
pub fn classical_train_energy(s: u32, l: usize) -> i64 {
    let k = kinks(s, l);
    if k == mask(l) {
        return 0;
    }
    let mut counts = vec![0usize; l];
    count_trains(k, l, l, &mut counts);
    let trains: i64 = counts
        .iter()
        .enumerate()
        .map(|(n, &c)| c as i64 * (2 * (n as i64 + 1) + 4))
        .sum();
    -2 * l as i64 + trains
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::hamiltonian::diagonal_energy;
    use crate::ed::sector::{build_sector, Parity};

    fn full_space(l: usize) -> Arc<SpinSector<f64>> {
        Arc::new(build_sector(l, None, None).unwrap())
    }

    #[test]
    fn product_and_uniform_states() {
        let up = EdState::product(full_space(8), 0, 0.0, 1.0).unwrap();
        let o = measure(&up);
        assert_eq!((o.sx, o.zz_nn, o.zz_nnn), (0.0, 1.0, 1.0));
        assert!(train_densities(&up, 4).unwrap().iter().all(|&d| d == 0.0));
        let n = 1 << 8;
        let amp = Complex::new(1.0 / (n as f64).sqrt(), 0.0);
        let uni = EdState::new(full_space(8), vec![amp; n], 0.0, 1.0, 1.0).unwrap();
        let o = measure(&uni);
        assert!((o.sx - 1.0).abs() < 1e-14 && o.zz_nn.abs() < 1e-14);
        assert!((parity_expectation(&uni) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_flip_is_a_two_train() {
        let s = EdState::product(full_space(8), 1 << 3, 0.0, 1.0).unwrap();
        let d = train_densities(&s, 4).unwrap();
        assert_eq!(d, vec![0.0, 0.125, 0.0, 0.0]);
        // the same in a momentum sector: translation averaged
        let sec = Arc::new(build_sector::<f64>(8, Some(0), Some(Parity::Even)).unwrap());
        let s = EdState::product(sec, 1 << 3, 0.0, 1.0).unwrap();
        let d = train_densities(&s, 4).unwrap();
        assert!((d[1] - 0.125).abs() < 1e-14 && d[0].abs() < 1e-14);
        assert!(train_densities(&s, 7).is_err());
    }

    #[test]
    fn classical_energies_from_trains() {
        for s in 0..1u32 << 10 {
            assert_eq!(
                diagonal_energy(s, 10, 1.0f64),
                classical_train_energy(s, 10) as f64,
                "{s:010b}"
            );
        }
    }
}
