//! Sparse representation of `H = −Σ_n (g σˣ_n + σᶻ_n σᶻ_{n+1} + J2 σᶻ_n σᶻ_{n+2})`
//! on a periodic chain, split as `H(g) = D + g X` so that a time-dependent
//! field costs nothing to rebuild.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use super::sector::{translate, SpinSector};
use crate::scalar::Real;

/// Classical energy `−Σ σᶻσᶻ − J2 Σ σᶻσᶻ'` of configuration `s`.
#[inline]
pub fn diagonal_energy<T: Real>(s: u32, l: usize, j2: T) -> T {
    let l_t = T::from_usize_lossy(l);
    let two = T::lit(2.0);
    let broken1 = T::from_u32((s ^ translate(s, 1, l)).count_ones()).unwrap();
    let broken2 = T::from_u32((s ^ translate(s, 2, l)).count_ones()).unwrap();
    -(l_t - two * broken1) - j2 * (l_t - two * broken2)
}

#[derive(Debug, Clone)]
pub struct EdHamiltonian<T> {
    pub sector: Arc<SpinSector<T>>,
    pub j2: T,
    diag: Vec<T>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex<T>>,
}

impl<T: Real> EdHamiltonian<T> {
    pub fn new(sector: Arc<SpinSector<T>>, j2: T) -> Self {
        let l = sector.l;
        let rows: Vec<(T, Vec<(u32, Complex<T>)>)> = sector
            .reps
            .par_iter()
            .enumerate()
            .map(|(a, &r)| {
                let mut entries = Vec::with_capacity(l);
                for i in 0..l {
                    let s = r ^ (1 << i);
                    if let Some((b, chi)) = sector.locate(s) {
                        // ⟨a|X|b⟩ = conj(⟨b|X|a⟩), X = −Σσˣ
                        let w = (sector.norm(b) / sector.norm(a)).sqrt();
                        entries.push((b as u32, -chi.conj() * w));
                    }
                }
                (diagonal_energy(r, l, j2), entries)
            })
            .collect();
        let mut diag = Vec::with_capacity(rows.len());
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (d, entries) in rows {
            diag.push(d);
            for (c, v) in entries {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            sector,
            j2,
            diag,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `y = H(g) x`.
    pub fn apply(&self, g: T, x: &[Complex<T>], y: &mut [Complex<T>]) {
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(a, ya)| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for p in self.row_ptr[a]..self.row_ptr[a + 1] {
                acc = acc + self.vals[p] * x[self.cols[p] as usize];
            }
            *ya = x[a] * self.diag[a] + acc * g;
        });
    }

    /// Row-major dense matrix of `H(g)`; meant for small sectors.
    pub fn to_dense(&self, g: T) -> Vec<Complex<T>> {
        let n = self.dim();
        let mut m = vec![Complex::new(T::zero(), T::zero()); n * n];
        for a in 0..n {
            m[a * n + a] = m[a * n + a] + Complex::new(self.diag[a], T::zero());
            for p in self.row_ptr[a]..self.row_ptr[a + 1] {
                let b = self.cols[p] as usize;
                m[a * n + b] = m[a * n + b] + self.vals[p] * g;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::sector::{all_sector_labels, build_sector, Parity};

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    /// Direct `2^L x 2^L` construction from the spin operators.
    fn brute_dense(l: usize, g: f64, j2: f64) -> Vec<f64> {
        let n = 1usize << l;
        let mut m = vec![0.0; n * n];
        for s in 0..n {
            let spin = |i: usize| if (s >> (i % l)) & 1 == 1 { -1.0 } else { 1.0 };
            let mut d = 0.0;
            for i in 0..l {
                d -= spin(i) * spin(i + 1) + j2 * spin(i) * spin(i + 2);
            }
            m[s * n + s] = d;
            for i in 0..l {
                m[(s ^ (1 << i)) * n + s] -= g;
            }
        }
        m
    }

    #[test]
    fn full_space_matches_brute_force() {
        let sec = Arc::new(build_sector::<f64>(4, None, None).unwrap());
        let h = EdHamiltonian::new(sec, 1.0);
        let dense = h.to_dense(0.3);
        let want = brute_dense(4, 0.3, 1.0);
        for (a, b) in dense.iter().zip(&want) {
            assert!((a - c(*b)).norm() < 1e-14);
        }
    }

    #[test]
    fn classical_diagonals() {
        let l = 8;
        assert_eq!(diagonal_energy(0u32, l, 1.0f64), -16.0);
        assert_eq!(diagonal_energy(1u32, l, 1.0f64), -16.0 + 8.0);
        // two single kinks two bonds apart
        assert_eq!(diagonal_energy(0b11u32, l, 1.0f64), -16.0 + 12.0);
        // alternating pattern: every bond a kink
        assert_eq!(diagonal_energy(0b0101_0101u32, l, 1.0f64), 0.0);
    }

    #[test]
    fn hermitian_in_every_sector() {
        for lab in all_sector_labels(6) {
            let sec = Arc::new(build_sector::<f64>(6, lab.momentum, lab.parity).unwrap());
            let h = EdHamiltonian::new(sec, 0.7);
            let n = h.dim();
            let m = h.to_dense(0.45);
            for a in 0..n {
                for b in 0..n {
                    assert!((m[a * n + b] - m[b * n + a].conj()).norm() < 1e-12, "{lab}");
                }
            }
        }
    }

    #[test]
    fn sector_block_matches_projection() {
        // ⟨ψ_a|H|ψ_b⟩ through the full space equals the reduced matrix element
        let l = 6;
        let full = brute_dense(l, 0.8, 0.6);
        let n = 1 << l;
        let sec = Arc::new(build_sector::<f64>(l, Some(2), Some(Parity::Even)).unwrap());
        let h = EdHamiltonian::new(sec.clone(), 0.6);
        let dense = h.to_dense(0.8);
        let d = h.dim();
        for b in 0..d {
            let mut e = vec![Complex::new(0.0, 0.0); d];
            e[b] = c(1.0);
            let v = sec.expand(&e);
            let hv: Vec<Complex<f64>> = (0..n).map(|s| (0..n).map(|t| v[t] * full[s * n + t]).sum()).collect();
            let back = sec.project(&hv);
            for a in 0..d {
                assert!((back[a] - dense[a * d + b]).norm() < 1e-12);
            }
        }
    }
}
