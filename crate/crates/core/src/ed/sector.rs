//! Symmetry-reduced bases of the periodic chain.
//!
//! Configurations are `u32` bit strings, bit `i` set for a down spin at site
//! `i`. A sector is labelled by an optional momentum `m` (`q = 2πm/L`) and an
//! optional spin-flip parity. Each orbit of the symmetry group is represented
//! by its smallest member `r` and the normalised state
//! `|r⟩⟩ ∝ Σ_g χ(g)* g|r⟩` with `χ(T^j F^f) = e^{iqj} p^f`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest chain handled.
pub const MAX_SITES: usize = 20;
/// Smallest chain handled.
pub const MIN_SITES: usize = 4;

const UNSEEN: u32 = u32::MAX;
const EXCLUDED: u32 = u32::MAX - 1;

/// Eigenvalue of `∏σˣ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Parity::Even => '+',
            Parity::Odd => '-',
        }
    }
}

/// Quantum numbers of a sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorLabel {
    pub momentum: Option<usize>,
    pub parity: Option<Parity>,
}

impl std::fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.momentum {
            Some(m) => write!(f, "k={m}")?,
            None => write!(f, "k=*")?,
        }
        match self.parity {
            Some(p) => write!(f, ";P={}", p.symbol()),
            None => write!(f, ";P=*"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpinSector<T> {
    pub l: usize,
    pub label: SectorLabel,
    /// Orbit representatives, ascending.
    pub reps: Vec<u32>,
    /// `|Stab(r)| / |G|` per representative.
    norms: Vec<T>,
    /// Per configuration: representative index, `UNSEEN` never happens
    /// after construction, `EXCLUDED` for orbits without a state here.
    index: Vec<u32>,
    /// Per configuration: `(j, f)` with `s = T^j F^f r`.
    element: Vec<(u8, u8)>,
    /// `χ(T^j F^f)` at `j * 2 + f`.
    characters: Vec<Complex<T>>,
}

#[inline]
pub(crate) fn mask(l: usize) -> u32 {
    if l >= 32 {
        u32::MAX
    } else {
        (1u32 << l) - 1
    }
}

/// Translation by `j` sites: site `i` moves to `i + j`.
#[inline]
pub(crate) fn translate(s: u32, j: usize, l: usize) -> u32 {
    if j % l == 0 {
        s
    } else {
        let j = j % l;
        ((s << j) | (s >> (l - j))) & mask(l)
    }
}

pub(crate) fn check_length(op: &'static str, l: usize) -> Result<()> {
    if l % 2 != 0 || !(MIN_SITES..=MAX_SITES).contains(&l) {
        return Err(Error::invalid(
            op,
            format!("L must be even and in [{MIN_SITES}, {MAX_SITES}], got {l}"),
        ));
    }
    Ok(())
}

/// Builds the basis of one sector. With `momentum = None` translations are
/// not used; with `parity = None` spin flips are not used.
pub fn build_sector<T: Real>(l: usize, momentum: Option<usize>, parity: Option<Parity>) -> Result<SpinSector<T>> {
    check_length("build_sector", l)?;
    if let Some(m) = momentum {
        if m >= l {
            return Err(Error::invalid("build_sector", format!("momentum {m} outside [0, {l})")));
        }
    }
    let n_t = if momentum.is_some() { l } else { 1 };
    let n_f = if parity.is_some() { 2 } else { 1 };
    let order = T::from_usize_lossy(n_t * n_f);
    let q = T::TAU() * T::from_usize_lossy(momentum.unwrap_or(0)) / T::from_usize_lossy(l);
    let p = T::lit(f64::from(parity.map_or(1, Parity::sign)));
    let mut characters = vec![Complex::new(T::zero(), T::zero()); 2 * l];
    for j in 0..l {
        for f in 0..2 {
            let sign = if f == 1 { p } else { T::one() };
            characters[2 * j + f] = Complex::from_polar(sign, q * T::from_usize_lossy(j));
        }
    }
    let full = mask(l);
    let size = 1usize << l;
    let mut index = vec![UNSEEN; size];
    let mut element = vec![(0u8, 0u8); size];
    let mut reps = Vec::new();
    let mut norms = Vec::new();
    let mut orbit: Vec<(u32, u8, u8)> = Vec::with_capacity(2 * l);
    for s in 0..size as u32 {
        if index[s as usize] != UNSEEN {
            continue;
        }
        // `s` is the smallest member of a new orbit
        orbit.clear();
        let mut stab = 0usize;
        let mut char_sum = Complex::new(T::zero(), T::zero());
        for j in 0..n_t {
            let t = translate(s, j, l);
            for f in 0..n_f {
                let image = if f == 1 { t ^ full } else { t };
                if image == s {
                    stab += 1;
                    char_sum = char_sum + characters[2 * j + f];
                }
                orbit.push((image, j as u8, f as u8));
            }
        }
        let allowed = char_sum.norm() > T::lit(0.5);
        let idx = if allowed { reps.len() as u32 } else { EXCLUDED };
        if allowed {
            reps.push(s);
            norms.push(T::from_usize_lossy(stab) / order);
        }
        for &(image, j, f) in &orbit {
            if index[image as usize] == UNSEEN {
                index[image as usize] = idx;
                element[image as usize] = (j, f);
            }
        }
    }
    Ok(SpinSector {
        l,
        label: SectorLabel { momentum, parity },
        reps,
        norms,
        index,
        element,
        characters,
    })
}

/// Every momentum and parity sector of a chain, momentum-major.
pub fn all_sector_labels(l: usize) -> Vec<SectorLabel> {
    (0..l)
        .flat_map(|m| {
            [Parity::Even, Parity::Odd].map(|p| SectorLabel {
                momentum: Some(m),
                parity: Some(p),
            })
        })
        .collect()
}

impl<T: Real> SpinSector<T> {
    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn norm(&self, a: usize) -> T {
        self.norms[a]
    }

    /// `(representative index, χ(g_s))` of configuration `s = g_s r`, or
    /// `None` if its orbit carries no state in this sector.
    #[inline]
    pub fn locate(&self, s: u32) -> Option<(usize, Complex<T>)> {
        let idx = self.index[s as usize];
        if idx == EXCLUDED {
            return None;
        }
        let (j, f) = self.element[s as usize];
        Some((idx as usize, self.characters[2 * j as usize + f as usize]))
    }

    /// Amplitudes on all `2^L` configurations.
    pub fn expand(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..1u32 << self.l)
            .map(|s| match self.locate(s) {
                Some((a, chi)) => x[a] * chi.conj() * self.norms[a].sqrt(),
                None => Complex::new(T::zero(), T::zero()),
            })
            .collect()
    }

    /// Projection of a full-space vector onto this sector's basis.
    pub fn project(&self, full: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut x = vec![Complex::new(T::zero(), T::zero()); self.dim()];
        for (s, &amp) in full.iter().enumerate() {
            if let Some((a, chi)) = self.locate(s as u32) {
                x[a] = x[a] + chi * amp;
            }
        }
        for (a, xa) in x.iter_mut().enumerate() {
            *xa = *xa * self.norms[a].sqrt();
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn unreduced_dimensions() {
        let s = build_sector::<f64>(4, None, None).unwrap();
        assert_eq!(s.dim(), 16);
        let even = build_sector::<f64>(4, None, Some(Parity::Even)).unwrap();
        let odd = build_sector::<f64>(4, None, Some(Parity::Odd)).unwrap();
        assert_eq!(even.dim() + odd.dim(), 16);
        assert!(build_sector::<f64>(5, None, None).is_err());
        assert!(build_sector::<f64>(22, None, None).is_err());
        assert!(build_sector::<f64>(8, Some(8), None).is_err());
    }

    #[test]
    fn sector_dimensions_sum_to_full_space() {
        for l in [4, 6, 8, 10] {
            let total: usize = all_sector_labels(l)
                .iter()
                .map(|lab| build_sector::<f64>(l, lab.momentum, lab.parity).unwrap().dim())
                .sum();
            assert_eq!(total, 1 << l);
        }
    }

    /// Brute-force count of orbits with a trivial character on their
    /// stabiliser, using explicit sets.
    fn brute_dim(l: usize, m: usize, p: i32) -> usize {
        let full = (1u32 << l) - 1;
        let mut seen = BTreeSet::new();
        let mut count = 0;
        for s in 0..1u32 << l {
            if seen.contains(&s) {
                continue;
            }
            let mut re = 0.0;
            let mut im = 0.0;
            for j in 0..l {
                let t = (0..j).fold(s, |x, _| ((x << 1) | (x >> (l - 1))) & full);
                for f in 0..2 {
                    let img = if f == 1 { t ^ full } else { t };
                    seen.insert(img);
                    if img == s {
                        let ph = 2.0 * std::f64::consts::PI * (m * j) as f64 / l as f64;
                        let sg = if f == 1 { p as f64 } else { 1.0 };
                        re += sg * ph.cos();
                        im += sg * ph.sin();
                    }
                }
            }
            if (re * re + im * im).sqrt() > 0.5 {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn matches_brute_force_orbits() {
        let s = build_sector::<f64>(8, Some(0), Some(Parity::Even)).unwrap();
        assert_eq!(s.dim(), brute_dim(8, 0, 1));
        let s = build_sector::<f64>(8, Some(4), Some(Parity::Odd)).unwrap();
        assert_eq!(s.dim(), brute_dim(8, 4, -1));
    }

    #[test]
    fn expand_project_roundtrip() {
        let s = build_sector::<f64>(8, Some(3), Some(Parity::Odd)).unwrap();
        let x: Vec<Complex<f64>> = (0..s.dim())
            .map(|i| Complex::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let full = s.expand(&x);
        let n_full: f64 = full.iter().map(|z| z.norm_sqr()).sum();
        let n_red: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        assert!((n_full - n_red).abs() < 1e-12 * n_red);
        let back = s.project(&full);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
        // T|psi> = e^{iq}|psi> means psi(Ts) = e^{-iq} psi(s)
        let q = 2.0 * std::f64::consts::PI * 3.0 / 8.0;
        for st in 0..256u32 {
            let shifted = full[translate(st, 1, 8) as usize];
            assert!((shifted - full[st as usize] * Complex::from_polar(1.0, -q)).norm() < 1e-12);
            assert!((full[(st ^ 255) as usize] + full[st as usize]).norm() < 1e-12);
        }
    }
}
