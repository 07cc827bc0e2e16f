//! Low-lying spectra across symmetry sectors, ground states and the
//! finite-size extrapolated pair gap.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::EdHamiltonian;
use super::krylov::{lowest_eigenpairs_in, EigenOptions};
use super::sector::{all_sector_labels, build_sector, check_length, Parity, SectorLabel};
use super::state::EdState;
use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::optimize::golden_max;
use crate::scalar::Real;

/// Levels per spectrum accepted by [`lowest_eigenpairs`].
pub const MAX_LEVELS: usize = 6;
/// Default `E1 − E0` below which the ground doublet is treated as one level.
pub const SPLITTING_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult<T> {
    pub l: usize,
    pub g: T,
    pub j2: T,
    pub energies: Vec<T>,
    pub sectors: Vec<SectorLabel>,
}

impl<T: Real> SpectrumResult<T> {
    pub const CSV_HEADER: &'static str = "L,sector,level,energy";

    pub fn write_csv_rows<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, (e, s)) in self.energies.iter().zip(&self.sectors).enumerate() {
            writeln!(w, "{},{},{},{:.15e}", self.l, s, i, e)?;
        }
        Ok(())
    }
}

/// Lowest `m` levels of `H(g)` over every momentum and parity sector.
pub fn lowest_eigenpairs<T: Real>(l: usize, g: T, j2: T, m: usize) -> Result<SpectrumResult<T>> {
    lowest_eigenpairs_with(l, g, j2, m, &EigenOptions::default())
}

pub fn lowest_eigenpairs_with<T: Real>(
    l: usize,
    g: T,
    j2: T,
    m: usize,
    opts: &EigenOptions<T>,
) -> Result<SpectrumResult<T>> {
    check_length("lowest_eigenpairs", l)?;
    if m == 0 || m > MAX_LEVELS {
        return Err(Error::invalid(
            "lowest_eigenpairs",
            format!("m must be in [1, {MAX_LEVELS}]"),
        ));
    }
    let per_sector: Vec<Vec<(T, SectorLabel)>> = all_sector_labels(l)
        .into_par_iter()
        .map(|label| {
            let sector = Arc::new(build_sector::<T>(l, label.momentum, label.parity)?);
            let h = EdHamiltonian::new(sector, j2);
            let pairs = lowest_eigenpairs_in(&h, g, m, opts)?;
            Ok(pairs.into_iter().map(|p| (p.value, label)).collect())
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<(T, SectorLabel)> = per_sector.into_iter().flatten().collect();
    // stable: ties keep sector order
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    all.truncate(m);
    Ok(SpectrumResult {
        l,
        g,
        j2,
        energies: all.iter().map(|x| x.0).collect(),
        sectors: all.iter().map(|x| x.1).collect(),
    })
}

/// Ground state in the translation-invariant, flip-even sector, where the
/// ground state of a ferromagnetic chain with `g > 0` lives.
pub fn ground_state<T: Real>(l: usize, g: T, j2: T) -> Result<(T, EdState<T>)> {
    check_length("ground_state", l)?;
    let sector = Arc::new(build_sector::<T>(l, Some(0), Some(Parity::Even))?);
    let h = EdHamiltonian::new(sector.clone(), j2);
    let mut pairs = lowest_eigenpairs_in(&h, g, 1, &EigenOptions::default())?;
    let p = pairs.remove(0);
    // fix the global phase: largest component real positive
    let big = p
        .vector
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
        .unwrap();
    let phase = big.conj() / big.norm();
    let amps = p.vector.iter().map(|z| z * phase).collect();
    Ok((p.value, EdState::new(sector, amps, T::zero(), g, j2)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint<T> {
    pub l: usize,
    pub e0: T,
    pub e1: T,
    pub e2: T,
    pub gap: T,
    /// `E2 − E0` was used because the ground doublet is split by less than
    /// the threshold.
    pub doublet: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGapResult<T> {
    pub points: Vec<GapPoint<T>>,
    pub extrapolated: T,
    /// Decay length `ℓ` of `gap(L) = gap∞ + c e^{−L/ℓ}`.
    pub decay_length: T,
    pub amplitude: T,
    pub fit_rms: T,
    pub warning: Option<String>,
}

/// Gap per chain length and its infinite-size extrapolation.
pub fn pair_gap_ed<T: Real>(g: T, j2: T, ls: &[usize], splitting_threshold: T) -> Result<PairGapResult<T>> {
    const OP: &str = "pair_gap_ed";
    if ls.len() < 3 || ls.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(OP, "need at least three ascending chain lengths"));
    }
    let mut points = Vec::with_capacity(ls.len());
    for &l in ls {
        let s = lowest_eigenpairs(l, g, j2, 3)?;
        let (e0, e1, e2) = (s.energies[0], s.energies[1], s.energies[2]);
        let doublet = e1 - e0 < splitting_threshold;
        let gap = if doublet { e2 - e0 } else { e1 - e0 };
        points.push(GapPoint {
            l,
            e0,
            e1,
            e2,
            gap,
            doublet,
        });
    }
    let xs: Vec<T> = points.iter().map(|p| T::from_usize_lossy(p.l)).collect();
    let ys: Vec<T> = points.iter().map(|p| p.gap).collect();
    let last = *ys.last().unwrap();
    let scale = ys.iter().fold(T::one(), |m, y| m.max(y.abs()));
    let noise = T::lit(1e-9) * scale;
    let diffs: Vec<T> = ys.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = diffs.iter().all(|d| *d >= -noise) || diffs.iter().all(|d| *d <= noise);
    if diffs.iter().all(|d| d.abs() <= noise) {
        return Ok(PairGapResult {
            points,
            extrapolated: last,
            decay_length: T::zero(),
            amplitude: T::zero(),
            fit_rms: T::zero(),
            warning: None,
        });
    }
    if !monotone {
        return Ok(PairGapResult {
            points,
            extrapolated: last,
            decay_length: T::nan(),
            amplitude: T::nan(),
            fit_rms: T::nan(),
            warning: Some("gap is not monotone in L; reporting the largest L".into()),
        });
    }
    let fit = |ell: T| -> Option<(T, T, T)> {
        let basis: Vec<T> = xs.iter().map(|&x| (-x / ell).exp()).collect();
        let n = T::from_usize_lossy(xs.len());
        let sb = basis.iter().copied().fold(T::zero(), |a, b| a + b);
        let sbb = basis.iter().fold(T::zero(), |a, b| a + *b * *b);
        let sy = ys.iter().copied().fold(T::zero(), |a, b| a + b);
        let sby = basis.iter().zip(&ys).fold(T::zero(), |a, (b, y)| a + *b * *y);
        let sol = solve_dense(vec![n, sb, sb, sbb], vec![sy, sby], 2)?;
        let ss = basis
            .iter()
            .zip(&ys)
            .fold(T::zero(), |a, (b, y)| a + (sol[0] + sol[1] * *b - *y).powi(2));
        Some((sol[0], sol[1], ss))
    };
    let cost = |ell: T| fit(ell).map_or(T::infinity(), |f| f.2);
    let (lo, hi) = (T::lit(0.3), T::lit(50.0));
    // coarse log scan, then golden refinement
    let grid: Vec<T> = (0..=60)
        .map(|i| lo * (hi / lo).powf(T::from_usize_lossy(i) / T::lit(60.0)))
        .collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| {
            cost(grid[a])
                .partial_cmp(&cost(grid[b]))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap();
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let ell = golden_max(|e| -cost(e), a, b, T::lit(1e-8));
    let (g_inf, c, ss) = fit(ell).ok_or_else(|| Error::numerical(OP, "singular extrapolation fit"))?;
    Ok(PairGapResult {
        points,
        extrapolated: g_inf,
        decay_length: ell,
        amplitude: c,
        fit_rms: (ss / T::from_usize_lossy(xs.len())).sqrt(),
        warning: None,
    })
}

pub fn write_gap_csv<T: Real, W: Write>(r: &PairGapResult<T>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "L,E0,E1,E2,gap,doublet")?;
    for p in &r.points {
        writeln!(
            w,
            "{},{:.15e},{:.15e},{:.15e},{:.15e},{}",
            p.l, p.e0, p.e1, p.e2, p.gap, p.doublet
        )?;
    }
    Ok(())
}
