use serde::{Deserialize, Serialize};

use super::{quasiparticle_energy, ModeEnsemble};
use crate::error::Result;
use crate::protocols::MomentumGrid;
use crate::scalar::{ordered_sum, Real};

/// Translation-invariant expectation values per site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainObservables<T> {
    pub sx: T,
    /// NN `<σ^z σ^z>`.
    pub zz: T,
    /// NN `<σ^y σ^y>`.
    pub yy: T,
    /// `-(zz + g sx)`.
    pub energy: T,
}

/// Gaussian-state expectation values of the NN chain:
///
/// `sx = 1 - 2∫|v|² dk/π`,
/// `zz = 2∫|v|² cos k dk/π + 2 Re∫u v* sin k dk/π`,
/// `yy` the same with the second integral subtracted.
pub fn observables<T: Real>(ensemble: &ModeEnsemble<T>) -> ChainObservables<T> {
    let two = T::lit(2.0);
    let rows = ensemble.modes.iter().zip(&ensemble.grid.weights);
    let (mut occ, mut hop, mut pair) = (Vec::new(), Vec::new(), Vec::new());
    for (m, &w) in rows {
        let v2 = m.v.norm_sqr();
        occ.push(w * v2);
        hop.push(w * v2 * m.k.cos());
        pair.push(w * (m.u * m.v.conj()).re * m.k.sin());
    }
    let pi = T::PI();
    let n = ordered_sum(occ) / pi;
    let c = ordered_sum(hop) / pi;
    let a = ordered_sum(pair) / pi;
    let sx = T::one() - two * n;
    let zz = two * c + two * a;
    let yy = two * c - two * a;
    ChainObservables {
        sx,
        zz,
        yy,
        energy: -(zz + ensemble.g * sx),
    }
}

/// Ground-state energy per site of the periodic NN chain of `l` sites in the
/// even-parity sector: `-(1/L) sum_k ε_k / 2` over the antiperiodic grid.
pub fn free_fermion_ground_energy<T: Real>(g: T, l: usize) -> Result<T> {
    let grid = MomentumGrid::<T>::antiperiodic(l)?;
    let total = ordered_sum(grid.values.iter().map(|&k| quasiparticle_energy(g, k)));
    Ok(-total / (T::lit(2.0) * T::from_usize_lossy(l)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrable::BogoliubovMode;
    use num_complex::Complex;

    fn grid() -> MomentumGrid<f64> {
        MomentumGrid::infinite(4096).unwrap()
    }

    #[test]
    fn c_fermion_vacuum() {
        let g = grid();
        let modes = g
            .values
            .iter()
            .map(|&k| BogoliubovMode {
                k,
                u: Complex::new(1.0, 0.0),
                v: Complex::new(0.0, 0.0),
            })
            .collect();
        let ens = ModeEnsemble {
            grid: g,
            modes,
            t: 0.0,
            g: 3.0,
        };
        let o = observables(&ens);
        assert!((o.sx - 1.0).abs() < 1e-15);
        assert!(o.zz.abs() < 1e-15 && o.yy.abs() < 1e-15);
    }

    #[test]
    fn ferromagnet_at_zero_field() {
        let ens = ModeEnsemble::ground_state(&grid(), 0.0, 0.0);
        let o = observables(&ens);
        assert!(o.sx.abs() < 1e-12, "{o:?}");
        assert!((o.zz - 1.0).abs() < 1e-12);
        assert!(o.yy.abs() < 1e-12);
        assert!((o.energy + 1.0).abs() < 1e-12);
    }

    #[test]
    fn paramagnet_at_large_field() {
        let o = observables(&ModeEnsemble::ground_state(&grid(), 200.0, 0.0));
        assert!(o.sx > 0.9999);
        assert!(o.sx <= 1.0);
    }

    #[test]
    fn energy_density_matches_dispersion_integral() {
        // infinite chain: E/L = -(1/π)∫_0^π ε_k/2 dk, Hellmann-Feynman gives sx
        for &g in &[0.3, 0.9, 1.6] {
            let gr = grid();
            let o = observables(&ModeEnsemble::ground_state(&gr, g, 0.0));
            let e: f64 = gr
                .values
                .iter()
                .zip(&gr.weights)
                .map(|(&k, &w)| w * quasiparticle_energy(g, k))
                .sum::<f64>()
                / (2.0 * std::f64::consts::PI);
            assert!((o.energy + e).abs() < 1e-10, "g={g}");
            let h = 1e-5;
            let ep = |gg: f64| -> f64 {
                gr.values
                    .iter()
                    .zip(&gr.weights)
                    .map(|(&k, &w)| w * quasiparticle_energy(gg, k))
                    .sum::<f64>()
                    / (2.0 * std::f64::consts::PI)
            };
            let de = (ep(g + h) - ep(g - h)) / (2.0 * h);
            assert!((o.sx - de).abs() < 1e-6, "g={g}: {} vs {}", o.sx, de);
        }
    }

    #[test]
    fn finite_chain_energy_limits() {
        // g = 0: classical ferromagnet -1 per site
        assert!((free_fermion_ground_energy(0.0f64, 12).unwrap() + 1.0).abs() < 1e-14);
        assert!(free_fermion_ground_energy(0.5, 7).is_err());
    }
}
