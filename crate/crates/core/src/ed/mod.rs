//! Exact diagonalisation of the periodic chain
//! `H = −Σ_n (g σˣ_n + σᶻ_n σᶻ_{n+1} + J2 σᶻ_n σᶻ_{n+2})`.
//!
//! Bases are reduced by translations and the global spin flip; time
//! evolution stays inside one sector because the field term commutes with
//! both.

mod dynamics;
mod hamiltonian;
mod krylov;
mod sector;
mod spectrum;
mod state;

use num_complex::Complex;

pub use dynamics::{evolve_ed, evolve_ed_fixed, EdRow, EdTrajectory, MAX_STEP};
pub use hamiltonian::{diagonal_energy, EdHamiltonian};
pub use krylov::{expm_apply, lowest_eigenpairs_in, EigenOptions, EigenPair};
pub use sector::{all_sector_labels, build_sector, Parity, SectorLabel, SpinSector, MAX_SITES, MIN_SITES};
pub use spectrum::{
    ground_state, lowest_eigenpairs, lowest_eigenpairs_with, pair_gap_ed, write_gap_csv, GapPoint, PairGapResult,
    SpectrumResult, MAX_LEVELS, SPLITTING_THRESHOLD,
};
pub use state::{
    classical_train_energy, kinks, measure, parity_expectation, train_densities, EdObservables, EdState, MAX_TRAIN,
};

use crate::error::Result;
use crate::scalar::Real;

/// `H(g) ψ` for a state, with `J2` from the state.
pub fn apply_hamiltonian<T: Real>(state: &EdState<T>, g: T) -> Vec<Complex<T>> {
    let h = EdHamiltonian::new(state.sector.clone(), state.j2);
    let mut y = vec![Complex::new(T::zero(), T::zero()); h.dim()];
    h.apply(g, &state.amplitudes, &mut y);
    y
}

/// Ground energy per site, `E0 / L`.
pub fn ground_energy_per_site<T: Real>(l: usize, g: T, j2: T) -> Result<T> {
    let (e, _) = ground_state(l, g, j2)?;
    Ok(e / T::from_usize_lossy(l))
}
