//! Quench dynamics and bound kink pairs in transverse-field Ising chains
//! with nearest and next-nearest neighbour ferromagnetic couplings.
//!
//! * [`integrable`]: Kibble-Zurek ramps of the nearest-neighbour chain via
//!   time-dependent Bogoliubov modes, plus closed-form oscillation formulas.
//! * [`bcs`]: self-consistent BCS theory of the frustrated chain.
//! * [`pairmodel`]: the bosonic pair Hamiltonian and its driven response.
//! * [`ed`]: exact diagonalisation on periodic chains up to 20 sites.
//! * [`analysis`]: spectral peaks, damped-sinusoid and power-law fits.
//!
//! Every solver is generic over [`scalar::Real`]; the aliases below fix the
//! scalar to `f64`.

pub mod analysis;
pub mod bcs;
pub mod ed;
pub mod error;
pub mod integrable;
mod linalg;
mod magnus;
mod optimize;
pub mod pairmodel;
pub mod protocols;
pub mod scalar;

pub use error::{Error, Result};

pub type ModelParams = protocols::ModelParams<f64>;
pub type Ramp = protocols::RampProtocol<f64>;
pub type Grid = protocols::MomentumGrid<f64>;
pub type Mode = integrable::BogoliubovMode<f64>;
pub type Modes = integrable::ModeEnsemble<f64>;
pub type Series = integrable::RampSeries<f64>;
pub type Signal = analysis::Signal<f64>;
pub type OscillationFit = analysis::OscillationFit<f64>;
pub type BcsState = bcs::BcsState<f64>;
pub type KinkDispersion = bcs::KinkDispersion<f64>;
pub type PairCoefficients = pairmodel::PairCoefficients<f64>;
pub type DrivenResponse = pairmodel::DrivenResponse<f64>;
pub type SpinSector = ed::SpinSector<f64>;
pub type EdState = ed::EdState<f64>;
pub type Spectrum = ed::SpectrumResult<f64>;
pub type Trajectory = ed::EdTrajectory<f64>;
