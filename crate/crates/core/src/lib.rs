//! Matsubara-domain readout of a detector coupled to a quantum simulator.

pub mod bare;
pub mod continuation;
pub mod dyson;
pub mod ed;
pub mod error;
pub mod grid;
mod precision;

pub use bare::{
    BathModeSpec, BathSpec, Boundary, CouplingSpec, DetectorSpec, FlatBathMode, LatticeSpec,
    OscillatorSpec, Spin,
};
pub use continuation::{PadeApproximant, RationalForm, RetardedSeries};
pub use dyson::{DressedSet, SelfEnergy};
pub use ed::{SpectralData, SystemSpec};
pub use error::{Error, Result};
pub use grid::{CorrelatorSeries, MatsubaraGrid, Statistics, TauSeries};
