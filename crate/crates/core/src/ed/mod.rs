//! Exact-diagonalization oracle for the coupled detector and simulator.

pub mod experiment;
pub mod space;
pub mod spectrum;
pub mod system;
pub mod wick;

pub use experiment::{readout_experiment, ReadoutOptions, ReadoutReport};
pub use space::{FockSpace, SparseOperator};
pub use spectrum::{diagonalize, SpectralData};
pub use system::{build_hamiltonian, Simulator, SystemSpec, Truncation};
pub use wick::wick_residual;

/// Threads used by the dense eigensolver; 1 runs sequentially, 0 uses every core.
pub fn set_threads(n: usize) {
    let par = if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) };
    faer::set_global_parallelism(par);
}
