//! Optically pumped qubit between two atom-like mirror qubits in a
//! waveguide: Markovian master equation and spectra, dressed-state ladder,
//! linear-response polariton poles, a driven Jaynes-Cummings reference and a
//! time-bin matrix-product-state engine with propagation delays.

extern crate blas_src;

pub mod cli;
pub mod dressed;
pub mod hilbert;
pub mod jc;
pub mod lindblad;
pub mod linresp;
pub mod mps;
pub mod rates;
pub mod sparse;
pub mod tolerances;

pub use num_complex::Complex64 as C64;
