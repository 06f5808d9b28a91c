//! Soft-core atom in a laser pulse plus synthesized chaotic light.
//!
//! The crate integrates the one-dimensional time-dependent Schrödinger
//! equation with a split-operator spectral propagator, measures ionization
//! through the probability current at monitor points near an absorbing edge,
//! and provides the ensemble harness used to scan enhancement curves, wavepacket
//! maps, level populations and frequency-resolved gain profiles.
//!
//! Atomic units are used throughout.

pub mod eigen;
pub mod error;
pub mod fields;
pub mod grid;
pub mod harness;
pub mod observables;
pub mod potentials;
pub mod propagator;
pub mod wavefunction;

pub use eigen::{solve_bound_states, EigenBasis};
pub use error::{Error, Result};
pub use fields::{
    ChaoticSpectrumSpec, FieldWaveform, LaserPulseSpec, ProbeSpec, SpectrumKind, TimeLattice,
};
pub use grid::SpatialGrid;
pub use observables::{EnhancementPoint, FragPoint, IonizationProbability};
pub use potentials::SoftCorePotential;
pub use propagator::{FluxRecord, PropagationConfig, Propagator, RunResult};
pub use wavefunction::{inner_product, Representation, WaveFunction};

/// Version string embedded in every output artifact.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
