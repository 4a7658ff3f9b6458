//! Per-mode characteristic evolution of the scalar wave equation on the
//! extremal Reissner–Nordström black hole, with its energy functionals and
//! scattering maps.

pub mod data;
pub mod energies;
pub mod error;
pub mod evolution;
pub mod fields;
pub mod geometry;
pub mod modes;
pub mod numerics;
pub mod scattering;

pub use data::DataFamily;
pub use error::{Error, Result};
pub use evolution::{
    evolve_backward, evolve_forward, potential, t_derivative, t_power, truncation_sequence, BoundaryPair,
    ExactSolution, PotentialTerm, Stencil,
};
pub use fields::{
    extract_radiation, restrict, GridSpec, ModeField, NullProfile, Orientation, ScatteringDataset,
    Side,
};
pub use geometry::{BlackHole, NullPoint, Region};
pub use modes::{construct_mode, mode_data, regularity_probe, ModeSpec, RegularityConfig};
pub use scattering::{
    backward_map, forward_map, interior_map, roundtrip, scattering_map, tail_study, DataSpec,
    MapRunConfig, TailStudyConfig,
};
pub use num_complex::Complex64;
