//! Numerical spectral and scattering theory for quantum graphs with
//! semi-infinite leads.
//!
//! The Hamiltonian is the free Laplacian `-d²/dx²` on every edge with
//! Kirchhoff (Neumann) matching at the vertices. The crate locates embedded
//! eigenvalues and resonances as zeros of a secular determinant, evaluates
//! scattering matrices and generalized eigenfunctions, computes the Fermi
//! golden rule decay rate of an embedded eigenvalue under edge-length
//! perturbations, continues resonances along such perturbations and builds
//! quasimodes certifying nearby resonances.

pub mod contour;
pub mod cutoff;
pub mod error;
pub mod fgr;
pub mod fixtures;
pub mod graph;
pub mod linalg;
pub mod output;
pub mod quadrature;
pub mod quasimode;
pub mod secular;
pub mod tracker;
pub mod wavefield;

pub use error::{Error, Result};
pub use fgr::{fgr_coefficients, second_order_model, z_dot, BoundaryConvention, FgrReport};
pub use graph::{
    adot, lengths_at, validate_graph, MetricGraph, PerturbationFamily, PerturbationMode,
    Polynomial, RawGraph, RawPerturbation,
};
pub use num_complex::Complex64;
pub use secular::{
    build_secular, det_secular, eigenfunction, find_spectral_points, generalized_eigenfunction,
    scattering_matrix, SearchOptions, SecularSystem, SpectralKind, SpectralPoint, Window,
};
pub use tracker::{compare_to_model, track, ModelComparison, Trajectory};
pub use wavefield::{EdgeWave, LeadAmplitude, Weights};
