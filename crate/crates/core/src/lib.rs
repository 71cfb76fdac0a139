//! Particle transport through graph-shaped quantum circuits coupled to a
//! source bath, a sink bath and a local dephasing bath.
//!
//! The pipeline is: build a [`Circuit`], assemble its master-equation
//! [`Generator`] at a dephasing strength Δ, find the non-equilibrium steady
//! state with [`solve_ness_direct`] or [`solve_ness_by_evolution`], then read
//! resistance, conductance and coherence off the result with the functions in
//! [`observables`]. The [`experiments`] module scripts whole parameter sweeps.

pub mod circuit;
pub mod error;
pub mod experiments;
pub mod lindblad;
pub mod observables;
pub mod ode;
pub mod output;
pub mod solver;

pub use circuit::{Circuit, Direction, Graph, HermitianMatrix};
pub use error::{Error, Result};
pub use lindblad::{DensityMatrix, Form, Generator, RateSet};
pub use solver::{
    solve_ness_by_evolution, solve_ness_direct, SolveStatus, SolverConfig, SteadyStateResult,
    Trajectory,
};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
