//! Pseudospectral toolkit for the extended dipolar Gross–Pitaevskii equation
//!
//! The equation governs a wavefunction ψ on a periodic box:
//!
//! ```text
//! i ∂ₜψ = −½Δψ + V_ext ψ + λ₁|ψ|²ψ + λ₂(K ∗ |ψ|²)ψ + λ₃|ψ|^{p−2}ψ
//! ```
//!
//! with the dipole–dipole kernel K acting as a bounded Fourier multiplier
//! K̂(ξ) = (4π/3)(2ξ₃² − ξ₁² − ξ₂²)/|ξ|², quantum-fluctuation exponent
//! p ∈ (4, 6] and λ₃ > 0, and an optional harmonic trap.
//!
//! The crate provides:
//! - spectral grids, transforms and norms ([`grid`], [`fft`]),
//! - the dipolar kernel, the interaction bound Ξ and the nonlocal
//!   functional B(u) ([`kernel`]),
//! - energy/virial/chemical-potential functionals and the rescaling and
//!   reflection operations used in the variational analysis
//!   ([`functionals`]),
//! - closed-form Gaussian-ansatz energies and negative-energy mass
//!   windows ([`gaussian`]),
//! - mass-constrained gradient-flow ground states, γ(c) curves and the
//!   critical-mass estimate ([`ground_state`]),
//! - Strang time propagation with conservation monitoring and a
//!   small-data scattering diagnostic ([`dynamics`]),
//! - the optimal Gagliardo–Nirenberg constant by two independent routes
//!   and the c_a/c_b/c_c threshold report ([`gn`], [`thresholds`]),
//! - snapshot/trace/manifest I/O and run configuration ([`io`],
//!   [`config`]).

pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod functionals;
pub mod gaussian;
pub mod gn;
pub mod grid;
pub mod ground_state;
pub mod io;
pub mod kernel;
pub mod params;
pub mod rng;
pub mod thresholds;

pub use error::{EdgpeError, Result};
pub use grid::{Grid, WaveField};
pub use params::{ModelParams, Regime, Trap};
