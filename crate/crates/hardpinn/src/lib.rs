//! Mesh-free PDE solving with hard-constrained physics-informed networks.
//!
//! The core idea: substitute auxiliary gradient fields p_j = ∇u_j into the
//! PDE system so every boundary condition becomes linear in the unknown
//! tuple (u_j, p_j), solve those boundary conditions analytically, and embed
//! the general solution in the network ansatz. Training then minimizes only
//! the PDE residual plus the equilibrium mismatch ‖p̂ − ∇û‖ — no boundary or
//! initial loss terms, no loss balancing.
//!
//! Modules build up in layers: [`autodiff`] (tape + duals), [`network`]
//! (MLPs), [`geometry`] (domains, distances, samplers), [`boundary`]
//! (normalized boundary conditions and their general solutions), [`ansatz`]
//! (the assembled hard-constraint model), [`training`] (losses and
//! optimizers), [`problems`] (built-in benchmark problems), and [`run`]
//! (config-driven runs, ablations and sweeps behind the CLI).

pub mod ansatz;
pub mod autodiff;
pub mod boundary;
pub mod config;
pub mod geometry;
pub mod network;
pub mod problems;
pub mod run;
pub mod training;
