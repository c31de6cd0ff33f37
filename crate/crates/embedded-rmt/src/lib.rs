//! Embedded (many-body) random matrix ensembles.
//!
//! A k-body potential with Gaussian random couplings acting on an m-particle
//! state space over l single-particle levels defines, per symmetry class
//! beta = 1/2/4, one point of a unified family of random matrix theories.
//! This crate builds those Hamiltonians, measures level-density moments by
//! Monte Carlo and by exact Wick-sum oracles, and mechanizes the particle
//! diagram calculus (loops, conservation equations, argument maximization)
//! that yields the closed-form fourth, sixth and eighth moments.

pub mod combinatorics;
pub mod ensemble;
pub mod error;
pub mod fock;
pub mod formulas;
pub mod diagram;
pub mod rng;
pub mod spectral;
pub mod wick;

pub use error::{Error, Result};
