//! Computational toolkit for the combinatorial and numerical machinery behind
//! long-time wave-turbulence analysis of the cubic nonlinear Schrödinger
//! equation on a periodic box:
//!
//! - signed ternary trees, gardens/couples, layerings, canonical layerings,
//!   regular objects, links and coherence ([`combinatorics`]);
//! - molecule multigraphs built from couples, with vines, ladders, twists and
//!   cuts ([`molecules`]);
//! - numerical evaluation of the iterated Duhamel expansion and couple sums
//!   ([`diagram`]);
//! - a wave kinetic equation solver with resonant-manifold quadrature
//!   ([`wke`]);
//! - a Monte-Carlo ensemble simulator for the reduced lattice system
//!   ([`nls`]).

pub mod combinatorics;
pub mod error;
pub mod molecules;
pub mod sign;

pub use error::{Error, Result};
pub use sign::Sign;
