//! Plurisubharmonic envelopes on flat complex tori.
//!
//! The envelope `P(v) = sup { u : omega + i ddbar u >= 0, u <= v }` is computed two ways:
//! as the `beta -> infinity` limit of the Monge-Ampere family
//! `det(g + phi_{j kbar}) = det(g) exp(beta (phi - v))` solved by damped Newton with
//! continuation ([`newton`]), and in complex dimension one by a projected Gauss-Seidel
//! obstacle solver ([`envelope`]). [`verify`] turns the regularity statements about
//! these objects into measured checks.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod archive;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod newton;
pub mod presets;
pub mod torus;
pub mod verify;

pub use error::{Error, Result};
