//! Periodic grids on the flat torus and their calculus.

mod calculus;
mod field;
mod geometry;
mod hermitian;
pub mod io;
mod spectral;

pub use calculus::{
    complex_hessian, complex_hessian_with, gradient_norm_sq, integrate, integrate_masked,
    kernel_first_moment, mollify, real_hessian_lambda1, Differentiation, RealHessian,
};
pub use field::{Grid, GridField};
pub use geometry::TorusGeometry;
pub use hermitian::{Herm, HermitianField};
pub use spectral::{hessian_pairs, wavenumber, Spectral};
