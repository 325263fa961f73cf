//! Small numerical kernels shared by the solvers.

pub mod lm;
pub mod quadrature;
pub mod regression;
pub mod sparse;

pub use quadrature::GaussLegendre;
pub use regression::LineFit;
