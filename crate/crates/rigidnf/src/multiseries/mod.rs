//! Truncated multivariate formal power series and their scalar/matrix
//! substrate.

pub mod coeff;
pub mod index;
pub mod matrix;
pub mod series;

pub use coeff::{Cf64, Coeff, GaussRational};
pub use index::{indices_of_degree, indices_up_to, MultiIndex};
pub use matrix::{ExponentMatrix, RationalMatrix};
pub use series::{
    compose_tuple, identity_tuple, invert_diffeo, linear_part, monomial_pow, unit_pow_matrix,
    Series, SeriesError, SeriesResult,
};
