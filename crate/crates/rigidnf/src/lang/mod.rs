//! Germ description files and inline expressions.

pub mod expr;
pub mod file;

pub use expr::{parse_expr, series_to_expr, ExprError};
pub use file::{FileError, GermFile};
