//! Pattern counts, popular-difference search, Gowers norms, the generalized
//! von Neumann inequality and exhaustive equidistribution checks.

pub(crate) mod count;
pub(crate) mod equidist;
mod gowers;

pub use count::{pattern_count, popular_search, Backend, PatternCountReport};
pub use equidist::{
    abstract_atom_distribution, linear_quadratic_distribution, pattern_tuple_distribution,
    structured_pattern_average, EquidistributionReport, StructuredAverage,
};
pub use gowers::{gowers_norm, von_neumann_check, GowersMode, VonNeumannReport};

use crate::gridfn::{big_to_f64, rational_string};
use num_rational::BigRational;

/// A value that is either exact or a float, depending on the backend.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Exact(BigRational),
    Float(f64),
}

impl Number {
    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(q) => big_to_f64(q),
            Number::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Number::Exact(q) => Some(q),
            Number::Float(_) => None,
        }
    }

    /// Exact values as "num/den" strings, floats as numbers.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Number::Exact(q) => serde_json::Value::String(rational_string(q)),
            Number::Float(x) => serde_json::json!(x),
        }
    }
}
