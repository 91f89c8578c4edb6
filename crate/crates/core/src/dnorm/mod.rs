//! D-norms, dual D-norm functions and their generators.
//!
//! A D-norm is `||x||_D = E max_i |x_i| Z_i` for a generator `Z` with
//! nonnegative unit-mean components; its dual function is
//! `|||x|||_D = E min_i |x_i| Z_i`. The two are linked by the
//! inclusion-exclusion identity `min(a) = sum_T (-1)^{|T|-1} max(a_T)`.

mod eval;
mod generator;
mod model;

pub use eval::{generator_moments, MAX_IE_DIM};
pub(crate) use eval::lp_norm;
pub use generator::{sample_generator, Generator, GeneratorSample};
pub use model::{CustomGenerator, DependenceModel, Family, GeneratorFn};
