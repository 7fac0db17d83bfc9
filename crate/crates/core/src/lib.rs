//! Presburger arithmetic over `(N, +)`: quantifier elimination, semilinear
//! sets, dimension and bijections, counting, definable orders and
//! self-interpretations.

pub mod cli;
pub mod counting;
pub mod dimension;
pub mod formula;
pub mod interp;
pub mod linear;
pub mod matrix;
pub mod orders;
pub mod qe;
pub mod semilinear;
