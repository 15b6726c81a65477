//! Low-rank schemes for the polynomial multiplication tensor
//! `T_{n,m} = Σ a_i ⊗ b_j ⊗ c_{i+j}`.
//!
//! Schemes can be built ([`construct`]), rewritten along flip-graph edges
//! ([`moves`]), connected by an explicit standard-to-Toom-Cook path
//! ([`path`]), searched over GF(2) ([`search`]), lifted to integer
//! coefficients ([`lift`]) and certified optimal with a SAT encoding of
//! the Brent equations ([`brent`]).

pub mod brent;
pub mod coeff;
pub mod construct;
pub mod gf2;
pub mod io;
pub mod lift;
pub mod moves;
pub mod path;
pub mod search;
pub mod tensor;

pub use coeff::{CoeffDomain, Coefficient};
pub use tensor::{contract, is_multiplication_tensor, CoeffVector, DenseTensor, Scheme, Slot, Term};
