//! Numerics for a spin ensemble conditionally displacing a mechanical oscillator
//! under gravity.
//!
//! Scaled units throughout: time `τ = ωt`, couplings `k` and gravity `g` in units
//! of the oscillator zero-point scale. The Hamiltonian is
//! `H = a†a − Z (a† + a)` with `Z = Σ k_i σ_i^z / 2 − g cos ξ`.

pub mod branch;
pub mod error;
pub mod fisher;
pub mod hilbert;
pub mod open_system;
pub mod oracles;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
