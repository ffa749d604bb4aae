//! Theta functions, Wen-matrix algebra, finite Heisenberg groups and
//! multi-layer quantum Hall wave functions on a torus.
#![allow(clippy::needless_range_loop)]

pub mod exact;
pub mod wen;
pub mod theta;
pub mod heisenberg;
pub mod wavefunctions;
pub mod hermitian;
pub mod bundle;
pub mod io;
pub mod report;
pub mod verify;
