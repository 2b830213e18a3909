//! Orlicz N-function calculus and the associated quasilinear flux map, with
//! grid fields, a variational solver for the flux-divergence problem, and
//! discrete maximal operators used by the verification experiments.

pub mod error;
pub mod field;
pub mod nfunction;
pub mod io;
pub mod numerics;
pub mod operator;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use nfunction::{NFunction, NFunctionPair};
