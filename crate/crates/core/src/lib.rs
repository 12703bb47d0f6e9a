//! C*-envelopes, Shilov boundaries and unitizations of finite-dimensional
//! selfadjoint ordered operator spaces.

pub mod matcore;
pub mod conesolver;
pub mod testgen;
pub mod stargen;
pub mod blockdecomp;
pub mod envelope;
pub mod unitize;
pub mod funcspace;
