//! Finite-horizon safety and reach-avoid verification for discrete-time
//! polynomial stochastic systems.

pub mod certificates;
pub mod dp;
pub mod model;
pub mod noise;
pub mod poly;
pub mod quadrature;
pub mod sampling;
pub mod sos;
