#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod birman_schwinger;
pub mod config;
pub mod gibbs;
pub mod kernel;
pub mod lattice;
pub mod potential;
pub mod resolvent;
pub mod runner;
pub mod sparse;
pub mod spectral;
pub mod suite;
