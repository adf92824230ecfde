//! Axisymmetric vortex-ring laboratory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod archive;
pub mod cli;
pub mod contour;
pub mod dynamics;
pub mod explicit;
pub mod fields;
pub mod greens;
pub mod grid;
pub mod profile;
pub mod specfun;
pub mod variational;
pub mod verify;
