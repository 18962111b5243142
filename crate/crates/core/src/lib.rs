//! C-RASP counting programs and their compilation to Limit Transformers.
//!
//! The crate is organised bottom-up: [`dsl`] defines programs, [`interp`]
//! evaluates them exactly, [`runtime`] executes fixed-precision networks,
//! [`compile`] lowers programs to networks, [`corpus`] holds the program
//! library and language oracles, and [`harness`] checks the two sides agree.

pub mod dsl;
pub mod interp;
pub mod runtime;
pub mod compile;
pub mod corpus;
pub mod harness;
