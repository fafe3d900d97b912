//! Command-line front end for the netdens estimator.
//!
//! The `netdens` binary wraps the core library behind four commands:
//!
//! * `estimate` fits a density profile from a network file and an events
//!   file, writing the profile CSV, the underlying histogram, the vertex
//!   test report, and a run manifest.
//! * `test-vertices` runs only the vertex tests and writes the report.
//! * `simulate` draws one synthetic replicate as ready-to-use input
//!   files.
//! * `benchmark` compares estimators over many replicates, either on one
//!   scenario or as a pretest power study over exponent pairs.
//!
//! The drivers live in [`run`] so integration tests can call them
//! directly; [`formats`] defines every on-disk schema. Failures carry
//! fixed exit codes and a one-line JSON rendering, see [`error`].

pub mod error;
pub mod formats;
pub mod run;
