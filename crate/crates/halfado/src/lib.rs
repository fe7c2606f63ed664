//! Std companion of `halfado-core`: stream files, documents, the batch
//! runner, the review service and the command line.

pub use halfado_core as core;

pub mod api;
pub mod documents;
pub mod experiment;
pub mod io;
pub mod report;
pub mod runner;
pub mod service;
