//! Configuration, file formats, fixtures and commands for the `pfnav`
//! density planner. The algorithms live in `pfnav-core`.

pub mod app;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod svg;

pub use error::CliError;
pub use pfnav_core as core;
