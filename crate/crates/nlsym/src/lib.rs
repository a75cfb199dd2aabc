//! Configuration, file formats and experiment pipelines on top of
//! `nlsym-core`. The `nlsym` binary is a thin shell over this library.

pub mod config;
pub mod constants;
pub mod error;
pub mod experiment;
pub mod io;
pub mod verify;

pub use error::{Error, Result};
