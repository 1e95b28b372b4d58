//! File formats, configuration, demos and the command line surface for the
//! residue number system TPU model in `rnstpu-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod mandelbrot;
pub mod matmul;
pub mod verify;

pub use error::{Error, ExitCode};
