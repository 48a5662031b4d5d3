//! Command-line front end for the pole order spectral sequence engine.

pub mod config;
pub mod job;
pub mod render;

pub use config::{Command, Format, Job, JobConfig, Settings};
pub use job::{compute, error_code, run, Document, Stats, Status};
pub use render::{render, render_error};
