pub mod baselines;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod localization;
pub mod numfmt;
pub mod rwnmf;
pub mod scene;
pub mod side_info;
pub mod synthetic;

pub use error::{Error, Result};
