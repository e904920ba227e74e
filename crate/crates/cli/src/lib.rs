//! `eln`: reproduce the synthetic benchmarks, fit models on CSV data, dump
//! learned loss curves and run hyperparameter searches.
//!
//! Every output starts with a header naming the tool version, the seed and
//! the full parameter set; given the same `--seed` a command is reproducible
//! bit for bit (wall-time columns aside).

mod args;
mod commands;
mod output;
mod svg;

pub use args::{Cli, Command};
pub use commands::run;
pub use output::{Format, Header};
pub use svg::render_svg;
