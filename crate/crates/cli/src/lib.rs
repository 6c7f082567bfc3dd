//! Sweep orchestration, configuration and CSV emission for the
//! ponderomotive output-field toolbox.

pub mod check;
pub mod config;
pub mod output;
pub mod sweep;
