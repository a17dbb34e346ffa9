//! Poverty, inequality and financial-inclusion panel analysis.

pub mod decomp;
pub mod dist_measures;
mod error;
pub mod forecaster;
pub mod index_builder;
pub mod panel_ols;
pub mod panel_store;
pub mod pipeline;
pub mod report;
pub mod synthetic;

pub use error::{exit_code_table, Error};
