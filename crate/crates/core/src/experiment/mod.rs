//! Experiment files, parameter grids and result tables.
//!
//! An experiment is a TOML document; see `configs/` in the repository for an
//! annotated example of every mode.

mod compare;
mod config;
mod run;

pub use compare::{compare_files, compare_tables, CompareReport, RowDeviation, Tolerance};
pub use config::{
    AllocationSection, AnalyticSection, ChainSection, Experiment, GridSection, Mode, Quantity, SimulationSection,
};
pub use run::{run_experiment, workers_from_env, write_table, Table, WORKERS_ENV};

#[cfg(test)]
mod tests;
