//! File formats, output rendering and the command-line front end for
//! `gridflow-core`.

pub mod case_file;
pub mod catalog;
pub mod cli;
pub mod output;
pub mod parallel;
pub mod scenario_file;
pub mod solution_file;
