//! Experiment commands behind the `lotsizing` binary.

pub mod bench;
pub mod gen;
pub mod grid;
pub mod report;
pub mod simulate;
pub mod table;
