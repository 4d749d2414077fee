pub mod ahp;
pub mod grading;
pub mod data_io;
pub mod scoring;
pub mod simulator;
pub mod cli;
