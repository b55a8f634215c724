pub mod arith;
pub mod config;
pub mod delta;
pub mod dims;
pub mod etaquot;
pub mod forms;
pub mod qseries;
