pub mod bounds;
pub mod cli;
pub mod config;
pub mod experiments;
pub mod error;
pub mod grid;
pub mod hausdorff;
mod nn;
pub mod point;
pub mod redistance;
pub mod shapes;
pub mod stochastic;
