pub mod data;
pub mod eval;
pub mod model;
pub mod nn;
pub mod plan;
pub mod train;
pub mod world;
