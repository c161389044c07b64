pub mod geom;
pub mod grid;
pub mod harness;
pub mod env;
pub mod map;
pub mod metrics;
pub mod physics;
pub mod observation;
pub mod policies;
pub mod teleop;
