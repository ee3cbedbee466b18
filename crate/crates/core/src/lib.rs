#[cfg(feature = "cli")]
pub mod cli;
pub mod experiments;
pub mod frontend;
pub mod model;
pub mod scenario;
pub mod sensing;
