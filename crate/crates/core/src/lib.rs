pub mod codec;
pub mod error;
pub mod scene;
pub mod sim;
pub mod skills;
pub mod memory;
pub mod task;
pub mod gateway;
pub mod executor;
pub mod metrics;
pub mod bench;
