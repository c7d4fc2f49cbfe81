//! Scene-grounded program synthesis for spatial question answering.

pub mod agents;
pub mod bench;
pub mod interpreter;
pub mod registry;
pub mod scene;
pub mod specialists;
pub mod synthesis;
