pub mod agents;
pub mod backends;
pub mod cli;
pub mod clock;
pub mod config;
pub mod domain;
pub mod linksim;
pub mod parsers;
pub mod profiler;
pub mod rng;
