pub mod api;
pub mod demo;
pub mod domain;
pub mod report;
pub mod sampling;
pub mod session;
pub mod simulator;
pub mod stats;
pub mod storage;
pub mod study;
