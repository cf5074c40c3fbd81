//! Date fragmentation and temporal-representation toolkit.

pub mod calendar;
pub mod datefmt;
pub mod semtok;
pub mod tok_adapter;
pub mod mdfr;
pub mod benchgen;
pub mod scorer;
pub mod geometry;
pub mod stats;
