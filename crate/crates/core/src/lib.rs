//! Virtual integration of timed test cases.
//!
//! Test-case sequence diagrams are parsed ([`parser`]), checked ([`model`]),
//! compiled to timed-arc Petri nets ([`translate`], [`tapn`]), merged on
//! compatible messages and analyzed for reachability ([`integrate`]), and
//! written out for humans and other tools ([`export`]).

pub mod export;
pub mod integrate;
pub mod model;
pub mod parser;
pub mod tapn;
pub mod translate;
