//! Test support: an independent brute-force reachability oracle, a witness
//! replayer, and random generators for nets and diagram sources.

mod gen;
mod oracle;

pub use gen::{random_tapn, random_tcsd_source, RandomNet, TcsdShape};
pub use oracle::{
    naive_delay_bound, naive_reachable, naive_reachable_uncapped, naive_step_bound, replay, NaiveResult,
};
