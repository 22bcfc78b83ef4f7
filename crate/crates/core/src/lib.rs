//! Online machine-minimizing scheduling of unit jobs, with exact
//! rational arithmetic end to end.
//!
//! The crate models discrete-time instances of unit jobs with arrival
//! times and deadlines and provides:
//!
//! * the workload-density calculus whose ceiling characterizes the
//!   optimal offline machine count ([`density`]);
//! * a deterministic EDF simulator with per-slot machine budgets, an
//!   interval-demand feasibility check, and a brute-force optimum oracle
//!   ([`edf`]);
//! * online policies that budget machines from the density of the
//!   arrived prefix, including the 26/5-scaled rule and the earlier
//!   doubled at-time rule it replaces ([`policy`]);
//! * hard-instance generators, an online adversary, and the exact
//!   budget-deficit certificate behind the 2.09 lower bound
//!   ([`adversary`]);
//! * the feasibility potential with its two workload-preserving
//!   reductions and the coverage-constant optimization ([`potential`]);
//! * randomized cross-checking of all of the above ([`fuzz`]).
//!
//! Nothing is ever computed in floating point: densities, potentials,
//! thresholds, and competitive ratios are exact rationals.

pub mod adversary;
pub mod density;
pub mod edf;
pub mod fuzz;
pub mod instance;
pub mod io;
pub mod par;
pub mod policy;
pub mod potential;
pub mod rational;

pub use instance::{ArrivalSequence, Instance, Interval, Job, JobSet, Time};
pub use rational::Rational;
