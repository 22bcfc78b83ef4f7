//! Problem instances: unit jobs with integer arrival/deadline slots.
//!
//! Two concrete representations share the [`Instance`] trait:
//!
//! * [`JobSet`] — a multiset of `(arrival, deadline)` unit jobs with
//!   integer multiplicities, the general representation;
//! * [`ArrivalSequence`] — the universal-deadline special form `(d, σ)`
//!   where every job is due at `d` and `σ(t)` jobs arrive at slot `t`.
//!   Weights are exact rationals because the averaging reduction in
//!   [`crate::potential`] produces fractional workloads.
//!
//! Time is discrete. A job `(a, d)` may execute during any one of the
//! slots `a, a+1, …, d−1`; intervals are half-open `[left, right)`.

use crate::rational::{integer, Rational};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Discrete time slot index.
pub type Time = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("job window is empty: arrival {arrival}, deadline {deadline}")]
    EmptyWindow { arrival: Time, deadline: Time },
    #[error("job multiplicity must be at least 1")]
    ZeroMultiplicity,
    #[error("total workload overflows u64")]
    WorkloadOverflow,
    #[error("universal deadline must be at least 1")]
    ZeroDeadline,
    #[error("sequence length {len} does not match deadline {deadline}")]
    LengthMismatch { deadline: Time, len: usize },
    #[error("negative weight at slot {slot}")]
    NegativeWeight { slot: Time },
    #[error("weight at slot {slot} is not an integer")]
    FractionalWeight { slot: Time },
    #[error("weight at slot {slot} exceeds u64 range")]
    WeightTooLarge { slot: Time },
}

/// Half-open time interval `[left, right)` covering slots `left..right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    left: Time,
    right: Time,
}

impl Interval {
    /// Panics if `left >= right`; intervals are always non-empty.
    pub fn new(left: Time, right: Time) -> Self {
        assert!(left < right, "empty interval [{left}, {right})");
        Interval { left, right }
    }

    pub fn left(&self) -> Time {
        self.left
    }

    pub fn right(&self) -> Time {
        self.right
    }

    pub fn len(&self) -> u64 {
        self.right - self.left
    }

    pub fn contains_slot(&self, t: Time) -> bool {
        self.left <= t && t < self.right
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.left, self.right)
    }
}

/// A group of identical unit jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Job {
    pub arrival: Time,
    pub deadline: Time,
    pub multiplicity: u64,
}

impl Job {
    pub fn new(arrival: Time, deadline: Time, multiplicity: u64) -> Result<Self, InstanceError> {
        if deadline < arrival + 1 {
            return Err(InstanceError::EmptyWindow { arrival, deadline });
        }
        if multiplicity == 0 {
            return Err(InstanceError::ZeroMultiplicity);
        }
        Ok(Job {
            arrival,
            deadline,
            multiplicity,
        })
    }

    /// The slots during which this job may execute.
    pub fn window(&self) -> Interval {
        Interval::new(self.arrival, self.deadline)
    }
}

/// Multiset of unit jobs, aggregated by `(arrival, deadline)`.
///
/// Aggregation keeps instances with multiplicities in the tens of millions
/// cheap to store and simulate: all per-slot work is proportional to the
/// number of distinct groups, never to the number of jobs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JobSet {
    groups: BTreeMap<(Time, Time), u64>,
    total: u64,
}

impl JobSet {
    pub fn new() -> Self {
        JobSet::default()
    }

    pub fn from_jobs(jobs: impl IntoIterator<Item = Job>) -> Result<Self, InstanceError> {
        let mut set = JobSet::new();
        for job in jobs {
            set.insert(job)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, job: Job) -> Result<(), InstanceError> {
        self.total = self
            .total
            .checked_add(job.multiplicity)
            .ok_or(InstanceError::WorkloadOverflow)?;
        *self.groups.entry((job.arrival, job.deadline)).or_insert(0) += job.multiplicity;
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Total number of jobs (sum of multiplicities).
    pub fn total_jobs(&self) -> u64 {
        self.total
    }

    /// Largest deadline, or 0 for the empty set.
    pub fn horizon(&self) -> Time {
        self.groups.keys().map(|&(_, d)| d).max().unwrap_or(0)
    }

    /// Iterates groups in `(arrival, deadline)` order.
    pub fn groups(&self) -> impl Iterator<Item = Job> + '_ {
        self.groups.iter().map(|(&(arrival, deadline), &m)| Job {
            arrival,
            deadline,
            multiplicity: m,
        })
    }

    /// Distinct arrival times, ascending.
    pub fn arrivals(&self) -> Vec<Time> {
        let mut v: Vec<Time> = self.groups.keys().map(|&(a, _)| a).collect();
        v.dedup();
        v
    }

    /// Distinct deadlines, ascending.
    pub fn deadlines(&self) -> Vec<Time> {
        let mut v: Vec<Time> = self.groups.keys().map(|&(_, d)| d).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Jobs whose entire window `[arrival, deadline)` lies inside `iv`.
    pub fn count_within(&self, iv: Interval) -> u64 {
        self.groups
            .iter()
            .filter(|(&(a, d), _)| iv.left() <= a && d <= iv.right())
            .map(|(_, &m)| m)
            .sum()
    }

    /// Sub-multiset of jobs that have arrived by slot `t` (arrival ≤ t).
    pub fn prefix(&self, t: Time) -> JobSet {
        let mut result = JobSet::new();
        for ((a, d), m) in &self.groups {
            if *a <= t {
                result.groups.insert((*a, *d), *m);
                result.total += m;
            }
        }
        result
    }

    /// Groups arriving exactly at slot `t`.
    pub fn arriving_at(&self, t: Time) -> Vec<Job> {
        self.groups
            .range((t, 0)..(t, Time::MAX))
            .map(|(&(arrival, deadline), &m)| Job {
                arrival,
                deadline,
                multiplicity: m,
            })
            .collect()
    }
}

/// Universal-deadline instance `(d, σ)`: `σ(t)` workload arrives at slot
/// `t` and everything is due at `d`. Weights are exact non-negative
/// rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSequence {
    deadline: Time,
    sigma: Vec<Rational>,
}

impl ArrivalSequence {
    pub fn new(deadline: Time, sigma: Vec<Rational>) -> Result<Self, InstanceError> {
        if deadline == 0 {
            return Err(InstanceError::ZeroDeadline);
        }
        if sigma.len() as u64 != deadline {
            return Err(InstanceError::LengthMismatch {
                deadline,
                len: sigma.len(),
            });
        }
        if let Some(slot) = sigma.iter().position(|w| w.is_negative()) {
            return Err(InstanceError::NegativeWeight { slot: slot as Time });
        }
        Ok(ArrivalSequence { deadline, sigma })
    }

    /// Builds a sequence from integer per-slot counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self, InstanceError> {
        ArrivalSequence::new(
            counts.len() as Time,
            counts.iter().map(|&c| integer(c)).collect(),
        )
    }

    pub fn deadline(&self) -> Time {
        self.deadline
    }

    pub fn sigma(&self) -> &[Rational] {
        &self.sigma
    }

    pub fn weight_at(&self, t: Time) -> &Rational {
        &self.sigma[t as usize]
    }

    pub fn total(&self) -> Rational {
        self.sigma.iter().sum()
    }

    /// Arrivals restricted to slots ≤ t; later slots are zeroed.
    pub fn prefix(&self, t: Time) -> ArrivalSequence {
        let mut sigma = self.sigma.clone();
        for (i, w) in sigma.iter_mut().enumerate() {
            if i as Time > t {
                *w = Rational::zero();
            }
        }
        ArrivalSequence {
            deadline: self.deadline,
            sigma,
        }
    }

    /// True when `σ(t) ≤ σ(t+1)` for every slot.
    pub fn is_nondecreasing(&self) -> bool {
        self.sigma.windows(2).all(|w| w[0] <= w[1])
    }

    /// Converts to a [`JobSet`] with one group per positive slot.
    /// Fails on fractional weights.
    pub fn to_job_set(&self) -> Result<JobSet, InstanceError> {
        let mut set = JobSet::new();
        for (slot, w) in self.sigma.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            if !w.is_integer() {
                return Err(InstanceError::FractionalWeight { slot: slot as Time });
            }
            let m = w
                .numer()
                .to_u64()
                .ok_or(InstanceError::WeightTooLarge { slot: slot as Time })?;
            set.insert(Job::new(slot as Time, self.deadline, m)?)?;
        }
        Ok(set)
    }

    /// Workload of `[left, right)`: jobs all share deadline `d`, so the
    /// count is `Σ_{left ≤ t < d} σ(t)` when `right ≥ d` and 0 otherwise.
    pub fn weight_within(&self, iv: Interval) -> Rational {
        if iv.right() < self.deadline {
            return Rational::zero();
        }
        let from = iv.left().min(self.deadline) as usize;
        self.sigma[from..].iter().sum()
    }
}

/// Shared read-only view over both instance representations: enough to
/// drive the density calculus in [`crate::density`].
pub trait Instance {
    /// Exact workload whose windows lie inside `iv`.
    fn workload(&self, iv: Interval) -> Rational;

    /// Distinct arrival slots carrying positive workload, ascending.
    fn arrival_points(&self) -> Vec<Time>;

    /// Distinct deadlines, ascending.
    fn deadline_points(&self) -> Vec<Time>;

    /// Largest deadline (0 when empty).
    fn horizon(&self) -> Time;

    /// Total workload of the instance.
    fn total_workload(&self) -> Rational;

    /// Restriction to arrivals at slots ≤ t.
    fn prefix_at(&self, t: Time) -> Self
    where
        Self: Sized;
}

impl Instance for JobSet {
    fn workload(&self, iv: Interval) -> Rational {
        integer(self.count_within(iv))
    }

    fn arrival_points(&self) -> Vec<Time> {
        self.arrivals()
    }

    fn deadline_points(&self) -> Vec<Time> {
        self.deadlines()
    }

    fn horizon(&self) -> Time {
        self.horizon()
    }

    fn total_workload(&self) -> Rational {
        integer(self.total_jobs())
    }

    fn prefix_at(&self, t: Time) -> Self {
        self.prefix(t)
    }
}

impl Instance for ArrivalSequence {
    fn workload(&self, iv: Interval) -> Rational {
        self.weight_within(iv)
    }

    fn arrival_points(&self) -> Vec<Time> {
        self.sigma
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(t, _)| t as Time)
            .collect()
    }

    fn deadline_points(&self) -> Vec<Time> {
        if self.sigma.iter().any(|w| !w.is_zero()) {
            vec![self.deadline]
        } else {
            vec![]
        }
    }

    fn horizon(&self) -> Time {
        self.deadline
    }

    fn total_workload(&self) -> Rational {
        self.total()
    }

    fn prefix_at(&self, t: Time) -> Self {
        self.prefix(t)
    }
}

/// Exact integer total of a job set as a `BigInt`, for arithmetic that
/// mixes counts with rationals.
pub fn total_as_bigint(jobs: &JobSet) -> BigInt {
    BigInt::from(jobs.total_jobs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn job_validation() {
        assert!(Job::new(0, 1, 1).is_ok());
        assert!(matches!(
            Job::new(3, 3, 1),
            Err(InstanceError::EmptyWindow { .. })
        ));
        assert!(matches!(
            Job::new(0, 2, 0),
            Err(InstanceError::ZeroMultiplicity)
        ));
    }

    #[test]
    fn job_set_aggregates_duplicate_groups() {
        let set = JobSet::from_jobs([
            Job::new(0, 2, 2).unwrap(),
            Job::new(0, 2, 1).unwrap(),
            Job::new(1, 2, 1).unwrap(),
        ])
        .unwrap();
        assert_eq!(set.total_jobs(), 4);
        assert_eq!(set.groups().count(), 2);
        assert_eq!(set.horizon(), 2);
    }

    #[test]
    fn count_within_filters_by_window() {
        let set = JobSet::from_jobs([
            Job::new(0, 2, 2).unwrap(),
            Job::new(1, 2, 1).unwrap(),
            Job::new(0, 5, 1).unwrap(),
        ])
        .unwrap();
        assert_eq!(set.count_within(Interval::new(0, 2)), 3);
        assert_eq!(set.count_within(Interval::new(0, 3)), 3);
        assert_eq!(set.count_within(Interval::new(0, 5)), 4);
        assert_eq!(set.count_within(Interval::new(1, 2)), 1);
    }

    #[test]
    fn prefix_keeps_early_arrivals() {
        let set = JobSet::from_jobs([Job::new(0, 3, 3).unwrap(), Job::new(2, 3, 1).unwrap()])
            .unwrap();
        assert_eq!(set.prefix(0).total_jobs(), 3);
        assert_eq!(set.prefix(1).total_jobs(), 3);
        assert_eq!(set.prefix(2).total_jobs(), 4);
        // Nothing arrives before slot 0.
        let late = JobSet::from_jobs([Job::new(1, 2, 1).unwrap()]).unwrap();
        assert!(late.prefix(0).is_empty());
    }

    #[test]
    fn prefix_nests_as_multisets() {
        let set = JobSet::from_jobs([
            Job::new(0, 4, 2).unwrap(),
            Job::new(1, 3, 1).unwrap(),
            Job::new(3, 4, 5).unwrap(),
        ])
        .unwrap();
        for t in 0..4 {
            let early = set.prefix(t);
            let later = set.prefix(t + 1);
            for g in early.groups() {
                assert!(later
                    .groups()
                    .any(|h| h.arrival == g.arrival
                        && h.deadline == g.deadline
                        && h.multiplicity >= g.multiplicity));
            }
        }
    }

    #[test]
    fn sequence_validation() {
        assert!(ArrivalSequence::new(2, vec![integer(1)]).is_err());
        assert!(ArrivalSequence::new(0, vec![]).is_err());
        assert!(ArrivalSequence::new(2, vec![integer(1), ratio(-1, 2)]).is_err());
        let seq = ArrivalSequence::from_counts(&[3, 3, 3]).unwrap();
        assert_eq!(seq.total(), integer(9));
    }

    #[test]
    fn sequence_workload_needs_full_right_end() {
        let seq = ArrivalSequence::from_counts(&[3, 3, 3]).unwrap();
        assert_eq!(seq.weight_within(Interval::new(0, 3)), integer(9));
        assert_eq!(seq.weight_within(Interval::new(1, 3)), integer(6));
        assert_eq!(seq.weight_within(Interval::new(0, 2)), integer(0));
        assert_eq!(seq.weight_within(Interval::new(0, 7)), integer(9));
    }

    #[test]
    fn sequence_to_job_set_requires_integers() {
        let seq = ArrivalSequence::new(2, vec![ratio(3, 2), integer(1)]).unwrap();
        assert!(matches!(
            seq.to_job_set(),
            Err(InstanceError::FractionalWeight { slot: 0 })
        ));
        let ok = ArrivalSequence::from_counts(&[2, 0, 1]).unwrap().to_job_set().unwrap();
        assert_eq!(ok.total_jobs(), 3);
        assert_eq!(ok.groups().count(), 2);
    }
}
