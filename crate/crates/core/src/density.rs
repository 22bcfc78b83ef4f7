//! Workload-density calculus.
//!
//! The density of an interval `[ℓ, r)` is the workload that must be fully
//! served inside it divided by its length. Its maxima drive everything
//! else in the crate: the ceiling of the global maximum density equals
//! the optimal offline machine count, and the online policies in
//! [`crate::policy`] budget machines proportionally to the maximum
//! density of the arrived prefix.
//!
//! Maximization is restricted to candidate endpoints — left ends at
//! arrival times, right ends at deadlines — because shrinking an interval
//! to the tightest hull of the jobs it counts never decreases density.
//! The test module checks this restriction against a scan of every
//! interval on small instances.

use crate::instance::{ArrivalSequence, Instance, Interval, Job, JobSet, Time};
use crate::rational::{ceil_u64, Rational};
use num_bigint::BigInt;
use num_traits::Zero;

/// Exact non-negative workload-per-slot value.
pub type Density = Rational;

/// Workload of `iv` in `inst`, as an exact rational.
pub fn workload<I: Instance>(inst: &I, iv: Interval) -> Rational {
    inst.workload(iv)
}

/// Workload per slot of `iv`: `workload(inst, iv) / len(iv)`.
pub fn density<I: Instance>(inst: &I, iv: Interval) -> Density {
    inst.workload(iv) / Rational::from_integer(BigInt::from(iv.len()))
}

/// Maximum density over intervals containing slot `t`, together with its
/// defining interval. Among maximizing intervals the one with the
/// smallest left end wins; among those, the smallest right end.
///
/// For an empty instance the result is `(0, [t, t+1))`.
pub fn max_density_at<I: Instance>(inst: &I, t: Time) -> (Density, Interval) {
    let mut lefts: Vec<Time> = inst
        .arrival_points()
        .into_iter()
        .filter(|&a| a <= t)
        .collect();
    lefts.push(t);
    lefts.dedup();
    let mut rights = vec![t + 1];
    rights.extend(inst.deadline_points().into_iter().filter(|&d| d > t + 1));

    let mut best: Option<(Density, Interval)> = None;
    for &l in &lefts {
        for &r in &rights {
            let iv = Interval::new(l, r);
            let d = density(inst, iv);
            match &best {
                Some((b, _)) if *b >= d => {}
                _ => best = Some((d, iv)),
            }
        }
    }
    best.expect("candidate grid always contains [t, t+1)")
}

/// Defining interval of the maximum density among intervals containing `t`.
pub fn defining_interval<I: Instance>(inst: &I, t: Time) -> Interval {
    max_density_at(inst, t).1
}

/// Global maximum density over all intervals (0 for an empty instance).
pub fn max_density<I: Instance>(inst: &I) -> Density {
    let lefts = inst.arrival_points();
    let rights = inst.deadline_points();
    let mut best = Density::zero();
    for &l in &lefts {
        for &r in &rights {
            if r <= l {
                continue;
            }
            let d = density(inst, Interval::new(l, r));
            if d > best {
                best = d;
            }
        }
    }
    best
}

/// Machines needed by an optimal offline schedule: `⌈max_density⌉`.
/// The empty instance needs 0.
pub fn opt_machines<I: Instance>(inst: &I) -> u64 {
    ceil_u64(&max_density(inst))
}

/// Per-slot maximum densities of growing arrival prefixes.
///
/// `curve[t]` is the maximum density over everything arriving at slots
/// `0..=t`; the curve is non-decreasing because prefixes only grow.
pub trait PrefixDensity: Instance {
    fn prefix_density_curve(&self, upto: Time) -> Vec<Density>;
}

impl PrefixDensity for JobSet {
    fn prefix_density_curve(&self, upto: Time) -> Vec<Density> {
        let mut tracker = DensityTracker::new();
        let mut curve = Vec::with_capacity(upto as usize);
        for t in 0..upto {
            tracker.observe(t, &self.arriving_at(t));
            curve.push(tracker.max_density());
        }
        curve
    }
}

impl PrefixDensity for ArrivalSequence {
    // All deadlines coincide, so every maximizing interval is [ℓ, d) and
    // the curve needs only prefix sums of σ.
    fn prefix_density_curve(&self, upto: Time) -> Vec<Density> {
        let d = self.deadline();
        let mut sums = Vec::with_capacity(self.sigma().len() + 1);
        sums.push(Rational::zero());
        for w in self.sigma() {
            let last = sums.last().unwrap().clone();
            sums.push(last + w);
        }
        let mut curve = Vec::with_capacity(upto as usize);
        for t in 0..upto {
            let have = (t + 1).min(d) as usize;
            let mut best = Density::zero();
            for l in 0..have {
                let w = &sums[have] - &sums[l];
                if w.is_zero() {
                    continue;
                }
                let val = w / Rational::from_integer(BigInt::from(d - l as Time));
                if val > best {
                    best = val;
                }
            }
            curve.push(best);
        }
        curve
    }
}

/// Streaming maximum density over growing prefixes of a job stream.
///
/// Feed arrival batches in slot order with [`observe`](Self::observe);
/// the current value is the maximum density of everything seen so far.
/// Counts are plain integers and comparisons are cross-multiplications in
/// `u128`, so a fuzz campaign never touches big-integer arithmetic in the
/// hot loop.
#[derive(Debug, Clone)]
pub struct DensityTracker {
    arrivals: Vec<Time>,
    deadlines: Vec<Time>,
    counts: Vec<Vec<u64>>,
    acc: Vec<u64>,
    best_num: u64,
    best_den: u64,
    best_interval: Option<Interval>,
    last_slot: Option<Time>,
}

impl Default for DensityTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl DensityTracker {
    pub fn new() -> Self {
        DensityTracker {
            arrivals: Vec::new(),
            deadlines: Vec::new(),
            counts: Vec::new(),
            acc: Vec::new(),
            best_num: 0,
            best_den: 1,
            best_interval: None,
            last_slot: None,
        }
    }

    /// Ingests the jobs arriving at slot `t`. Slots must be fed in
    /// strictly increasing order; slots without arrivals may be skipped
    /// or fed with an empty batch.
    pub fn observe(&mut self, t: Time, arrivals: &[Job]) {
        if let Some(last) = self.last_slot {
            assert!(t > last, "slots must be observed in increasing order");
        }
        self.last_slot = Some(t);
        if arrivals.is_empty() {
            return;
        }
        for job in arrivals {
            assert_eq!(job.arrival, t, "batch contains a job not arriving at t");
            self.add_group(t, job.deadline, job.multiplicity);
        }
        self.rescan();
    }

    fn add_group(&mut self, arrival: Time, deadline: Time, count: u64) {
        if count == 0 {
            return;
        }
        if self.arrivals.last() != Some(&arrival) {
            self.arrivals.push(arrival);
            self.counts.push(vec![0; self.deadlines.len()]);
        }
        let dj = match self.deadlines.binary_search(&deadline) {
            Ok(i) => i,
            Err(i) => {
                self.deadlines.insert(i, deadline);
                for row in &mut self.counts {
                    row.insert(i, 0);
                }
                i
            }
        };
        let ai = self.arrivals.len() - 1;
        self.counts[ai][dj] = self.counts[ai][dj]
            .checked_add(count)
            .expect("group count overflow");
    }

    // Rescan of candidate intervals. acc[dj] accumulates, from the bottom
    // arrival row upward, the workload with arrival >= the current row's
    // arrival and deadline <= deadlines[dj].
    fn rescan(&mut self) {
        let d_n = self.deadlines.len();
        self.acc.clear();
        self.acc.resize(d_n, 0);
        for ai in (0..self.arrivals.len()).rev() {
            let left = self.arrivals[ai];
            let row = &self.counts[ai];
            let mut run = 0u64;
            for dj in 0..d_n {
                run = run.checked_add(row[dj]).expect("workload overflow");
                let total = self.acc[dj].checked_add(run).expect("workload overflow");
                self.acc[dj] = total;
                let right = self.deadlines[dj];
                if right <= left || total == 0 {
                    continue;
                }
                let den = right - left;
                if (total as u128) * (self.best_den as u128)
                    > (self.best_num as u128) * (den as u128)
                {
                    self.best_num = total;
                    self.best_den = den;
                    self.best_interval = Some(Interval::new(left, right));
                }
            }
        }
    }

    /// Current maximum density as `(numerator, denominator)`, not
    /// necessarily reduced. `(0, 1)` before any workload is seen.
    pub fn max_density_parts(&self) -> (u64, u64) {
        (self.best_num, self.best_den)
    }

    /// Current maximum density as an exact rational.
    pub fn max_density(&self) -> Density {
        Rational::new(BigInt::from(self.best_num), BigInt::from(self.best_den))
    }

    /// A maximizing interval, once any workload has been seen.
    pub fn max_interval(&self) -> Option<Interval> {
        self.best_interval
    }

    /// `⌈max_density⌉`: the optimal machine count for the seen prefix.
    pub fn opt_machines(&self) -> u64 {
        if self.best_num == 0 {
            0
        } else {
            self.best_num.div_ceil(self.best_den)
        }
    }

    /// `⌈c · max_density⌉`, exact.
    pub fn scaled_ceil(&self, c: &Rational) -> u64 {
        crate::rational::ceil_scaled(c, self.best_num, self.best_den)
    }

    /// `⌊c · max_density⌋`, exact.
    pub fn scaled_floor(&self, c: &Rational) -> u64 {
        crate::rational::floor_u64(&(c * self.max_density()))
    }
}

/// Runs a fresh tracker over a complete job set, slot by slot.
pub fn track_job_set(jobs: &JobSet) -> DensityTracker {
    let mut tracker = DensityTracker::new();
    for t in 0..jobs.horizon() {
        tracker.observe(t, &jobs.arriving_at(t));
    }
    tracker
}
