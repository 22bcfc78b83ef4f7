//! Deterministic earliest-deadline-first simulation under per-slot
//! machine budgets, an interval-demand feasibility check, and a
//! brute-force optimum oracle.
//!
//! Jobs are processed as `(arrival, deadline)` groups with counts, so an
//! instance with multiplicities in the tens of millions simulates in time
//! proportional to slots × distinct groups, not to the number of jobs.
//!
//! A job that is still unfinished when its deadline passes is recorded as
//! a miss at that slot and removed from the ready queue; dead jobs never
//! consume budget.

use crate::instance::{Instance, Interval, Job, JobSet, Time};
use std::collections::BTreeMap;

/// Per-slot machine budgets for slots `0..horizon`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetTrace {
    budgets: Vec<u64>,
}

impl BudgetTrace {
    pub fn new(budgets: Vec<u64>) -> Self {
        BudgetTrace { budgets }
    }

    /// Constant budget `m` for every slot in `0..horizon`.
    pub fn constant(m: u64, horizon: Time) -> Self {
        BudgetTrace {
            budgets: vec![m; horizon as usize],
        }
    }

    /// Budget at slot `t` (0 beyond the recorded horizon).
    pub fn get(&self, t: Time) -> u64 {
        self.budgets.get(t as usize).copied().unwrap_or(0)
    }

    pub fn horizon(&self) -> Time {
        self.budgets.len() as Time
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.budgets
    }

    /// Total budget over the slots of `iv`.
    pub fn sum_over(&self, iv: Interval) -> u64 {
        let from = (iv.left() as usize).min(self.budgets.len());
        let to = (iv.right() as usize).min(self.budgets.len());
        self.budgets[from..to].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.budgets.iter().sum()
    }

    pub fn peak(&self) -> u64 {
        self.budgets.iter().copied().max().unwrap_or(0)
    }
}

/// Outcome of an EDF run: per-slot execution counts and assignments,
/// ready-queue sizes, and miss accounting.
#[derive(Debug, Clone, Default)]
pub struct ScheduleTrace {
    /// Jobs executed at each slot.
    pub executed: Vec<u64>,
    /// Ready-queue size at each slot, after arrivals and expiry, before
    /// execution.
    pub ready: Vec<u64>,
    /// Job groups executed at each slot.
    pub assignment: Vec<Vec<Job>>,
    /// Jobs that missed their deadline, by group.
    pub missed: BTreeMap<(Time, Time), u64>,
    /// Misses recorded at each slot; the final entry (index `horizon`)
    /// collects jobs whose deadline coincides with the end of the run.
    pub misses_at: Vec<u64>,
    /// Maximum number of jobs executed in any single slot.
    pub peak_machines: u64,
}

impl ScheduleTrace {
    pub fn misses(&self) -> u64 {
        self.missed.values().sum()
    }

    pub fn executed_total(&self) -> u64 {
        self.executed.iter().sum()
    }

    pub fn horizon(&self) -> Time {
        self.executed.len() as Time
    }

    /// Cumulative misses up to and including slot `t`.
    pub fn cumulative_misses(&self, t: Time) -> u64 {
        self.misses_at
            .iter()
            .take(t as usize + 1)
            .sum()
    }
}

/// Incremental EDF state shared by the offline simulator and the online
/// run loop.
#[derive(Debug, Default)]
pub(crate) struct EdfEngine {
    // (deadline, arrival) -> pending count; EDF order with earlier
    // arrivals first among equal deadlines.
    queue: BTreeMap<(Time, Time), u64>,
    pending: u64,
    trace: ScheduleTrace,
}

impl EdfEngine {
    pub fn new() -> Self {
        EdfEngine::default()
    }

    pub fn arrive(&mut self, jobs: &[Job]) {
        for job in jobs {
            *self.queue.entry((job.deadline, job.arrival)).or_insert(0) += job.multiplicity;
            self.pending += job.multiplicity;
        }
    }

    fn expire(&mut self, t: Time) -> u64 {
        let mut expired = 0;
        while let Some((&(deadline, arrival), &count)) = self.queue.iter().next() {
            if deadline > t {
                break;
            }
            self.queue.remove(&(deadline, arrival));
            self.pending -= count;
            expired += count;
            *self.trace.missed.entry((arrival, deadline)).or_insert(0) += count;
        }
        expired
    }

    /// Runs one slot: expire overdue jobs, then execute up to `budget`
    /// ready jobs in EDF order.
    pub fn step(&mut self, t: Time, budget: u64) {
        debug_assert_eq!(self.trace.executed.len() as Time, t);
        let expired = self.expire(t);
        self.trace.misses_at.push(expired);
        self.trace.ready.push(self.pending);

        let mut remaining = budget;
        let mut executed = 0;
        let mut slot_assignment = Vec::new();
        while remaining > 0 {
            let Some((&(deadline, arrival), &count)) = self.queue.iter().next() else {
                break;
            };
            let take = count.min(remaining);
            if take == count {
                self.queue.remove(&(deadline, arrival));
            } else {
                *self.queue.get_mut(&(deadline, arrival)).unwrap() -= take;
            }
            self.pending -= take;
            remaining -= take;
            executed += take;
            slot_assignment.push(Job {
                arrival,
                deadline,
                multiplicity: take,
            });
        }
        self.trace.executed.push(executed);
        self.trace.assignment.push(slot_assignment);
        self.trace.peak_machines = self.trace.peak_machines.max(executed);
    }

    /// Expires everything still pending (run horizon reached) and yields
    /// the finished trace.
    pub fn finish(mut self, horizon: Time) -> ScheduleTrace {
        let expired = self.expire(horizon);
        self.trace.misses_at.push(expired);
        debug_assert_eq!(self.pending, 0, "jobs left beyond their deadlines");
        self.trace
    }
}

/// Simulates EDF over `jobs` under `budgets`.
///
/// At each slot the engine executes `min(budget, ready)` jobs of earliest
/// deadline, breaking ties by earlier arrival. Deterministic.
pub fn simulate_edf(jobs: &JobSet, budgets: &BudgetTrace) -> ScheduleTrace {
    let horizon = jobs.horizon().max(budgets.horizon());
    let mut engine = EdfEngine::new();
    for t in 0..horizon {
        engine.arrive(&jobs.arriving_at(t));
        engine.step(t, budgets.get(t));
    }
    engine.finish(horizon)
}

/// A violated demand interval: the budget available inside it is smaller
/// than the workload that must complete inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationCertificate {
    pub interval: Interval,
    pub budget: u64,
    pub demand: u64,
}

/// Verdict of the interval-demand feasibility check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeasibilityVerdict {
    Feasible,
    Infeasible(ViolationCertificate),
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityVerdict::Feasible)
    }
}

/// EDF under `budgets` completes every job of `jobs` if and only if, for
/// every interval, the budget inside it covers the workload confined to
/// it. Checking intervals with left ends at arrivals (plus 0) and right
/// ends at deadlines suffices: shrinking an interval to the hull of the
/// jobs it confines lowers the budget side and keeps the demand side.
///
/// On failure, returns the violated interval with the smallest left end
/// (then the smallest right end).
pub fn feasible_by_inequalities(jobs: &JobSet, budgets: &BudgetTrace) -> FeasibilityVerdict {
    let mut lefts = vec![0];
    lefts.extend(jobs.arrivals());
    lefts.dedup();
    let rights = jobs.deadlines();
    for &l in &lefts {
        for &r in &rights {
            if r <= l {
                continue;
            }
            let iv = Interval::new(l, r);
            let demand = jobs.count_within(iv);
            let budget = budgets.sum_over(iv);
            if budget < demand {
                return FeasibilityVerdict::Infeasible(ViolationCertificate {
                    interval: iv,
                    budget,
                    demand,
                });
            }
        }
    }
    FeasibilityVerdict::Feasible
}

/// Smallest constant machine count under which EDF finishes every job,
/// found by binary search with full simulation. Independent of the
/// density formula in [`crate::density::opt_machines`], which it
/// cross-checks in tests. 0 for the empty set.
pub fn opt_bruteforce(jobs: &JobSet) -> u64 {
    if jobs.is_empty() {
        return 0;
    }
    let horizon = jobs.horizon();
    let feasible = |m: u64| simulate_edf(jobs, &BudgetTrace::constant(m, horizon)).misses() == 0;
    let mut lo = 1;
    let mut hi = jobs.total_jobs();
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Job;

    fn jobs(groups: &[(Time, Time, u64)]) -> JobSet {
        JobSet::from_jobs(
            groups
                .iter()
                .map(|&(a, d, m)| Job::new(a, d, m).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn edf_prioritizes_earliest_deadline() {
        let set = jobs(&[(0, 1, 1), (0, 3, 1)]);
        let trace = simulate_edf(&set, &BudgetTrace::constant(1, 3));
        assert_eq!(trace.misses(), 0);
        assert_eq!(trace.assignment[0][0].deadline, 1);
        assert_eq!(trace.assignment[1][0].deadline, 3);
        assert_eq!(trace.executed, vec![1, 1, 0]);
    }

    #[test]
    fn overloaded_slot_pair_misses_one() {
        let set = jobs(&[(0, 2, 3)]);
        let trace = simulate_edf(&set, &BudgetTrace::constant(1, 2));
        assert_eq!(trace.misses(), 1);
        assert_eq!(trace.executed_total(), 2);
        assert_eq!(trace.missed.get(&(0, 2)), Some(&1));
        // The miss is recorded at the slot the deadline passes.
        assert_eq!(trace.misses_at, vec![0, 0, 1]);
    }

    #[test]
    fn conservation_of_workload() {
        let set = jobs(&[(0, 2, 3), (1, 4, 2), (3, 5, 7)]);
        let trace = simulate_edf(&set, &BudgetTrace::constant(2, 5));
        assert_eq!(trace.executed_total() + trace.misses(), set.total_jobs());
    }

    #[test]
    fn inequality_check_finds_smallest_certificate() {
        let set = jobs(&[(0, 1, 1), (0, 2, 1), (1, 2, 1)]);
        let verdict = feasible_by_inequalities(&set, &BudgetTrace::new(vec![1, 1]));
        match verdict {
            FeasibilityVerdict::Infeasible(cert) => {
                assert_eq!(cert.interval, Interval::new(0, 2));
                assert_eq!(cert.budget, 2);
                assert_eq!(cert.demand, 3);
            }
            FeasibilityVerdict::Feasible => panic!("expected a violation"),
        }
    }

    #[test]
    fn inequality_check_accepts_tight_budget() {
        let set = jobs(&[(0, 2, 3)]);
        assert!(feasible_by_inequalities(&set, &BudgetTrace::new(vec![2, 1])).is_feasible());
        assert!(feasible_by_inequalities(&JobSet::new(), &BudgetTrace::new(vec![0])).is_feasible());
    }

    #[test]
    fn brute_force_optimum() {
        assert_eq!(opt_bruteforce(&jobs(&[(0, 2, 3)])), 2);
        assert_eq!(opt_bruteforce(&jobs(&[(0, 1, 7)])), 7);
        assert_eq!(opt_bruteforce(&JobSet::new()), 0);
        // Uniform square: d^2 jobs in d slots need d machines.
        let d = 5;
        let square = JobSet::from_jobs(
            (0..d).map(|t| Job::new(t, d, d).unwrap()),
        )
        .unwrap();
        assert_eq!(opt_bruteforce(&square), d);
    }

    #[test]
    fn budget_beyond_horizon_is_zero() {
        let b = BudgetTrace::new(vec![2, 1]);
        assert_eq!(b.get(5), 0);
        assert_eq!(b.sum_over(Interval::new(0, 10)), 3);
    }
}
