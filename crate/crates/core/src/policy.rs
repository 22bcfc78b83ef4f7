//! Online scheduling policies and the run loop that drives them.
//!
//! A policy sees arrivals one slot at a time and must emit a machine
//! budget for the current slot using only what has arrived so far. The
//! engine then executes up to that many ready jobs in EDF order; when
//! fewer jobs are ready than the budget allows, the surplus is unused.

use crate::density::{max_density_at, DensityTracker};
use crate::edf::{BudgetTrace, EdfEngine, ScheduleTrace};
use crate::instance::{Job, JobSet, Time};
use crate::rational::{ceil_u64, integer, Rational};
use num_traits::Signed;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("scaling factor must be positive, got {0}")]
    NonPositiveFactor(String),
    #[error("policy requires a universal deadline: saw deadline {got} after deadline {expected}")]
    MixedDeadlines { expected: Time, got: Time },
}

/// A stateful online decision procedure.
///
/// `budget_for_slot` is called once per slot in increasing order with the
/// jobs arriving at that slot, and returns the machine budget for the
/// slot. Causality — the budget may depend only on slots seen so far —
/// is checked in tests by replaying truncated instances.
pub trait OnlinePolicy {
    fn name(&self) -> String;

    fn budget_for_slot(&mut self, t: Time, arrivals: &[Job]) -> Result<u64, PolicyError>;
}

/// Budgets `⌈c · ϱ̂(t)⌉` machines at slot `t`, where `ϱ̂(t)` is the maximum
/// workload density over everything that has arrived so far (a running
/// maximum, hence a non-decreasing budget curve).
pub struct Pvd {
    c: Rational,
    tracker: DensityTracker,
}

impl Pvd {
    pub fn new(c: Rational) -> Result<Self, PolicyError> {
        if !c.is_positive() {
            return Err(PolicyError::NonPositiveFactor(
                crate::rational::format_rational(&c),
            ));
        }
        Ok(Pvd {
            c,
            tracker: DensityTracker::new(),
        })
    }
}

impl OnlinePolicy for Pvd {
    fn name(&self) -> String {
        format!("pvd:{}", crate::rational::format_rational(&self.c))
    }

    fn budget_for_slot(&mut self, t: Time, arrivals: &[Job]) -> Result<u64, PolicyError> {
        self.tracker.observe(t, arrivals);
        Ok(self.tracker.scaled_ceil(&self.c))
    }
}

/// Budgets `2 · ⌈ρ̂(t)⌉` machines at slot `t`, where `ρ̂(t)` is the maximum
/// density among intervals *containing* `t` — not a running maximum.
///
/// This is the earlier packing-via-density rule for the restricted
/// setting where every job shares one deadline, kept here as the
/// reference implementation for reproducing its infeasibility. It
/// rejects instances with mixed deadlines.
pub struct PvdShiYe {
    deadline: Option<Time>,
    seen: JobSet,
}

impl PvdShiYe {
    pub fn new() -> Self {
        PvdShiYe {
            deadline: None,
            seen: JobSet::new(),
        }
    }
}

impl Default for PvdShiYe {
    fn default() -> Self {
        Self::new()
    }
}

impl OnlinePolicy for PvdShiYe {
    fn name(&self) -> String {
        "shi-ye".to_string()
    }

    fn budget_for_slot(&mut self, t: Time, arrivals: &[Job]) -> Result<u64, PolicyError> {
        for job in arrivals {
            match self.deadline {
                None => self.deadline = Some(job.deadline),
                Some(d) if d != job.deadline => {
                    return Err(PolicyError::MixedDeadlines {
                        expected: d,
                        got: job.deadline,
                    })
                }
                Some(_) => {}
            }
            self.seen
                .insert(*job)
                .expect("job stream workload overflows u64");
        }
        if self.seen.is_empty() {
            return Ok(0);
        }
        let (rho, _) = max_density_at(&self.seen, t);
        Ok(2 * ceil_u64(&rho))
    }
}

/// Everything produced by one online run: the budget curve, the schedule,
/// and the competitive-ratio profile against the offline optimum of each
/// arrival prefix.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub policy: String,
    pub budgets: BudgetTrace,
    pub trace: ScheduleTrace,
    /// Optimal machine count of the prefix arrived by each slot.
    pub opt_curve: Vec<u64>,
    /// `budget(t) / opt(prefix(t))`, exact; `None` while the prefix is
    /// empty.
    pub ratio_profile: Vec<Option<Rational>>,
    pub peak_ratio: Option<Rational>,
    pub misses: u64,
}

impl RunReport {
    pub fn total_budget(&self) -> u64 {
        self.budgets.total()
    }
}

/// Feeds `jobs` to `policy` slot by slot, simulating EDF under the
/// emitted budgets. Deterministic.
pub fn run_online(jobs: &JobSet, policy: &mut dyn OnlinePolicy) -> Result<RunReport, PolicyError> {
    let horizon = jobs.horizon();
    let mut budgets = Vec::with_capacity(horizon as usize);
    let mut opt_curve = Vec::with_capacity(horizon as usize);
    let mut ratio_profile = Vec::with_capacity(horizon as usize);
    let mut peak_ratio: Option<Rational> = None;
    let mut opt_tracker = DensityTracker::new();
    let mut engine = EdfEngine::new();

    for t in 0..horizon {
        let batch = jobs.arriving_at(t);
        let budget = policy.budget_for_slot(t, &batch)?;
        opt_tracker.observe(t, &batch);
        let opt = opt_tracker.opt_machines();
        let ratio = if opt > 0 {
            Some(integer(budget) / integer(opt))
        } else {
            None
        };
        if let Some(r) = &ratio {
            if peak_ratio.as_ref().map_or(true, |p| r > p) {
                peak_ratio = Some(r.clone());
            }
        }
        engine.arrive(&batch);
        engine.step(t, budget);
        budgets.push(budget);
        opt_curve.push(opt);
        ratio_profile.push(ratio);
    }
    let trace = engine.finish(horizon);
    let misses = trace.misses();
    Ok(RunReport {
        policy: policy.name(),
        budgets: BudgetTrace::new(budgets),
        trace,
        opt_curve,
        ratio_profile,
        peak_ratio,
        misses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn uniform_square(d: Time) -> JobSet {
        JobSet::from_jobs((0..d).map(|t| Job::new(t, d, d).unwrap())).unwrap()
    }

    #[test]
    fn pvd_rejects_non_positive_factor() {
        assert!(Pvd::new(integer(0)).is_err());
        assert!(Pvd::new(ratio(-1, 2)).is_err());
    }

    #[test]
    fn pvd_budget_on_uniform_square_is_scaled_prefix_density() {
        // The prefix density after slot t is t+1, so pvd(26/5) budgets
        // ceil(26(t+1)/5).
        let d = 12;
        let mut policy = Pvd::new(ratio(26, 5)).unwrap();
        let report = run_online(&uniform_square(d), &mut policy).unwrap();
        for t in 0..d {
            let expected = ceil_u64(&(ratio(26, 5) * integer(t + 1)));
            assert_eq!(report.budgets.get(t), expected);
        }
        assert_eq!(report.misses, 0);
    }

    #[test]
    fn pvd_one_on_single_group() {
        let set = JobSet::from_jobs([Job::new(0, 4, 2).unwrap()]).unwrap();
        let mut policy = Pvd::new(integer(1)).unwrap();
        let report = run_online(&set, &mut policy).unwrap();
        // Density 2/4 at every slot; ceil is 1.
        assert_eq!(report.budgets.as_slice(), &[1, 1, 1, 1]);
    }

    #[test]
    fn pvd_budget_curve_is_non_decreasing() {
        let set = JobSet::from_jobs([
            Job::new(0, 8, 5).unwrap(),
            Job::new(2, 3, 4).unwrap(),
            Job::new(5, 6, 1).unwrap(),
        ])
        .unwrap();
        let mut policy = Pvd::new(ratio(26, 5)).unwrap();
        let report = run_online(&set, &mut policy).unwrap();
        let b = report.budgets.as_slice();
        assert!(b.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn shi_ye_rejects_mixed_deadlines() {
        let set = JobSet::from_jobs([Job::new(0, 3, 1).unwrap(), Job::new(1, 4, 1).unwrap()])
            .unwrap();
        let mut policy = PvdShiYe::new();
        let err = run_online(&set, &mut policy).unwrap_err();
        assert_eq!(
            err,
            PolicyError::MixedDeadlines {
                expected: 3,
                got: 4
            }
        );
    }

    #[test]
    fn empty_instance_runs_trivially() {
        let mut policy = Pvd::new(ratio(26, 5)).unwrap();
        let report = run_online(&JobSet::new(), &mut policy).unwrap();
        assert_eq!(report.misses, 0);
        assert!(report.ratio_profile.is_empty());
        assert_eq!(report.peak_ratio, None);
    }

    #[test]
    fn ratio_profile_defined_once_prefix_nonempty() {
        let set = JobSet::from_jobs([Job::new(2, 5, 3).unwrap()]).unwrap();
        let mut policy = Pvd::new(integer(2)).unwrap();
        let report = run_online(&set, &mut policy).unwrap();
        assert_eq!(report.ratio_profile[0], None);
        assert_eq!(report.ratio_profile[1], None);
        assert!(report.ratio_profile[2].is_some());
    }

    // Causality: budgets for slots <= T never depend on arrivals after T.
    fn assert_causal(make: &dyn Fn() -> Box<dyn OnlinePolicy>, jobs: &JobSet) {
        let full = run_online(jobs, make().as_mut()).unwrap();
        let horizon = jobs.horizon();
        for cut in 0..horizon {
            let truncated = jobs.prefix(cut);
            let mut policy = make();
            let partial = run_online(&truncated, policy.as_mut()).unwrap();
            for t in 0..=cut.min(truncated.horizon().saturating_sub(1)) {
                assert_eq!(
                    partial.budgets.get(t),
                    full.budgets.get(t),
                    "budget at slot {t} changed after truncating at {cut}"
                );
            }
        }
    }

    #[test]
    fn shipped_policies_are_causal() {
        let mixed = JobSet::from_jobs([
            Job::new(0, 6, 2).unwrap(),
            Job::new(1, 2, 3).unwrap(),
            Job::new(3, 9, 1).unwrap(),
            Job::new(4, 5, 2).unwrap(),
        ])
        .unwrap();
        assert_causal(&|| Box::new(Pvd::new(ratio(26, 5)).unwrap()), &mixed);

        let universal = JobSet::from_jobs([
            Job::new(0, 9, 2).unwrap(),
            Job::new(3, 9, 5).unwrap(),
            Job::new(7, 9, 1).unwrap(),
        ])
        .unwrap();
        assert_causal(&|| Box::new(PvdShiYe::new()), &universal);
        assert_causal(&|| Box::new(Pvd::new(integer(1)).unwrap()), &universal);
    }
}
