//! Randomized invariant checking across the whole crate.
//!
//! Every fuzz iteration draws one random job set (and a derived
//! universal-deadline sequence) and runs the full battery of
//! cross-checks: simulation against the interval-demand characterization,
//! the density formula against the brute-force optimum, the density
//! calculus properties, reduction monotonicity, and feasibility of the
//! density-scaled policy at factor 26/5.
//!
//! Instance distribution, so corpora are reproducible: the horizon is
//! uniform on `1..=max_horizon`; each group draws its arrival uniformly
//! over the horizon, its deadline uniformly over `(arrival, horizon]`,
//! and its multiplicity geometrically (p = 1/2, starting at 1); groups
//! are added until the workload cap or the group cap is reached. Each
//! iteration `i` of a campaign with seed `s` uses stream `i` of a
//! ChaCha8 generator seeded with `s`.

use crate::adversary;
use crate::density::{self, max_density_at, opt_machines, PrefixDensity};
use crate::edf::{self, BudgetTrace};
use crate::instance::{ArrivalSequence, Instance, Interval, Job, JobSet, Time};
use crate::par::{map_indices, ExecMode};
use crate::policy::{run_online, Pvd};
use crate::potential::{potential, reduce_equal_deadline, reduction_step};
use crate::rational::{integer, ratio, Rational};
use num_traits::Zero;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Names of all per-iteration checks, in reporting order.
pub const CHECK_NAMES: &[&str] = &[
    "edf-run-matches-interval-check",
    "density-opt-equals-bruteforce",
    "mediant-inequality",
    "defining-interval-cut-inequality",
    "defining-left-ends-nested",
    "prefix-density-non-decreasing",
    "equal-deadline-reduction-monotone",
    "averaging-reduction-monotone",
    "averaging-conserves-workload",
    "pvd-26-5-zero-misses",
    "budget-increase-never-hurts",
    "tail-cover-inequality",
];

/// Synthetic always-failing check used to exercise the failure path end
/// to end (reporting, counterexample dump, exit code).
pub const INJECTED_CHECK: &str = "fault-injection-self-test";

#[derive(Debug, Clone, Copy)]
pub struct FuzzParams {
    pub count: u64,
    pub seed: u64,
    pub max_horizon: Time,
    pub max_workload: u64,
    /// Force a deliberate failure on iteration 0 (test hook).
    pub inject_fault: bool,
}

impl FuzzParams {
    pub fn new(count: u64, seed: u64, max_horizon: Time, max_workload: u64) -> Self {
        FuzzParams {
            count,
            seed,
            max_horizon: max_horizon.max(1),
            max_workload: max_workload.max(1),
            inject_fault: false,
        }
    }
}

/// A failed check together with the (shrunken, where possible) witness.
#[derive(Debug, Clone)]
pub struct FuzzFailure {
    pub check: String,
    pub iteration: u64,
    pub detail: String,
    /// The witnessing job set, minimized when the check depends only on
    /// the job set itself.
    pub instance: JobSet,
}

#[derive(Debug, Clone, Default)]
pub struct FuzzReport {
    /// Per-check pass counts across all iterations.
    pub passes: BTreeMap<String, u64>,
    pub failure: Option<FuzzFailure>,
    pub iterations: u64,
}

impl FuzzReport {
    pub fn all_passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Draws a random job set under the documented distribution.
pub fn random_job_set<R: Rng>(rng: &mut R, max_horizon: Time, max_workload: u64) -> JobSet {
    let horizon = rng.gen_range(1..=max_horizon);
    let group_cap = rng.gen_range(1..=(2 * horizon).min(60));
    let mut jobs = JobSet::new();
    for _ in 0..group_cap {
        let remaining = max_workload.saturating_sub(jobs.total_jobs());
        if remaining == 0 {
            break;
        }
        let arrival = rng.gen_range(0..horizon);
        let deadline = rng.gen_range(arrival + 1..=horizon);
        let mut multiplicity = 1u64;
        while multiplicity < remaining && rng.gen_bool(0.5) {
            multiplicity += 1;
        }
        jobs.insert(Job::new(arrival, deadline, multiplicity).unwrap())
            .expect("workload cap keeps totals in range");
    }
    jobs
}

/// Draws a random universal-deadline sequence with integer weights.
pub fn random_sequence<R: Rng>(rng: &mut R, max_d: Time, max_weight: u64) -> ArrivalSequence {
    let d = rng.gen_range(1..=max_d.max(1));
    let counts: Vec<u64> = (0..d).map(|_| rng.gen_range(0..=max_weight)).collect();
    ArrivalSequence::from_counts(&counts).expect("generated counts are well-formed")
}

struct IterationOutcome {
    passed: Vec<&'static str>,
    failure: Option<FuzzFailure>,
}

/// Runs the whole campaign, sequentially or in parallel. Deterministic
/// for a given `(params, mode)`: iteration results depend only on the
/// seed and the iteration index.
pub fn run_campaign(params: &FuzzParams, mode: ExecMode) -> FuzzReport {
    let outcomes = map_indices(params.count, mode, |i| run_iteration(params, i));
    let mut report = FuzzReport {
        iterations: params.count,
        ..Default::default()
    };
    let mut first_failure: Option<FuzzFailure> = None;
    for outcome in outcomes {
        for name in outcome.passed {
            *report.passes.entry(name.to_string()).or_insert(0) += 1;
        }
        if let Some(f) = outcome.failure {
            if first_failure
                .as_ref()
                .map_or(true, |prev| f.iteration < prev.iteration)
            {
                first_failure = Some(f);
            }
        }
    }
    report.failure = first_failure;
    report
}

fn run_iteration(params: &FuzzParams, index: u64) -> IterationOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(index);
    let jobs = random_job_set(&mut rng, params.max_horizon, params.max_workload);
    let seq = random_sequence(&mut rng, params.max_horizon.min(24), 20);

    let mut passed = Vec::with_capacity(CHECK_NAMES.len() + 1);
    let mut failure = None;
    let mut run = |name: &'static str,
                   result: Result<(), String>,
                   failure: &mut Option<FuzzFailure>,
                   shrink: Option<&dyn Fn(&JobSet) -> bool>| {
        if failure.is_some() {
            return;
        }
        match result {
            Ok(()) => passed.push(name),
            Err(detail) => {
                let instance = match shrink {
                    Some(fails) => shrink_job_set(&jobs, fails),
                    None => jobs.clone(),
                };
                *failure = Some(FuzzFailure {
                    check: name.to_string(),
                    iteration: index,
                    detail,
                    instance,
                });
            }
        }
    };

    if params.inject_fault && index == 0 {
        run(
            INJECTED_CHECK,
            Err("deliberate failure injected by --inject-fault".to_string()),
            &mut failure,
            None,
        );
    }

    let budgets = random_budgets(&mut rng, &jobs);
    run(
        CHECK_NAMES[0],
        check_edf_equivalence(&jobs, &budgets),
        &mut failure,
        None,
    );
    run(
        CHECK_NAMES[1],
        check_opt_oracle(&jobs),
        &mut failure,
        Some(&|js: &JobSet| check_opt_oracle(js).is_err()),
    );
    run(
        CHECK_NAMES[2],
        check_mediant(&mut rng),
        &mut failure,
        None,
    );
    run(
        CHECK_NAMES[3],
        check_cut_inequality(&seq),
        &mut failure,
        None,
    );
    run(
        CHECK_NAMES[4],
        check_nesting(&seq),
        &mut failure,
        None,
    );
    run(
        CHECK_NAMES[5],
        check_prefix_monotone(&jobs),
        &mut failure,
        Some(&|js: &JobSet| check_prefix_monotone(js).is_err()),
    );
    run(
        CHECK_NAMES[6],
        check_equal_deadline_monotone(&jobs),
        &mut failure,
        Some(&|js: &JobSet| check_equal_deadline_monotone(js).is_err()),
    );
    run(
        CHECK_NAMES[7],
        check_averaging_monotone(&seq),
        &mut failure,
        None,
    );
    run(
        CHECK_NAMES[8],
        check_averaging_conserves(&seq),
        &mut failure,
        None,
    );
    run(
        CHECK_NAMES[9],
        check_pvd_feasible(&jobs),
        &mut failure,
        Some(&|js: &JobSet| check_pvd_feasible(js).is_err()),
    );
    run(
        CHECK_NAMES[10],
        check_budget_monotonicity(&mut rng, &jobs, &budgets),
        &mut failure,
        None,
    );
    run(
        CHECK_NAMES[11],
        check_tail_cover(&seq),
        &mut failure,
        None,
    );

    IterationOutcome { passed, failure }
}

fn random_budgets<R: Rng>(rng: &mut R, jobs: &JobSet) -> BudgetTrace {
    let horizon = jobs.horizon().max(1);
    let cap = 2 + 2 * jobs.total_jobs() / horizon;
    BudgetTrace::new((0..horizon).map(|_| rng.gen_range(0..=cap)).collect())
}

fn check_edf_equivalence(jobs: &JobSet, budgets: &BudgetTrace) -> Result<(), String> {
    let sim_ok = edf::simulate_edf(jobs, budgets).misses() == 0;
    let verdict = edf::feasible_by_inequalities(jobs, budgets);
    if sim_ok != verdict.is_feasible() {
        return Err(format!(
            "simulation misses = {}, interval verdict = {:?}, budgets = {:?}",
            !sim_ok, verdict, budgets
        ));
    }
    Ok(())
}

fn check_opt_oracle(jobs: &JobSet) -> Result<(), String> {
    let by_density = opt_machines(jobs);
    let by_search = edf::opt_bruteforce(jobs);
    if by_density != by_search {
        return Err(format!(
            "density formula gives {by_density}, EDF search gives {by_search}"
        ));
    }
    Ok(())
}

fn check_mediant<R: Rng>(rng: &mut R) -> Result<(), String> {
    for _ in 0..8 {
        let p = integer(rng.gen_range(0..1000));
        let q = integer(rng.gen_range(1..1000));
        let r = integer(rng.gen_range(0..1000));
        let s = integer(rng.gen_range(1..1000));
        let (hi, hi_d, lo, lo_d) = if &p / &q >= &r / &s {
            (p, q, r, s)
        } else {
            (r, s, p, q)
        };
        let mediant = (&hi + &lo) / (&hi_d + &lo_d);
        if mediant < &lo / &lo_d {
            return Err(format!(
                "mediant ({hi}+{lo})/({hi_d}+{lo_d}) dropped below {lo}/{lo_d}"
            ));
        }
    }
    Ok(())
}

// With ℓ the left end of the defining interval at t, the average of σ
// over [ℓ, t*) dominates the average over [t*, d) for every t* in (ℓ, t].
fn check_cut_inequality(seq: &ArrivalSequence) -> Result<(), String> {
    let d = seq.deadline();
    if seq.total().is_zero() {
        return Ok(());
    }
    for t in 0..d {
        let (_, interval) = max_density_at(seq, t);
        let l = interval.left();
        for t_star in l + 1..=t {
            let head: Rational = seq.sigma()[l as usize..t_star as usize].iter().sum();
            let tail: Rational = seq.sigma()[t_star as usize..d as usize].iter().sum();
            let lhs = head / integer(t_star - l);
            let rhs = tail / integer(d - t_star);
            if lhs < rhs {
                return Err(format!(
                    "cut at t={t}, t*={t_star}: head average {lhs} < tail average {rhs}"
                ));
            }
        }
    }
    Ok(())
}

// Left ends of defining intervals of growing prefixes never move left.
fn check_nesting(seq: &ArrivalSequence) -> Result<(), String> {
    let d = seq.deadline();
    let mut last_left = 0;
    let mut seen_any = false;
    for t in 0..d {
        let prefix = seq.prefix(t);
        if prefix.total().is_zero() {
            continue;
        }
        let (_, interval) = max_density_at(&prefix, t);
        if seen_any && interval.left() < last_left {
            return Err(format!(
                "defining left end moved from {last_left} back to {} at t={t}",
                interval.left()
            ));
        }
        last_left = interval.left();
        seen_any = true;
    }
    Ok(())
}

fn check_prefix_monotone(jobs: &JobSet) -> Result<(), String> {
    let curve = jobs.prefix_density_curve(jobs.horizon());
    for (t, pair) in curve.windows(2).enumerate() {
        if pair[0] > pair[1] {
            return Err(format!("prefix max density decreased entering slot {}", t + 1));
        }
    }
    Ok(())
}

fn check_equal_deadline_monotone(jobs: &JobSet) -> Result<(), String> {
    if jobs.is_empty() {
        return Ok(());
    }
    let factors = [integer(1), ratio(26, 5), integer(8)];
    for d in jobs.deadlines() {
        let reduced = reduce_equal_deadline(jobs, d).map_err(|e| e.to_string())?;
        if reduced.total().is_zero() {
            continue;
        }
        for t in [0, d / 2, d.saturating_sub(1)] {
            if t >= d {
                continue;
            }
            for c in &factors {
                let before = potential(jobs, c, t, d).value;
                let after = potential(&reduced, c, t, d).value;
                if after > before {
                    return Err(format!(
                        "deadline collapse onto {d} raised potential over [{t}, {d}) at c={c}: {before} -> {after}"
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_averaging_monotone(seq: &ArrivalSequence) -> Result<(), String> {
    let d = seq.deadline();
    let factors = [integer(1), ratio(26, 5), integer(8)];
    let mut current = seq.clone();
    let mut steps = 0;
    while let Some((next, step)) = reduction_step(&current) {
        for c in &factors {
            let before = potential(&current, c, 0, d).value;
            let after = potential(&next, c, 0, d).value;
            if after > before {
                return Err(format!(
                    "averaging step (k={}, m={}) raised potential at c={c}: {before} -> {after}",
                    step.k, step.m
                ));
            }
        }
        // The per-prefix maximum density never increases either.
        let before_curve = current.prefix_density_curve(d);
        let after_curve = next.prefix_density_curve(d);
        for (t, (b, a)) in before_curve.iter().zip(&after_curve).enumerate() {
            if a > b {
                return Err(format!(
                    "averaging step (k={}, m={}) raised prefix density at t={t}",
                    step.k, step.m
                ));
            }
        }
        current = next;
        steps += 1;
        if steps > d * d + 4 {
            return Err("averaging reduction failed to converge".to_string());
        }
    }
    Ok(())
}

fn check_averaging_conserves(seq: &ArrivalSequence) -> Result<(), String> {
    let (reduced, _) =
        crate::potential::reduce_nondecreasing(seq).map_err(|e| e.to_string())?;
    if reduced.total() != seq.total() {
        return Err(format!(
            "total workload changed: {} -> {}",
            seq.total(),
            reduced.total()
        ));
    }
    if !reduced.is_nondecreasing() {
        return Err("reduction result still has a descent".to_string());
    }
    Ok(())
}

fn check_pvd_feasible(jobs: &JobSet) -> Result<(), String> {
    let mut policy = Pvd::new(ratio(26, 5)).expect("26/5 is positive");
    let report = run_online(jobs, &mut policy).map_err(|e| e.to_string())?;
    if report.misses > 0 {
        return Err(format!("pvd(26/5) missed {} jobs", report.misses));
    }
    Ok(())
}

fn check_budget_monotonicity<R: Rng>(
    rng: &mut R,
    jobs: &JobSet,
    budgets: &BudgetTrace,
) -> Result<(), String> {
    if jobs.is_empty() {
        return Ok(());
    }
    let before = edf::simulate_edf(jobs, budgets).misses();
    let mut raised = budgets.as_slice().to_vec();
    let slot = rng.gen_range(0..raised.len());
    raised[slot] += rng.gen_range(1..=3);
    let after = edf::simulate_edf(jobs, &BudgetTrace::new(raised)).misses();
    if after > before {
        return Err(format!(
            "raising the budget at slot {slot} increased misses {before} -> {after}"
        ));
    }
    Ok(())
}

// Non-degenerate non-decreasing tails: eight times the final slot's
// density strictly covers the last two slots' workload.
fn check_tail_cover(seq: &ArrivalSequence) -> Result<(), String> {
    let (reduced, _) =
        crate::potential::reduce_nondecreasing(seq).map_err(|e| e.to_string())?;
    let sigma = reduced.sigma();
    let d = sigma.len();
    if d < 2 || sigma[d - 1].is_zero() {
        return Ok(());
    }
    let lhs = integer(8) * &sigma[d - 1];
    let rhs = &sigma[d - 1] + &sigma[d - 2];
    if lhs <= rhs {
        return Err(format!("tail cover failed: 8·{} <= {}", sigma[d - 1], rhs));
    }
    Ok(())
}

/// Greedy minimization of a failing job set: repeatedly drop whole groups
/// or halve multiplicities while the predicate keeps failing.
pub fn shrink_job_set(jobs: &JobSet, fails: &dyn Fn(&JobSet) -> bool) -> JobSet {
    let mut current = jobs.clone();
    loop {
        let mut improved = false;
        let groups: Vec<Job> = current.groups().collect();
        for skip in 0..groups.len() {
            let candidate = JobSet::from_jobs(
                groups
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, j)| *j),
            )
            .expect("subset of a valid job set");
            if fails(&candidate) {
                current = candidate;
                improved = true;
                break;
            }
        }
        if improved {
            continue;
        }
        for half in 0..groups.len() {
            if groups[half].multiplicity < 2 {
                continue;
            }
            let candidate = JobSet::from_jobs(groups.iter().enumerate().map(|(i, j)| {
                if i == half {
                    Job {
                        multiplicity: j.multiplicity / 2,
                        ..*j
                    }
                } else {
                    *j
                }
            }))
            .expect("halving keeps the job set valid");
            if fails(&candidate) {
                current = candidate;
                improved = true;
                break;
            }
        }
        if !improved {
            return current;
        }
    }
}

/// Deterministic generator handle for external callers that want the
/// campaign's instance stream without the checks (benchmarks).
pub fn instance_stream(params: &FuzzParams) -> impl Iterator<Item = JobSet> + '_ {
    (0..params.count).map(move |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(i);
        random_job_set(&mut rng, params.max_horizon, params.max_workload)
    })
}

/// StdRng-based convenience for tests that just need some instance.
pub fn quick_instance(seed: u64, max_horizon: Time, max_workload: u64) -> JobSet {
    let mut rng = StdRng::seed_from_u64(seed);
    random_job_set(&mut rng, max_horizon, max_workload)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_campaign_passes() {
        let params = FuzzParams::new(40, 7, 20, 200);
        let report = run_campaign(&params, ExecMode::Sequential);
        assert!(report.all_passed(), "failure: {:?}", report.failure);
        for name in CHECK_NAMES {
            assert_eq!(report.passes.get(*name), Some(&40), "check {name}");
        }
    }

    #[test]
    fn campaign_is_deterministic_across_modes() {
        let params = FuzzParams::new(16, 3, 16, 120);
        let seq = run_campaign(&params, ExecMode::Sequential);
        let par = run_campaign(&params, ExecMode::Parallel);
        assert_eq!(seq.passes, par.passes);
        assert_eq!(seq.all_passed(), par.all_passed());
    }

    #[test]
    fn injected_fault_reports_failure() {
        let mut params = FuzzParams::new(3, 1, 10, 50);
        params.inject_fault = true;
        let report = run_campaign(&params, ExecMode::Sequential);
        let failure = report.failure.expect("fault must surface");
        assert_eq!(failure.check, INJECTED_CHECK);
        assert_eq!(failure.iteration, 0);
    }

    #[test]
    fn zero_count_campaign_is_vacuous() {
        let params = FuzzParams::new(0, 9, 10, 50);
        let report = run_campaign(&params, ExecMode::Parallel);
        assert!(report.all_passed());
        assert!(report.passes.is_empty());
    }

    #[test]
    fn shrinker_reaches_a_minimal_witness() {
        // Predicate: at least 3 total jobs. Minimal witnesses have
        // exactly 3.
        let jobs = quick_instance(5, 12, 60);
        if jobs.total_jobs() < 3 {
            return;
        }
        let shrunk = shrink_job_set(&jobs, &|js| js.total_jobs() >= 3);
        assert_eq!(shrunk.total_jobs(), 3);
    }
}
