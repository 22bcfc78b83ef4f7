//! The feasibility potential and the instance reductions that bound it.
//!
//! For a scaling factor `c`, the potential of an instance over `[t1, t2)`
//! is `c` times the summed prefix maximum densities across the window
//! minus the workload confined to the window. Non-negativity of the
//! potential over every window is exactly feasibility of the
//! density-scaled online policy (via the interval-demand
//! characterization in [`crate::edf`]).
//!
//! Two workload-preserving reductions only ever lower the potential, so
//! hard cases concentrate on non-decreasing universal-deadline sequences:
//!
//! 1. collapsing all deadlines up to `d` onto `d`, and
//! 2. repeatedly averaging the last descending run of the sequence.

use crate::density::PrefixDensity;
use crate::instance::{ArrivalSequence, Instance, Interval, JobSet, Time};
use crate::rational::{integer, Rational};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PotentialError {
    #[error("sequence is not non-decreasing at slot {slot}")]
    NotNondecreasing { slot: Time },
    #[error("averaging reduction exceeded {0} steps without converging")]
    ReductionDiverged(u64),
    #[error(transparent)]
    Instance(#[from] crate::instance::InstanceError),
}

/// An evaluated potential, kept together with its components so reports
/// can show how the value decomposes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PotentialValue {
    pub c: Rational,
    pub t1: Time,
    pub t2: Time,
    /// `Σ_{t1 ≤ t < t2} ϱ̂(prefix(t))`.
    pub density_sum: Rational,
    /// Workload confined to `[t1, t2)`.
    pub workload: Rational,
    /// `c · density_sum − workload`.
    pub value: Rational,
}

/// Evaluates the potential of `inst` over `[t1, t2)` for factor `c`.
pub fn potential<I: Instance + PrefixDensity>(
    inst: &I,
    c: &Rational,
    t1: Time,
    t2: Time,
) -> PotentialValue {
    assert!(t1 < t2, "potential window must be non-empty");
    let curve = inst.prefix_density_curve(t2);
    potential_from_curve(inst, &curve, c, t1, t2)
}

fn potential_from_curve<I: Instance>(
    inst: &I,
    curve: &[Rational],
    c: &Rational,
    t1: Time,
    t2: Time,
) -> PotentialValue {
    let density_sum: Rational = curve[t1 as usize..t2 as usize].iter().sum();
    let workload = inst.workload(Interval::new(t1, t2));
    let value = c * &density_sum - &workload;
    PotentialValue {
        c: c.clone(),
        t1,
        t2,
        density_sum,
        workload,
        value,
    }
}

/// Minimum potential over candidate windows (left ends at arrivals plus
/// 0, right ends at deadlines). Windows outside this grid cannot be
/// binding: shrinking a window to the hull of the jobs it confines keeps
/// the workload term and only drops non-negative density terms.
///
/// Returns `None` for an instance with no deadlines.
pub fn min_potential<I: Instance + PrefixDensity>(
    inst: &I,
    c: &Rational,
) -> Option<PotentialValue> {
    let mut lefts = vec![0];
    lefts.extend(inst.arrival_points());
    lefts.dedup();
    let rights = inst.deadline_points();
    let horizon = *rights.last()?;
    let curve = inst.prefix_density_curve(horizon);
    let mut best: Option<PotentialValue> = None;
    for &t1 in &lefts {
        for &t2 in &rights {
            if t2 <= t1 {
                continue;
            }
            let candidate = potential_from_curve(inst, &curve, c, t1, t2);
            match &best {
                Some(b) if b.value <= candidate.value => {}
                _ => best = Some(candidate),
            }
        }
    }
    best
}

/// Collapses every deadline at most `d` onto `d`: slot `i` of the result
/// carries the number of jobs with arrival `i` and deadline ≤ `d`. Jobs
/// due after `d` are dropped. The potential over any `[t, d)` never
/// increases under this map.
pub fn reduce_equal_deadline(jobs: &JobSet, d: Time) -> Result<ArrivalSequence, PotentialError> {
    let mut counts = vec![0u64; d as usize];
    for job in jobs.groups() {
        if job.deadline <= d {
            counts[job.arrival as usize] += job.multiplicity;
        }
    }
    Ok(ArrivalSequence::from_counts(&counts)?)
}

/// One averaging step of the non-decreasing reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionStep {
    /// Largest index with `σ(k) > σ(k+1)`.
    pub k: Time,
    /// Largest index past `k` whose value sits strictly below the running
    /// average of `σ(k..=m)`.
    pub m: Time,
    /// The average written onto slots `k..=m`.
    pub average: Rational,
}

/// Applies one averaging step, or returns `None` when the sequence is
/// already non-decreasing.
pub fn reduction_step(seq: &ArrivalSequence) -> Option<(ArrivalSequence, ReductionStep)> {
    let sigma = seq.sigma();
    let d = sigma.len();
    let k = (0..d.saturating_sub(1))
        .rev()
        .find(|&i| sigma[i] > sigma[i + 1])?;

    let mut running = sigma[k].clone();
    let mut chosen_m = None;
    for m in k + 1..d {
        running += &sigma[m];
        let average = &running / integer((m - k + 1) as u64);
        if sigma[m] < average {
            chosen_m = Some((m, average));
        }
    }
    let (m, _) = chosen_m.expect("a descent always admits m = k+1");
    let total: Rational = sigma[k..=m].iter().sum();
    let average = &total / integer((m - k + 1) as u64);
    // The boundary value, when present, already sits at or above the
    // extended average; otherwise m+1 would have been chosen.
    debug_assert!(
        m + 1 >= d || {
            let ext: Rational = sigma[k..=m + 1].iter().sum();
            sigma[m + 1] >= ext / integer((m - k + 2) as u64)
        }
    );

    let mut new_sigma = sigma.to_vec();
    for value in new_sigma.iter_mut().take(m + 1).skip(k) {
        *value = average.clone();
    }
    let reduced = ArrivalSequence::new(seq.deadline(), new_sigma)
        .expect("averaging preserves well-formedness");
    Some((
        reduced,
        ReductionStep {
            k: k as Time,
            m: m as Time,
            average,
        },
    ))
}

/// Repeats the averaging step until the sequence is non-decreasing,
/// preserving total workload exactly. Each step moves the last descent
/// strictly left, so at most `d` steps occur; the `d²` guard exists only
/// to fail loudly if the selection rule is ever broken.
pub fn reduce_nondecreasing(
    seq: &ArrivalSequence,
) -> Result<(ArrivalSequence, Vec<ReductionStep>), PotentialError> {
    let limit = (seq.deadline() * seq.deadline()).max(4);
    let mut current = seq.clone();
    let mut steps = Vec::new();
    while let Some((next, step)) = reduction_step(&current) {
        steps.push(step);
        current = next;
        if steps.len() as u64 > limit {
            return Err(PotentialError::ReductionDiverged(limit));
        }
    }
    debug_assert!(current.is_nondecreasing());
    debug_assert_eq!(current.total(), seq.total());
    Ok((current, steps))
}

/// Result of a full-window potential check on a non-decreasing sequence.
#[derive(Debug, Clone)]
pub struct PhiCheck {
    pub potential: PotentialValue,
    pub nonnegative: bool,
}

/// Evaluates the potential of a non-decreasing sequence over its full
/// window `[0, d)` and reports whether it is non-negative. Rejects
/// sequences with a descent.
pub fn check_phi_nonneg(seq: &ArrivalSequence, c: &Rational) -> Result<PhiCheck, PotentialError> {
    if let Some(slot) = seq
        .sigma()
        .windows(2)
        .position(|w| w[0] > w[1])
    {
        return Err(PotentialError::NotNondecreasing { slot: slot as Time });
    }
    let potential = potential(seq, c, 0, seq.deadline());
    let nonnegative = !potential.value.is_negative();
    Ok(PhiCheck {
        potential,
        nonnegative,
    })
}

/// Exact minimization of the coverage quadratic
/// `F(β) = λ₁·(α−1)/(2α)·β² + λ₂·(α−1)/(2α²) − β` over `β ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct FBetaReport {
    pub lambda1: Rational,
    pub lambda2: Rational,
    pub alpha: u64,
    pub min_value: Rational,
    pub argmin: Rational,
    /// `λ₁ + λ₂ ≥ α`, the base-case coverage constraint.
    pub sum_ok: bool,
    /// `F ≥ 0` on the whole interval.
    pub min_nonnegative: bool,
    /// Both conditions hold: the pair certifies factor `λ₁ + λ₂`.
    pub feasible: bool,
}

/// Minimizes `F` exactly on `[0, 1]`: the parabola opens upward with
/// vertex at `α / (λ₁(α−1))`, clamped into the interval.
pub fn f_beta_check(lambda1: &Rational, lambda2: &Rational, alpha: u64) -> FBetaReport {
    assert!(alpha >= 2, "alpha must be at least 2");
    assert!(
        lambda1.is_positive() && lambda2.is_positive(),
        "lambdas must be positive"
    );
    let alpha_rat = integer(alpha);
    let quad = lambda1 * (&alpha_rat - integer(1)) / (integer(2) * &alpha_rat);
    let constant = lambda2 * (&alpha_rat - integer(1)) / (integer(2) * &alpha_rat * &alpha_rat);
    let eval = |beta: &Rational| &quad * beta * beta - beta + &constant;

    let vertex = &alpha_rat / (lambda1 * (&alpha_rat - integer(1)));
    let argmin = if vertex > integer(1) {
        integer(1)
    } else {
        vertex
    };
    let min_value = eval(&argmin);
    let sum_ok = lambda1 + lambda2 >= alpha_rat;
    let min_nonnegative = !min_value.is_negative();
    FBetaReport {
        lambda1: lambda1.clone(),
        lambda2: lambda2.clone(),
        alpha,
        min_value,
        argmin,
        sum_ok,
        min_nonnegative,
        feasible: sum_ok && min_nonnegative,
    }
}

/// Total workload of a sequence as a rational (convenience for reports).
pub fn sequence_total(seq: &ArrivalSequence) -> Rational {
    seq.total()
}

#[allow(dead_code)]
fn big(n: u64) -> BigInt {
    BigInt::from(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Job;
    use crate::rational::ratio;

    fn seq(counts: &[u64]) -> ArrivalSequence {
        ArrivalSequence::from_counts(counts).unwrap()
    }

    #[test]
    fn potential_on_empty_window_components() {
        let empty = JobSet::new();
        let phi = potential(&empty, &integer(3), 0, 5);
        assert!(phi.value.is_zero());
        assert!(phi.density_sum.is_zero());
    }

    #[test]
    fn potential_on_two_slot_square() {
        // Arrivals (2, 2) with deadline 2: prefix densities 1 and 2.
        let square = seq(&[2, 2]);
        let phi1 = potential(&square, &integer(1), 0, 2);
        assert_eq!(phi1.density_sum, integer(3));
        assert_eq!(phi1.workload, integer(4));
        assert_eq!(phi1.value, integer(1) * integer(3) - integer(4));
        assert!(phi1.value.is_negative());
        let phi2 = potential(&square, &integer(2), 0, 2);
        assert_eq!(phi2.value, integer(2));
    }

    #[test]
    fn equal_deadline_reduction_filters_and_counts() {
        let jobs = JobSet::from_jobs([
            Job::new(0, 2, 1).unwrap(),
            Job::new(1, 3, 1).unwrap(),
        ])
        .unwrap();
        let reduced = reduce_equal_deadline(&jobs, 2).unwrap();
        assert_eq!(reduced.sigma(), &[integer(1), integer(0)]);

        let jobs2 = JobSet::from_jobs([
            Job::new(0, 2, 1).unwrap(),
            Job::new(1, 2, 2).unwrap(),
        ])
        .unwrap();
        let reduced2 = reduce_equal_deadline(&jobs2, 2).unwrap();
        assert_eq!(reduced2.sigma(), &[integer(1), integer(2)]);
    }

    #[test]
    fn equal_deadline_reduction_preserves_tail_workload() {
        let jobs = JobSet::from_jobs([
            Job::new(0, 4, 2).unwrap(),
            Job::new(1, 3, 1).unwrap(),
            Job::new(2, 6, 5).unwrap(),
        ])
        .unwrap();
        for d in 1..=6 {
            let reduced = reduce_equal_deadline(&jobs, d).unwrap();
            for t in 0..d {
                let iv = Interval::new(t, d);
                assert_eq!(reduced.workload(iv), {
                    let full: u64 = jobs
                        .groups()
                        .filter(|j| j.arrival >= t && j.deadline <= d)
                        .map(|j| j.multiplicity)
                        .sum();
                    integer(full)
                });
            }
        }
    }

    #[test]
    fn averaging_step_examples() {
        let (reduced, step) = reduction_step(&seq(&[3, 1])).unwrap();
        assert_eq!(step, ReductionStep { k: 0, m: 1, average: integer(2) });
        assert_eq!(reduced.sigma(), &[integer(2), integer(2)]);

        assert!(reduction_step(&seq(&[1, 2, 3])).is_none());

        let (reduced, step) = reduction_step(&seq(&[4, 0, 2])).unwrap();
        assert_eq!(step.k, 0);
        assert_eq!(step.m, 1);
        assert_eq!(step.average, integer(2));
        assert_eq!(reduced.sigma(), &[integer(2), integer(2), integer(2)]);
    }

    #[test]
    fn full_reduction_reaches_fixpoint_and_conserves_workload() {
        let start = seq(&[5, 1, 4, 2, 2, 9, 0]);
        let (reduced, steps) = reduce_nondecreasing(&start).unwrap();
        assert!(reduced.is_nondecreasing());
        assert_eq!(reduced.total(), start.total());
        assert!(!steps.is_empty());
        // Descents move strictly left step by step.
        for pair in steps.windows(2) {
            assert!(pair[1].k < pair[0].k);
        }
    }

    #[test]
    fn phi_check_rejects_descending_input() {
        let err = check_phi_nonneg(&seq(&[2, 1]), &integer(8)).unwrap_err();
        assert_eq!(err, PotentialError::NotNondecreasing { slot: 0 });
    }

    #[test]
    fn phi_check_fails_for_tiny_factor() {
        let check = check_phi_nonneg(&seq(&[1, 1]), &ratio(1, 10)).unwrap();
        assert!(!check.nonnegative);
        // 0.1 * (1/2 + 1) - 2 = -37/20.
        assert_eq!(check.potential.value, ratio(-37, 20));
    }

    #[test]
    fn phi_check_passes_at_large_factors() {
        for counts in [vec![1, 1], vec![1, 2, 4, 4], vec![3, 3, 3, 3, 3]] {
            let s = seq(&counts);
            assert!(check_phi_nonneg(&s, &integer(8)).unwrap().nonnegative);
            assert!(check_phi_nonneg(&s, &ratio(26, 5)).unwrap().nonnegative);
        }
    }

    #[test]
    fn f_beta_reference_point() {
        let report = f_beta_check(&ratio(13, 5), &ratio(13, 5), 3);
        assert_eq!(report.argmin, ratio(15, 26));
        assert_eq!(report.min_value, ratio(1, 2340));
        assert!(report.sum_ok);
        assert!(report.feasible);
    }

    #[test]
    fn f_beta_rejects_small_sum() {
        let report = f_beta_check(&integer(1), &integer(1), 3);
        assert!(!report.sum_ok);
        assert!(!report.feasible);
    }

    #[test]
    fn min_potential_finds_binding_window() {
        let jobs = JobSet::from_jobs([
            Job::new(0, 2, 3).unwrap(),
            Job::new(4, 5, 1).unwrap(),
        ])
        .unwrap();
        let phi = min_potential(&jobs, &integer(1)).unwrap();
        assert!(phi.value < potential(&jobs, &integer(1), 0, 5).value);
    }
}
