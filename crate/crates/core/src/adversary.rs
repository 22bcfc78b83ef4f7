//! Hard-instance generators, the online adversary, and the exact
//! lower-bound certificate computation.
//!
//! The phased family released by the adversary multiplies its per-slot
//! arrival count by `α(k−i)` when entering phase `i`, which drags the
//! defining interval of the maximum density forward phase by phase.
//! Workload that stops contributing to the current maximum density is
//! debt the online algorithm must already have paid for; summing the
//! per-slot density thresholds against the total workload yields an
//! exact budget-deficit certificate.

use crate::density::{max_density_at, DensityTracker, PrefixDensity};
use crate::edf::{BudgetTrace, ScheduleTrace};
use crate::instance::{ArrivalSequence, Instance, Job, JobSet, Time};
use crate::policy::{OnlinePolicy, PolicyError};
use crate::rational::{format_rational, integer, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parameters overflow u64 arithmetic")]
    Overflow,
    #[error("closed-form density sum {closed} disagrees with direct computation {direct}")]
    ClosedFormMismatch { closed: String, direct: String },
}

/// Parameters of the phased lower-bound family: `k` phases of `α²` slots
/// each, base arrival count `h = k!·α²·h'`.
///
/// The `k!·α²` factor makes every prefix maximum density an integer, so
/// budget-versus-threshold comparisons never involve rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LowerBoundParams {
    k: u64,
    alpha: u64,
    h_prime: u64,
}

impl LowerBoundParams {
    pub fn new(k: u64, alpha: u64, h_prime: u64) -> Result<Self, AdversaryError> {
        if k < 2 {
            return Err(AdversaryError::InvalidParams(format!(
                "k must be at least 2, got {k}"
            )));
        }
        if alpha < 2 {
            return Err(AdversaryError::InvalidParams(format!(
                "alpha must be at least 2, got {alpha}"
            )));
        }
        if h_prime == 0 {
            return Err(AdversaryError::InvalidParams(
                "h-prime must be at least 1".to_string(),
            ));
        }
        if k > 20 {
            return Err(AdversaryError::InvalidParams(format!(
                "k larger than 20 overflows 64-bit factorials, got {k}"
            )));
        }
        let params = LowerBoundParams { k, alpha, h_prime };
        params.h()?;
        Ok(params)
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn h_prime(&self) -> u64 {
        self.h_prime
    }

    /// Base arrival count `k!·α²·h'`.
    pub fn h(&self) -> Result<u64, AdversaryError> {
        factorial_u64(self.k)
            .and_then(|f| f.checked_mul(self.alpha * self.alpha))
            .and_then(|f| f.checked_mul(self.h_prime))
            .ok_or(AdversaryError::Overflow)
    }

    /// Universal deadline `k·α²`.
    pub fn horizon(&self) -> Time {
        self.k * self.alpha * self.alpha
    }
}

fn factorial_u64(n: u64) -> Option<u64> {
    (2..=n).try_fold(1u64, |acc, i| acc.checked_mul(i))
}

fn factorial_big(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// Uniform square instance: `d` jobs arrive at each of `d` slots, all due
/// at `d`. The optimum of the prefix arrived by slot `t` is exactly
/// `t + 1`, while the offline optimum for the whole set is `d`.
pub fn gen_uniform(d: Time) -> Result<ArrivalSequence, AdversaryError> {
    if d == 0 {
        return Err(AdversaryError::InvalidParams(
            "d must be at least 1".to_string(),
        ));
    }
    ArrivalSequence::from_counts(&vec![d; d as usize])
        .map_err(|e| AdversaryError::InvalidParams(e.to_string()))
}

/// The fixed 32-slot instance on which the doubled at-time-density rule
/// provably drops exactly 10 of 6000 jobs: a long flat run, one spike,
/// three silent slots, then a heavier flat run that moves the defining
/// interval and strands the earlier workload.
pub fn gen_counterexample() -> ArrivalSequence {
    let mut counts = vec![75u64; 16];
    counts.push(1200);
    counts.extend([0, 0, 0]);
    counts.extend(std::iter::repeat(300).take(12));
    ArrivalSequence::from_counts(&counts).expect("fixed instance is well-formed")
}

/// Phased arrival sequence with an explicit base count `h`: slot
/// `i·α² + j` carries `h` in phase 0 and `α(k−i)` times the matching slot
/// of the previous phase afterwards.
pub fn gen_lower_bound_scaled(
    k: u64,
    alpha: u64,
    h: u64,
) -> Result<ArrivalSequence, AdversaryError> {
    if k < 2 || alpha < 2 || h == 0 {
        return Err(AdversaryError::InvalidParams(format!(
            "need k >= 2, alpha >= 2, h >= 1; got k={k}, alpha={alpha}, h={h}"
        )));
    }
    let phase_len = alpha
        .checked_mul(alpha)
        .ok_or(AdversaryError::Overflow)? as usize;
    let mut counts = Vec::with_capacity(phase_len * k as usize);
    let mut value = h;
    for i in 0..k {
        if i > 0 {
            let factor = alpha
                .checked_mul(k - i)
                .ok_or(AdversaryError::Overflow)?;
            value = value.checked_mul(factor).ok_or(AdversaryError::Overflow)?;
        }
        counts.extend(std::iter::repeat(value).take(phase_len));
    }
    ArrivalSequence::from_counts(&counts).map_err(|e| AdversaryError::InvalidParams(e.to_string()))
}

/// Phased sequence with the canonical integrality scaling `h = k!·α²·h'`.
pub fn gen_lower_bound(params: &LowerBoundParams) -> Result<ArrivalSequence, AdversaryError> {
    gen_lower_bound_scaled(params.k, params.alpha, params.h()?)
}

/// Closed-form left end of the defining interval at slot `t = i·α² + j`:
/// 0 in phase 0, the previous phase boundary `(i−1)α²` for the first `α`
/// slots of a later phase, and the current boundary `iα²` afterwards.
pub fn defining_interval_left_formula(k: u64, alpha: u64, t: Time) -> Time {
    let phase_len = alpha * alpha;
    let i = t / phase_len;
    let j = t % phase_len;
    debug_assert!(i < k);
    if i == 0 {
        0
    } else if j < alpha {
        (i - 1) * phase_len
    } else {
        i * phase_len
    }
}

/// Left ends of the defining intervals of every prefix of the phased
/// family, computed from the density calculus (not the closed form).
pub fn defining_interval_table(params: &LowerBoundParams) -> Result<Vec<Time>, AdversaryError> {
    let seq = gen_lower_bound(params)?;
    let jobs = seq
        .to_job_set()
        .map_err(|e| AdversaryError::InvalidParams(e.to_string()))?;
    let mut table = Vec::with_capacity(params.horizon() as usize);
    for t in 0..params.horizon() {
        let prefix = jobs.prefix(t);
        let (_, interval) = max_density_at(&prefix, t);
        table.push(interval.left());
    }
    Ok(table)
}

/// Rounding rule for [`CappedPvd`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapRounding {
    Floor,
    Ceil,
}

/// Reference policy that spends the entire density allowance `c·ϱ̂(t)`
/// (rounded down or up) and nothing more. It is not a competitive
/// algorithm from the literature; it exists to witness lower bounds
/// constructively: any policy that never exceeds the allowance performs
/// no better than this one.
pub struct CappedPvd {
    c: Rational,
    rounding: CapRounding,
    tracker: DensityTracker,
}

impl CappedPvd {
    pub fn new(c: Rational, rounding: CapRounding) -> Result<Self, PolicyError> {
        if !c.is_positive() {
            return Err(PolicyError::NonPositiveFactor(format_rational(&c)));
        }
        Ok(CappedPvd {
            c,
            rounding,
            tracker: DensityTracker::new(),
        })
    }
}

impl OnlinePolicy for CappedPvd {
    fn name(&self) -> String {
        let suffix = match self.rounding {
            CapRounding::Floor => "",
            CapRounding::Ceil => "^",
        };
        format!("cap{}:{}", suffix, format_rational(&self.c))
    }

    fn budget_for_slot(&mut self, t: Time, arrivals: &[Job]) -> Result<u64, PolicyError> {
        self.tracker.observe(t, arrivals);
        Ok(match self.rounding {
            CapRounding::Floor => self.tracker.scaled_floor(&self.c),
            CapRounding::Ceil => self.tracker.scaled_ceil(&self.c),
        })
    }
}

/// One observed slot of an adversary game.
#[derive(Debug, Clone)]
pub struct TranscriptRow {
    pub t: Time,
    pub released: u64,
    pub budget: u64,
    /// The allowance `c·ϱ̂(prefix)` the budget is compared against.
    pub threshold: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryOutcome {
    /// The policy used more than `c·ϱ̂` machines at slot `t`: its
    /// competitive factor on the released prefix exceeds `c`.
    ExceededBudget { t: Time },
    /// The policy stayed within the allowance for the whole release but
    /// missed deadlines.
    Infeasible { misses: u64 },
    /// The policy stayed within the allowance and finished every job.
    Survived,
}

#[derive(Debug, Clone)]
pub struct AdversaryVerdict {
    pub outcome: AdversaryOutcome,
    pub transcript: Vec<TranscriptRow>,
    /// Schedule of the completed release, when the game ran to the end.
    pub trace: Option<ScheduleTrace>,
}

/// Plays the phased release against `policy`: at each slot the arrivals
/// are released, the policy's budget is compared exactly against
/// `c·ϱ̂(prefix)`, and the game stops the moment the budget exceeds the
/// allowance. A policy that survives the full release is then simulated;
/// it wins only if nothing misses.
pub fn adversary_run(
    c: &Rational,
    params: &LowerBoundParams,
    policy: &mut dyn OnlinePolicy,
) -> Result<AdversaryVerdict, AdversaryError> {
    let seq = gen_lower_bound(params)?;
    let jobs = seq
        .to_job_set()
        .map_err(|e| AdversaryError::InvalidParams(e.to_string()))?;
    let horizon = params.horizon();
    let mut threshold_tracker = DensityTracker::new();
    let mut transcript = Vec::with_capacity(horizon as usize);
    let mut budgets = Vec::with_capacity(horizon as usize);

    for t in 0..horizon {
        let batch = jobs.arriving_at(t);
        let budget = policy
            .budget_for_slot(t, &batch)
            .map_err(|e| AdversaryError::InvalidParams(e.to_string()))?;
        threshold_tracker.observe(t, &batch);
        let threshold = c * threshold_tracker.max_density();
        let released = batch.iter().map(|j| j.multiplicity).sum();
        transcript.push(TranscriptRow {
            t,
            released,
            budget,
            threshold: threshold.clone(),
        });
        if integer(budget) > threshold {
            return Ok(AdversaryVerdict {
                outcome: AdversaryOutcome::ExceededBudget { t },
                transcript,
                trace: None,
            });
        }
        budgets.push(budget);
    }

    let trace = crate::edf::simulate_edf(&jobs, &BudgetTrace::new(budgets));
    let misses = trace.misses();
    let outcome = if misses > 0 {
        AdversaryOutcome::Infeasible { misses }
    } else {
        AdversaryOutcome::Survived
    };
    Ok(AdversaryVerdict {
        outcome,
        transcript,
        trace: Some(trace),
    })
}

/// Exact budget-deficit certificate for the phased family, per unit of
/// the base count `h`.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub k: u64,
    pub alpha: u64,
    pub c: Rational,
    /// `Σ_t ϱ̂(prefix(t)) / h`, exact.
    pub density_sum_per_h: Rational,
    /// Total workload per unit `h`, exact.
    pub workload_per_h: Rational,
    /// `c · density_sum_per_h`.
    pub allowance_per_h: Rational,
    /// True when the total allowance falls short of the workload: no
    /// policy that respects the allowance can finish every job.
    pub deficit: bool,
}

/// Computes the certificate twice — from per-phase closed forms and from
/// a direct per-prefix density scan — and insists the two agree exactly.
pub fn lower_bound_certificate(
    k: u64,
    alpha: u64,
    c: &Rational,
) -> Result<CertificateReport, AdversaryError> {
    if k < 2 || alpha < 2 {
        return Err(AdversaryError::InvalidParams(format!(
            "need k >= 2 and alpha >= 2; got k={k}, alpha={alpha}"
        )));
    }
    let phase_len = alpha * alpha;
    let big = |n: u64| BigInt::from(n);
    let fact = |n: u64| factorial_big(n);

    // Per-phase prefix maximum densities, per unit h:
    //   phase 0, slot j:            (j+1) / (kα²)
    //   phase i, j < α:   (α² + (j+1)α(k−i)) · α^(i−1) (k−1)!/(k−i)! / ((k−i+1)α²)
    //   phase i, j >= α:  (j+1) · α^i (k−1)!/(k−i−1)! / ((k−i)α²)
    let mut closed = Rational::zero();
    for j in 0..phase_len {
        closed += Rational::new(big(j + 1), big(k * phase_len));
    }
    for i in 1..k {
        let ratio_prev = fact(k - 1) / fact(k - i);
        let ratio_cur = fact(k - 1) / fact(k - i - 1);
        let pow_prev = big(alpha).pow((i - 1) as u32);
        let pow_cur = big(alpha).pow(i as u32);
        for j in 0..alpha {
            let numer = (big(phase_len) + big((j + 1) * alpha * (k - i)))
                * &pow_prev
                * &ratio_prev;
            closed += Rational::new(numer, big((k - i + 1) * phase_len));
        }
        for j in alpha..phase_len {
            let numer = big(j + 1) * &pow_cur * &ratio_cur;
            closed += Rational::new(numer, big((k - i) * phase_len));
        }
    }

    let mut workload = Rational::zero();
    for i in 0..k {
        let term = big(phase_len) * big(alpha).pow(i as u32) * fact(k - 1) / fact(k - i - 1);
        workload += Rational::from_integer(term);
    }

    // Direct route: generate the sequence with h = 1 (all quantities are
    // linear in h) and sum the prefix maximum densities.
    let seq = gen_lower_bound_scaled(k, alpha, 1)?;
    let direct: Rational = seq
        .prefix_density_curve(seq.deadline())
        .into_iter()
        .sum();
    if direct != closed {
        return Err(AdversaryError::ClosedFormMismatch {
            closed: format_rational(&closed),
            direct: format_rational(&direct),
        });
    }
    let direct_workload = seq.total();
    if direct_workload != workload {
        return Err(AdversaryError::ClosedFormMismatch {
            closed: format_rational(&workload),
            direct: format_rational(&direct_workload),
        });
    }

    let allowance = c * &closed;
    let deficit = allowance < workload;
    Ok(CertificateReport {
        k,
        alpha,
        c: c.clone(),
        density_sum_per_h: closed,
        workload_per_h: workload,
        allowance_per_h: allowance,
        deficit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::max_density;
    use crate::policy::Pvd;
    use crate::rational::ratio;

    #[test]
    fn uniform_square_basics() {
        let seq = gen_uniform(3).unwrap();
        assert_eq!(
            seq.sigma().iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            vec!["3", "3", "3"]
        );
        let seq4 = gen_uniform(4).unwrap();
        assert_eq!(seq4.total(), integer(16));
        assert_eq!(max_density(&seq4), integer(4));
        let seq1 = gen_uniform(1).unwrap();
        assert_eq!(crate::density::opt_machines(&seq1), 1);
        assert!(gen_uniform(0).is_err());
    }

    #[test]
    fn counterexample_shape() {
        let seq = gen_counterexample();
        assert_eq!(seq.deadline(), 32);
        assert_eq!(seq.total(), integer(6000));
        assert_eq!(seq.weight_at(16), &integer(1200));
        assert_eq!(seq.weight_at(19), &integer(0));
        assert_eq!(seq.weight_at(0), &integer(75));
        assert_eq!(seq.weight_at(31), &integer(300));
    }

    #[test]
    fn phased_sequence_base_case() {
        let seq = gen_lower_bound_scaled(2, 2, 1).unwrap();
        let counts: Vec<String> = seq.sigma().iter().map(|w| w.to_string()).collect();
        assert_eq!(counts, vec!["1", "1", "1", "1", "2", "2", "2", "2"]);
    }

    #[test]
    fn phased_sequence_is_nondecreasing() {
        for (k, alpha) in [(2, 2), (3, 4), (6, 5)] {
            let params = LowerBoundParams::new(k, alpha, 1).unwrap();
            let seq = gen_lower_bound(&params).unwrap();
            assert!(seq.is_nondecreasing());
        }
    }

    #[test]
    fn canonical_scaling_value() {
        let params = LowerBoundParams::new(6, 5, 1).unwrap();
        assert_eq!(params.h().unwrap(), 18_000);
        assert_eq!(params.horizon(), 150);
        let params22 = LowerBoundParams::new(2, 2, 1).unwrap();
        assert_eq!(params22.h().unwrap(), 8);
    }

    #[test]
    fn defining_interval_formula_cases() {
        // Phase 0.
        assert_eq!(defining_interval_left_formula(6, 5, 7), 0);
        // Phase 1, j = 2 < alpha: previous boundary.
        assert_eq!(defining_interval_left_formula(6, 5, 25 + 2), 0);
        // Phase 1, j = 10 >= alpha: current boundary.
        assert_eq!(defining_interval_left_formula(6, 5, 25 + 10), 25);
        // Phase 3, j = 1.
        assert_eq!(defining_interval_left_formula(6, 5, 3 * 25 + 1), 50);
    }

    #[test]
    fn table_matches_formula_small() {
        let params = LowerBoundParams::new(3, 2, 1).unwrap();
        let table = defining_interval_table(&params).unwrap();
        for (t, &left) in table.iter().enumerate() {
            assert_eq!(
                left,
                defining_interval_left_formula(3, 2, t as Time),
                "slot {t}"
            );
        }
    }

    #[test]
    fn integral_densities_under_canonical_scaling() {
        let params = LowerBoundParams::new(3, 3, 1).unwrap();
        let seq = gen_lower_bound(&params).unwrap();
        for rho in seq.prefix_density_curve(params.horizon()) {
            assert!(rho.is_integer(), "non-integral density {rho}");
        }
    }

    #[test]
    fn adversary_stops_overspending_policy_immediately() {
        let params = LowerBoundParams::new(6, 5, 1).unwrap();
        let mut policy = Pvd::new(ratio(26, 5)).unwrap();
        let verdict = adversary_run(&ratio(209, 100), &params, &mut policy).unwrap();
        assert_eq!(verdict.outcome, AdversaryOutcome::ExceededBudget { t: 0 });
        assert_eq!(verdict.transcript.len(), 1);
    }

    #[test]
    fn adversary_defeats_allowance_bound_policy() {
        let params = LowerBoundParams::new(6, 5, 1).unwrap();
        let mut policy = CappedPvd::new(ratio(209, 100), CapRounding::Floor).unwrap();
        let verdict = adversary_run(&ratio(209, 100), &params, &mut policy).unwrap();
        match verdict.outcome {
            AdversaryOutcome::Infeasible { misses } => assert!(misses > 0),
            other => panic!("expected misses, got {other:?}"),
        }
    }

    #[test]
    fn generous_allowance_lets_feasible_policy_survive() {
        let params = LowerBoundParams::new(2, 2, 1).unwrap();
        let mut policy = Pvd::new(ratio(26, 5)).unwrap();
        let verdict = adversary_run(&integer(10), &params, &mut policy).unwrap();
        assert_eq!(verdict.outcome, AdversaryOutcome::Survived);
        assert_eq!(verdict.transcript.len(), 8);
    }

    #[test]
    fn certificate_small_case_consistency() {
        let report = lower_bound_certificate(2, 2, &integer(2)).unwrap();
        // Densities per unit h: 1/8, 2/8, 3/8, 4/8, 3/4, 1, 3/2, 2.
        assert_eq!(report.density_sum_per_h, ratio(13, 2));
        assert_eq!(report.workload_per_h, integer(12));
        // 2 * 13/2 = 13 > 12: no deficit at c = 2 for this small case.
        assert!(!report.deficit);
    }
}
