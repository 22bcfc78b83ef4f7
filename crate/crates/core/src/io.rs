//! File formats: JSON-lines instances, run reports, CSV traces.
//!
//! Instance files hold one JSON object per line. Job-set files use
//! records `{"arrival": a, "deadline": d, "count": m}`; a
//! universal-deadline file is a single record
//! `{"deadline": d, "sigma": [w0, w1, ...]}` whose weights are integers
//! or exact-rational strings `"p/q"`. Rationals are always written back
//! as strings (`"p"` or `"p/q"`), never as floats.

use crate::adversary::TranscriptRow;
use crate::fuzz::FuzzFailure;
use crate::instance::{ArrivalSequence, Instance, InstanceError, Job, JobSet, Time};
use crate::policy::RunReport;
use crate::potential::ReductionStep;
use crate::rational::{decimal_string, format_rational, parse_rational, Rational};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("a sequence record must be the only record in the file")]
    MixedRecords,
    #[error("file contains no records")]
    Empty,
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// A parsed instance file: either a general job set or a
/// universal-deadline sequence.
#[derive(Debug, Clone)]
pub enum InstanceData {
    Jobs(JobSet),
    Sequence(ArrivalSequence),
}

impl InstanceData {
    /// The instance as a job multiset; a sequence converts only when all
    /// weights are integers.
    pub fn to_job_set(&self) -> Result<JobSet, InstanceError> {
        match self {
            InstanceData::Jobs(jobs) => Ok(jobs.clone()),
            InstanceData::Sequence(seq) => seq.to_job_set(),
        }
    }

    pub fn total_workload(&self) -> Rational {
        match self {
            InstanceData::Jobs(jobs) => Instance::total_workload(jobs),
            InstanceData::Sequence(seq) => seq.total(),
        }
    }

    pub fn max_density(&self) -> Rational {
        match self {
            InstanceData::Jobs(jobs) => crate::density::max_density(jobs),
            InstanceData::Sequence(seq) => crate::density::max_density(seq),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JobRecord {
    arrival: Time,
    deadline: Time,
    count: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SequenceRecord {
    deadline: Time,
    sigma: Vec<WeightRepr>,
}

/// Weight wire form: integer or `"p/q"` string.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum WeightRepr {
    Int(u64),
    Str(String),
}

impl WeightRepr {
    fn to_rational(&self, line: usize) -> Result<Rational, FormatError> {
        match self {
            WeightRepr::Int(n) => Ok(crate::rational::integer(*n)),
            WeightRepr::Str(s) => parse_rational(s).map_err(|e| FormatError::Malformed {
                line,
                message: e.to_string(),
            }),
        }
    }
}

/// Serializes an instance as JSON lines.
pub fn write_instance(out: &mut dyn Write, data: &InstanceData) -> Result<(), FormatError> {
    match data {
        InstanceData::Jobs(jobs) => {
            for job in jobs.groups() {
                let record = JobRecord {
                    arrival: job.arrival,
                    deadline: job.deadline,
                    count: job.multiplicity,
                };
                writeln!(out, "{}", serde_json::to_string(&record).expect("plain record"))?;
            }
        }
        InstanceData::Sequence(seq) => {
            let record = SequenceRecord {
                deadline: seq.deadline(),
                sigma: seq
                    .sigma()
                    .iter()
                    .map(|w| WeightRepr::Str(format_rational(w)))
                    .collect(),
            };
            writeln!(out, "{}", serde_json::to_string(&record).expect("plain record"))?;
        }
    }
    Ok(())
}

pub fn instance_to_string(data: &InstanceData) -> String {
    let mut buf = Vec::new();
    write_instance(&mut buf, data).expect("in-memory write");
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

/// Parses an instance from JSON lines. A record containing `sigma` is a
/// universal-deadline sequence and must be alone in the file.
pub fn read_instance(reader: impl BufRead) -> Result<InstanceData, FormatError> {
    let mut jobs = JobSet::new();
    let mut sequence: Option<ArrivalSequence> = None;
    let mut saw_job_record = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(trimmed).map_err(|e| FormatError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if value.get("sigma").is_some() {
            if saw_job_record || sequence.is_some() {
                return Err(FormatError::MixedRecords);
            }
            let record: SequenceRecord =
                serde_json::from_value(value).map_err(|e| FormatError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
            let sigma = record
                .sigma
                .iter()
                .map(|w| w.to_rational(line_no))
                .collect::<Result<Vec<_>, _>>()?;
            sequence = Some(ArrivalSequence::new(record.deadline, sigma)?);
        } else {
            if sequence.is_some() {
                return Err(FormatError::MixedRecords);
            }
            let record: JobRecord =
                serde_json::from_value(value).map_err(|e| FormatError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
            jobs.insert(Job::new(record.arrival, record.deadline, record.count)?)?;
            saw_job_record = true;
        }
    }
    if let Some(seq) = sequence {
        return Ok(InstanceData::Sequence(seq));
    }
    if !saw_job_record {
        return Err(FormatError::Empty);
    }
    Ok(InstanceData::Jobs(jobs))
}

pub fn parse_instance_str(s: &str) -> Result<InstanceData, FormatError> {
    read_instance(io::Cursor::new(s.as_bytes()))
}

fn rational_value(r: &Rational) -> Value {
    json!({
        "exact": format_rational(r),
        "decimal": decimal_string(r, 4),
    })
}

/// Run report as a JSON value with exact-rational strings.
pub fn run_report_value(report: &RunReport, total_workload: &Rational) -> Value {
    json!({
        "policy": report.policy,
        "misses": report.misses,
        "total_budget": report.total_budget(),
        "total_workload": format_rational(total_workload),
        "peak_machines": report.trace.peak_machines,
        "peak_ratio": report.peak_ratio.as_ref().map(rational_value),
        "budgets": report.budgets.as_slice(),
        "opt_curve": report.opt_curve,
        "ratio_profile": report
            .ratio_profile
            .iter()
            .map(|r| r.as_ref().map(|v| format_rational(v)))
            .collect::<Vec<_>>(),
    })
}

/// Per-slot schedule trace as CSV: `t,budget,executed,ready,cumulative_misses`.
/// The final row (`t = horizon`) carries jobs expiring at the very end of
/// the run.
pub fn write_trace_csv(out: &mut dyn Write, report: &RunReport) -> Result<(), FormatError> {
    writeln!(out, "t,budget,executed,ready,cumulative_misses")?;
    let trace = &report.trace;
    let horizon = trace.horizon();
    for t in 0..horizon {
        writeln!(
            out,
            "{},{},{},{},{}",
            t,
            report.budgets.get(t),
            trace.executed[t as usize],
            trace.ready[t as usize],
            trace.cumulative_misses(t),
        )?;
    }
    writeln!(
        out,
        "{},0,0,0,{}",
        horizon,
        trace.cumulative_misses(horizon)
    )?;
    Ok(())
}

/// Adversary transcript as CSV: `t,released,budget,threshold`.
pub fn write_transcript_csv(
    out: &mut dyn Write,
    transcript: &[TranscriptRow],
) -> Result<(), FormatError> {
    writeln!(out, "t,released,budget,threshold")?;
    for row in transcript {
        writeln!(
            out,
            "{},{},{},{}",
            row.t,
            row.released,
            row.budget,
            format_rational(&row.threshold)
        )?;
    }
    Ok(())
}

/// Reduction trace (input, every averaging step, result) as JSON.
pub fn reduction_trace_value(
    input: &ArrivalSequence,
    steps: &[ReductionStep],
    result: &ArrivalSequence,
) -> Value {
    json!({
        "deadline": input.deadline(),
        "input": input.sigma().iter().map(format_rational).collect::<Vec<_>>(),
        "steps": steps
            .iter()
            .map(|s| json!({
                "k": s.k,
                "m": s.m,
                "average": format_rational(&s.average),
            }))
            .collect::<Vec<_>>(),
        "result": result.sigma().iter().map(format_rational).collect::<Vec<_>>(),
    })
}

/// Fuzz counterexample dump as JSON.
pub fn fuzz_failure_value(failure: &FuzzFailure) -> Value {
    json!({
        "check": failure.check,
        "iteration": failure.iteration,
        "detail": failure.detail,
        "instance": failure
            .instance
            .groups()
            .map(|j| json!({
                "arrival": j.arrival,
                "deadline": j.deadline,
                "count": j.multiplicity,
            }))
            .collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{integer, ratio};

    #[test]
    fn job_lines_round_trip() {
        let jobs = JobSet::from_jobs([
            Job::new(0, 2, 3).unwrap(),
            Job::new(1, 5, 1).unwrap(),
        ])
        .unwrap();
        let text = instance_to_string(&InstanceData::Jobs(jobs.clone()));
        let parsed = parse_instance_str(&text).unwrap();
        match parsed {
            InstanceData::Jobs(back) => assert_eq!(back, jobs),
            _ => panic!("expected job records"),
        }
    }

    #[test]
    fn sequence_round_trip_with_fractions() {
        let seq = ArrivalSequence::new(3, vec![ratio(5, 2), integer(0), integer(7)]).unwrap();
        let text = instance_to_string(&InstanceData::Sequence(seq.clone()));
        assert!(text.contains("\"5/2\""));
        match parse_instance_str(&text).unwrap() {
            InstanceData::Sequence(back) => assert_eq!(back, seq),
            _ => panic!("expected a sequence record"),
        }
    }

    #[test]
    fn sequence_accepts_plain_integers() {
        let parsed = parse_instance_str(r#"{"deadline": 2, "sigma": [3, "1/2"]}"#).unwrap();
        match parsed {
            InstanceData::Sequence(seq) => {
                assert_eq!(seq.weight_at(0), &integer(3));
                assert_eq!(seq.weight_at(1), &ratio(1, 2));
            }
            _ => panic!("expected a sequence record"),
        }
    }

    #[test]
    fn rejects_mixed_and_empty_files() {
        let mixed = "{\"arrival\":0,\"deadline\":1,\"count\":1}\n{\"deadline\":2,\"sigma\":[1,1]}";
        assert!(matches!(
            parse_instance_str(mixed),
            Err(FormatError::MixedRecords)
        ));
        assert!(matches!(parse_instance_str(""), Err(FormatError::Empty)));
        assert!(matches!(
            parse_instance_str("{not json}"),
            Err(FormatError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn trace_csv_shape() {
        let jobs = JobSet::from_jobs([Job::new(0, 2, 3).unwrap()]).unwrap();
        let mut policy = crate::policy::Pvd::new(integer(1)).unwrap();
        let report = crate::policy::run_online(&jobs, &mut policy).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &report).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,budget,executed,ready,cumulative_misses");
        assert_eq!(lines.len(), 1 + 2 + 1);
    }
}
