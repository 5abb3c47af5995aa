//! Per-run conformance metrics.
//!
//! * TR  = |B_E ∩ B_O| / |B_E|  (transition recall, 1 when B_E is empty)
//! * TP  = |B_E ∩ B_O| / |B_O|  (transition precision, 1 when B_O is empty)
//! * ASR = harmonic mean of TR and TP (0 when both are 0)
//! * HF1 = F1 over the *deduplicated* edge sets, ignoring order and multiplicity
//! * TSR = the run's outcome flag as 0/1
//!
//! Everything is generic over [`Scalar`], so the same code yields `f64`
//! scores for reporting and exact [`num_rational::Rational64`] scores for
//! verification.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::logio::{RunRecord, WorkflowSpec};
use crate::model::{Trajectory, Transition, TransitionMultiset};
use crate::scalar::Scalar;

/// Metric values for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRow<S> {
    pub tsr: S,
    pub hf1: S,
    pub tr: S,
    pub tp: S,
    pub asr: S,
}

impl<S: Scalar> ScoreRow<S> {
    pub fn to_f64(self) -> ScoreRow<f64> {
        ScoreRow {
            tsr: self.tsr.to_f64(),
            hf1: self.hf1.to_f64(),
            tr: self.tr.to_f64(),
            tp: self.tp.to_f64(),
            asr: self.asr.to_f64(),
        }
    }
}

fn ratio_or_one<S: Scalar>(num: usize, den: usize) -> S {
    if den == 0 {
        S::one()
    } else {
        S::from_counts(num, den)
    }
}

pub fn transition_recall<S: Scalar>(
    expected: &TransitionMultiset,
    observed: &TransitionMultiset,
) -> S {
    ratio_or_one(
        expected.intersect(observed).total_size(),
        expected.total_size(),
    )
}

pub fn transition_precision<S: Scalar>(
    expected: &TransitionMultiset,
    observed: &TransitionMultiset,
) -> S {
    ratio_or_one(
        expected.intersect(observed).total_size(),
        observed.total_size(),
    )
}

pub fn asr<S: Scalar>(expected: &TransitionMultiset, observed: &TransitionMultiset) -> S {
    let tr: S = transition_recall(expected, observed);
    let tp: S = transition_precision(expected, observed);
    S::harmonic_mean(tr, tp)
}

fn edge_set(t: &Trajectory) -> BTreeSet<Transition> {
    t.pairs().collect()
}

/// Handoff F1 over deduplicated edges.
pub fn hf1<S: Scalar>(expected: &Trajectory, observed: &Trajectory) -> S {
    let e = edge_set(expected);
    let o = edge_set(observed);
    let common = e.intersection(&o).count();
    let recall: S = ratio_or_one(common, e.len());
    let precision: S = ratio_or_one(common, o.len());
    S::harmonic_mean(recall, precision)
}

/// Scores `observed` against `expected` with outcome flag `success`.
pub fn score_trajectories<S: Scalar>(
    expected: &Trajectory,
    observed: &Trajectory,
    success: bool,
) -> ScoreRow<S> {
    let be = expected.transitions();
    let bo = observed.transitions();
    let tr: S = transition_recall(&be, &bo);
    let tp: S = transition_precision(&be, &bo);
    ScoreRow {
        tsr: S::indicator(success),
        hf1: hf1(expected, observed),
        tr,
        tp,
        asr: S::harmonic_mean(tr, tp),
    }
}

pub fn score_run<S: Scalar>(record: &RunRecord, spec: &WorkflowSpec) -> Result<ScoreRow<S>> {
    let expected = spec
        .expected(&record.scenario)
        .ok_or_else(|| Error::UnknownScenario {
            scenario: record.scenario.clone(),
            run_id: record.run_id.clone(),
        })?;
    Ok(score_trajectories(
        expected,
        &record.trajectory,
        record.success,
    ))
}
