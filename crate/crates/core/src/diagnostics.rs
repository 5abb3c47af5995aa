//! Deviation analysis: missing/surplus transitions per run, clusters of
//! deviant trajectories across a corpus, and per-transition coverage.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::logio::{RunRecord, WorkflowSpec};
use crate::model::{Trajectory, Transition, TransitionMultiset};

/// Transitions expected but not observed (`missing`, model moves) and
/// observed but not expected (`surplus`, log moves).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deviation {
    pub missing: TransitionMultiset,
    pub surplus: TransitionMultiset,
}

impl Deviation {
    pub fn is_conforming(&self) -> bool {
        self.missing.is_empty() && self.surplus.is_empty()
    }
}

pub fn deviations(expected: &Trajectory, observed: &Trajectory) -> Deviation {
    let be = expected.transitions();
    let bo = observed.transitions();
    Deviation {
        missing: be.subtract(&bo),
        surplus: bo.subtract(&be),
    }
}

fn expected_for<'a>(spec: &'a WorkflowSpec, record: &RunRecord) -> Result<&'a Trajectory> {
    spec.expected(&record.scenario)
        .ok_or_else(|| Error::UnknownScenario {
            scenario: record.scenario.clone(),
            run_id: record.run_id.clone(),
        })
}

/// Runs sharing one exact deviant sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternCluster {
    pub trajectory: Trajectory,
    pub count: usize,
    pub scenarios: BTreeSet<String>,
    pub models: BTreeSet<String>,
    /// Every member's transition multiset equals its expected one: the
    /// sequence differs only in order, so ASR is 1.
    pub order_only: bool,
    pub deviation: Deviation,
}

/// Groups runs whose observed sequence differs from the expected one.
///
/// Sorted by count descending, ties by first occurrence.
pub fn cluster_patterns<'a, I>(records: I, spec: &WorkflowSpec) -> Result<Vec<PatternCluster>>
where
    I: IntoIterator<Item = &'a RunRecord>,
{
    let mut clusters: Vec<PatternCluster> = Vec::new();
    let mut index: HashMap<Trajectory, usize> = HashMap::new();
    for record in records {
        let expected = expected_for(spec, record)?;
        if &record.trajectory == expected {
            continue;
        }
        let deviation = deviations(expected, &record.trajectory);
        let slot = *index.entry(record.trajectory.clone()).or_insert_with(|| {
            clusters.push(PatternCluster {
                trajectory: record.trajectory.clone(),
                count: 0,
                scenarios: BTreeSet::new(),
                models: BTreeSet::new(),
                order_only: true,
                deviation: deviation.clone(),
            });
            clusters.len() - 1
        });
        let cluster = &mut clusters[slot];
        cluster.count += 1;
        cluster.scenarios.insert(record.scenario.clone());
        cluster.models.insert(record.model.clone());
        cluster.order_only &= deviation.is_conforming();
    }
    // Stable sort keeps first-occurrence order among equal counts.
    clusters.sort_by_key(|c| std::cmp::Reverse(c.count));
    Ok(clusters)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub transition: Transition,
    /// 1-based multiplicity level within the expected multiset.
    pub occurrence: usize,
    /// Runs observing the transition at least `occurrence` times.
    pub covered: usize,
    /// `covered / n_runs`; `None` when there are no runs.
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageTable {
    pub scenario: String,
    pub n_runs: usize,
    pub rows: Vec<CoverageRow>,
}

impl CoverageTable {
    /// Rows at the minimum coverage fraction, in table order. Empty when the
    /// corpus is empty or every row is fully covered.
    pub fn least_covered(&self) -> Vec<&CoverageRow> {
        let min = self
            .rows
            .iter()
            .filter_map(|r| r.fraction)
            .fold(f64::INFINITY, f64::min);
        if min >= 1.0 {
            return Vec::new();
        }
        self.rows
            .iter()
            .filter(|r| r.fraction == Some(min))
            .collect()
    }
}

/// Multiplicity-aware coverage of each expected transition of `scenario`.
///
/// A transition expected `k` times contributes rows for occurrences `1..=k`,
/// listed in order of first appearance along the expected trajectory. An
/// empty corpus yields `n_runs = 0` and no rows.
pub fn checkpoint_coverage<'a, I>(
    records: I,
    spec: &WorkflowSpec,
    scenario: &str,
) -> Result<CoverageTable>
where
    I: IntoIterator<Item = &'a RunRecord>,
{
    let expected = spec.expected(scenario).ok_or_else(|| {
        Error::Config(format!("scenario {scenario:?} is not in the workflow spec"))
    })?;
    let be = expected.transitions();
    let mut order: Vec<Transition> = Vec::new();
    for t in expected.pairs() {
        if !order.contains(&t) {
            order.push(t);
        }
    }
    let levels: Vec<(Transition, usize)> = order
        .into_iter()
        .flat_map(|t| {
            let k = be.count(&t);
            (1..=k).map(move |occ| (t.clone(), occ))
        })
        .collect();

    let mut covered = vec![0usize; levels.len()];
    let mut n_runs = 0;
    for record in records.into_iter().filter(|r| r.scenario == scenario) {
        n_runs += 1;
        let bo = record.trajectory.transitions();
        for (hits, (t, occ)) in covered.iter_mut().zip(&levels) {
            if bo.count(t) >= *occ {
                *hits += 1;
            }
        }
    }
    if n_runs == 0 {
        return Ok(CoverageTable {
            scenario: scenario.to_string(),
            n_runs,
            rows: Vec::new(),
        });
    }
    let rows = levels
        .into_iter()
        .zip(covered)
        .map(|((transition, occurrence), covered)| CoverageRow {
            transition,
            occurrence,
            covered,
            fraction: Some(covered as f64 / n_runs as f64),
        })
        .collect();
    Ok(CoverageTable {
        scenario: scenario.to_string(),
        n_runs,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{transition_precision, transition_recall};
    use crate::model::test_util::{ms, tr, traj};
    use num_rational::Rational64;
    use proptest::prelude::*;

    const T3: [&str; 11] = [
        "CPA", "PaySup", "CartAg", "PaySup", "CPA", "PaySup", "ReviewAg", "PaySup", "ExecAg",
        "PaySup", "CPA",
    ];
    const SHORTCUT: [&str; 9] = [
        "CPA", "PaySup", "CartAg", "PaySup", "ReviewAg", "PaySup", "ExecAg", "PaySup", "CPA",
    ];

    fn rec(id: usize, scenario: &str, steps: &[&str]) -> RunRecord {
        RunRecord {
            run_id: id.to_string(),
            model: "m".into(),
            scenario: scenario.into(),
            repeat: 0,
            trajectory: traj(steps),
            success: true,
            meta: None,
        }
    }

    /// Counts adjacent pairs by direct scan, independent of the multiset type.
    fn pair_counts(steps: &[&str]) -> HashMap<(String, String), usize> {
        let mut m = HashMap::new();
        for i in 0..steps.len() - 1 {
            *m.entry((steps[i].to_string(), steps[i + 1].to_string()))
                .or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn shortcut_misses_the_confirmation_round_trip() {
        let e = pair_counts(&T3);
        let o = pair_counts(&SHORTCUT);
        let mut missing: Vec<_> = e
            .iter()
            .filter_map(|(k, &n)| {
                let d = n.saturating_sub(*o.get(k).unwrap_or(&0));
                (d > 0).then(|| (k.0.as_str(), k.1.as_str(), d))
            })
            .collect();
        missing.sort();
        assert_eq!(missing, [("CPA", "PaySup", 1), ("PaySup", "CPA", 1)]);

        let d = deviations(&traj(&T3), &traj(&SHORTCUT));
        assert_eq!(d.missing, ms(&[("PaySup", "CPA", 1), ("CPA", "PaySup", 1)]));
        assert!(d.surplus.is_empty());
    }

    #[test]
    fn identical_trajectories_conform() {
        assert!(deviations(&traj(&T3), &traj(&T3)).is_conforming());
    }

    #[test]
    fn inserted_round_trip_is_surplus() {
        let d = deviations(&traj(&["A", "B", "C"]), &traj(&["A", "B", "A", "B", "C"]));
        assert!(d.missing.is_empty());
        assert_eq!(d.surplus, ms(&[("A", "B", 1), ("B", "A", 1)]));
    }

    #[test]
    fn single_shortcut_pattern_forms_one_cluster() {
        let spec = WorkflowSpec::default_spec();
        let mut records: Vec<_> = (0..20).map(|i| rec(i, "T3", &T3)).collect();
        records.extend((20..27).map(|i| rec(i, "T3", &SHORTCUT)));
        let clusters = cluster_patterns(&records, &spec).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].count, 7);
        assert!(!clusters[0].order_only);
    }

    #[test]
    fn conforming_corpus_has_no_clusters() {
        let spec = WorkflowSpec::default_spec();
        let records: Vec<_> = (0..5).map(|i| rec(i, "T3", &T3)).collect();
        assert!(cluster_patterns(&records, &spec).unwrap().is_empty());
    }

    #[test]
    fn clusters_sorted_by_count_then_first_seen() {
        let spec = WorkflowSpec::default_spec();
        let other = ["CPA", "CardSup", "CPA"];
        let third = ["CPA", "CardSup", "RegAg", "CPA"];
        let mut records = Vec::new();
        records.extend((0..3).map(|i| rec(i, "T1", &other)));
        records.extend((3..10).map(|i| rec(i, "T3", &SHORTCUT)));
        records.extend((10..13).map(|i| rec(i, "T1", &third)));
        let clusters = cluster_patterns(&records, &spec).unwrap();
        let counts: Vec<_> = clusters.iter().map(|c| c.count).collect();
        assert_eq!(counts, [7, 3, 3]);
        assert_eq!(clusters[1].trajectory, traj(&other));
        assert_eq!(clusters.iter().map(|c| c.count).sum::<usize>(), 13);
    }

    #[test]
    fn rotated_cycle_is_order_only() {
        let spec = crate::logio::parse_workflow_spec(
            r#"{"agents":["A","B","C"],"scenarios":{"S":{"expected":["A","B","C","A"]}}}"#,
        )
        .unwrap();
        let clusters = cluster_patterns(&[rec(0, "S", &["B", "C", "A", "B"])], &spec).unwrap();
        assert!(clusters[0].order_only);
    }

    #[test]
    fn unknown_scenario_fails_clustering() {
        let spec = WorkflowSpec::default_spec();
        assert!(cluster_patterns(&[rec(0, "T9", &["CPA"])], &spec).is_err());
    }

    #[test]
    fn shortcut_coverage_localizes_the_skip() {
        let spec = WorkflowSpec::default_spec();
        let records: Vec<_> = (0..10).map(|i| rec(i, "T3", &SHORTCUT)).collect();
        let table = checkpoint_coverage(&records, &spec, "T3").unwrap();
        assert_eq!(table.n_runs, 10);
        assert_eq!(table.rows.len(), 10);
        for row in &table.rows {
            let round_trip =
                row.transition == tr("PaySup", "CPA") || row.transition == tr("CPA", "PaySup");
            let want = if round_trip && row.occurrence == 2 {
                0.0
            } else {
                1.0
            };
            assert_eq!(
                row.fraction,
                Some(want),
                "{} #{}",
                row.transition,
                row.occurrence
            );
        }
        let low = table.least_covered();
        assert_eq!(low.len(), 2);
        assert!(low.iter().all(|r| r.occurrence == 2));
    }

    #[test]
    fn conforming_and_empty_coverage() {
        let spec = WorkflowSpec::default_spec();
        let records: Vec<_> = (0..4).map(|i| rec(i, "T3", &T3)).collect();
        let table = checkpoint_coverage(&records, &spec, "T3").unwrap();
        assert!(table.rows.iter().all(|r| r.fraction == Some(1.0)));
        assert!(table.least_covered().is_empty());

        let empty = checkpoint_coverage(&[], &spec, "T3").unwrap();
        assert_eq!(empty.n_runs, 0);
        assert!(empty.rows.is_empty());
        assert!(checkpoint_coverage(&[], &spec, "T9").is_err());
    }

    fn arb_traj() -> impl Strategy<Value = Trajectory> {
        prop::collection::vec(prop::sample::select(vec!["A", "B", "C"]), 2..9)
            .prop_map(|v| traj(&v))
    }

    proptest! {
        #[test]
        fn diagnostics_agree_with_metrics(e in arb_traj(), o in arb_traj()) {
            let (be, bo) = (e.transitions(), o.transitions());
            let common = be.intersect(&bo).total_size();
            let d = deviations(&e, &o);
            prop_assert!(d.missing.intersect(&d.surplus).is_empty());
            prop_assert_eq!(d.missing.total_size(), be.total_size() - common);
            prop_assert_eq!(d.surplus.total_size(), bo.total_size() - common);
            let one = Rational64::new(1, 1);
            let tr = one - Rational64::new(d.missing.total_size() as i64, be.total_size() as i64);
            let tp = one - Rational64::new(d.surplus.total_size() as i64, bo.total_size() as i64);
            prop_assert_eq!(tr, transition_recall::<Rational64>(&be, &bo));
            prop_assert_eq!(tp, transition_precision::<Rational64>(&be, &bo));
            prop_assert_eq!(d.is_conforming(), be == bo);
        }
    }
}
