//! Model-level coverage measurement over trace suites and the
//! coverage-guided roundtrip loop that extends a suite until a target
//! transition-coverage ratio is met.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::model::FlatModel;
use crate::sim;
use crate::testgen::{
    expand_assignments, generate_reach, ReachSpec, SearchConfig, SearchResult, TestgenError,
};
use crate::trace::{reconstruct_inputs, Eet};

#[derive(Debug, Clone)]
pub struct InstanceCoverage {
    pub path: String,
    pub visited_states: BTreeSet<usize>,
    pub fired_transitions: BTreeSet<usize>,
    pub total_states: usize,
    pub total_transitions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnreachableTransition {
    pub instance: String,
    pub transition: usize,
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub instances: Vec<InstanceCoverage>,
    pub state_coverage: f64,
    pub transition_coverage: f64,
    /// Transitions the roundtrip loop could not reach within its depth
    /// bound; empty for plain measurements.
    pub unreachable_at_depth: Vec<UnreachableTransition>,
}

impl CoverageReport {
    fn compute(instances: Vec<InstanceCoverage>) -> CoverageReport {
        let (mut vs, mut ts, mut vt, mut tt) = (0usize, 0usize, 0usize, 0usize);
        for ic in &instances {
            vs += ic.visited_states.len();
            ts += ic.total_states;
            vt += ic.fired_transitions.len();
            tt += ic.total_transitions;
        }
        let ratio = |covered: usize, total: usize| {
            if total == 0 {
                1.0
            } else {
                covered as f64 / total as f64
            }
        };
        CoverageReport {
            instances,
            state_coverage: ratio(vs, ts),
            transition_coverage: ratio(vt, tt),
            unreachable_at_depth: Vec::new(),
        }
    }

    fn is_covered(&self, instance: usize, transition: usize) -> bool {
        self.instances[instance]
            .fired_transitions
            .contains(&transition)
    }
}

/// Replays every trace from the initial state and unions visited control
/// states and fired transitions. Initial states count as visited even for
/// an empty suite.
pub fn measure_model_coverage(
    fm: &FlatModel,
    suite: &[Eet],
) -> Result<CoverageReport, TestgenError> {
    let mut instances: Vec<InstanceCoverage> = Vec::with_capacity(fm.instances.len());
    let initial = sim::init(fm)?;
    for (idx, fi) in fm.instances.iter().enumerate() {
        let a = fm.instance_type(idx).automaton().expect("atomic");
        let mut visited = BTreeSet::new();
        visited.insert(initial.instances[idx].control);
        instances.push(InstanceCoverage {
            path: fi.path.clone(),
            visited_states: visited,
            fired_transitions: BTreeSet::new(),
            total_states: a.states.len(),
            total_transitions: a.transitions.len(),
        });
    }
    for (index, eet) in suite.iter().enumerate() {
        let inputs = reconstruct_inputs(eet, fm);
        let mut state = initial.clone();
        for input in &inputs {
            let (next, rec) =
                sim::step(&state, input, fm).map_err(|source| TestgenError::Replay {
                    index,
                    cycle: state.cycle,
                    source,
                })?;
            for (i, fired) in rec.fired.iter().enumerate() {
                if let Some(ti) = fired {
                    instances[i].fired_transitions.insert(*ti);
                }
                instances[i]
                    .visited_states
                    .insert(next.instances[i].control);
            }
            state = next;
        }
    }
    Ok(CoverageReport::compute(instances))
}

/// The roundtrip loop: measure coverage, aim a reach search at the first
/// uncovered transition, add the witness to the suite, repeat. Stops when
/// the transition-coverage target is met or every remaining uncovered
/// transition has been marked unreachable within the depth bound.
pub fn roundtrip(
    fm: &FlatModel,
    cfg: &SearchConfig,
    target_ratio: f64,
) -> Result<(Vec<Eet>, CoverageReport), TestgenError> {
    assert!(
        target_ratio > 0.0 && target_ratio <= 1.0,
        "target ratio must be in (0, 1]"
    );
    expand_assignments(fm, cfg)?; // validate domains up front
    let mut suite: Vec<Eet> = Vec::new();
    let mut unreachable: Vec<UnreachableTransition> = Vec::new();
    loop {
        let mut report = measure_model_coverage(fm, &suite)?;
        report.unreachable_at_depth = unreachable.clone();
        if report.transition_coverage >= target_ratio {
            return Ok((suite, report));
        }
        // first uncovered transition in declaration order, skipping the
        // ones already marked unreachable
        let next = fm.instances.iter().enumerate().find_map(|(idx, fi)| {
            let a = fm.instance_type(idx).automaton().expect("atomic");
            (0..a.transitions.len()).find_map(|ti| {
                let marked = unreachable
                    .iter()
                    .any(|u| u.instance == fi.path && u.transition == ti);
                if !report.is_covered(idx, ti) && !marked {
                    Some((idx, ti))
                } else {
                    None
                }
            })
        });
        let Some((idx, ti)) = next else {
            return Ok((suite, report));
        };
        let spec = ReachSpec::fire(&fm.instances[idx].path, ti);
        match generate_reach(fm, &spec, cfg)? {
            SearchResult::Found { eet, .. } => suite.push(eet),
            SearchResult::NotFound { depth_reached, .. } => {
                unreachable.push(UnreachableTransition {
                    instance: fm.instances[idx].path.clone(),
                    transition: ti,
                    depth: depth_reached,
                });
            }
        }
    }
}

/// Renders the line-oriented coverage report: one line per transition,
/// `instance/t<index>: covered|uncovered|unreachable@<depth>`.
pub fn render_coverage_report(report: &CoverageReport) -> String {
    let mut out = String::new();
    for ic in &report.instances {
        for ti in 0..ic.total_transitions {
            let status = if ic.fired_transitions.contains(&ti) {
                "covered".to_string()
            } else if let Some(u) = report
                .unreachable_at_depth
                .iter()
                .find(|u| u.instance == ic.path && u.transition == ti)
            {
                format!("unreachable@{}", u.depth)
            } else {
                "uncovered".to_string()
            };
            let _ = writeln!(out, "{}/t{}: {}", ic.path, ti, status);
        }
    }
    out
}
