//! Test-sequence generation by bounded explicit-state search: drive the
//! system into a configuration named by a reach specification, exploring
//! the product of system states and finite per-port input domains.

pub mod coverage;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::dtd::check::{check_value_type, expr_type, resolve_expr, TypeEnv};
use crate::dtd::eval::{eval_expr, Env, EvalError};
use crate::dtd::{Expr, TypeRef, UnOp, Value};
use crate::model::FlatModel;
use crate::sim::{self, SimError, SimState, StepInput};
use crate::trace::Eet;

#[derive(Debug, Clone, Error)]
pub enum TestgenError {
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("unknown state `{state}` in `{component}`")]
    UnknownState { component: String, state: String },
    #[error("component `{component}` has no transition {index}")]
    UnknownTransition { component: String, index: usize },
    #[error("reach specification names no target")]
    EmptyTarget,
    #[error("target predicate: {0}")]
    BadPredicate(String),
    #[error("no input domain for open port `{0}`")]
    MissingDomain(String),
    #[error("domain value for `{port}`: {message}")]
    BadDomainValue { port: String, message: String },
    #[error("max depth must be positive")]
    ZeroDepth,
    #[error("trace {index}, cycle {cycle}: {source}")]
    Replay {
        index: usize,
        cycle: u64,
        source: SimError,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("internal: {0}")]
    Internal(String),
}

/// What a generated sequence must reach: a control state, a predicate over
/// the component's data variables, a specific transition firing, or any
/// conjunction of those.
#[derive(Debug, Clone)]
pub struct ReachSpec {
    pub component: String,
    pub target_state: Option<String>,
    pub target_predicate: Option<Expr>,
    pub fire_transition: Option<usize>,
}

impl ReachSpec {
    pub fn state(component: impl Into<String>, state: impl Into<String>) -> ReachSpec {
        ReachSpec {
            component: component.into(),
            target_state: Some(state.into()),
            target_predicate: None,
            fire_transition: None,
        }
    }

    pub fn fire(component: impl Into<String>, index: usize) -> ReachSpec {
        ReachSpec {
            component: component.into(),
            target_state: None,
            target_predicate: None,
            fire_transition: Some(index),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Bfs,
    Iddfs,
}

/// Bounded-search configuration: a depth limit, one finite candidate list
/// per open input port (`None` = send nothing that cycle), the strategy,
/// and whether already-expanded states are pruned.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub max_depth: usize,
    pub input_domains: BTreeMap<String, Vec<Option<Value>>>,
    pub strategy: Strategy,
    pub prune_visited: bool,
}

#[derive(Debug, Clone)]
pub enum SearchResult {
    Found {
        eet: Eet,
        depth: usize,
    },
    NotFound {
        explored_states: usize,
        depth_reached: usize,
    },
}

struct ResolvedSpec {
    instance: usize,
    state_idx: Option<usize>,
    predicate: Option<Expr>,
    transition: Option<usize>,
}

fn resolve_spec(fm: &FlatModel, spec: &ReachSpec) -> Result<ResolvedSpec, TestgenError> {
    let instance = fm
        .instance_index(&spec.component)
        .ok_or_else(|| TestgenError::UnknownComponent(spec.component.clone()))?;
    let automaton = fm
        .instance_type(instance)
        .automaton()
        .ok_or_else(|| TestgenError::UnknownComponent(spec.component.clone()))?;
    if spec.target_state.is_none()
        && spec.target_predicate.is_none()
        && spec.fire_transition.is_none()
    {
        return Err(TestgenError::EmptyTarget);
    }
    let state_idx = match &spec.target_state {
        None => None,
        Some(s) => Some(
            automaton
                .states
                .iter()
                .position(|x| x == s)
                .ok_or_else(|| TestgenError::UnknownState {
                    component: spec.component.clone(),
                    state: s.clone(),
                })?,
        ),
    };
    let predicate = match &spec.target_predicate {
        None => None,
        Some(p) => {
            let p = resolve_expr(p.clone(), &fm.defs);
            let env: TypeEnv = automaton
                .vars
                .iter()
                .map(|v| (v.name.clone(), v.ty.clone()))
                .collect();
            match expr_type(&p, &env, &fm.defs) {
                Ok(TypeRef::Bool) => {}
                Ok(ty) => {
                    return Err(TestgenError::BadPredicate(format!(
                        "has type {ty}, expected Bool"
                    )))
                }
                Err(msg) => return Err(TestgenError::BadPredicate(msg)),
            }
            Some(p)
        }
    };
    let transition = match spec.fire_transition {
        None => None,
        Some(i) => {
            if i >= automaton.transitions.len() {
                return Err(TestgenError::UnknownTransition {
                    component: spec.component.clone(),
                    index: i,
                });
            }
            Some(i)
        }
    };
    Ok(ResolvedSpec {
        instance,
        state_idx,
        predicate,
        transition,
    })
}

impl ResolvedSpec {
    /// Whether the specification holds in `state`; `fired` is the record of
    /// the step that produced it (absent for the initial state).
    fn satisfied(
        &self,
        fm: &FlatModel,
        state: &SimState,
        fired: Option<&[Option<usize>]>,
    ) -> Result<bool, EvalError> {
        if let Some(si) = self.state_idx {
            if state.instances[self.instance].control != si {
                return Ok(false);
            }
        }
        if let Some(ti) = self.transition {
            match fired {
                Some(f) if f[self.instance] == Some(ti) => {}
                _ => return Ok(false),
            }
        }
        if let Some(p) = &self.predicate {
            let automaton = fm.instance_type(self.instance).automaton().expect("atomic");
            let env: Env = automaton
                .vars
                .iter()
                .map(|v| v.name.clone())
                .zip(state.instances[self.instance].vars.iter().cloned())
                .collect();
            match eval_expr(&env, p, &fm.defs)? {
                Value::Bool(b) => return Ok(b),
                _ => return Ok(false),
            }
        }
        Ok(true)
    }
}

/// Validates domains and expands the per-cycle stimulus alternatives: the
/// Cartesian product of every open input's domain, ports in name order,
/// the first port varying slowest, each domain in list order.
pub(crate) fn expand_assignments(
    fm: &FlatModel,
    cfg: &SearchConfig,
) -> Result<Vec<StepInput>, TestgenError> {
    for oi in &fm.open_inputs {
        let domain = cfg
            .input_domains
            .get(&oi.name)
            .ok_or_else(|| TestgenError::MissingDomain(oi.name.clone()))?;
        for v in domain.iter().flatten() {
            check_value_type(v, &oi.ty, &fm.defs).map_err(|message| {
                TestgenError::BadDomainValue {
                    port: oi.name.clone(),
                    message,
                }
            })?;
        }
    }
    let ports: Vec<&str> = fm.open_inputs.iter().map(|o| o.name.as_str()).collect();
    let mut ports = ports;
    ports.sort_unstable();
    let mut assignments = vec![StepInput::new()];
    for port in ports {
        let domain = &cfg.input_domains[port];
        let mut next = Vec::with_capacity(assignments.len() * domain.len().max(1));
        for base in &assignments {
            for v in domain {
                let mut a = base.clone();
                if let Some(v) = v {
                    a.insert(port.to_string(), v.clone());
                }
                next.push(a);
            }
        }
        assignments = next;
    }
    Ok(assignments)
}

/// Bounded search for an input sequence that drives the system into the
/// specified configuration. BFS returns a minimal-depth witness; IDDFS
/// returns a witness of the same depth by iterative deepening. Every
/// returned witness is re-simulated and verified before it is reported.
pub fn generate_reach(
    fm: &FlatModel,
    spec: &ReachSpec,
    cfg: &SearchConfig,
) -> Result<SearchResult, TestgenError> {
    if cfg.max_depth == 0 {
        return Err(TestgenError::ZeroDepth);
    }
    let rspec = resolve_spec(fm, spec)?;
    let assignments = expand_assignments(fm, cfg)?;
    let initial = sim::init(fm)?;

    // a target without a fire component may hold immediately
    if rspec.transition.is_none() && rspec.satisfied(fm, &initial, None).map_err(sim_eval)? {
        return Ok(SearchResult::Found {
            eet: Eet::default(),
            depth: 0,
        });
    }

    match cfg.strategy {
        Strategy::Bfs => bfs(fm, &rspec, cfg, &assignments, initial),
        Strategy::Iddfs => iddfs(fm, &rspec, cfg, &assignments, initial),
    }
}

fn sim_eval(e: EvalError) -> TestgenError {
    TestgenError::Internal(format!("target evaluation failed: {e}"))
}

struct Node {
    state: SimState,
    parent: usize,
    input: usize, // index into the assignment table
    depth: usize,
}

fn path_inputs(nodes: &[Node], mut at: usize, assignments: &[StepInput]) -> Vec<StepInput> {
    let mut rev = Vec::new();
    while nodes[at].depth > 0 {
        rev.push(assignments[nodes[at].input].clone());
        at = nodes[at].parent;
    }
    rev.reverse();
    rev
}

/// Re-simulates a witness and checks the target on its final cycle.
fn verified_witness(
    fm: &FlatModel,
    rspec: &ResolvedSpec,
    inputs: &[StepInput],
) -> Result<Eet, TestgenError> {
    let (eet, fired, final_state) = sim::run_detailed(fm, inputs)?;
    let last_fired = fired.last().map(|f| f.as_slice());
    let ok = rspec
        .satisfied(fm, &final_state, last_fired)
        .map_err(sim_eval)?;
    if !ok {
        return Err(TestgenError::Internal(
            "generated witness does not satisfy its reach target".into(),
        ));
    }
    Ok(eet)
}

fn bfs(
    fm: &FlatModel,
    rspec: &ResolvedSpec,
    cfg: &SearchConfig,
    assignments: &[StepInput],
    initial: SimState,
) -> Result<SearchResult, TestgenError> {
    let mut nodes = vec![Node {
        state: initial.clone(),
        parent: 0,
        input: 0,
        depth: 0,
    }];
    let mut queue: VecDeque<usize> = VecDeque::from([0]);
    let mut visited: HashSet<SimState> = HashSet::new();
    visited.insert(initial);
    let mut explored = 0usize;
    let mut depth_reached = 0usize;

    while let Some(at) = queue.pop_front() {
        if nodes[at].depth == cfg.max_depth {
            continue;
        }
        for (ai, input) in assignments.iter().enumerate() {
            let (next, rec) = sim::step(&nodes[at].state, input, fm)?;
            explored += 1;
            let depth = nodes[at].depth + 1;
            depth_reached = depth_reached.max(depth);
            if rspec
                .satisfied(fm, &next, Some(&rec.fired))
                .map_err(sim_eval)?
            {
                let mut inputs = path_inputs(&nodes, at, assignments);
                inputs.push(input.clone());
                let eet = verified_witness(fm, rspec, &inputs)?;
                return Ok(SearchResult::Found { eet, depth });
            }
            if cfg.prune_visited && !visited.insert(next.clone()) {
                continue;
            }
            nodes.push(Node {
                state: next,
                parent: at,
                input: ai,
                depth,
            });
            queue.push_back(nodes.len() - 1);
        }
    }
    Ok(SearchResult::NotFound {
        explored_states: explored,
        depth_reached,
    })
}

fn iddfs(
    fm: &FlatModel,
    rspec: &ResolvedSpec,
    cfg: &SearchConfig,
    assignments: &[StepInput],
    initial: SimState,
) -> Result<SearchResult, TestgenError> {
    let mut explored = 0usize;
    let mut depth_reached = 0usize;
    for limit in 1..=cfg.max_depth {
        // best known depth per state; pruning only when a state reappears
        // no shallower keeps the iteration complete
        let mut best: HashMap<SimState, usize> = HashMap::new();
        best.insert(initial.clone(), 0);
        let mut stack: Vec<(SimState, Vec<usize>)> = vec![(initial.clone(), Vec::new())];
        while let Some((state, path)) = stack.pop() {
            if path.len() == limit {
                continue;
            }
            // reverse order so the first assignment is explored first
            for ai in (0..assignments.len()).rev() {
                let (next, rec) = sim::step(&state, &assignments[ai], fm)?;
                explored += 1;
                let depth = path.len() + 1;
                depth_reached = depth_reached.max(depth);
                if rspec
                    .satisfied(fm, &next, Some(&rec.fired))
                    .map_err(sim_eval)?
                {
                    let mut inputs: Vec<StepInput> =
                        path.iter().map(|&i| assignments[i].clone()).collect();
                    inputs.push(assignments[ai].clone());
                    let eet = verified_witness(fm, rspec, &inputs)?;
                    return Ok(SearchResult::Found { eet, depth });
                }
                if cfg.prune_visited {
                    match best.get(&next) {
                        Some(&d) if d <= depth => continue,
                        _ => {
                            best.insert(next.clone(), depth);
                        }
                    }
                }
                let mut next_path = path.clone();
                next_path.push(ai);
                stack.push((next, next_path));
            }
        }
    }
    Ok(SearchResult::NotFound {
        explored_states: explored,
        depth_reached,
    })
}

/// Negates a universal property into a reach target: a sequence reaching the
/// negation is a counterexample to the invariant.
pub fn negate_invariant(
    p: &Expr,
    component: &str,
    fm: &FlatModel,
) -> Result<ReachSpec, TestgenError> {
    let spec = ReachSpec {
        component: component.to_string(),
        target_state: None,
        target_predicate: Some(Expr::Unary(UnOp::Not, Box::new(p.clone()))),
        fire_transition: None,
    };
    resolve_spec(fm, &spec)?;
    Ok(spec)
}

pub use coverage::{
    measure_model_coverage, render_coverage_report, roundtrip, CoverageReport, InstanceCoverage,
    UnreachableTransition,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::les;

    fn domains() -> BTreeMap<String, Vec<Option<Value>>> {
        let mut m = BTreeMap::new();
        m.insert(
            "s".to_string(),
            vec![
                Some(Value::Ctor("Faulty".into(), vec![])),
                Some(Value::Ctor("Ok".into(), vec![])),
            ],
        );
        m
    }

    fn cfg(strategy: Strategy) -> SearchConfig {
        SearchConfig {
            max_depth: 8,
            input_domains: domains(),
            strategy,
            prune_visited: true,
        }
    }

    #[test]
    fn finds_deactivated_at_depth_three() {
        let fm = les::lane_driver().unwrap();
        let spec = ReachSpec::state("d", "Deactivated");
        match generate_reach(&fm, &spec, &cfg(Strategy::Bfs)).unwrap() {
            SearchResult::Found { eet, depth } => {
                assert_eq!(depth, 3);
                assert_eq!(eet.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn iddfs_agrees_with_bfs_on_depth() {
        let fm = les::lane_driver().unwrap();
        let spec = ReachSpec::state("d", "Deactivated");
        match generate_reach(&fm, &spec, &cfg(Strategy::Iddfs)).unwrap() {
            SearchResult::Found { depth, .. } => assert_eq!(depth, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn initial_state_targets_are_found_at_depth_zero() {
        let fm = les::lane_driver().unwrap();
        let spec = ReachSpec::state("d", "Active");
        match generate_reach(&fm, &spec, &cfg(Strategy::Bfs)).unwrap() {
            SearchResult::Found { eet, depth } => {
                assert_eq!(depth, 0);
                assert!(eet.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unreachable_targets_exhaust_the_bound() {
        let fm = les::lane_driver().unwrap();
        // n is reset on every state change and never exceeds 2
        let mut c = crate::dtd::parser::Cursor::new("n > 5").unwrap();
        let p = crate::dtd::parser::parse_expr(&mut c).unwrap();
        let spec = ReachSpec {
            component: "d".into(),
            target_state: None,
            target_predicate: Some(p),
            fire_transition: None,
        };
        let mut config = cfg(Strategy::Bfs);
        config.max_depth = 5;
        config.prune_visited = false;
        match generate_reach(&fm, &spec, &config).unwrap() {
            SearchResult::NotFound { depth_reached, .. } => assert_eq!(depth_reached, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_domain_is_an_error() {
        let fm = les::lane_driver().unwrap();
        let spec = ReachSpec::state("d", "Deactivated");
        let config = SearchConfig {
            max_depth: 3,
            input_domains: BTreeMap::new(),
            strategy: Strategy::Bfs,
            prune_visited: true,
        };
        assert!(matches!(
            generate_reach(&fm, &spec, &config),
            Err(TestgenError::MissingDomain(_))
        ));
    }

    #[test]
    fn negated_true_invariant_is_unreachable() {
        let fm = les::lane_driver().unwrap();
        let spec = negate_invariant(&Expr::Literal(Value::Bool(true)), "d", &fm).unwrap();
        match generate_reach(&fm, &spec, &cfg(Strategy::Bfs)).unwrap() {
            SearchResult::NotFound { .. } => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negated_invariant_finds_a_seeded_bug() {
        // counter missing its reset: n keeps growing, violating n <= 2
        let buggy = "\
system Buggy {
  port in s : Int immediate;
  automaton {
    state Q;
    init Q;
    var n : Int = 0;
    trans Q -> Q { in: s?x; set: n := n + 1; }
  }
}";
        let fm =
            crate::model::flatten(&crate::model::parse_model_str(buggy, "t").unwrap()).unwrap();
        let mut c = crate::dtd::parser::Cursor::new("n <= 2").unwrap();
        let inv = crate::dtd::parser::parse_expr(&mut c).unwrap();
        let spec = negate_invariant(&inv, "Buggy", &fm).unwrap();
        let mut domains = BTreeMap::new();
        domains.insert("s".to_string(), vec![Some(Value::Int(0))]);
        let config = SearchConfig {
            max_depth: 8,
            input_domains: domains,
            strategy: Strategy::Bfs,
            prune_visited: true,
        };
        match generate_reach(&fm, &spec, &config).unwrap() {
            SearchResult::Found { depth, .. } => assert_eq!(depth, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn both_strategies_agree_on_every_fire_target() {
        let fm = les::lane_driver().unwrap();
        for ti in 0..6 {
            let spec = ReachSpec::fire("d", ti);
            let bfs = generate_reach(&fm, &spec, &cfg(Strategy::Bfs)).unwrap();
            let iddfs = generate_reach(&fm, &spec, &cfg(Strategy::Iddfs)).unwrap();
            match (bfs, iddfs) {
                (SearchResult::Found { depth: db, .. }, SearchResult::Found { depth: di, .. }) => {
                    assert_eq!(db, di, "transition {ti}")
                }
                other => panic!("transition {ti}: {other:?}"),
            }
        }
    }

    #[test]
    fn seeded_bug_in_a_voter_violates_the_bounds_invariant() {
        // the middle-value law keeps the output inside [min, max]; a voter
        // that inflates the median escapes the bound and the negated
        // invariant search finds the witness
        let buggy = "\
fun min2(a, b) = if a < b then a else b;
fun max2(a, b) = if a > b then a else b;
fun med3(a, b, c) = max2(min2(a, b), min2(max2(a, b), c));
system BadVoter {
  port in a : Float immediate;
  port in b : Float immediate;
  port in c : Float immediate;
  port out o : Float immediate;
  automaton {
    state Run;
    init Run;
    var last : Float = 0.0;
    trans Run -> Run { in: a?x; in: b?y; in: c?z; out: o!med3(x, y, z) + 1.0; set: last := med3(x, y, z) + 1.0; }
  }
}";
        let fm =
            crate::model::flatten(&crate::model::parse_model_str(buggy, "t").unwrap()).unwrap();
        let mut c = crate::dtd::parser::Cursor::new("last <= 9.0").unwrap();
        let inv = crate::dtd::parser::parse_expr(&mut c).unwrap();
        let spec = negate_invariant(&inv, "BadVoter", &fm).unwrap();
        let mut domains = BTreeMap::new();
        for port in ["a", "b", "c"] {
            domains.insert(
                port.to_string(),
                vec![
                    Some(Value::Float(1.0)),
                    Some(Value::Float(5.0)),
                    Some(Value::Float(9.0)),
                ],
            );
        }
        let config = SearchConfig {
            max_depth: 3,
            input_domains: domains,
            strategy: Strategy::Bfs,
            prune_visited: true,
        };
        match generate_reach(&fm, &spec, &config).unwrap() {
            SearchResult::Found { depth, .. } => assert_eq!(depth, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn search_is_deterministic() {
        let fm = les::lane_driver().unwrap();
        let spec = ReachSpec::fire("d", 5);
        let a = generate_reach(&fm, &spec, &cfg(Strategy::Bfs)).unwrap();
        let b = generate_reach(&fm, &spec, &cfg(Strategy::Bfs)).unwrap();
        match (a, b) {
            (
                SearchResult::Found { eet: ea, depth: da },
                SearchResult::Found { eet: eb, depth: db },
            ) => {
                assert_eq!(ea, eb);
                assert_eq!(da, db);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
