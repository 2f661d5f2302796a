//! Synchronous execution semantics. One global clock drives all instances;
//! per cycle each atomic instance fires the first enabled transition in
//! declaration order (or stutters), immediate connections propagate within
//! the cycle in topological order, and delayed connections buffer exactly
//! one cycle. Every run is recorded as an event trace.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dtd::check::check_value_type;
use crate::dtd::eval::{eval_expr, match_pattern, Env, EvalError};
use crate::dtd::Value;
use crate::model::{ComponentBody, FlatModel};
use crate::trace::Eet;

#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error("initializing `{instance}.{var}`: {source}")]
    Init {
        instance: String,
        var: String,
        source: EvalError,
    },
    #[error("cycle {cycle}: input `{port}`: {message}")]
    Input {
        cycle: u64,
        port: String,
        message: String,
    },
    #[error("cycle {cycle}, instance `{instance}`: {source}")]
    Runtime {
        cycle: u64,
        instance: String,
        source: EvalError,
    },
}

/// Per-instance control state and data environment. Equality and hashing
/// are bit-exact, so states can key visited sets during search.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InstanceState {
    /// Index into the component type's declared state list.
    pub control: usize,
    /// Values of the declared data variables, in declaration order.
    pub vars: Vec<Value>,
}

/// Full system state: one entry per instance plus the pending value of every
/// delayed connection.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SimState {
    pub instances: Vec<InstanceState>,
    pub pending: Vec<Option<Value>>,
    pub cycle: u64,
}

/// Open-input stimulus for one cycle; absent ports carry no message.
pub type StepInput = BTreeMap<String, Value>;

/// Everything observable about one executed cycle.
#[derive(Debug, Clone)]
pub struct CycleRecord {
    /// All (endpoint, value) events of the cycle, sorted by endpoint.
    pub events: Vec<(String, Value)>,
    /// The transition each instance fired, if any, by declaration index.
    pub fired: Vec<Option<usize>>,
}

fn state_index(fm: &FlatModel, inst: usize, name: &str) -> usize {
    let a = fm.instance_type(inst).automaton().expect("atomic instance");
    a.states
        .iter()
        .position(|s| s == name)
        .expect("declared state")
}

/// Initial state: every instance at its initial control state with evaluated
/// variable initializers, all delayed buffers empty.
pub fn init(fm: &FlatModel) -> Result<SimState, SimError> {
    let mut instances = Vec::with_capacity(fm.instances.len());
    for (idx, fi) in fm.instances.iter().enumerate() {
        let a = match &fm.instance_type(idx).body {
            ComponentBody::Atomic(a) => a,
            ComponentBody::Composite { .. } => unreachable!("flat models hold atomic types"),
        };
        let control = state_index(fm, idx, a.init.as_ref().expect("checked model"));
        let mut vars = Vec::with_capacity(a.vars.len());
        for v in &a.vars {
            let val = eval_expr(&Env::new(), &v.init, &fm.defs).map_err(|e| SimError::Init {
                instance: fi.path.clone(),
                var: v.name.clone(),
                source: e,
            })?;
            vars.push(val);
        }
        instances.push(InstanceState { control, vars });
    }
    Ok(SimState {
        instances,
        pending: vec![None; fm.n_slots],
        cycle: 0,
    })
}

fn type_check_input(fm: &FlatModel, input: &StepInput, cycle: u64) -> Result<(), SimError> {
    for (port, value) in input {
        let oi = fm.open_input(port).ok_or_else(|| SimError::Input {
            cycle,
            port: port.clone(),
            message: "unknown open input port".into(),
        })?;
        check_value_type(value, &oi.ty, &fm.defs).map_err(|message| SimError::Input {
            cycle,
            port: port.clone(),
            message,
        })?;
    }
    Ok(())
}

/// Executes one clock cycle. Events are recorded at delivery time: a value
/// written to a delayed connection at cycle `t` appears as that endpoint's
/// event at `t + 1`.
pub fn step(
    s: &SimState,
    input: &StepInput,
    fm: &FlatModel,
) -> Result<(SimState, CycleRecord), SimError> {
    let cycle = s.cycle;
    type_check_input(fm, input, cycle)?;

    let mut next = s.clone();
    let mut events: BTreeMap<String, Value> = BTreeMap::new();
    // values visible on each instance's input ports this cycle
    let mut in_values: Vec<BTreeMap<String, Value>> = vec![BTreeMap::new(); fm.instances.len()];

    // 1. Delayed connections deliver last cycle's writes.
    for ch in fm.channels.iter().filter(|c| c.delayed) {
        if let Some(v) = next.pending[ch.slot.expect("delayed slot")].take() {
            in_values[ch.to.0].insert(ch.to.1.clone(), v.clone());
            events.insert(ch.name.clone(), v);
        }
    }
    for oi in fm.open_inputs.iter().filter(|o| o.delayed) {
        if let Some(v) = next.pending[oi.slot.expect("delayed slot")].take() {
            for (inst, port) in &oi.targets {
                in_values[*inst].insert(port.clone(), v.clone());
            }
            events.insert(oi.name.clone(), v);
        }
    }
    for oo in fm.open_outputs.iter().filter(|o| o.delayed) {
        if let Some(v) = next.pending[oo.slot.expect("delayed slot")].take() {
            events.insert(oo.name.clone(), v);
        }
    }

    // 2. This cycle's stimuli: immediate ones deliver now, delayed ones are
    //    buffered for the next cycle.
    for oi in &fm.open_inputs {
        if let Some(v) = input.get(&oi.name) {
            if oi.delayed {
                next.pending[oi.slot.expect("delayed slot")] = Some(v.clone());
            } else {
                for (inst, port) in &oi.targets {
                    in_values[*inst].insert(port.clone(), v.clone());
                }
                events.insert(oi.name.clone(), v.clone());
            }
        }
    }

    // 3. Execute instances in topological order.
    let mut fired: Vec<Option<usize>> = vec![None; fm.instances.len()];
    for &idx in &fm.exec_order {
        let comp = fm.instance_type(idx);
        let automaton = comp.automaton().expect("atomic instance");
        let path = &fm.instances[idx].path;

        let mut chosen: Option<(usize, Env)> = None;
        'transitions: for (ti, t) in automaton.transitions.iter().enumerate() {
            if state_index(fm, idx, &t.src) != s.instances[idx].control {
                continue;
            }
            let mut binds = Env::new();
            for (port, pat) in &t.inputs {
                match in_values[idx].get(port) {
                    Some(v) if match_pattern(pat, v, &mut binds) => {}
                    _ => continue 'transitions,
                }
            }
            // guard sees pre-transition variables plus pattern bindings
            let mut env = binds.clone();
            for (v, val) in automaton.vars.iter().zip(&s.instances[idx].vars) {
                env.insert(v.name.clone(), val.clone());
            }
            let enabled = match &t.guard {
                None => true,
                Some(g) => match eval_expr(&env, g, &fm.defs) {
                    Ok(Value::Bool(b)) => b,
                    Ok(_) => false,
                    Err(e) => {
                        return Err(SimError::Runtime {
                            cycle,
                            instance: path.clone(),
                            source: e,
                        })
                    }
                },
            };
            if enabled {
                chosen = Some((ti, env));
                break;
            }
        }

        let (ti, env) = match chosen {
            Some(c) => c,
            None => continue, // stutter: state and data unchanged, no outputs
        };
        fired[idx] = Some(ti);
        let t = &automaton.transitions[ti];

        // outputs evaluate against pre-transition data values
        for (port, expr) in &t.outputs {
            let v = eval_expr(&env, expr, &fm.defs).map_err(|e| SimError::Runtime {
                cycle,
                instance: path.clone(),
                source: e,
            })?;
            for ch in &fm.channels {
                if ch.from.0 == idx && ch.from.1 == *port {
                    if ch.delayed {
                        next.pending[ch.slot.expect("delayed slot")] = Some(v.clone());
                    } else {
                        in_values[ch.to.0].insert(ch.to.1.clone(), v.clone());
                        events.insert(ch.name.clone(), v.clone());
                    }
                }
            }
            for oo in &fm.open_outputs {
                if oo.source.as_ref() == Some(&(idx, port.clone())) {
                    if oo.delayed {
                        next.pending[oo.slot.expect("delayed slot")] = Some(v.clone());
                    } else {
                        events.insert(oo.name.clone(), v.clone());
                    }
                }
            }
        }

        // assignments apply in order, each seeing the previous ones
        let mut env = env;
        for (var, expr) in &t.assigns {
            let v = eval_expr(&env, expr, &fm.defs).map_err(|e| SimError::Runtime {
                cycle,
                instance: path.clone(),
                source: e,
            })?;
            env.insert(var.clone(), v.clone());
            let vi = automaton
                .vars
                .iter()
                .position(|d| d.name == *var)
                .expect("checked variable");
            next.instances[idx].vars[vi] = v;
        }
        next.instances[idx].control = state_index(fm, idx, &t.dst);
    }

    next.cycle += 1;
    Ok((
        next,
        CycleRecord {
            events: events.into_iter().collect(),
            fired,
        },
    ))
}

/// Runs a full input sequence from the initial state, returning one trace
/// cycle per input.
pub fn run(fm: &FlatModel, inputs: &[StepInput]) -> Result<Eet, SimError> {
    run_detailed(fm, inputs).map(|(eet, _, _)| eet)
}

/// Fired-transition records, one entry per cycle per instance.
pub type FiredLog = Vec<Vec<Option<usize>>>;

/// Like [`run`], but also returns the fired-transition record of every cycle
/// and the final state.
pub fn run_detailed(
    fm: &FlatModel,
    inputs: &[StepInput],
) -> Result<(Eet, FiredLog, SimState), SimError> {
    let mut state = init(fm)?;
    let mut cycles = Vec::with_capacity(inputs.len());
    let mut fired = Vec::with_capacity(inputs.len());
    for input in inputs {
        let (next, rec) = step(&state, input, fm)?;
        cycles.push(rec.events);
        fired.push(rec.fired);
        state = next;
    }
    Ok((Eet { cycles }, fired, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{flatten, parse_model_str};

    fn load(src: &str) -> FlatModel {
        flatten(&parse_model_str(src, "t").unwrap()).unwrap()
    }

    fn delayed_identity() -> FlatModel {
        load(
            "system Main {\n\
               port in i0 : Int immediate;\n\
               port out o0 : Int immediate;\n\
               sub buf : Buf;\n\
               channel ci : Int from i0 to buf.i;\n\
               channel co : Int from buf.o to o0;\n\
             }\n\
             component Buf {\n\
               port in i : Int immediate;\n\
               port out o : Int delayed;\n\
               automaton { state S; init S; trans S -> S { in: i?x; out: o!x; } }\n\
             }",
        )
    }

    fn input(v: i64) -> StepInput {
        let mut m = StepInput::new();
        m.insert("i0".into(), Value::Int(v));
        m
    }

    #[test]
    fn delayed_output_appears_one_cycle_later() {
        let fm = delayed_identity();
        let eet = run(&fm, &[input(5), StepInput::new()]).unwrap();
        assert_eq!(eet.cycles[0], vec![("i0".to_string(), Value::Int(5))]);
        assert_eq!(eet.cycles[1], vec![("o0".to_string(), Value::Int(5))]);
    }

    #[test]
    fn immediate_identity_is_unshifted() {
        let fm = load(
            "system Main {\n\
               port in i0 : Int immediate;\n\
               port out o0 : Int immediate;\n\
               sub id : Id;\n\
               channel ci : Int from i0 to id.i;\n\
               channel co : Int from id.o to o0;\n\
             }\n\
             component Id {\n\
               port in i : Int immediate;\n\
               port out o : Int immediate;\n\
               automaton { state S; init S; trans S -> S { in: i?x; out: o!x; } }\n\
             }",
        );
        let eet = run(&fm, &[input(7)]).unwrap();
        assert_eq!(
            eet.cycles[0],
            vec![
                ("i0".to_string(), Value::Int(7)),
                ("o0".to_string(), Value::Int(7))
            ]
        );
    }

    #[test]
    fn first_declared_enabled_transition_fires() {
        let fm = load(
            "system S {\n\
               port in i : Int immediate;\n\
               port out o : Int immediate;\n\
               automaton {\n\
                 state Q; init Q;\n\
                 trans Q -> Q { in: i?x; out: o!1; }\n\
                 trans Q -> Q { in: i?x; out: o!2; }\n\
               }\n\
             }",
        );
        let mut stim = StepInput::new();
        stim.insert("i".into(), Value::Int(0));
        let (_, fired, _) = run_detailed(&fm, &[stim]).unwrap();
        assert_eq!(fired[0][0], Some(0));
    }

    #[test]
    fn stutter_leaves_state_unchanged() {
        let fm = delayed_identity();
        let s0 = init(&fm).unwrap();
        let (s1, rec) = step(&s0, &StepInput::new(), &fm).unwrap();
        assert!(rec.events.is_empty());
        assert_eq!(rec.fired, vec![None]);
        assert_eq!(s1.instances, s0.instances);
        assert_eq!(s1.cycle, 1);
    }

    #[test]
    fn initializer_errors_surface_at_init() {
        let fm = load("system S { automaton { state Q; init Q; var n : Int = 1 / 0; } }");
        let err = init(&fm).unwrap_err();
        assert!(matches!(err, SimError::Init { .. }));
    }

    #[test]
    fn ill_typed_inputs_are_rejected() {
        let fm = delayed_identity();
        let mut stim = StepInput::new();
        stim.insert("i0".into(), Value::Bool(true));
        assert!(matches!(
            step(&init(&fm).unwrap(), &stim, &fm),
            Err(SimError::Input { .. })
        ));
        let mut stim = StepInput::new();
        stim.insert("nope".into(), Value::Int(0));
        assert!(matches!(
            step(&init(&fm).unwrap(), &stim, &fm),
            Err(SimError::Input { .. })
        ));
    }

    #[test]
    fn runs_are_deterministic() {
        let fm = delayed_identity();
        let ins: Vec<StepInput> = (0..20).map(input).collect();
        let a = run(&fm, &ins).unwrap();
        let b = run(&fm, &ins).unwrap();
        assert_eq!(a.cycles, b.cycles);
    }

    #[test]
    fn assignments_apply_in_order_after_outputs() {
        // output sees the pre-transition value; the second assignment sees
        // the first one's effect
        let fm = load(
            "system S {\n\
               port in i : Int immediate;\n\
               port out o : Int immediate;\n\
               automaton {\n\
                 state Q; init Q;\n\
                 var n : Int = 10;\n\
                 trans Q -> Q { in: i?x; out: o!n; set: n := n + 1; set: n := n * 2; }\n\
               }\n\
             }",
        );
        let mut stim = StepInput::new();
        stim.insert("i".into(), Value::Int(0));
        let (eet, _, final_state) = run_detailed(&fm, &[stim]).unwrap();
        assert_eq!(eet.cycles[0][1], ("o".to_string(), Value::Int(10)));
        assert_eq!(final_state.instances[0].vars[0], Value::Int(22));
    }

    #[test]
    fn unnamed_ports_are_ignored_by_transitions() {
        // second transition fires when`b` is absent
        let fm = load(
            "system S {\n\
               port in a : Int immediate;\n\
               port in b : Int immediate;\n\
               port out o : Int immediate;\n\
               automaton {\n\
                 state Q; init Q;\n\
                 trans Q -> Q { in: a?x; in: b?y; out: o!x + y; }\n\
                 trans Q -> Q { in: a?x; out: o!x; }\n\
               }\n\
             }",
        );
        let mut with_b = StepInput::new();
        with_b.insert("a".into(), Value::Int(1));
        with_b.insert("b".into(), Value::Int(2));
        let mut without_b = StepInput::new();
        without_b.insert("a".into(), Value::Int(1));
        let eet = run(&fm, &[with_b, without_b]).unwrap();
        assert!(eet.cycles[0].contains(&("o".to_string(), Value::Int(3))));
        assert!(eet.cycles[1].contains(&("o".to_string(), Value::Int(1))));
    }
}
