//! Interpreter for the lowered representation. It executes the system
//! package's cycle loop — deliver delayed buffers, run each instance's
//! transition blocks in execution order, copy outputs along connections —
//! and serves as the executable stand-in for the emitted code.

use std::collections::BTreeMap;

use crate::dtd::check::check_value_type;
use crate::dtd::eval::{eval_expr, match_pattern, Env};
use crate::dtd::Value;
use crate::sim::StepInput;
use crate::trace::{CycleExecutor, Eet};

use super::{ComponentPackage, IrConnKind, IrError, IrProgram};

struct InstanceRt {
    state: usize,
    vars: Vec<Value>,
}

/// Mutable machine state for one run of an [`IrProgram`].
pub struct IrMachine<'p> {
    p: &'p IrProgram,
    instances: Vec<InstanceRt>,
    buffers: Vec<Option<Value>>,
    cycle: u64,
}

fn eval_err(cycle: u64, location: &str, e: impl std::fmt::Display) -> IrError {
    IrError {
        cycle,
        location: location.to_string(),
        message: e.to_string(),
    }
}

impl<'p> IrMachine<'p> {
    pub fn new(p: &'p IrProgram) -> Result<IrMachine<'p>, IrError> {
        let mut instances = Vec::with_capacity(p.system.instances.len());
        for inst in &p.system.instances {
            let comp = &p.components[inst.component];
            let mut vars = Vec::with_capacity(comp.vars.len());
            for (name, _, init) in &comp.vars {
                let loc = format!("package {}, initializer of {}", comp.name, name);
                let v = eval_expr(&Env::new(), init, &p.defs).map_err(|e| eval_err(0, &loc, e))?;
                vars.push(v);
            }
            instances.push(InstanceRt {
                state: comp.init_state,
                vars,
            });
        }
        Ok(IrMachine {
            p,
            instances,
            buffers: vec![None; p.system.n_slots],
            cycle: 0,
        })
    }

    /// Runs one cycle of the system package and returns its events, sorted
    /// by endpoint.
    pub fn cycle(&mut self, stimulus: &StepInput) -> Result<Vec<(String, Value)>, IrError> {
        let p = self.p;
        let sys = &p.system;
        let cycle = self.cycle;

        for (name, value) in stimulus {
            let ty = sys
                .open_in_ports
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t)
                .ok_or_else(|| {
                    eval_err(cycle, "system package", format!("unknown input `{name}`"))
                })?;
            check_value_type(value, ty, &p.defs)
                .map_err(|m| eval_err(cycle, "system package", m))?;
        }

        let mut events: BTreeMap<String, Value> = BTreeMap::new();
        let mut in_slots: Vec<BTreeMap<String, Value>> = vec![BTreeMap::new(); sys.instances.len()];
        let mut out_slots: Vec<BTreeMap<String, Value>> =
            vec![BTreeMap::new(); sys.instances.len()];

        // delayed buffers from the previous cycle deliver first
        for conn in sys.connections.iter().filter(|c| c.delayed) {
            let Some(v) = self.buffers[conn.slot.expect("delayed slot")].take() else {
                continue;
            };
            match &conn.kind {
                IrConnKind::Channel { to, .. } => {
                    in_slots[to.0].insert(to.1.clone(), v.clone());
                    events.insert(conn.endpoint.clone(), v);
                }
                IrConnKind::OpenIn { targets } => {
                    for (inst, port) in targets {
                        in_slots[*inst].insert(port.clone(), v.clone());
                    }
                    events.insert(conn.endpoint.clone(), v);
                }
                IrConnKind::OpenOut { .. } => {
                    events.insert(conn.endpoint.clone(), v);
                }
            }
        }

        // stimuli: buffer the delayed ones, deliver the immediate ones
        for conn in &sys.connections {
            let IrConnKind::OpenIn { targets } = &conn.kind else {
                continue;
            };
            let Some(v) = stimulus.get(&conn.endpoint) else {
                continue;
            };
            if conn.delayed {
                self.buffers[conn.slot.expect("delayed slot")] = Some(v.clone());
            } else {
                for (inst, port) in targets {
                    in_slots[*inst].insert(port.clone(), v.clone());
                }
                events.insert(conn.endpoint.clone(), v.clone());
            }
        }

        // instances execute in topological order; immediate copies follow
        // each instance so downstream readers see this cycle's values
        for &idx in &sys.exec_order {
            let comp = &p.components[sys.instances[idx].component];
            let loc = format!(
                "package {}, instance {}",
                comp.name, sys.instances[idx].path
            );
            do_transition(
                p,
                comp,
                &mut self.instances[idx],
                &in_slots[idx],
                &mut out_slots[idx],
                cycle,
                &loc,
            )?;
            for conn in &sys.connections {
                let (src, routed) = match &conn.kind {
                    IrConnKind::Channel { from, to } => (from, Some(to)),
                    IrConnKind::OpenOut { source } => (source, None),
                    IrConnKind::OpenIn { .. } => continue,
                };
                if src.0 != idx {
                    continue;
                }
                let Some(v) = out_slots[idx].get(&src.1) else {
                    continue;
                };
                if conn.delayed {
                    self.buffers[conn.slot.expect("delayed slot")] = Some(v.clone());
                } else {
                    if let Some(to) = routed {
                        in_slots[to.0].insert(to.1.clone(), v.clone());
                    }
                    events.insert(conn.endpoint.clone(), v.clone());
                }
            }
        }

        self.cycle += 1;
        Ok(events.into_iter().collect())
    }
}

/// One invocation of a component package's transition procedure: the first
/// block whose source state, pattern tests, and guard pass executes its
/// writes; otherwise the instance stutters.
fn do_transition(
    p: &IrProgram,
    comp: &ComponentPackage,
    rt: &mut InstanceRt,
    in_slots: &BTreeMap<String, Value>,
    out_slots: &mut BTreeMap<String, Value>,
    cycle: u64,
    loc: &str,
) -> Result<(), IrError> {
    'blocks: for block in &comp.transitions {
        if block.source_state != rt.state {
            continue;
        }
        let mut binds = Env::new();
        for (port, pat) in &block.pattern_tests {
            match in_slots.get(port) {
                Some(v) if match_pattern(pat, v, &mut binds) => {}
                _ => continue 'blocks,
            }
        }
        let mut env = binds;
        for ((name, _, _), value) in comp.vars.iter().zip(&rt.vars) {
            env.insert(name.clone(), value.clone());
        }
        if let Some(guard) = &block.guard {
            let bloc = format!("{loc}, block {}", block.index);
            match eval_expr(&env, guard, &p.defs).map_err(|e| eval_err(cycle, &bloc, e))? {
                Value::Bool(true) => {}
                _ => continue 'blocks,
            }
        }
        let bloc = format!("{loc}, block {}", block.index);
        for (port, expr) in &block.outputs {
            let v = eval_expr(&env, expr, &p.defs).map_err(|e| eval_err(cycle, &bloc, e))?;
            out_slots.insert(port.clone(), v);
        }
        for (var, expr) in &block.assignments {
            let v = eval_expr(&env, expr, &p.defs).map_err(|e| eval_err(cycle, &bloc, e))?;
            env.insert(var.clone(), v.clone());
            let vi = comp
                .vars
                .iter()
                .position(|(n, _, _)| n == var)
                .expect("checked variable");
            rt.vars[vi] = v;
        }
        rt.state = block.target_state;
        return Ok(());
    }
    Ok(())
}

/// Interprets the whole program over an input sequence. The produced trace
/// coincides with the simulator's, cycle for cycle and value for value.
pub fn run_ir(p: &IrProgram, inputs: &[StepInput]) -> Result<Eet, IrError> {
    let mut machine = IrMachine::new(p)?;
    let mut cycles = Vec::with_capacity(inputs.len());
    for stimulus in inputs {
        cycles.push(machine.cycle(stimulus)?);
    }
    Ok(Eet { cycles })
}

/// A single component package driven in isolation, for conformance replay
/// and as the reference for generated harness behavior. Inputs arrive at
/// their stated cycle; outputs on effectively delayed ports become visible
/// one cycle later.
pub struct IrExecutor<'p> {
    p: &'p IrProgram,
    comp: usize,
    rt: InstanceRt,
    /// Delayed outputs written last cycle, keyed by port.
    held: BTreeMap<String, Value>,
    out_delays: BTreeMap<String, bool>,
    cycle: u64,
}

impl<'p> IrExecutor<'p> {
    pub fn for_instance(p: &'p IrProgram, path: &str) -> Result<IrExecutor<'p>, String> {
        let idx = p
            .instance_by_path(path)
            .ok_or_else(|| format!("unknown instance `{path}`"))?;
        let comp_idx = p.system.instances[idx].component;
        let comp = &p.components[comp_idx];
        let mut vars = Vec::with_capacity(comp.vars.len());
        for (_, _, init) in &comp.vars {
            let v = eval_expr(&Env::new(), init, &p.defs).map_err(|e| e.to_string())?;
            vars.push(v);
        }
        let out_delays = comp
            .out_ports
            .iter()
            .map(|port| (port.name.clone(), p.out_delay(idx, &port.name)))
            .collect();
        Ok(IrExecutor {
            p,
            comp: comp_idx,
            rt: InstanceRt {
                state: comp.init_state,
                vars,
            },
            held: BTreeMap::new(),
            out_delays,
            cycle: 0,
        })
    }
}

impl CycleExecutor for IrExecutor<'_> {
    fn step_cycle(
        &mut self,
        inputs: &BTreeMap<String, Value>,
    ) -> Result<BTreeMap<String, Value>, String> {
        let comp = &self.p.components[self.comp];
        let mut visible: BTreeMap<String, Value> = std::mem::take(&mut self.held);
        let mut out_slots = BTreeMap::new();
        let loc = format!("package {}", comp.name);
        do_transition(
            self.p,
            comp,
            &mut self.rt,
            inputs,
            &mut out_slots,
            self.cycle,
            &loc,
        )
        .map_err(|e| e.to_string())?;
        for (port, v) in out_slots {
            if self.out_delays.get(&port).copied().unwrap_or(false) {
                self.held.insert(port, v);
            } else {
                visible.insert(port, v);
            }
        }
        self.cycle += 1;
        Ok(visible)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::lower;
    use crate::les;
    use crate::sim;
    use crate::trace::{project, run_conformance, SimExecutor};

    fn faulty() -> Value {
        Value::Ctor("Faulty".into(), vec![])
    }

    #[test]
    fn ir_run_equals_simulation_on_the_lane_driver() {
        let fm = les::lane_driver().unwrap();
        let p = lower(&fm);
        let inputs: Vec<StepInput> = (0..6)
            .map(|i| {
                let mut m = StepInput::new();
                if i % 3 != 2 {
                    m.insert("s".into(), faulty());
                }
                m
            })
            .collect();
        assert_eq!(
            run_ir(&p, &inputs).unwrap(),
            sim::run(&fm, &inputs).unwrap()
        );
    }

    #[test]
    fn three_faulty_values_deactivate_in_ir_execution() {
        let fm = les::lane_driver().unwrap();
        let p = lower(&fm);
        let inputs: Vec<StepInput> = (0..3)
            .map(|_| {
                let mut m = StepInput::new();
                m.insert("s".into(), faulty());
                m
            })
            .collect();
        let mut machine = IrMachine::new(&p).unwrap();
        for i in &inputs {
            machine.cycle(i).unwrap();
        }
        let (_, driver) = p.component_by_name("Driver").unwrap();
        assert_eq!(driver.states[machine.instances[0].state], "Deactivated");
    }

    #[test]
    fn empty_input_list_yields_an_empty_trace() {
        let fm = les::lane_driver().unwrap();
        let p = lower(&fm);
        assert!(run_ir(&p, &[]).unwrap().is_empty());
    }

    #[test]
    fn runtime_errors_carry_package_and_block() {
        let src = "\
system E {
  port in i : Int immediate;
  port out o : Int immediate;
  automaton {
    state Q;
    init Q;
    trans Q -> Q { in: i?x; out: o!1 / x; }
  }
}";
        let fm = crate::model::flatten(&crate::model::parse_model_str(src, "t").unwrap()).unwrap();
        let p = lower(&fm);
        let mut stim = StepInput::new();
        stim.insert("i".into(), Value::Int(0));
        let err = run_ir(&p, &[stim]).unwrap_err();
        assert!(err.location.contains("package E"), "{err}");
        assert!(err.location.contains("block 0"), "{err}");
    }

    #[test]
    fn ir_executor_matches_sim_executor_on_projected_traces() {
        // every instance of every bundled model self-conforms under both
        // the simulator-backed and the interpreter-backed executable
        for (name, fm) in les::all_models() {
            let p = lower(&fm);
            let inputs: Vec<StepInput> = (0..6)
                .map(|i| {
                    let mut m = StepInput::new();
                    for (k, oi) in fm.open_inputs.iter().enumerate() {
                        if (i + k) % 5 == 4 {
                            continue; // occasional absence
                        }
                        let v = match &oi.ty {
                            crate::dtd::TypeRef::Float => Value::Float((i * 7 + k) as f64),
                            crate::dtd::TypeRef::Bool => Value::Bool(i % 2 == 0),
                            crate::dtd::TypeRef::Int => Value::Int(i as i64),
                            crate::dtd::TypeRef::Named(n) if n == "Signal" => {
                                if i % 2 == 0 {
                                    faulty()
                                } else {
                                    Value::Ctor("Ok".into(), vec![])
                                }
                            }
                            crate::dtd::TypeRef::Named(_) => {
                                Value::Ctor("Ready".into(), vec![Value::Float((i + k) as f64)])
                            }
                        };
                        m.insert(oi.name.clone(), v);
                    }
                    m
                })
                .collect();
            let eet = sim::run(&fm, &inputs).unwrap();
            for fi in &fm.instances {
                let inst = fi.path.as_str();
                let tr = project(&eet, inst, &fm).unwrap();
                let mut sim_exec = SimExecutor::for_component(&fm, inst).unwrap();
                let sim_verdict = run_conformance(&mut sim_exec, &tr);
                let mut ir_exec = IrExecutor::for_instance(&p, inst).unwrap();
                let ir_verdict = run_conformance(&mut ir_exec, &tr);
                assert!(sim_verdict.pass, "sim replay of {name}/{inst}");
                assert!(ir_verdict.pass, "ir replay of {name}/{inst}");
            }
        }
    }
}
