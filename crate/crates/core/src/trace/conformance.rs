//! Conformance replay: drive an executable component with a projected
//! trace's inputs, cycle by cycle in order, comparing visible outputs with
//! the expected values.

use std::collections::BTreeMap;

use crate::dtd::Value;
use crate::model::{ComponentBody, FlatModel, OpenInput, OpenOutput};
use crate::sim::{self, SimState, StepInput};
use crate::trace::ComponentTrace;

/// Anything that can execute one component cycle by cycle. `step_cycle`
/// receives the values visible on the input ports this cycle and returns
/// the outputs visible this cycle (for a delayed output port that is the
/// value written in the previous cycle).
pub trait CycleExecutor {
    fn step_cycle(
        &mut self,
        inputs: &BTreeMap<String, Value>,
    ) -> Result<BTreeMap<String, Value>, String>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum CycleVerdict {
    Pass,
    /// First mismatching port of the cycle. `expected` is None when the
    /// implementation produced an output the trace does not expect.
    Fail {
        port: String,
        expected: Option<Value>,
        actual: Option<Value>,
    },
    /// Runtime error inside the executable.
    Error(String),
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub per_cycle: Vec<CycleVerdict>,
    pub pass: bool,
}

/// Replays a component trace against an executable. A failing cycle does
/// not abort the replay; the verdict covers every cycle.
pub fn run_conformance(exec: &mut dyn CycleExecutor, t: &ComponentTrace) -> Verdict {
    let mut per_cycle = Vec::with_capacity(t.cycles.len());
    for cycle in &t.cycles {
        let verdict = match exec.step_cycle(&cycle.inputs) {
            Err(msg) => CycleVerdict::Error(msg),
            Ok(actual) => {
                let mut v = CycleVerdict::Pass;
                for (port, expected) in &cycle.expected {
                    match actual.get(port) {
                        Some(got) if got == expected => {}
                        got => {
                            v = CycleVerdict::Fail {
                                port: port.clone(),
                                expected: Some(expected.clone()),
                                actual: got.cloned(),
                            };
                            break;
                        }
                    }
                }
                if v == CycleVerdict::Pass {
                    for (port, got) in &actual {
                        if !cycle.expected.contains_key(port) {
                            v = CycleVerdict::Fail {
                                port: port.clone(),
                                expected: None,
                                actual: Some(got.clone()),
                            };
                            break;
                        }
                    }
                }
                v
            }
        };
        per_cycle.push(verdict);
    }
    let pass = per_cycle.iter().all(|v| *v == CycleVerdict::Pass);
    Verdict { per_cycle, pass }
}

/// Renders a verdict in the harness report grammar: one line per cycle,
/// then a final `RESULT:` line.
pub fn render_report(v: &Verdict) -> String {
    let mut out = String::new();
    for (i, c) in v.per_cycle.iter().enumerate() {
        match c {
            CycleVerdict::Pass => out.push_str(&format!("CYCLE {i}: PASS\n")),
            CycleVerdict::Fail {
                port,
                expected,
                actual,
            } => {
                let exp = expected
                    .as_ref()
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "ABSENT".into());
                let act = actual
                    .as_ref()
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "ABSENT".into());
                out.push_str(&format!(
                    "CYCLE {i}: FAIL {port} expected={exp} actual={act}\n"
                ));
            }
            CycleVerdict::Error(msg) => {
                out.push_str(&format!("CYCLE {i}: FAIL error: {msg}\n"));
            }
        }
    }
    out.push_str(&format!(
        "RESULT: {}\n",
        if v.pass { "PASS" } else { "FAIL" }
    ));
    out
}

/// Simulator-backed executable: the component is lifted into a one-instance
/// model of its own. Inputs are delivered at the cycle they are stated
/// (projection already recorded them at delivery time); output visibility
/// follows each port's effective delay in the source model.
pub struct SimExecutor {
    fm: FlatModel,
    state: SimState,
    out_ports: Vec<String>,
}

impl SimExecutor {
    pub fn for_component(fm: &FlatModel, component: &str) -> Result<SimExecutor, String> {
        let idx = fm
            .instance_index(component)
            .ok_or_else(|| format!("unknown component `{component}`"))?;
        let def = fm.instance_type(idx).clone();
        let ComponentBody::Atomic(_) = &def.body else {
            return Err(format!("component `{component}` is not atomic"));
        };

        let mut n_slots = 0;
        let mut open_outputs = Vec::new();
        for p in def.out_ports() {
            let delayed = fm.out_delay(idx, &p.name);
            let slot = if delayed {
                n_slots += 1;
                Some(n_slots - 1)
            } else {
                None
            };
            open_outputs.push(OpenOutput {
                name: p.name.clone(),
                ty: p.ty.clone(),
                delayed,
                source: Some((0, p.name.clone())),
                slot,
            });
        }
        let open_inputs = def
            .in_ports()
            .map(|p| OpenInput {
                name: p.name.clone(),
                ty: p.ty.clone(),
                delayed: false,
                targets: vec![(0, p.name.clone())],
                slot: None,
            })
            .collect();
        let out_ports = def.out_ports().map(|p| p.name.clone()).collect();

        let iso = FlatModel {
            name: def.name.clone(),
            defs: fm.defs.clone(),
            types: vec![def],
            instances: vec![crate::model::FlatInstance {
                path: component.to_string(),
                type_idx: 0,
            }],
            channels: Vec::new(),
            open_inputs,
            open_outputs,
            exec_order: vec![0],
            n_slots,
        };
        let state = sim::init(&iso).map_err(|e| e.to_string())?;
        Ok(SimExecutor {
            fm: iso,
            state,
            out_ports,
        })
    }
}

impl CycleExecutor for SimExecutor {
    fn step_cycle(
        &mut self,
        inputs: &BTreeMap<String, Value>,
    ) -> Result<BTreeMap<String, Value>, String> {
        let stim: StepInput = inputs.clone();
        let (next, rec) = sim::step(&self.state, &stim, &self.fm).map_err(|e| e.to_string())?;
        self.state = next;
        Ok(rec
            .events
            .into_iter()
            .filter(|(ep, _)| self.out_ports.contains(ep))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{flatten, parse_model_str};
    use crate::sim::run;
    use crate::trace::project;

    fn counter_model() -> FlatModel {
        flatten(
            &parse_model_str(
                "system C {\n\
                   port in i : Int immediate;\n\
                   port out o : Int immediate;\n\
                   sub c : Counter;\n\
                   channel ci : Int from i to c.x;\n\
                   channel co : Int from c.y to o;\n\
                 }\n\
                 component Counter {\n\
                   port in x : Int immediate;\n\
                   port out y : Int immediate;\n\
                   automaton {\n\
                     state Q; init Q;\n\
                     var n : Int = 0;\n\
                     trans Q -> Q { in: x?v; out: y!n + v; set: n := n + v; }\n\
                   }\n\
                 }",
                "t",
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn stim(v: i64) -> StepInput {
        let mut m = StepInput::new();
        m.insert("i".into(), Value::Int(v));
        m
    }

    #[test]
    fn self_conformance_passes() {
        let fm = counter_model();
        let eet = run(&fm, &[stim(1), stim(2), stim(3)]).unwrap();
        let tr = project(&eet, "c", &fm).unwrap();
        let mut exec = SimExecutor::for_component(&fm, "c").unwrap();
        let verdict = run_conformance(&mut exec, &tr);
        assert!(verdict.pass, "{}", render_report(&verdict));
    }

    #[test]
    fn a_perturbed_expectation_fails_exactly_that_cycle() {
        let fm = counter_model();
        let eet = run(&fm, &[stim(1), stim(2), stim(3)]).unwrap();
        let mut tr = project(&eet, "c", &fm).unwrap();
        let old = tr.cycles[1].expected.get("y").cloned().unwrap();
        let Value::Int(n) = old else { panic!() };
        tr.cycles[1].expected.insert("y".into(), Value::Int(n + 1));
        let mut exec = SimExecutor::for_component(&fm, "c").unwrap();
        let verdict = run_conformance(&mut exec, &tr);
        assert!(!verdict.pass);
        assert_eq!(verdict.per_cycle[0], CycleVerdict::Pass);
        assert!(matches!(verdict.per_cycle[1], CycleVerdict::Fail { .. }));
        assert_eq!(verdict.per_cycle[2], CycleVerdict::Pass);
    }

    #[test]
    fn order_matters_for_stateful_components() {
        // swapping the cycles of a counter trace must break conformance
        let fm = counter_model();
        let eet = run(&fm, &[stim(1), stim(2)]).unwrap();
        let mut tr = project(&eet, "c", &fm).unwrap();
        tr.cycles.swap(0, 1);
        let mut exec = SimExecutor::for_component(&fm, "c").unwrap();
        let verdict = run_conformance(&mut exec, &tr);
        assert!(!verdict.pass);
    }

    #[test]
    fn delayed_out_ports_report_at_visibility_time() {
        let fm = flatten(
            &parse_model_str(
                "system D {\n\
                   port in i : Int immediate;\n\
                   port out o : Int immediate;\n\
                   sub b : Buf;\n\
                   channel ci : Int from i to b.x;\n\
                   channel co : Int from b.y to o;\n\
                 }\n\
                 component Buf {\n\
                   port in x : Int immediate;\n\
                   port out y : Int delayed;\n\
                   automaton { state Q; init Q; trans Q -> Q { in: x?v; out: y!v; } }\n\
                 }",
                "t",
            )
            .unwrap(),
        )
        .unwrap();
        let eet = run(&fm, &[stim(9), StepInput::new()]).unwrap();
        let tr = project(&eet, "b", &fm).unwrap();
        assert!(tr.cycles[0].expected.is_empty());
        assert_eq!(tr.cycles[1].expected.get("y"), Some(&Value::Int(9)));
        let mut exec = SimExecutor::for_component(&fm, "b").unwrap();
        let verdict = run_conformance(&mut exec, &tr);
        assert!(verdict.pass, "{}", render_report(&verdict));
    }

    #[test]
    fn report_grammar_is_stable() {
        let v = Verdict {
            per_cycle: vec![
                CycleVerdict::Pass,
                CycleVerdict::Fail {
                    port: "y".into(),
                    expected: Some(Value::Int(3)),
                    actual: None,
                },
            ],
            pass: false,
        };
        assert_eq!(
            render_report(&v),
            "CYCLE 0: PASS\nCYCLE 1: FAIL y expected=3 actual=ABSENT\nRESULT: FAIL\n"
        );
    }
}
