//! Event traces and their transformations: per-cycle event records of a
//! run, projection onto a single component, the line-per-cycle TDF text
//! format, and conformance replay of a projected trace against any
//! executable implementation of a component.

pub mod conformance;
pub mod tdf;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dtd::check::check_value_type;
use crate::dtd::{TypeRef, Value};
use crate::model::FlatModel;

/// A recorded run: one list of (endpoint, value) events per clock cycle,
/// sorted by endpoint, at most one event per endpoint per cycle. Endpoints
/// are flattened channel names or open boundary port names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Eet {
    pub cycles: Vec<Vec<(String, Value)>>,
}

impl Eet {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// One cycle of a component's black-box view: the inputs it received and
/// the outputs it is expected to produce.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CycleIo {
    pub inputs: BTreeMap<String, Value>,
    pub expected: BTreeMap<String, Value>,
}

/// The projection of a trace onto one component, cycle-aligned with the
/// source trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentTrace {
    pub component: String,
    pub cycles: Vec<CycleIo>,
}

#[derive(Debug, Clone, Error)]
pub enum TraceError {
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Header(String),
}

/// Projects a trace onto one component: events on connections into it become
/// inputs, events on connections out of it become expected outputs, and all
/// other events are dropped. Cycle alignment is preserved.
pub fn project(eet: &Eet, component: &str, fm: &FlatModel) -> Result<ComponentTrace, TraceError> {
    let idx = fm
        .instance_index(component)
        .ok_or_else(|| TraceError::UnknownComponent(component.to_string()))?;

    // endpoint name -> (is_input, port name) for the chosen instance
    let mut map: BTreeMap<&str, (bool, &str)> = BTreeMap::new();
    for ch in &fm.channels {
        if ch.to.0 == idx {
            map.insert(&ch.name, (true, &ch.to.1));
        } else if ch.from.0 == idx {
            map.insert(&ch.name, (false, &ch.from.1));
        }
    }
    for oi in &fm.open_inputs {
        if let Some((_, port)) = oi.targets.iter().find(|(i, _)| *i == idx) {
            map.insert(&oi.name, (true, port));
        }
    }
    for oo in &fm.open_outputs {
        if let Some((i, port)) = &oo.source {
            if *i == idx {
                map.insert(&oo.name, (false, port));
            }
        }
    }

    let cycles = eet
        .cycles
        .iter()
        .map(|events| {
            let mut io = CycleIo::default();
            for (endpoint, value) in events {
                if let Some((is_input, port)) = map.get(endpoint.as_str()) {
                    let side = if *is_input {
                        &mut io.inputs
                    } else {
                        &mut io.expected
                    };
                    side.insert(port.to_string(), value.clone());
                }
            }
            io
        })
        .collect();
    Ok(ComponentTrace {
        component: component.to_string(),
        cycles,
    })
}

/// Reconstructs the stimulus sequence that produced a recorded trace, by
/// inverting delivery-time recording: an event on a delayed open input at
/// cycle `t` came from the stimulus at `t - 1`.
pub fn reconstruct_inputs(eet: &Eet, fm: &FlatModel) -> Vec<crate::sim::StepInput> {
    let mut inputs = vec![crate::sim::StepInput::new(); eet.cycles.len()];
    for (t, events) in eet.cycles.iter().enumerate() {
        for (endpoint, value) in events {
            if let Some(oi) = fm.open_input(endpoint) {
                let at = if oi.delayed { t.wrapping_sub(1) } else { t };
                if at < inputs.len() {
                    inputs[at].insert(endpoint.clone(), value.clone());
                }
            }
        }
    }
    inputs
}

/// The port signature a TDF file is checked against.
#[derive(Debug, Clone, Default)]
pub struct PortSig {
    pub inputs: BTreeMap<String, TypeRef>,
    pub outputs: BTreeMap<String, TypeRef>,
}

impl PortSig {
    /// Signature of one flattened component instance.
    pub fn of_component(fm: &FlatModel, component: &str) -> Result<PortSig, TraceError> {
        let idx = fm
            .instance_index(component)
            .ok_or_else(|| TraceError::UnknownComponent(component.to_string()))?;
        let def = fm.instance_type(idx);
        Ok(PortSig {
            inputs: def
                .in_ports()
                .map(|p| (p.name.clone(), p.ty.clone()))
                .collect(),
            outputs: def
                .out_ports()
                .map(|p| (p.name.clone(), p.ty.clone()))
                .collect(),
        })
    }

    /// Signature of the whole system's open interface.
    pub fn of_system(fm: &FlatModel) -> PortSig {
        PortSig {
            inputs: fm
                .open_inputs
                .iter()
                .map(|o| (o.name.clone(), o.ty.clone()))
                .collect(),
            outputs: fm
                .open_outputs
                .iter()
                .map(|o| (o.name.clone(), o.ty.clone()))
                .collect(),
        }
    }
}

/// Serializes a trace in the archive text format: a header line naming the
/// model, then one line per cycle in the TDF line grammar with open-input
/// endpoints as `endpoint?literal;` and all other endpoints as
/// `endpoint!literal;`.
pub fn write_eet(eet: &Eet, fm: &FlatModel) -> String {
    let mut out = format!("eet {}\n", fm.name);
    for events in &eet.cycles {
        let mut ins = String::new();
        let mut outs = String::new();
        for (endpoint, value) in events {
            if fm.open_input(endpoint).is_some() {
                ins.push_str(&format!("{endpoint}?{value};"));
            } else {
                outs.push_str(&format!("{endpoint}!{value};"));
            }
        }
        out.push_str(&ins);
        out.push_str(&outs);
        out.push('\n');
    }
    out
}

/// Parses the archive format back, validating endpoints and value types
/// against the model.
pub fn parse_eet(text: &str, fm: &FlatModel) -> Result<Eet, TraceError> {
    let mut lines = text.split('\n');
    let header = lines.next().unwrap_or("");
    let expected = format!("eet {}", fm.name);
    if header.trim_end() != expected {
        return Err(TraceError::Header(format!(
            "expected header `{expected}`, found `{header}`"
        )));
    }

    let mut endpoint_ty: BTreeMap<&str, (&TypeRef, bool)> = BTreeMap::new();
    for oi in &fm.open_inputs {
        endpoint_ty.insert(&oi.name, (&oi.ty, true));
    }
    for oo in &fm.open_outputs {
        endpoint_ty.insert(&oo.name, (&oo.ty, false));
    }
    for ch in &fm.channels {
        endpoint_ty.insert(&ch.name, (&ch.ty, false));
    }

    let mut cycles = Vec::new();
    let mut rest: Vec<&str> = lines.collect();
    if rest.last() == Some(&"") {
        rest.pop(); // trailing newline
    }
    for (i, line) in rest.iter().enumerate() {
        let lineno = i + 2; // 1-based, after the header
        let events = tdf::scan_event_line(line, |endpoint, marker| {
            let (ty, is_input) = endpoint_ty
                .get(endpoint)
                .ok_or_else(|| format!("unknown endpoint `{endpoint}`"))?;
            let want = if *is_input { '?' } else { '!' };
            if marker != want {
                return Err(format!("endpoint `{endpoint}` requires `{want}`"));
            }
            Ok((*ty).clone())
        })
        .map_err(|message| TraceError::Parse {
            line: lineno,
            message,
        })?;
        for (_, _, v, ty) in &events {
            check_value_type(v, ty, &fm.defs).map_err(|message| TraceError::Parse {
                line: lineno,
                message,
            })?;
        }
        cycles.push(events.into_iter().map(|(e, _, v, _)| (e, v)).collect());
    }
    Ok(Eet { cycles })
}

pub use conformance::{
    render_report, run_conformance, CycleExecutor, CycleVerdict, SimExecutor, Verdict,
};
pub use tdf::{parse_tdf, to_tdf};
