//! Lowering of a flat model to the imperative representation: channel
//! communication becomes explicit copy operations between port slots,
//! transitions become guarded blocks with precomputed pattern-variable
//! extraction paths.

use crate::dtd::Pattern;
use crate::model::{ComponentBody, FlatModel};

use super::{
    Binding, ComponentPackage, DtdPackage, IrConnKind, IrConnection, IrInstance, IrPort, IrProgram,
    SystemPackage, TransitionBlock,
};

fn collect_bindings(
    pat: &Pattern,
    port: &str,
    path: &mut Vec<(String, usize)>,
    out: &mut Vec<Binding>,
) {
    match pat {
        Pattern::Wildcard | Pattern::Literal(_) => {}
        Pattern::Var(name) => out.push(Binding {
            var: name.clone(),
            port: port.to_string(),
            path: path.clone(),
        }),
        Pattern::Ctor(ctor, subs) => {
            for (i, sub) in subs.iter().enumerate() {
                path.push((ctor.clone(), i));
                collect_bindings(sub, port, path, out);
                path.pop();
            }
        }
    }
}

/// Lowers a flat model into packages. Every model symbol keeps its position:
/// transition blocks appear in declaration order, instances in flattening
/// order, connections in wiring order.
pub fn lower(fm: &FlatModel) -> IrProgram {
    let components: Vec<ComponentPackage> = fm
        .types
        .iter()
        .map(|def| {
            let a = match &def.body {
                ComponentBody::Atomic(a) => a,
                ComponentBody::Composite { .. } => unreachable!("flat models hold atomic types"),
            };
            let init_state = a
                .states
                .iter()
                .position(|s| Some(s) == a.init.as_ref())
                .expect("checked model");
            let transitions = a
                .transitions
                .iter()
                .enumerate()
                .map(|(index, t)| {
                    let mut bindings = Vec::new();
                    for (port, pat) in &t.inputs {
                        let mut path = Vec::new();
                        collect_bindings(pat, port, &mut path, &mut bindings);
                    }
                    TransitionBlock {
                        index,
                        source_state: a.states.iter().position(|s| *s == t.src).expect("checked"),
                        target_state: a.states.iter().position(|s| *s == t.dst).expect("checked"),
                        pattern_tests: t.inputs.clone(),
                        bindings,
                        guard: t.guard.clone(),
                        outputs: t.outputs.clone(),
                        assignments: t.assigns.clone(),
                    }
                })
                .collect();
            ComponentPackage {
                name: def.name.clone(),
                states: a.states.clone(),
                init_state,
                vars: a
                    .vars
                    .iter()
                    .map(|v| (v.name.clone(), v.ty.clone(), v.init.clone()))
                    .collect(),
                in_ports: def
                    .in_ports()
                    .map(|p| IrPort {
                        name: p.name.clone(),
                        ty: p.ty.clone(),
                        delayed: p.kind == crate::model::PortKind::Delayed,
                    })
                    .collect(),
                out_ports: def
                    .out_ports()
                    .map(|p| IrPort {
                        name: p.name.clone(),
                        ty: p.ty.clone(),
                        delayed: p.kind == crate::model::PortKind::Delayed,
                    })
                    .collect(),
                transitions,
            }
        })
        .collect();

    let mut connections: Vec<IrConnection> = Vec::new();
    for ch in &fm.channels {
        connections.push(IrConnection {
            endpoint: ch.name.clone(),
            ty: ch.ty.clone(),
            kind: IrConnKind::Channel {
                from: ch.from.clone(),
                to: ch.to.clone(),
            },
            delayed: ch.delayed,
            slot: ch.slot,
        });
    }
    for oi in &fm.open_inputs {
        connections.push(IrConnection {
            endpoint: oi.name.clone(),
            ty: oi.ty.clone(),
            kind: IrConnKind::OpenIn {
                targets: oi.targets.clone(),
            },
            delayed: oi.delayed,
            slot: oi.slot,
        });
    }
    for oo in &fm.open_outputs {
        if let Some(source) = &oo.source {
            connections.push(IrConnection {
                endpoint: oo.name.clone(),
                ty: oo.ty.clone(),
                kind: IrConnKind::OpenOut {
                    source: source.clone(),
                },
                delayed: oo.delayed,
                slot: oo.slot,
            });
        }
    }

    let system = SystemPackage {
        name: fm.name.clone(),
        instances: fm
            .instances
            .iter()
            .map(|fi| IrInstance {
                path: fi.path.clone(),
                component: fi.type_idx,
            })
            .collect(),
        exec_order: fm.exec_order.clone(),
        connections,
        n_slots: fm.n_slots,
        open_in_ports: fm
            .open_inputs
            .iter()
            .map(|o| (o.name.clone(), o.ty.clone()))
            .collect(),
        open_out_ports: fm
            .open_outputs
            .iter()
            .map(|o| (o.name.clone(), o.ty.clone()))
            .collect(),
    };

    IrProgram {
        defs: fm.defs.clone(),
        types_package: DtdPackage {
            types: fm.defs.types.clone(),
            funs: fm.defs.funs.clone(),
        },
        components,
        system,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::les;
    use crate::model::{flatten, parse_model_str};

    #[test]
    fn blocks_keep_declaration_order() {
        let fm = les::lane_driver().unwrap();
        let p = lower(&fm);
        let (_, driver) = p.component_by_name("Driver").unwrap();
        assert_eq!(driver.transitions.len(), 6);
        for (i, t) in driver.transitions.iter().enumerate() {
            assert_eq!(t.index, i);
        }
        assert_eq!(driver.states, vec!["Active", "Deactivated"]);
    }

    #[test]
    fn one_package_per_component_type() {
        let fm = les::voter_plane().unwrap();
        let p = lower(&fm);
        // composites dissolve; only atomic component types get packages
        let names: Vec<&str> = p.components.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["Splitter", "Driver", "Voter"]);
        assert_eq!(p.system.instances.len(), 6);
    }

    #[test]
    fn bindings_capture_selector_paths() {
        let fm = flatten(
            &parse_model_str(
                "data W = Wrap(Int, Int);\n\
                 system S {\n\
                   port in i : W immediate;\n\
                   port out o : Int immediate;\n\
                   automaton { state Q; init Q; trans Q -> Q { in: i?Wrap(a, b); out: o!a + b; } }\n\
                 }",
                "t",
            )
            .unwrap(),
        )
        .unwrap();
        let p = lower(&fm);
        let t = &p.components[0].transitions[0];
        assert_eq!(t.bindings.len(), 2);
        assert_eq!(t.bindings[0].var, "a");
        assert_eq!(t.bindings[0].path, vec![("Wrap".to_string(), 0)]);
        assert_eq!(t.bindings[1].path, vec![("Wrap".to_string(), 1)]);
    }

    #[test]
    fn connections_cover_channels_and_boundaries() {
        // boundary chains collapse into open connections; driver-to-voter
        // chains collapse into direct channels
        let fm = les::lane_driver().unwrap();
        let p = lower(&fm);
        let endpoints: Vec<&str> = p
            .system
            .connections
            .iter()
            .map(|c| c.endpoint.as_str())
            .collect();
        assert_eq!(endpoints, vec!["s", "act"]);

        let fm = les::voter_plane().unwrap();
        let p = lower(&fm);
        assert!(p
            .system
            .connections
            .iter()
            .any(|c| c.endpoint == "v1" && matches!(c.kind, IrConnKind::Channel { .. })));
    }
}
