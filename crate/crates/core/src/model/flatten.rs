//! Flattening of hierarchical models into a network of atomic automata.
//!
//! Composite boundaries dissolve: a chain of channels through composite
//! ports collapses to one connection, which is delayed iff any port along
//! the chain is delayed. Instance paths are '/'-joined instance names below
//! the root; open boundary ports keep the root component's port names.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::{Diagnostics, Pos};
use crate::dtd::{Defs, TypeRef};
use crate::model::{ComponentBody, ComponentDef, Dir, Endpoint, Model, PortKind};

#[derive(Debug, Clone)]
pub struct FlatInstance {
    pub path: String,
    pub type_idx: usize,
}

/// A direct connection between two atomic instance ports.
#[derive(Debug, Clone)]
pub struct FlatChannel {
    /// Event endpoint name: the last channel hop's name, qualified by the
    /// instance path of the composite that declared it.
    pub name: String,
    pub ty: TypeRef,
    pub from: (usize, String),
    pub to: (usize, String),
    pub delayed: bool,
    pub slot: Option<usize>,
}

/// A system-boundary input port and the atomic ports it feeds.
#[derive(Debug, Clone)]
pub struct OpenInput {
    pub name: String,
    pub ty: TypeRef,
    pub delayed: bool,
    pub targets: Vec<(usize, String)>,
    pub slot: Option<usize>,
}

/// A system-boundary output port and the atomic port feeding it.
#[derive(Debug, Clone)]
pub struct OpenOutput {
    pub name: String,
    pub ty: TypeRef,
    pub delayed: bool,
    pub source: Option<(usize, String)>,
    pub slot: Option<usize>,
}

/// The flattened network: atomic component types, their instances, direct
/// wiring, the open interface, and a fixed topological execution order.
#[derive(Debug, Clone)]
pub struct FlatModel {
    pub name: String,
    pub defs: Defs,
    pub types: Vec<ComponentDef>,
    pub instances: Vec<FlatInstance>,
    pub channels: Vec<FlatChannel>,
    pub open_inputs: Vec<OpenInput>,
    pub open_outputs: Vec<OpenOutput>,
    /// Indices into `instances`, in execution order: a topological order of
    /// the immediate-dependency DAG, ties broken by path.
    pub exec_order: Vec<usize>,
    /// Number of one-cycle buffer slots for delayed connections.
    pub n_slots: usize,
}

impl FlatModel {
    pub fn instance_index(&self, path: &str) -> Option<usize> {
        self.instances.iter().position(|i| i.path == path)
    }

    pub fn instance_type(&self, idx: usize) -> &ComponentDef {
        &self.types[self.instances[idx].type_idx]
    }

    /// Effective output delay of an instance port: the common delay of the
    /// connections it feeds, or the port's own kind when unconnected.
    pub fn out_delay(&self, inst: usize, port: &str) -> bool {
        for ch in &self.channels {
            if ch.from == (inst, port.to_string()) {
                return ch.delayed;
            }
        }
        for oo in &self.open_outputs {
            if oo.source.as_ref() == Some(&(inst, port.to_string())) {
                return oo.delayed;
            }
        }
        self.instance_type(inst)
            .port(port)
            .map(|p| p.kind == PortKind::Delayed)
            .unwrap_or(false)
    }

    pub fn open_input(&self, name: &str) -> Option<&OpenInput> {
        self.open_inputs.iter().find(|o| o.name == name)
    }
}

/// Flattens a model. The precondition is an empty consistency check; this
/// entry point re-runs the checks and reports them if violated.
pub fn flatten(m: &Model) -> Result<FlatModel, Diagnostics> {
    let mut d = Diagnostics::new();
    super::check::structural_checks(m, &mut d);
    if !d.is_empty() {
        return Err(d);
    }
    build_flat(m)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Node {
    path: String, // "" is the root boundary
    port: String,
}

struct Edge {
    from: Node,
    to: Node,
    name: String,
    scope: String, // instance path of the declaring composite
    ty: TypeRef,
}

fn join(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}/{name}")
    }
}

pub(crate) fn build_flat(m: &Model) -> Result<FlatModel, Diagnostics> {
    let mut d = Diagnostics::new();
    let system = m.system();

    // Root-level atomic system: its own ports form the open interface.
    if let ComponentBody::Atomic(_) = &system.body {
        let types = vec![system.clone()];
        let inst = FlatInstance {
            path: system.name.clone(),
            type_idx: 0,
        };
        let mut open_inputs = Vec::new();
        let mut open_outputs = Vec::new();
        let mut n_slots = 0;
        for p in &system.ports {
            let delayed = p.kind == PortKind::Delayed;
            let slot = if delayed {
                n_slots += 1;
                Some(n_slots - 1)
            } else {
                None
            };
            match p.dir {
                Dir::In => open_inputs.push(OpenInput {
                    name: p.name.clone(),
                    ty: p.ty.clone(),
                    delayed,
                    targets: vec![(0, p.name.clone())],
                    slot,
                }),
                Dir::Out => open_outputs.push(OpenOutput {
                    name: p.name.clone(),
                    ty: p.ty.clone(),
                    delayed,
                    source: Some((0, p.name.clone())),
                    slot,
                }),
            }
        }
        return Ok(FlatModel {
            name: m.name.clone(),
            defs: m.defs.clone(),
            types,
            instances: vec![inst],
            channels: Vec::new(),
            open_inputs,
            open_outputs,
            exec_order: vec![0],
            n_slots,
        });
    }

    // Instantiate the hierarchy. `comp_at` records the component type of
    // every instance path, including composite ones and the root ("").
    let mut comp_at: BTreeMap<String, &ComponentDef> = BTreeMap::new();
    let mut atomics: Vec<(String, &ComponentDef)> = Vec::new();
    comp_at.insert(String::new(), system);
    instantiate(m, system, "", &mut comp_at, &mut atomics);

    let mut types: Vec<ComponentDef> = Vec::new();
    let mut type_idx: BTreeMap<String, usize> = BTreeMap::new();
    let mut instances: Vec<FlatInstance> = Vec::new();
    for (path, def) in &atomics {
        let idx = *type_idx.entry(def.name.clone()).or_insert_with(|| {
            types.push((*def).clone());
            types.len() - 1
        });
        instances.push(FlatInstance {
            path: path.clone(),
            type_idx: idx,
        });
    }
    let inst_idx: BTreeMap<&str, usize> = instances
        .iter()
        .enumerate()
        .map(|(i, fi)| (fi.path.as_str(), i))
        .collect();

    // Edges between port nodes from every composite's channel declarations.
    let mut edges: Vec<Edge> = Vec::new();
    for (path, def) in &comp_at {
        if let ComponentBody::Composite { channels, .. } = &def.body {
            for ch in channels {
                let node_of = |e: &Endpoint| match e {
                    Endpoint::Own(p) => Node {
                        path: path.clone(),
                        port: p.clone(),
                    },
                    Endpoint::Sub(s, p) => Node {
                        path: join(path, s),
                        port: p.clone(),
                    },
                };
                edges.push(Edge {
                    from: node_of(&ch.from),
                    to: node_of(&ch.to),
                    name: ch.name.clone(),
                    scope: path.clone(),
                    ty: ch.ty.clone(),
                });
            }
        }
    }

    let port_kind = |n: &Node| -> bool {
        comp_at
            .get(&n.path)
            .and_then(|c| c.port(&n.port))
            .map(|p| p.kind == PortKind::Delayed)
            .unwrap_or(false)
    };
    let is_atomic = |path: &str| -> bool { inst_idx.contains_key(path) };

    // Chase each source through composite boundaries to its terminals.
    struct Conn {
        src: Node,
        dst: Node,
        delayed: bool,
        last_name: String,
        last_scope: String,
        ty: TypeRef,
    }
    let mut conns: Vec<Conn> = Vec::new();
    let mut sources: Vec<Node> = Vec::new();
    for p in system.ports.iter().filter(|p| p.dir == Dir::In) {
        sources.push(Node {
            path: String::new(),
            port: p.name.clone(),
        });
    }
    for fi in &instances {
        let def = &types[fi.type_idx];
        for p in def.out_ports() {
            sources.push(Node {
                path: fi.path.clone(),
                port: p.name.clone(),
            });
        }
    }
    for src in &sources {
        let mut stack: Vec<(Node, bool)> = vec![(src.clone(), port_kind(src))];
        let mut visited: BTreeSet<Node> = BTreeSet::new();
        while let Some((node, delay)) = stack.pop() {
            if !visited.insert(node.clone()) {
                continue;
            }
            for e in edges.iter().filter(|e| e.from == node) {
                let delay2 = delay || port_kind(&e.to);
                let terminal_in = is_atomic(&e.to.path);
                let terminal_out = e.to.path.is_empty();
                if terminal_in || terminal_out {
                    conns.push(Conn {
                        src: src.clone(),
                        dst: e.to.clone(),
                        delayed: delay2,
                        last_name: e.name.clone(),
                        last_scope: e.scope.clone(),
                        ty: e.ty.clone(),
                    });
                } else {
                    stack.push((e.to.clone(), delay2));
                }
            }
        }
    }

    // Assemble channels, open inputs, and open outputs.
    let mut channels: Vec<FlatChannel> = Vec::new();
    let mut open_inputs: Vec<OpenInput> = Vec::new();
    let mut open_outputs: Vec<OpenOutput> = Vec::new();

    for p in system.ports.iter().filter(|p| p.dir == Dir::In) {
        let mine: Vec<&Conn> = conns
            .iter()
            .filter(|c| c.src.path.is_empty() && c.src.port == p.name)
            .collect();
        let mut targets = Vec::new();
        let mut delays: BTreeSet<bool> = BTreeSet::new();
        for c in &mine {
            if c.dst.path.is_empty() {
                d.error(
                    p.pos,
                    format!(
                        "input `{}` is wired through to output `{}` without a component",
                        p.name, c.dst.port
                    ),
                );
                continue;
            }
            targets.push((inst_idx[c.dst.path.as_str()], c.dst.port.clone()));
            delays.insert(c.delayed);
        }
        if delays.len() > 1 {
            d.error(
                p.pos,
                format!("input `{}` feeds both immediate and delayed paths", p.name),
            );
        }
        let delayed = delays
            .into_iter()
            .next()
            .unwrap_or(p.kind == PortKind::Delayed);
        open_inputs.push(OpenInput {
            name: p.name.clone(),
            ty: p.ty.clone(),
            delayed,
            targets,
            slot: None,
        });
    }

    for c in conns.iter().filter(|c| !c.src.path.is_empty()) {
        let from = (inst_idx[c.src.path.as_str()], c.src.port.clone());
        if c.dst.path.is_empty() {
            open_outputs.push(OpenOutput {
                name: c.dst.port.clone(),
                ty: c.ty.clone(),
                delayed: c.delayed,
                source: Some(from),
                slot: None,
            });
        } else {
            channels.push(FlatChannel {
                name: if c.last_scope.is_empty() {
                    c.last_name.clone()
                } else {
                    format!("{}/{}", c.last_scope, c.last_name)
                },
                ty: c.ty.clone(),
                from,
                to: (inst_idx[c.dst.path.as_str()], c.dst.port.clone()),
                delayed: c.delayed,
                slot: None,
            });
        }
    }

    // Unconnected boundary outputs stay part of the open interface.
    for p in system.ports.iter().filter(|p| p.dir == Dir::Out) {
        if !open_outputs.iter().any(|o| o.name == p.name) {
            open_outputs.push(OpenOutput {
                name: p.name.clone(),
                ty: p.ty.clone(),
                delayed: p.kind == PortKind::Delayed,
                source: None,
                slot: None,
            });
        }
    }
    // Keep boundary declaration order for outputs.
    open_outputs.sort_by_key(|o| {
        system
            .ports
            .iter()
            .position(|p| p.name == o.name)
            .unwrap_or(usize::MAX)
    });

    // All connections leaving one output port must agree on delay.
    let mut by_src: BTreeMap<(usize, &str), BTreeSet<bool>> = BTreeMap::new();
    for ch in &channels {
        by_src
            .entry((ch.from.0, ch.from.1.as_str()))
            .or_default()
            .insert(ch.delayed);
    }
    for oo in &open_outputs {
        if let Some((i, p)) = &oo.source {
            by_src
                .entry((*i, p.as_str()))
                .or_default()
                .insert(oo.delayed);
        }
    }
    for ((i, p), delays) in &by_src {
        if delays.len() > 1 {
            d.error(
                Pos::default(),
                format!(
                    "output `{}.{p}` feeds both immediate and delayed paths",
                    instances[*i].path
                ),
            );
        }
    }

    // Endpoint names must be unique across channels and open ports.
    let mut endpoints: BTreeSet<&str> = BTreeSet::new();
    for name in channels
        .iter()
        .map(|c| c.name.as_str())
        .chain(open_inputs.iter().map(|o| o.name.as_str()))
        .chain(open_outputs.iter().map(|o| o.name.as_str()))
    {
        if !endpoints.insert(name) {
            d.error(Pos::default(), format!("duplicate event endpoint `{name}`"));
        }
    }

    // Topological execution order over immediate channels.
    let exec_order = match topo_order(&instances, &channels) {
        Ok(order) => order,
        Err(cycle) => {
            d.error(
                Pos::default(),
                format!(
                    "instantaneous dependency cycle involving: {}",
                    cycle.join(", ")
                ),
            );
            Vec::new()
        }
    };

    if !d.is_empty() {
        return Err(d);
    }

    // Delayed connections each get a one-cycle buffer slot.
    let mut n_slots = 0;
    let mut alloc = || {
        n_slots += 1;
        n_slots - 1
    };
    for ch in &mut channels {
        if ch.delayed {
            ch.slot = Some(alloc());
        }
    }
    for oi in &mut open_inputs {
        if oi.delayed {
            oi.slot = Some(alloc());
        }
    }
    for oo in &mut open_outputs {
        if oo.delayed {
            oo.slot = Some(alloc());
        }
    }

    Ok(FlatModel {
        name: m.name.clone(),
        defs: m.defs.clone(),
        types,
        instances,
        channels,
        open_inputs,
        open_outputs,
        exec_order,
        n_slots,
    })
}

fn instantiate<'m>(
    m: &'m Model,
    def: &'m ComponentDef,
    path: &str,
    comp_at: &mut BTreeMap<String, &'m ComponentDef>,
    atomics: &mut Vec<(String, &'m ComponentDef)>,
) {
    if let ComponentBody::Composite { subs, .. } = &def.body {
        for s in subs {
            let child = match m.component(&s.ty) {
                Some(c) => c,
                None => continue,
            };
            let child_path = join(path, &s.name);
            comp_at.insert(child_path.clone(), child);
            match &child.body {
                ComponentBody::Atomic(_) => atomics.push((child_path, child)),
                ComponentBody::Composite { .. } => {
                    instantiate(m, child, &child_path, comp_at, atomics)
                }
            }
        }
    }
}

/// Kahn's algorithm over the immediate-dependency graph, always expanding
/// the lexicographically smallest ready instance.
fn topo_order(
    instances: &[FlatInstance],
    channels: &[FlatChannel],
) -> Result<Vec<usize>, Vec<String>> {
    let n = instances.len();
    let mut indegree = vec![0usize; n];
    let mut succs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for ch in channels.iter().filter(|c| !c.delayed) {
        if succs[ch.from.0].insert(ch.to.0) {
            indegree[ch.to.0] += 1;
        }
    }
    let mut ready: BTreeSet<(&str, usize)> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(|i| (instances[i].path.as_str(), i))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&(path, i)) = ready.iter().next() {
        ready.remove(&(path, i));
        order.push(i);
        for &j in &succs[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.insert((instances[j].path.as_str(), j));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        let cycle: Vec<String> = (0..n)
            .filter(|i| !order.contains(i))
            .map(|i| instances[i].path.clone())
            .collect();
        Err(cycle)
    }
}
