//! Consistency and completeness checks. A model with no diagnostics is
//! executable: names are unique, types resolve, channel endpoints are
//! compatible, automata are complete, transitions are well-typed, and the
//! flattened network is free of instantaneous cycles.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::Diagnostics;
use crate::dtd::check::{expr_type, pattern_bindings, TypeEnv};
use crate::dtd::TypeRef;
use crate::model::flatten::build_flat;
use crate::model::{ComponentBody, ComponentDef, Dir, Endpoint, Model};

/// Runs every check. The returned list is empty exactly when the model is
/// executable.
pub fn check_consistency(m: &Model) -> Diagnostics {
    let mut d = Diagnostics::new();
    structural_checks(m, &mut d);
    if d.is_empty() {
        // Wiring-level checks need the flattened network.
        if let Err(fd) = build_flat(m) {
            d.extend(fd);
        }
    }
    d
}

pub(crate) fn structural_checks(m: &Model, d: &mut Diagnostics) {
    let mut names: BTreeSet<&str> = BTreeSet::new();
    for c in &m.components {
        if !names.insert(&c.name) {
            d.error(c.pos, format!("duplicate component name `{}`", c.name));
        }
    }
    for c in &m.components {
        check_component(m, c, d);
    }
    check_instantiation_acyclic(m, d);
}

fn check_component(m: &Model, c: &ComponentDef, d: &mut Diagnostics) {
    let mut port_names: BTreeSet<&str> = BTreeSet::new();
    for p in &c.ports {
        if !port_names.insert(&p.name) {
            d.error(
                p.pos,
                format!("duplicate port `{}` in `{}`", p.name, c.name),
            );
        }
        if !m.defs.type_exists(&p.ty) {
            d.error(
                p.pos,
                format!("unknown type `{}` on port `{}`", p.ty, p.name),
            );
        }
    }
    match &c.body {
        ComponentBody::Composite { subs, channels } => {
            let mut sub_names: BTreeMap<&str, &str> = BTreeMap::new();
            for s in subs {
                if sub_names.insert(&s.name, &s.ty).is_some() {
                    d.error(
                        s.pos,
                        format!("duplicate instance `{}` in `{}`", s.name, c.name),
                    );
                }
                if m.component(&s.ty).is_none() {
                    d.error(s.pos, format!("unknown component type `{}`", s.ty));
                }
            }
            let mut chan_names: BTreeSet<&str> = BTreeSet::new();
            // every sink may be written by at most one channel
            let mut written: BTreeSet<String> = BTreeSet::new();
            for ch in channels {
                if !chan_names.insert(&ch.name) {
                    d.error(
                        ch.pos,
                        format!("duplicate channel `{}` in `{}`", ch.name, c.name),
                    );
                }
                if !m.defs.type_exists(&ch.ty) {
                    d.error(
                        ch.pos,
                        format!("unknown type `{}` on channel `{}`", ch.ty, ch.name),
                    );
                }
                let from_ty = endpoint_type(m, c, &ch.from, true, ch, d);
                let to_ty = endpoint_type(m, c, &ch.to, false, ch, d);
                for (what, ty) in [("source", from_ty), ("target", to_ty)] {
                    if let Some(ty) = ty {
                        if ty != ch.ty {
                            d.error(
                                ch.pos,
                                format!(
                                    "channel `{}` has type {}, its {what} port has type {ty}",
                                    ch.name, ch.ty
                                ),
                            );
                        }
                    }
                }
                let sink_key = match &ch.to {
                    Endpoint::Own(p) => format!(".{p}"),
                    Endpoint::Sub(s, p) => format!("{s}.{p}"),
                };
                if !written.insert(sink_key.clone()) {
                    d.error(
                        ch.pos,
                        format!("port `{sink_key}` is written by more than one channel"),
                    );
                }
            }
        }
        ComponentBody::Atomic(a) => {
            let mut states: BTreeSet<&str> = BTreeSet::new();
            for s in &a.states {
                if !states.insert(s) {
                    d.error(a.pos, format!("duplicate state `{s}` in `{}`", c.name));
                }
            }
            if a.states.is_empty() {
                d.error(
                    a.pos,
                    format!("automaton of `{}` declares no states", c.name),
                );
            }
            match &a.init {
                None => d.error(
                    a.pos,
                    format!("automaton of `{}` has no initial state", c.name),
                ),
                Some(init) => {
                    if !states.contains(init.as_str()) {
                        d.error(a.pos, format!("initial state `{init}` is not declared"));
                    }
                }
            }
            let mut env = TypeEnv::new();
            for v in &a.vars {
                if env.contains_key(&v.name) {
                    d.error(v.pos, format!("duplicate variable `{}`", v.name));
                    continue;
                }
                if !m.defs.type_exists(&v.ty) {
                    d.error(
                        v.pos,
                        format!("unknown type `{}` on variable `{}`", v.ty, v.name),
                    );
                    continue;
                }
                match expr_type(&v.init, &TypeEnv::new(), &m.defs) {
                    Ok(ty) if ty == v.ty => {}
                    Ok(ty) => d.error(
                        v.pos,
                        format!(
                            "initializer of `{}` has type {ty}, expected {}",
                            v.name, v.ty
                        ),
                    ),
                    Err(msg) => d.error(v.pos, format!("initializer of `{}`: {msg}", v.name)),
                }
                env.insert(v.name.clone(), v.ty.clone());
            }
            for t in &a.transitions {
                check_transition(m, c, t, &env, &states, d);
            }
        }
    }
}

fn check_transition(
    m: &Model,
    c: &ComponentDef,
    t: &crate::model::TransitionDef,
    vars: &TypeEnv,
    states: &BTreeSet<&str>,
    d: &mut Diagnostics,
) {
    for s in [&t.src, &t.dst] {
        if !states.contains(s.as_str()) {
            d.error(t.pos, format!("state `{s}` is not declared"));
        }
    }
    let mut bindings: Vec<(String, TypeRef)> = Vec::new();
    let mut seen_in: BTreeSet<&str> = BTreeSet::new();
    for (port, pat) in &t.inputs {
        let p = match c.port(port) {
            Some(p) => p,
            None => {
                d.error(t.pos, format!("unknown port `{port}`"));
                continue;
            }
        };
        if p.dir != Dir::In {
            d.error(t.pos, format!("port `{port}` is not an input port"));
            continue;
        }
        if !seen_in.insert(port) {
            d.error(
                t.pos,
                format!("port `{port}` has more than one input pattern"),
            );
            continue;
        }
        if let Err(msg) = pattern_bindings(pat, &p.ty, &m.defs, &mut bindings) {
            d.error(t.pos, format!("pattern on `{port}`: {msg}"));
        }
    }
    let mut env = vars.clone();
    for (name, ty) in &bindings {
        if vars.contains_key(name) {
            d.error(
                t.pos,
                format!("pattern variable `{name}` shadows a data variable"),
            );
        }
        env.insert(name.clone(), ty.clone());
    }
    if let Some(g) = &t.guard {
        match expr_type(g, &env, &m.defs) {
            Ok(TypeRef::Bool) => {}
            Ok(ty) => d.error(t.pos, format!("guard has type {ty}, expected Bool")),
            Err(msg) => d.error(t.pos, format!("guard: {msg}")),
        }
    }
    let mut seen_out: BTreeSet<&str> = BTreeSet::new();
    for (port, e) in &t.outputs {
        let p = match c.port(port) {
            Some(p) => p,
            None => {
                d.error(t.pos, format!("unknown port `{port}`"));
                continue;
            }
        };
        if p.dir != Dir::Out {
            d.error(t.pos, format!("port `{port}` is not an output port"));
            continue;
        }
        if !seen_out.insert(port) {
            d.error(t.pos, format!("port `{port}` is written more than once"));
            continue;
        }
        match expr_type(e, &env, &m.defs) {
            Ok(ty) if ty == p.ty => {}
            Ok(ty) => d.error(
                t.pos,
                format!("output on `{port}` has type {ty}, port expects {}", p.ty),
            ),
            Err(msg) => d.error(t.pos, format!("output on `{port}`: {msg}")),
        }
    }
    for (var, e) in &t.assigns {
        let vty = match vars.get(var) {
            Some(ty) => ty.clone(),
            None => {
                d.error(t.pos, format!("unknown variable `{var}`"));
                continue;
            }
        };
        match expr_type(e, &env, &m.defs) {
            Ok(ty) if ty == vty => {}
            Ok(ty) => d.error(
                t.pos,
                format!("assignment to `{var}` has type {ty}, expected {vty}"),
            ),
            Err(msg) => d.error(t.pos, format!("assignment to `{var}`: {msg}")),
        }
    }
}

fn endpoint_type(
    m: &Model,
    c: &ComponentDef,
    e: &Endpoint,
    is_source: bool,
    ch: &crate::model::ChannelDecl,
    d: &mut Diagnostics,
) -> Option<TypeRef> {
    match e {
        Endpoint::Own(port) => match c.port(port) {
            None => {
                d.error(
                    ch.pos,
                    format!("channel `{}`: unknown port `{port}`", ch.name),
                );
                None
            }
            Some(p) => {
                // Inside a composite, its own In ports act as sources and
                // its own Out ports as sinks.
                let ok = if is_source {
                    p.dir == Dir::In
                } else {
                    p.dir == Dir::Out
                };
                if !ok {
                    d.error(
                        ch.pos,
                        format!(
                            "channel `{}`: port `{port}` cannot be a {}",
                            ch.name,
                            if is_source { "source" } else { "target" }
                        ),
                    );
                }
                Some(p.ty.clone())
            }
        },
        Endpoint::Sub(sub, port) => {
            let body_subs = match &c.body {
                ComponentBody::Composite { subs, .. } => subs,
                ComponentBody::Atomic(_) => return None,
            };
            let s = match body_subs.iter().find(|s| s.name == *sub) {
                Some(s) => s,
                None => {
                    d.error(
                        ch.pos,
                        format!("channel `{}`: unknown instance `{sub}`", ch.name),
                    );
                    return None;
                }
            };
            let sc = m.component(&s.ty)?;
            match sc.port(port) {
                None => {
                    d.error(
                        ch.pos,
                        format!("channel `{}`: `{sub}` has no port `{port}`", ch.name),
                    );
                    None
                }
                Some(p) => {
                    let ok = if is_source {
                        p.dir == Dir::Out
                    } else {
                        p.dir == Dir::In
                    };
                    if !ok {
                        d.error(
                            ch.pos,
                            format!(
                                "channel `{}`: port `{sub}.{port}` cannot be a {}",
                                ch.name,
                                if is_source { "source" } else { "target" }
                            ),
                        );
                    }
                    Some(p.ty.clone())
                }
            }
        }
    }
}

/// Component types may not contain themselves, directly or transitively.
fn check_instantiation_acyclic(m: &Model, d: &mut Diagnostics) {
    fn visit(
        m: &Model,
        name: &str,
        stack: &mut Vec<String>,
        done: &mut BTreeSet<String>,
        d: &mut Diagnostics,
    ) {
        if done.contains(name) {
            return;
        }
        if stack.iter().any(|s| s == name) {
            if let Some(c) = m.component(name) {
                d.error(
                    c.pos,
                    format!("component `{name}` contains itself recursively"),
                );
            }
            return;
        }
        stack.push(name.to_string());
        if let Some(c) = m.component(name) {
            if let ComponentBody::Composite { subs, .. } = &c.body {
                for s in subs {
                    visit(m, &s.ty, stack, done, d);
                }
            }
        }
        stack.pop();
        done.insert(name.to_string());
    }
    let mut done = BTreeSet::new();
    let mut stack = Vec::new();
    visit(m, &m.name.clone(), &mut stack, &mut done, d);
}
