//! The component meta-model: components with ports, channels, and automata,
//! a textual concrete syntax, consistency checking, and flattening of
//! hierarchical composites into a network of atomic automata.

pub mod check;
pub mod flatten;
pub mod parser;
pub mod pretty;

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::diag::Pos;
use crate::dtd::{Defs, Expr, Pattern, TypeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    In,
    Out,
}

/// Immediate ports pass values on within the same clock cycle; delayed ports
/// (the default) make them visible in the next cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortKind {
    Immediate,
    Delayed,
}

#[derive(Debug, Clone)]
pub struct Port {
    pub name: String,
    pub ty: TypeRef,
    pub dir: Dir,
    pub kind: PortKind,
    pub pos: Pos,
}

/// Instantiation of a named component type inside a composite.
#[derive(Debug, Clone)]
pub struct SubDecl {
    pub name: String,
    pub ty: String,
    pub pos: Pos,
}

/// A channel endpoint: one of the composite's own boundary ports, or a port
/// of one of its subcomponents.
#[derive(Debug, Clone, PartialEq)]
pub enum Endpoint {
    Own(String),
    Sub(String, String),
}

#[derive(Debug, Clone)]
pub struct ChannelDecl {
    pub name: String,
    pub ty: TypeRef,
    pub from: Endpoint,
    pub to: Endpoint,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct VarDecl {
    pub name: String,
    pub ty: TypeRef,
    pub init: Expr,
    pub pos: Pos,
}

/// One transition: fires when the source state matches, every named input
/// port holds a matching value, and the guard is true. Ports without a
/// pattern are ignored regardless of presence.
#[derive(Debug, Clone)]
pub struct TransitionDef {
    pub src: String,
    pub dst: String,
    pub inputs: Vec<(String, Pattern)>,
    pub guard: Option<Expr>,
    pub outputs: Vec<(String, Expr)>,
    pub assigns: Vec<(String, Expr)>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct Automaton {
    pub states: Vec<String>,
    pub init: Option<String>,
    pub vars: Vec<VarDecl>,
    pub transitions: Vec<TransitionDef>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub enum ComponentBody {
    Composite {
        subs: Vec<SubDecl>,
        channels: Vec<ChannelDecl>,
    },
    Atomic(Automaton),
}

#[derive(Debug, Clone)]
pub struct ComponentDef {
    pub name: String,
    pub ports: Vec<Port>,
    pub body: ComponentBody,
    pub pos: Pos,
}

impl ComponentDef {
    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn automaton(&self) -> Option<&Automaton> {
        match &self.body {
            ComponentBody::Atomic(a) => Some(a),
            ComponentBody::Composite { .. } => None,
        }
    }

    pub fn in_ports(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.dir == Dir::In)
    }

    pub fn out_ports(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.dir == Dir::Out)
    }
}

/// A parsed model: merged definitions, all component types, and the name of
/// the root (`system`) component. Immutable after parsing.
#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub defs: Defs,
    pub components: Vec<ComponentDef>,
    pub source_name: String,
}

impl Model {
    pub fn component(&self, name: &str) -> Option<&ComponentDef> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn system(&self) -> &ComponentDef {
        self.component(&self.name).expect("system component exists")
    }
}

/// Resolves `include "file";` directives during parsing.
pub trait IncludeLoader {
    fn load(&mut self, path: &str) -> Result<String, String>;
}

/// Rejects all includes; used when parsing from a bare string.
pub struct NoIncludes;

impl IncludeLoader for NoIncludes {
    fn load(&mut self, path: &str) -> Result<String, String> {
        Err(format!(
            "cannot resolve include \"{path}\" without a base directory"
        ))
    }
}

/// Loads includes from the file system, relative to a base directory.
pub struct FsLoader {
    pub base: PathBuf,
}

impl IncludeLoader for FsLoader {
    fn load(&mut self, path: &str) -> Result<String, String> {
        let full = self.base.join(path);
        std::fs::read_to_string(&full).map_err(|e| format!("cannot read {}: {e}", full.display()))
    }
}

/// Serves includes from an in-memory map; used for embedded model sources.
pub struct MapLoader {
    pub files: BTreeMap<String, String>,
}

impl IncludeLoader for MapLoader {
    fn load(&mut self, path: &str) -> Result<String, String> {
        self.files
            .get(path)
            .cloned()
            .ok_or_else(|| format!("unknown include \"{path}\""))
    }
}

pub use check::check_consistency;
pub use flatten::{flatten, FlatChannel, FlatInstance, FlatModel, OpenInput, OpenOutput};
pub use parser::{load_model_file, parse_model, parse_model_str};
pub use pretty::pretty_model;
