//! Lowering of flat models to an imperative intermediate representation —
//! state variables, port slots with presence flags, guarded transition
//! blocks, and an explicit per-cycle copy step — plus an interpreter for
//! that representation and a printer emitting it as Ada-subset text.

pub mod emit;
pub mod harness;
pub mod interp;
pub mod lint;
pub mod lower;
mod mangle;

use thiserror::Error;

use crate::dtd::{Defs, Expr, Pattern, TypeRef};

/// One port of a component package: a value slot plus a presence flag.
#[derive(Debug, Clone)]
pub struct IrPort {
    pub name: String,
    pub ty: TypeRef,
    /// The port's declared kind; effective connection delays live in the
    /// system package.
    pub delayed: bool,
}

/// Extraction path of one pattern variable: starting from a port value,
/// apply the named constructors' selectors.
#[derive(Debug, Clone)]
pub struct Binding {
    pub var: String,
    pub port: String,
    /// (constructor, argument index) steps from the port value inward.
    pub path: Vec<(String, usize)>,
}

/// One guarded transition block of a `Do_Transition` procedure. Tests are
/// side-effect free; writes happen only after every test has passed.
#[derive(Debug, Clone)]
pub struct TransitionBlock {
    pub index: usize,
    pub source_state: usize,
    pub target_state: usize,
    /// Presence-and-match test per input port, in declaration order.
    pub pattern_tests: Vec<(String, Pattern)>,
    /// Pattern variable extractions, available to guard and writes.
    pub bindings: Vec<Binding>,
    pub guard: Option<Expr>,
    pub outputs: Vec<(String, Expr)>,
    pub assignments: Vec<(String, Expr)>,
}

/// The lowering of one atomic component type.
#[derive(Debug, Clone)]
pub struct ComponentPackage {
    pub name: String,
    pub states: Vec<String>,
    pub init_state: usize,
    pub vars: Vec<(String, TypeRef, Expr)>,
    pub in_ports: Vec<IrPort>,
    pub out_ports: Vec<IrPort>,
    pub transitions: Vec<TransitionBlock>,
}

impl ComponentPackage {
    pub fn out_port(&self, name: &str) -> Option<&IrPort> {
        self.out_ports.iter().find(|p| p.name == name)
    }
}

/// The definitions compiled into the shared types package.
#[derive(Debug, Clone)]
pub struct DtdPackage {
    pub types: Vec<crate::dtd::TypeDef>,
    pub funs: Vec<crate::dtd::FuncDef>,
}

#[derive(Debug, Clone)]
pub struct IrInstance {
    pub path: String,
    /// Index into `IrProgram::components`.
    pub component: usize,
}

#[derive(Debug, Clone)]
pub enum IrConnKind {
    Channel {
        from: (usize, String),
        to: (usize, String),
    },
    OpenIn {
        targets: Vec<(usize, String)>,
    },
    OpenOut {
        source: (usize, String),
    },
}

/// One wiring entry of the copy step. Delayed connections own a one-cycle
/// buffer slot; immediate ones copy within the cycle.
#[derive(Debug, Clone)]
pub struct IrConnection {
    pub endpoint: String,
    pub ty: TypeRef,
    pub kind: IrConnKind,
    pub delayed: bool,
    pub slot: Option<usize>,
}

/// The system package: instance table, execution order, and the copy step.
#[derive(Debug, Clone)]
pub struct SystemPackage {
    pub name: String,
    pub instances: Vec<IrInstance>,
    pub exec_order: Vec<usize>,
    pub connections: Vec<IrConnection>,
    pub n_slots: usize,
    /// Boundary signature, for the cycle procedure's parameter list.
    pub open_in_ports: Vec<(String, TypeRef)>,
    pub open_out_ports: Vec<(String, TypeRef)>,
}

/// A complete lowered program: one types package, one package per atomic
/// component type, and one system package. Interpretable by
/// [`interp::run_ir`] and printable by [`emit::emit_ada`].
#[derive(Debug, Clone)]
pub struct IrProgram {
    pub defs: Defs,
    pub types_package: DtdPackage,
    pub components: Vec<ComponentPackage>,
    pub system: SystemPackage,
}

impl IrProgram {
    pub fn component_by_name(&self, name: &str) -> Option<(usize, &ComponentPackage)> {
        self.components
            .iter()
            .enumerate()
            .find(|(_, c)| c.name == name)
    }

    pub fn instance_by_path(&self, path: &str) -> Option<usize> {
        self.system.instances.iter().position(|i| i.path == path)
    }

    /// Effective output delay of an instance port in the wired system.
    pub fn out_delay(&self, instance: usize, port: &str) -> bool {
        for conn in &self.system.connections {
            match &conn.kind {
                IrConnKind::Channel { from, .. } | IrConnKind::OpenOut { source: from } => {
                    if from.0 == instance && from.1 == port {
                        return conn.delayed;
                    }
                }
                IrConnKind::OpenIn { .. } => {}
            }
        }
        let comp = &self.components[self.system.instances[instance].component];
        comp.out_port(port).map(|p| p.delayed).unwrap_or(false)
    }
}

/// Emission settings: `helper_split` moves every state and transition into
/// its own subprogram to cap per-subprogram decision counts; the prefix is
/// prepended to every package name.
#[derive(Debug, Clone, Default)]
pub struct EmitterConfig {
    pub helper_split: bool,
    pub package_prefix: String,
}

#[derive(Debug, Clone, Error)]
pub enum EmitError {
    #[error("type `{0}` is recursive and has no bounded representation in the target subset")]
    RecursiveType(String),
    #[error("cannot resolve identifier collision on `{0}`")]
    Collision(String),
}

#[derive(Debug, Clone, Error)]
#[error("cycle {cycle}, {location}: {message}")]
pub struct IrError {
    pub cycle: u64,
    pub location: String,
    pub message: String,
}

pub use emit::emit_ada;
pub use harness::{emit_tdf_harness, emit_testbench};
pub use interp::{run_ir, IrExecutor, IrMachine};
pub use lint::{count_decisions, lint_subset};
pub use lower::lower;
