//! Printing of lowered programs as compilable Ada-subset text: two files
//! per package (specification and body), private data types behind
//! constructor/selector/discriminator functions, one `Do_Transition`
//! procedure per component package, and a system package with the instance
//! table and per-cycle copy step. The emitted subset avoids tasking,
//! exceptions, generics, access types, gotos, and use-clauses.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::dtd::{format_float, BinOp, Expr, Pattern, TypeRef, UnOp, Value};

use super::mangle::{ada_words, Scope};
use super::{EmitError, EmitterConfig, IrConnKind, IrProgram, TransitionBlock};

struct CtorSyms {
    fun: String,    // constructor function
    is_fun: String, // discriminator
    selectors: Vec<String>,
    kind_literal: String, // enum literal in the private part
    fields: Vec<String>,  // record fields for the arguments
}

struct CompSyms {
    pkg: String,
    states: Vec<String>,
    vars: Vec<String>,
    port_base: BTreeMap<String, String>,
}

pub(crate) struct Symbols {
    types_pkg: Option<String>,
    type_names: BTreeMap<String, String>,
    ctors: BTreeMap<String, CtorSyms>,
    fun_names: BTreeMap<String, String>,
    comps: Vec<CompSyms>,
    sys_pkg: String,
    instance_fields: Vec<String>,
    boundary: BTreeMap<String, String>,
}

impl Symbols {
    fn ada_type(&self, ty: &TypeRef, inside_types_pkg: bool) -> String {
        match ty {
            TypeRef::Int => "Integer".into(),
            TypeRef::Float => "Float".into(),
            TypeRef::Bool => "Boolean".into(),
            TypeRef::Named(n) => {
                let name = &self.type_names[n];
                if inside_types_pkg {
                    name.clone()
                } else {
                    format!(
                        "{}.{}",
                        self.types_pkg.as_ref().expect("types package"),
                        name
                    )
                }
            }
        }
    }

    fn fun_ref(&self, raw: &str, inside_types_pkg: bool) -> String {
        let name = &self.fun_names[raw];
        if inside_types_pkg {
            name.clone()
        } else {
            format!(
                "{}.{}",
                self.types_pkg.as_ref().expect("types package"),
                name
            )
        }
    }

    /// A value expression of the given type with defaulted contents.
    fn default_expr(&self, ty: &TypeRef, p: &IrProgram, inside_types_pkg: bool) -> String {
        match ty {
            TypeRef::Int => "0".into(),
            TypeRef::Float => "0.0".into(),
            TypeRef::Bool => "False".into(),
            TypeRef::Named(n) => {
                let t = p.defs.lookup_type(n).expect("resolved type");
                let c = &t.ctors[0];
                let fun = self.fun_ref(&c.name, inside_types_pkg);
                if c.arg_types.is_empty() {
                    fun
                } else {
                    let args: Vec<String> = c
                        .arg_types
                        .iter()
                        .map(|a| self.default_expr(a, p, inside_types_pkg))
                        .collect();
                    format!("{fun} ({})", args.join(", "))
                }
            }
        }
    }
}

fn reject_recursive_types(p: &IrProgram) -> Result<(), EmitError> {
    fn visit(
        p: &IrProgram,
        name: &str,
        stack: &mut Vec<String>,
        done: &mut BTreeSet<String>,
    ) -> Result<(), EmitError> {
        if done.contains(name) {
            return Ok(());
        }
        if stack.iter().any(|s| s == name) {
            return Err(EmitError::RecursiveType(name.to_string()));
        }
        stack.push(name.to_string());
        if let Some(t) = p.defs.lookup_type(name) {
            for c in &t.ctors {
                for a in &c.arg_types {
                    if let TypeRef::Named(n) = a {
                        visit(p, n, stack, done)?;
                    }
                }
            }
        }
        stack.pop();
        done.insert(name.to_string());
        Ok(())
    }
    let mut done = BTreeSet::new();
    for t in &p.types_package.types {
        visit(p, &t.name, &mut Vec::new(), &mut done)?;
    }
    Ok(())
}

fn build_symbols(p: &IrProgram, cfg: &EmitterConfig) -> Symbols {
    let prefix = |base: &str| -> String {
        if cfg.package_prefix.is_empty() {
            ada_words(base)
        } else {
            format!("{}_{}", ada_words(&cfg.package_prefix), ada_words(base))
        }
    };
    let mut pkg_scope = Scope::new(&[]);
    let has_defs = !p.types_package.types.is_empty() || !p.types_package.funs.is_empty();
    let types_pkg = if has_defs {
        Some(pkg_scope.mangle(&prefix(&format!("{}_types", p.system.name))))
    } else {
        None
    };

    // types package symbols share one scope
    let mut tscope = Scope::new(&[]);
    let mut type_names = BTreeMap::new();
    for t in &p.types_package.types {
        type_names.insert(t.name.clone(), tscope.mangle(&t.name));
    }
    let mut ctors = BTreeMap::new();
    for t in &p.types_package.types {
        for c in &t.ctors {
            let fun = tscope.mangle(&c.name);
            let is_fun = tscope.mangle(&format!("is_{}", c.name));
            let selectors = if c.arg_types.len() == 1 {
                vec![tscope.mangle(&format!("{}Sel", c.name))]
            } else {
                (1..=c.arg_types.len())
                    .map(|i| tscope.mangle(&format!("{}Sel{i}", c.name)))
                    .collect()
            };
            ctors.insert(
                c.name.clone(),
                CtorSyms {
                    fun,
                    is_fun,
                    selectors,
                    kind_literal: String::new(),
                    fields: Vec::new(),
                },
            );
        }
    }
    // private-part names live in their own scopes (enum literals, fields)
    for t in &p.types_package.types {
        let mut kscope = Scope::new(&[]);
        let mut fscope = Scope::new(&["Kind"]);
        for c in &t.ctors {
            let syms = ctors.get_mut(&c.name).expect("registered ctor");
            syms.kind_literal = kscope.mangle(&format!("K_{}", c.name));
            syms.fields = (1..=c.arg_types.len())
                .map(|i| fscope.mangle(&format!("F_{}_{i}", c.name)))
                .collect();
        }
    }
    let mut fun_names = BTreeMap::new();
    for f in &p.types_package.funs {
        fun_names.insert(f.name.clone(), tscope.mangle(&f.name));
    }
    // derived functions resolve through the same table
    for (name, syms) in &ctors {
        fun_names.insert(name.clone(), syms.fun.clone());
        fun_names.insert(format!("is_{name}"), syms.is_fun.clone());
        if syms.selectors.len() == 1 {
            fun_names.insert(format!("{name}Sel"), syms.selectors[0].clone());
        }
        for (i, sel) in syms.selectors.iter().enumerate() {
            fun_names.insert(format!("{name}Sel{}", i + 1), sel.clone());
        }
    }

    let comps = p
        .components
        .iter()
        .map(|c| {
            let pkg = pkg_scope.mangle(&prefix(&format!("{}_component", c.name)));
            let mut sscope = Scope::new(&[]);
            let states = c
                .states
                .iter()
                .map(|s| sscope.mangle(&format!("S_{s}")))
                .collect();
            let mut iscope = Scope::new(&["State", "Ports"]);
            let vars = c.vars.iter().map(|(n, _, _)| iscope.mangle(n)).collect();
            let mut pscope = Scope::new(&[]);
            let mut port_base = BTreeMap::new();
            for port in c.in_ports.iter().chain(&c.out_ports) {
                port_base.insert(port.name.clone(), pscope.mangle(&port.name));
            }
            CompSyms {
                pkg,
                states,
                vars,
                port_base,
            }
        })
        .collect();

    let sys_pkg = pkg_scope.mangle(&prefix(&format!("{}_system", p.system.name)));
    let mut sys_scope = Scope::new(&["Sys"]);
    let instance_fields = p
        .system
        .instances
        .iter()
        .map(|i| sys_scope.mangle(&format!("I_{}", i.path.replace('/', "_"))))
        .collect();
    let mut bscope = Scope::new(&["Sys"]);
    let mut boundary = BTreeMap::new();
    for (name, _) in p
        .system
        .open_in_ports
        .iter()
        .chain(&p.system.open_out_ports)
    {
        boundary.insert(name.clone(), bscope.mangle(name));
    }

    Symbols {
        types_pkg,
        type_names,
        ctors,
        fun_names,
        comps,
        sys_pkg,
        instance_fields,
        boundary,
    }
}

fn lit_ada(v: &Value, syms: &Symbols, inside_types_pkg: bool) -> String {
    match v {
        Value::Int(n) => {
            if *n < 0 {
                format!("({n})")
            } else {
                n.to_string()
            }
        }
        Value::Float(x) => {
            let s = format_float(*x);
            if s.starts_with('-') {
                format!("({s})")
            } else {
                s
            }
        }
        Value::Bool(b) => if *b { "True" } else { "False" }.to_string(),
        Value::Ctor(name, args) => {
            let fun = syms.fun_ref(name, inside_types_pkg);
            if args.is_empty() {
                fun
            } else {
                let rendered: Vec<String> = args
                    .iter()
                    .map(|a| lit_ada(a, syms, inside_types_pkg))
                    .collect();
                format!("{fun} ({})", rendered.join(", "))
            }
        }
    }
}

struct ExprCtx<'a> {
    syms: &'a Symbols,
    vars: &'a BTreeMap<String, String>,
    inside_types_pkg: bool,
}

// Ada precedence classes: 1 logical, 2 relational, 3 adding,
// 4 multiplying, 5 primary.
fn ada_expr(e: &Expr, ctx: &ExprCtx) -> (String, u8) {
    let wrap = |(s, lvl): (String, u8), min: u8| -> String {
        if lvl < min {
            format!("({s})")
        } else {
            s
        }
    };
    match e {
        Expr::Literal(v) => (lit_ada(v, ctx.syms, ctx.inside_types_pkg), 5),
        Expr::Var(name) => (
            ctx.vars
                .get(name)
                .unwrap_or_else(|| panic!("unmapped variable `{name}`"))
                .clone(),
            5,
        ),
        Expr::Call(name, args) | Expr::Ctor(name, args) => {
            let fun = ctx.syms.fun_ref(name, ctx.inside_types_pkg);
            if args.is_empty() {
                (fun, 5)
            } else {
                let rendered: Vec<String> = args.iter().map(|a| ada_expr(a, ctx).0).collect();
                (format!("{fun} ({})", rendered.join(", ")), 5)
            }
        }
        Expr::Unary(UnOp::Neg, a) => {
            let s = wrap(ada_expr(a, ctx), 4);
            (format!("(-{s})"), 5)
        }
        Expr::Unary(UnOp::Not, a) => {
            let s = wrap(ada_expr(a, ctx), 5);
            (format!("(not {s})"), 5)
        }
        Expr::Binary(op, a, b) => {
            let (sym, lvl) = match op {
                BinOp::Or => ("or else", 1),
                BinOp::And => ("and then", 1),
                BinOp::Eq => ("=", 2),
                BinOp::Ne => ("/=", 2),
                BinOp::Lt => ("<", 2),
                BinOp::Le => ("<=", 2),
                BinOp::Gt => (">", 2),
                BinOp::Ge => (">=", 2),
                BinOp::Add => ("+", 3),
                BinOp::Sub => ("-", 3),
                BinOp::Mul => ("*", 4),
                BinOp::Div => ("/", 4),
                BinOp::Rem => ("rem", 4),
            };
            let left = wrap(ada_expr(a, ctx), lvl + 1 - u8::from(lvl == 3 || lvl == 4));
            let right = wrap(ada_expr(b, ctx), lvl + 1);
            (format!("{left} {sym} {right}"), lvl)
        }
        Expr::If(c, t, f) => {
            let cs = ada_expr(c, ctx).0;
            let ts = ada_expr(t, ctx).0;
            let fs = ada_expr(f, ctx).0;
            (format!("(if {cs} then {ts} else {fs})"), 5)
        }
    }
}

fn render_expr(e: &Expr, ctx: &ExprCtx) -> String {
    ada_expr(e, ctx).0
}

/// Flattens a pattern into (conjunct tests, variable bindings) against a
/// value expression.
#[allow(clippy::too_many_arguments)]
fn pattern_tests(
    pat: &Pattern,
    value: &str,
    syms: &Symbols,
    inside_types_pkg: bool,
    tests: &mut Vec<String>,
    binds: &mut Vec<(String, String, TypeRef)>,
    ty: &TypeRef,
    p: &IrProgram,
) {
    match pat {
        Pattern::Wildcard => {}
        Pattern::Var(name) => binds.push((name.clone(), value.to_string(), ty.clone())),
        Pattern::Literal(v) => {
            tests.push(format!("{value} = {}", lit_ada(v, syms, inside_types_pkg)))
        }
        Pattern::Ctor(name, subs) => {
            let cs = &syms.ctors[name];
            let is_fun = syms.fun_ref(&format!("is_{name}"), inside_types_pkg);
            tests.push(format!("{is_fun} ({value})"));
            let (_, ctor) = p.defs.lookup_ctor(name).expect("resolved ctor");
            for (i, sub) in subs.iter().enumerate() {
                let sel_raw = if cs.selectors.len() == 1 {
                    format!("{name}Sel")
                } else {
                    format!("{name}Sel{}", i + 1)
                };
                let sel = syms.fun_ref(&sel_raw, inside_types_pkg);
                let inner = format!("{sel} ({value})");
                pattern_tests(
                    sub,
                    &inner,
                    syms,
                    inside_types_pkg,
                    tests,
                    binds,
                    &ctor.arg_types[i],
                    p,
                );
            }
        }
    }
}

fn emit_types_package(p: &IrProgram, syms: &Symbols, files: &mut Vec<(String, String)>) {
    let Some(pkg) = &syms.types_pkg else {
        return;
    };
    let mut spec = String::new();
    let mut body = String::new();
    let w = &mut spec;
    let _ = writeln!(w, "package {pkg} is");
    for t in &p.types_package.types {
        let tn = &syms.type_names[&t.name];
        let _ = writeln!(w, "\n   type {tn} is private;");
    }
    for t in &p.types_package.types {
        let tn = &syms.type_names[&t.name];
        let _ = writeln!(w);
        for c in &t.ctors {
            let cs = &syms.ctors[&c.name];
            if c.arg_types.is_empty() {
                let _ = writeln!(w, "   function {} return {tn};", cs.fun);
            } else {
                let params: Vec<String> = c
                    .arg_types
                    .iter()
                    .enumerate()
                    .map(|(i, a)| format!("A{} : {}", i + 1, syms.ada_type(a, true)))
                    .collect();
                let _ = writeln!(
                    w,
                    "   function {} ({}) return {tn};",
                    cs.fun,
                    params.join("; ")
                );
            }
        }
        for c in &t.ctors {
            let cs = &syms.ctors[&c.name];
            let _ = writeln!(w, "   function {} (V : {tn}) return Boolean;", cs.is_fun);
        }
        for c in &t.ctors {
            let cs = &syms.ctors[&c.name];
            for (i, sel) in cs.selectors.iter().enumerate() {
                let _ = writeln!(
                    w,
                    "   function {sel} (V : {tn}) return {};",
                    syms.ada_type(&c.arg_types[i], true)
                );
            }
        }
    }
    if !p.types_package.funs.is_empty() {
        let _ = writeln!(w);
        for f in &p.types_package.funs {
            let _ = writeln!(w, "   {};", fun_signature(f, syms));
        }
    }
    let _ = writeln!(w, "\nprivate");
    for t in &p.types_package.types {
        let tn = &syms.type_names[&t.name];
        let kind_ty = format!("{tn}_Kind");
        let literals: Vec<String> = t
            .ctors
            .iter()
            .map(|c| syms.ctors[&c.name].kind_literal.clone())
            .collect();
        let _ = writeln!(w, "\n   type {kind_ty} is ({});", literals.join(", "));
        let _ = writeln!(w, "\n   type {tn} is record");
        let first_kind = &syms.ctors[&t.ctors[0].name].kind_literal;
        let _ = writeln!(w, "      Kind : {kind_ty} := {first_kind};");
        for c in &t.ctors {
            let cs = &syms.ctors[&c.name];
            for (i, field) in cs.fields.iter().enumerate() {
                let _ = writeln!(
                    w,
                    "      {field} : {} := {};",
                    syms.ada_type(&c.arg_types[i], true),
                    syms.default_expr(&c.arg_types[i], p, true)
                );
            }
        }
        let _ = writeln!(w, "   end record;");
    }
    let _ = writeln!(w, "\nend {pkg};");

    let w = &mut body;
    let _ = writeln!(w, "package body {pkg} is");
    for t in &p.types_package.types {
        let tn = &syms.type_names[&t.name];
        let all_fields: Vec<String> = t
            .ctors
            .iter()
            .flat_map(|c| syms.ctors[&c.name].fields.clone())
            .collect();
        for c in &t.ctors {
            let cs = &syms.ctors[&c.name];
            let _ = writeln!(w);
            if c.arg_types.is_empty() {
                let _ = writeln!(w, "   function {} return {tn} is", cs.fun);
            } else {
                let params: Vec<String> = c
                    .arg_types
                    .iter()
                    .enumerate()
                    .map(|(i, a)| format!("A{} : {}", i + 1, syms.ada_type(a, true)))
                    .collect();
                let _ = writeln!(
                    w,
                    "   function {} ({}) return {tn} is",
                    cs.fun,
                    params.join("; ")
                );
            }
            let _ = writeln!(w, "   begin");
            let mut parts = vec![format!("Kind => {}", cs.kind_literal)];
            for (i, field) in cs.fields.iter().enumerate() {
                parts.push(format!("{field} => A{}", i + 1));
            }
            if all_fields.len() > cs.fields.len() {
                parts.push("others => <>".to_string());
            }
            let _ = writeln!(w, "      return ({});", parts.join(", "));
            let _ = writeln!(w, "   end {};", cs.fun);
        }
        for c in &t.ctors {
            let cs = &syms.ctors[&c.name];
            let _ = writeln!(w);
            let _ = writeln!(w, "   function {} (V : {tn}) return Boolean is", cs.is_fun);
            let _ = writeln!(w, "   begin");
            let _ = writeln!(w, "      return V.Kind = {};", cs.kind_literal);
            let _ = writeln!(w, "   end {};", cs.is_fun);
        }
        for c in &t.ctors {
            let cs = &syms.ctors[&c.name];
            for (i, sel) in cs.selectors.iter().enumerate() {
                let _ = writeln!(w);
                let _ = writeln!(
                    w,
                    "   function {sel} (V : {tn}) return {} is",
                    syms.ada_type(&c.arg_types[i], true)
                );
                let _ = writeln!(w, "   begin");
                // partial selector: the stored field is returned as-is;
                // calls on another constructor read its default
                let _ = writeln!(w, "      return V.{};", cs.fields[i]);
                let _ = writeln!(w, "   end {sel};");
            }
        }
    }
    for f in &p.types_package.funs {
        let _ = writeln!(w);
        emit_user_fun(f, p, syms, w);
    }
    let _ = writeln!(w, "\nend {pkg};");

    files.push((format!("{}.ads", pkg.to_ascii_lowercase()), spec));
    files.push((format!("{}.adb", pkg.to_ascii_lowercase()), body));
}

/// Parameter names: the shared pattern-variable name when every equation
/// agrees on one, positional otherwise.
fn fun_param_names(f: &crate::dtd::FuncDef, scope: &mut Scope) -> Vec<String> {
    (0..f.param_types.len())
        .map(|i| {
            let mut name: Option<&str> = None;
            let mut ok = true;
            for eq in &f.equations {
                match &eq.patterns[i] {
                    Pattern::Var(v) => match name {
                        None => name = Some(v),
                        Some(n) if n == v => {}
                        _ => ok = false,
                    },
                    _ => ok = false,
                }
            }
            match name {
                Some(n) if ok => scope.mangle(n),
                _ => scope.mangle(&format!("P{}", i + 1)),
            }
        })
        .collect()
}

fn fun_signature(f: &crate::dtd::FuncDef, syms: &Symbols) -> String {
    let name = &syms.fun_names[&f.name];
    let ret = syms.ada_type(&f.return_type, true);
    if f.param_types.is_empty() {
        format!("function {name} return {ret}")
    } else {
        let mut scope = Scope::new(&["V"]);
        let params = fun_param_names(f, &mut scope);
        let list: Vec<String> = params
            .iter()
            .zip(&f.param_types)
            .map(|(n, t)| format!("{n} : {}", syms.ada_type(t, true)))
            .collect();
        format!("function {name} ({}) return {ret}", list.join("; "))
    }
}

fn emit_user_fun(f: &crate::dtd::FuncDef, p: &IrProgram, syms: &Symbols, w: &mut String) {
    let name = &syms.fun_names[&f.name];
    let _ = writeln!(w, "   {} is", fun_signature(f, syms));
    let _ = writeln!(w, "   begin");
    let mut scope = Scope::new(&["V"]);
    let params = fun_param_names(f, &mut scope);
    let mut unconditional = false;
    for eq in &f.equations {
        let mut tests: Vec<String> = Vec::new();
        let mut binds: Vec<(String, String, TypeRef)> = Vec::new();
        for (i, pat) in eq.patterns.iter().enumerate() {
            pattern_tests(
                pat,
                &params[i],
                syms,
                true,
                &mut tests,
                &mut binds,
                &f.param_types[i],
                p,
            );
        }
        let vars: BTreeMap<String, String> = binds
            .into_iter()
            .map(|(raw, expr, _)| (raw, expr))
            .collect();
        let ctx = ExprCtx {
            syms,
            vars: &vars,
            inside_types_pkg: true,
        };
        let body = render_expr(&eq.body, &ctx);
        if tests.is_empty() {
            let _ = writeln!(w, "      return {body};");
            unconditional = true;
            break;
        }
        let _ = writeln!(w, "      if {} then", tests.join(" and then "));
        let _ = writeln!(w, "         return {body};");
        let _ = writeln!(w, "      end if;");
    }
    if !unconditional {
        // unreachable for well-typed total calls; keeps the function total
        let _ = writeln!(
            w,
            "      return {};",
            syms.default_expr(&f.return_type, p, true)
        );
    }
    let _ = writeln!(w, "   end {name};");
}

struct BlockPieces {
    /// All conjuncts after the state test: presence, match, then guard.
    tests: Vec<String>,
    guard: Option<String>,
    bind_decls: Vec<String>,
    writes: Vec<String>,
}

fn block_pieces(
    block: &TransitionBlock,
    comp_idx: usize,
    p: &IrProgram,
    syms: &Symbols,
) -> BlockPieces {
    let comp = &p.components[comp_idx];
    let cs = &syms.comps[comp_idx];
    let port_value = |port: &str| format!("Self.Ports.{}_Value", cs.port_base[port]);
    let port_present = |port: &str| format!("Self.Ports.{}_Present", cs.port_base[port]);

    let mut tests = Vec::new();
    let mut binds: Vec<(String, String, TypeRef)> = Vec::new();
    for (port, pat) in &block.pattern_tests {
        tests.push(port_present(port));
        let ty = comp
            .in_ports
            .iter()
            .find(|ip| ip.name == *port)
            .map(|ip| ip.ty.clone())
            .expect("checked port");
        pattern_tests(
            pat,
            &port_value(port),
            syms,
            false,
            &mut tests,
            &mut binds,
            &ty,
            p,
        );
    }

    let mut local_scope = Scope::new(&["Self", "Fired"]);
    let mut vars: BTreeMap<String, String> = BTreeMap::new();
    for ((raw, _, _), field) in comp.vars.iter().zip(&cs.vars) {
        vars.insert(raw.clone(), format!("Self.{field}"));
    }
    let mut bind_decls = Vec::new();
    for (raw, expr, ty) in &binds {
        let local = local_scope.mangle(raw);
        bind_decls.push(format!(
            "{local} : constant {} := {expr};",
            syms.ada_type(ty, false)
        ));
        vars.insert(raw.clone(), local);
    }

    let ctx = ExprCtx {
        syms,
        vars: &vars,
        inside_types_pkg: false,
    };
    let guard = block.guard.as_ref().map(|g| render_expr(g, &ctx));

    let mut writes = Vec::new();
    for (port, expr) in &block.outputs {
        writes.push(format!(
            "{} := {};",
            port_value(port),
            render_expr(expr, &ctx)
        ));
        writes.push(format!("{} := True;", port_present(port)));
    }
    for (var, expr) in &block.assignments {
        let vi = comp
            .vars
            .iter()
            .position(|(n, _, _)| n == var)
            .expect("checked");
        writes.push(format!(
            "Self.{} := {};",
            cs.vars[vi],
            render_expr(expr, &ctx)
        ));
    }
    writes.push(format!("Self.State := {};", cs.states[block.target_state]));
    writes.push("Fired := True;".to_string());

    BlockPieces {
        tests,
        guard,
        bind_decls,
        writes,
    }
}

fn write_block_body(w: &mut String, pieces: &BlockPieces, base_indent: usize, condition: &str) {
    let pad = " ".repeat(base_indent);
    let _ = writeln!(w, "{pad}if {condition} then");
    let mut inner = base_indent + 3;
    if !pieces.bind_decls.is_empty() {
        let ipad = " ".repeat(inner);
        let _ = writeln!(w, "{ipad}declare");
        for d in &pieces.bind_decls {
            let _ = writeln!(w, "{ipad}   {d}");
        }
        let _ = writeln!(w, "{ipad}begin");
        inner += 3;
    }
    let gpad = " ".repeat(inner);
    if let Some(g) = &pieces.guard {
        let _ = writeln!(w, "{gpad}if {g} then");
        for s in &pieces.writes {
            let _ = writeln!(w, "{gpad}   {s}");
        }
        let _ = writeln!(w, "{gpad}end if;");
    } else {
        for s in &pieces.writes {
            let _ = writeln!(w, "{gpad}{s}");
        }
    }
    if !pieces.bind_decls.is_empty() {
        inner -= 3;
        let ipad = " ".repeat(inner);
        let _ = writeln!(w, "{ipad}end;");
    }
    let _ = writeln!(w, "{pad}end if;");
}

fn emit_component_package(
    comp_idx: usize,
    p: &IrProgram,
    syms: &Symbols,
    cfg: &EmitterConfig,
    files: &mut Vec<(String, String)>,
) {
    let comp = &p.components[comp_idx];
    let cs = &syms.comps[comp_idx];
    let pkg = &cs.pkg;
    let with_types = syms
        .types_pkg
        .as_ref()
        .map(|t| format!("with {t};\n\n"))
        .unwrap_or_default();

    let mut spec = String::new();
    let w = &mut spec;
    let _ = write!(w, "{with_types}");
    let _ = writeln!(w, "package {pkg} is");
    let _ = writeln!(w, "\n   type State_T is ({});", cs.states.join(", "));
    let _ = writeln!(w, "\n   type Ports_T is record");
    for port in comp.in_ports.iter().chain(&comp.out_ports) {
        let base = &cs.port_base[&port.name];
        let ty = syms.ada_type(&port.ty, false);
        match &port.ty {
            TypeRef::Named(_) => {
                let _ = writeln!(w, "      {base}_Value : {ty};");
            }
            _ => {
                let _ = writeln!(
                    w,
                    "      {base}_Value : {ty} := {};",
                    syms.default_expr(&port.ty, p, false)
                );
            }
        }
        let _ = writeln!(w, "      {base}_Present : Boolean := False;");
    }
    let _ = writeln!(w, "   end record;");
    let _ = writeln!(w, "\n   type Instance_T is record");
    let _ = writeln!(
        w,
        "      State : State_T := {};",
        cs.states[comp.init_state]
    );
    let no_vars = BTreeMap::new();
    for ((_, ty, init), field) in comp.vars.iter().zip(&cs.vars) {
        let ctx = ExprCtx {
            syms,
            vars: &no_vars,
            inside_types_pkg: false,
        };
        let _ = writeln!(
            w,
            "      {field} : {} := {};",
            syms.ada_type(ty, false),
            render_expr(init, &ctx)
        );
    }
    let _ = writeln!(w, "      Ports : Ports_T;");
    let _ = writeln!(w, "   end record;");
    let _ = writeln!(w, "\n   function Initial return Instance_T;");
    let _ = writeln!(
        w,
        "\n   procedure Do_Transition (Self : in out Instance_T);"
    );
    let _ = writeln!(w, "\nend {pkg};");

    let mut body = String::new();
    let w = &mut body;
    let _ = write!(w, "{with_types}");
    let _ = writeln!(w, "package body {pkg} is");
    let _ = writeln!(w, "\n   function Initial return Instance_T is");
    let _ = writeln!(w, "      Result : Instance_T;");
    let _ = writeln!(w, "   begin");
    let _ = writeln!(w, "      return Result;");
    let _ = writeln!(w, "   end Initial;");

    let pieces: Vec<BlockPieces> = comp
        .transitions
        .iter()
        .map(|b| block_pieces(b, comp_idx, p, syms))
        .collect();

    if cfg.helper_split {
        // one subprogram per transition and per state, dispatched from
        // Do_Transition, bounding every subprogram's decision count
        for (block, piece) in comp.transitions.iter().zip(&pieces) {
            let _ = writeln!(
                w,
                "\n   procedure Try_Transition_{} (Self : in out Instance_T; Fired : in out Boolean) is",
                block.index
            );
            let _ = writeln!(w, "   begin");
            let mut condition = vec!["(not Fired)".to_string()];
            condition.extend(piece.tests.iter().cloned());
            write_block_body(w, piece, 6, &condition.join(" and then "));
            let _ = writeln!(w, "   end Try_Transition_{};", block.index);
        }
        for (si, state) in cs.states.iter().enumerate() {
            let _ = writeln!(
                w,
                "\n   procedure State_{state} (Self : in out Instance_T; Fired : in out Boolean) is"
            );
            let _ = writeln!(w, "   begin");
            let mut any = false;
            for block in comp.transitions.iter().filter(|b| b.source_state == si) {
                let _ = writeln!(w, "      Try_Transition_{} (Self, Fired);", block.index);
                any = true;
            }
            if !any {
                let _ = writeln!(w, "      null;");
            }
            let _ = writeln!(w, "   end State_{state};");
        }
        let _ = writeln!(
            w,
            "\n   procedure Do_Transition (Self : in out Instance_T) is"
        );
        let _ = writeln!(w, "      Fired : Boolean := False;");
        let _ = writeln!(w, "   begin");
        let _ = writeln!(w, "      case Self.State is");
        for state in &cs.states {
            let _ = writeln!(w, "         when {state} => State_{state} (Self, Fired);");
        }
        let _ = writeln!(w, "      end case;");
        let _ = writeln!(w, "   end Do_Transition;");
    } else {
        let _ = writeln!(
            w,
            "\n   procedure Do_Transition (Self : in out Instance_T) is"
        );
        let _ = writeln!(w, "      Fired : Boolean := False;");
        let _ = writeln!(w, "   begin");
        for (block, piece) in comp.transitions.iter().zip(&pieces) {
            let mut condition = vec![
                "(not Fired)".to_string(),
                format!("Self.State = {}", cs.states[block.source_state]),
            ];
            condition.extend(piece.tests.iter().cloned());
            write_block_body(w, piece, 6, &condition.join(" and then "));
        }
        let _ = writeln!(w, "   end Do_Transition;");
    }
    let _ = writeln!(w, "\nend {pkg};");

    files.push((format!("{}.ads", pkg.to_ascii_lowercase()), spec));
    files.push((format!("{}.adb", pkg.to_ascii_lowercase()), body));
}

fn emit_system_package(
    p: &IrProgram,
    syms: &Symbols,
    cfg: &EmitterConfig,
    files: &mut Vec<(String, String)>,
) {
    let pkg = &syms.sys_pkg;
    let sys = &p.system;
    let mut withs: Vec<String> = Vec::new();
    if let Some(t) = &syms.types_pkg {
        withs.push(format!("with {t};"));
    }
    for cs in &syms.comps {
        withs.push(format!("with {};", cs.pkg));
    }
    let with_clause = if withs.is_empty() {
        String::new()
    } else {
        format!("{}\n\n", withs.join("\n"))
    };

    // parameter list of Do_Cycle: inputs then outputs, boundary order
    let mut params = vec!["Sys : in out System_T".to_string()];
    for (name, ty) in &sys.open_in_ports {
        let base = &syms.boundary[name];
        params.push(format!("{base}_Value : in {}", syms.ada_type(ty, false)));
        params.push(format!("{base}_Present : in Boolean"));
    }
    for (name, ty) in &sys.open_out_ports {
        let base = &syms.boundary[name];
        params.push(format!("{base}_Value : out {}", syms.ada_type(ty, false)));
        params.push(format!("{base}_Present : out Boolean"));
    }
    let param_text = params.join(";\n      ");

    let mut spec = String::new();
    let w = &mut spec;
    let _ = write!(w, "{with_clause}");
    let _ = writeln!(w, "package {pkg} is");
    let _ = writeln!(w, "\n   type System_T is record");
    for (inst, field) in sys.instances.iter().zip(&syms.instance_fields) {
        let _ = writeln!(
            w,
            "      {field} : {}.Instance_T;",
            syms.comps[inst.component].pkg
        );
    }
    for conn in sys.connections.iter().filter(|c| c.delayed) {
        let slot = conn.slot.expect("delayed slot");
        let ty = syms.ada_type(&conn.ty, false);
        match &conn.ty {
            TypeRef::Named(_) => {
                let _ = writeln!(w, "      B{slot}_Value : {ty};");
            }
            _ => {
                let _ = writeln!(
                    w,
                    "      B{slot}_Value : {ty} := {};",
                    syms.default_expr(&conn.ty, p, false)
                );
            }
        }
        let _ = writeln!(w, "      B{slot}_Present : Boolean := False;");
    }
    let _ = writeln!(w, "   end record;");
    let _ = writeln!(w, "\n   function Initial return System_T;");
    let _ = writeln!(w, "\n   procedure Do_Cycle\n     ({param_text});");
    let _ = writeln!(w, "\nend {pkg};");

    // statement groups of the cycle procedure
    let inst_field = |i: usize| format!("Sys.{}", syms.instance_fields[i]);
    let port_ref = |i: usize, port: &str, suffix: &str| {
        let base = &syms.comps[sys.instances[i].component].port_base[port];
        format!("{}.Ports.{base}_{suffix}", inst_field(i))
    };

    let mut clears: Vec<String> = Vec::new();
    for (i, inst) in sys.instances.iter().enumerate() {
        let comp = &p.components[inst.component];
        for port in comp.in_ports.iter().chain(&comp.out_ports) {
            clears.push(format!("{} := False;", port_ref(i, &port.name, "Present")));
        }
    }

    let mut delivers: Vec<String> = Vec::new();
    for conn in sys.connections.iter().filter(|c| c.delayed) {
        let slot = conn.slot.expect("delayed slot");
        let mut stmts: Vec<String> = Vec::new();
        match &conn.kind {
            IrConnKind::Channel { to, .. } => {
                stmts.push(format!(
                    "{} := Sys.B{slot}_Value;",
                    port_ref(to.0, &to.1, "Value")
                ));
                stmts.push(format!("{} := True;", port_ref(to.0, &to.1, "Present")));
            }
            IrConnKind::OpenIn { targets } => {
                for (inst, port) in targets {
                    stmts.push(format!(
                        "{} := Sys.B{slot}_Value;",
                        port_ref(*inst, port, "Value")
                    ));
                    stmts.push(format!("{} := True;", port_ref(*inst, port, "Present")));
                }
            }
            IrConnKind::OpenOut { .. } => {
                let base = &syms.boundary[&conn.endpoint];
                stmts.push(format!("{base}_Value := Sys.B{slot}_Value;"));
                stmts.push(format!("{base}_Present := True;"));
            }
        }
        stmts.push(format!("Sys.B{slot}_Present := False;"));
        delivers.push(guarded(&format!("Sys.B{slot}_Present"), &stmts, 6));
    }

    let mut accepts: Vec<String> = Vec::new();
    for conn in &sys.connections {
        let IrConnKind::OpenIn { targets } = &conn.kind else {
            continue;
        };
        let base = &syms.boundary[&conn.endpoint];
        let mut stmts: Vec<String> = Vec::new();
        if conn.delayed {
            let slot = conn.slot.expect("delayed slot");
            stmts.push(format!("Sys.B{slot}_Value := {base}_Value;"));
            stmts.push(format!("Sys.B{slot}_Present := True;"));
        } else {
            for (inst, port) in targets {
                stmts.push(format!(
                    "{} := {base}_Value;",
                    port_ref(*inst, port, "Value")
                ));
                stmts.push(format!("{} := True;", port_ref(*inst, port, "Present")));
            }
        }
        accepts.push(guarded(&format!("{base}_Present"), &stmts, 6));
    }

    // per instance, in execution order: transition call plus output copies
    let mut exec_steps: Vec<(usize, String, Vec<String>)> = Vec::new();
    for &i in &sys.exec_order {
        let call = format!(
            "{}.Do_Transition ({});",
            syms.comps[sys.instances[i].component].pkg,
            inst_field(i)
        );
        let mut copies: Vec<String> = Vec::new();
        for conn in &sys.connections {
            let (src, dest) = match &conn.kind {
                IrConnKind::Channel { from, to } => (from, Some(to)),
                IrConnKind::OpenOut { source } => (source, None),
                IrConnKind::OpenIn { .. } => continue,
            };
            if src.0 != i {
                continue;
            }
            let mut stmts: Vec<String> = Vec::new();
            if conn.delayed {
                let slot = conn.slot.expect("delayed slot");
                stmts.push(format!(
                    "Sys.B{slot}_Value := {};",
                    port_ref(i, &src.1, "Value")
                ));
                stmts.push(format!("Sys.B{slot}_Present := True;"));
            } else if let Some(to) = dest {
                stmts.push(format!(
                    "{} := {};",
                    port_ref(to.0, &to.1, "Value"),
                    port_ref(i, &src.1, "Value")
                ));
                stmts.push(format!("{} := True;", port_ref(to.0, &to.1, "Present")));
            } else {
                let base = &syms.boundary[&conn.endpoint];
                stmts.push(format!("{base}_Value := {};", port_ref(i, &src.1, "Value")));
                stmts.push(format!("{base}_Present := True;"));
            }
            copies.push(guarded(&port_ref(i, &src.1, "Present"), &stmts, 6));
        }
        exec_steps.push((i, call, copies));
    }

    let mut out_defaults: Vec<String> = Vec::new();
    for (name, ty) in &sys.open_out_ports {
        let base = &syms.boundary[name];
        out_defaults.push(format!(
            "      {base}_Value := {};\n      {base}_Present := False;\n",
            syms.default_expr(ty, p, false)
        ));
    }

    let mut body = String::new();
    let w = &mut body;
    let _ = write!(w, "{with_clause}");
    let _ = writeln!(w, "package body {pkg} is");
    let _ = writeln!(w, "\n   function Initial return System_T is");
    let _ = writeln!(w, "      Result : System_T;");
    let _ = writeln!(w, "   begin");
    let _ = writeln!(w, "      return Result;");
    let _ = writeln!(w, "   end Initial;");

    if cfg.helper_split {
        let _ = writeln!(w, "\n   procedure Clear_Ports (Sys : in out System_T) is");
        let _ = writeln!(w, "   begin");
        if clears.is_empty() {
            let _ = writeln!(w, "      null;");
        }
        for c in &clears {
            let _ = writeln!(w, "      {c}");
        }
        let _ = writeln!(w, "   end Clear_Ports;");
        for (i, _, copies) in &exec_steps {
            let field = &syms.instance_fields[*i];
            let _ = writeln!(
                w,
                "\n   procedure Copy_From_{field}\n     ({param_text_out}) is",
                param_text_out = copy_params(&params)
            );
            let _ = writeln!(w, "   begin");
            if copies.is_empty() {
                let _ = writeln!(w, "      null;");
            }
            for c in copies {
                let _ = write!(w, "{c}");
            }
            let _ = writeln!(w, "   end Copy_From_{field};");
        }
    }

    let _ = writeln!(w, "\n   procedure Do_Cycle\n     ({param_text}) is");
    let _ = writeln!(w, "   begin");
    for d in &out_defaults {
        let _ = write!(w, "{d}");
    }
    if cfg.helper_split {
        let _ = writeln!(w, "      Clear_Ports (Sys);");
    } else {
        for c in &clears {
            let _ = writeln!(w, "      {c}");
        }
    }
    for d in &delivers {
        let _ = write!(w, "{d}");
    }
    for a in &accepts {
        let _ = write!(w, "{a}");
    }
    for (i, call, copies) in &exec_steps {
        let _ = writeln!(w, "      {call}");
        if cfg.helper_split {
            let field = &syms.instance_fields[*i];
            let _ = writeln!(w, "      Copy_From_{field} ({});", copy_args(&params));
        } else {
            for c in copies {
                let _ = write!(w, "{c}");
            }
        }
    }
    let _ = writeln!(w, "   end Do_Cycle;");
    let _ = writeln!(w, "\nend {pkg};");

    files.push((format!("{}.ads", pkg.to_ascii_lowercase()), spec));
    files.push((format!("{}.adb", pkg.to_ascii_lowercase()), body));
}

/// The copy helpers take the same parameter profile as Do_Cycle, with the
/// boundary outputs as `in out` so a helper that does not touch them leaves
/// the caller's values intact.
fn copy_params(params: &[String]) -> String {
    params
        .iter()
        .map(|p| p.replace(" : out ", " : in out "))
        .collect::<Vec<_>>()
        .join(";\n      ")
}

fn copy_args(params: &[String]) -> String {
    params
        .iter()
        .map(|p| p.split(' ').next().expect("parameter name").to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn guarded(cond: &str, stmts: &[String], indent: usize) -> String {
    let pad = " ".repeat(indent);
    let mut out = format!("{pad}if {cond} then\n");
    for s in stmts {
        out.push_str(&format!("{pad}   {s}\n"));
    }
    out.push_str(&format!("{pad}end if;\n"));
    out
}

/// Emits the full program: `<package>.ads` and `<package>.adb` per package,
/// deterministically ordered and byte-stable for identical inputs.
pub fn emit_ada(p: &IrProgram, cfg: &EmitterConfig) -> Result<Vec<(String, String)>, EmitError> {
    reject_recursive_types(p)?;
    let syms = build_symbols(p, cfg);
    let mut files = Vec::new();
    emit_types_package(p, &syms, &mut files);
    for i in 0..p.components.len() {
        emit_component_package(i, p, &syms, cfg, &mut files);
    }
    emit_system_package(p, &syms, cfg, &mut files);
    Ok(files)
}

pub(crate) fn symbols_for_harness(p: &IrProgram, cfg: &EmitterConfig) -> HarnessSymbols {
    let syms = build_symbols(p, cfg);
    HarnessSymbols { syms }
}

/// Thin wrapper handing the symbol tables to the harness generators without
/// exposing the internals module-wide.
pub(crate) struct HarnessSymbols {
    pub(crate) syms: Symbols,
}

impl HarnessSymbols {
    pub(crate) fn types_pkg(&self) -> Option<&str> {
        self.syms.types_pkg.as_deref()
    }

    pub(crate) fn comp_pkg(&self, idx: usize) -> &str {
        &self.syms.comps[idx].pkg
    }

    pub(crate) fn port_base(&self, idx: usize, port: &str) -> &str {
        &self.syms.comps[idx].port_base[port]
    }

    pub(crate) fn ada_type(&self, ty: &TypeRef) -> String {
        self.syms.ada_type(ty, false)
    }

    pub(crate) fn default_expr(&self, ty: &TypeRef, p: &IrProgram) -> String {
        self.syms.default_expr(ty, p, false)
    }

    pub(crate) fn lit(&self, v: &Value) -> String {
        lit_ada(v, &self.syms, false)
    }

    pub(crate) fn type_name(&self, raw: &str) -> &str {
        &self.syms.type_names[raw]
    }

    pub(crate) fn fun_ref(&self, raw: &str) -> String {
        self.syms.fun_ref(raw, false)
    }
}
