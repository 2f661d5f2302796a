//! Canonical text rendering of models, definitions, expressions, and
//! patterns. Parsing the rendered text reproduces the abstract structure.

use std::fmt::Write;

use crate::dtd::{BinOp, Defs, Expr, FuncDef, Pattern, TypeDef, UnOp};
use crate::model::{ComponentBody, ComponentDef, Dir, Model, PortKind};

fn prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
    }
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    match e {
        Expr::Literal(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Var(n) => out.push_str(n),
        Expr::Call(n, args) | Expr::Ctor(n, args) => {
            out.push_str(n);
            if !(matches!(e, Expr::Ctor(..)) && args.is_empty()) {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_expr(out, a, 0);
                }
                out.push(')');
            }
        }
        Expr::Unary(op, a) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            write_expr(out, a, 6);
        }
        Expr::Binary(op, a, b) => {
            let p = prec(*op);
            let parens = p < min;
            if parens {
                out.push('(');
            }
            // comparisons are non-associative: parenthesize nested ones
            let (lmin, rmin) = if p == 3 { (4, 4) } else { (p, p + 1) };
            write_expr(out, a, lmin);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, rmin);
            if parens {
                out.push(')');
            }
        }
        Expr::If(c, t, f) => {
            out.push_str("(if ");
            write_expr(out, c, 0);
            out.push_str(" then ");
            write_expr(out, t, 0);
            out.push_str(" else ");
            write_expr(out, f, 0);
            out.push(')');
        }
    }
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

pub fn pretty_pattern(p: &Pattern) -> String {
    match p {
        Pattern::Wildcard => "_".to_string(),
        Pattern::Var(n) => n.clone(),
        Pattern::Literal(v) => v.to_string(),
        Pattern::Ctor(n, subs) => {
            if subs.is_empty() {
                n.clone()
            } else {
                let inner: Vec<String> = subs.iter().map(pretty_pattern).collect();
                format!("{n}({})", inner.join(", "))
            }
        }
    }
}

fn write_type_def(out: &mut String, t: &TypeDef) {
    let _ = write!(out, "data {} = ", t.name);
    for (i, c) in t.ctors.iter().enumerate() {
        if i > 0 {
            out.push_str(" | ");
        }
        out.push_str(&c.name);
        if !c.arg_types.is_empty() {
            let args: Vec<String> = c.arg_types.iter().map(|a| a.to_string()).collect();
            let _ = write!(out, "({})", args.join(", "));
        }
    }
    out.push_str(";\n");
}

fn write_fun_def(out: &mut String, f: &FuncDef) {
    for (i, eq) in f.equations.iter().enumerate() {
        if i == 0 {
            let _ = write!(out, "fun {}(", f.name);
        } else {
            let _ = write!(out, "  | {}(", f.name);
        }
        let pats: Vec<String> = eq.patterns.iter().map(pretty_pattern).collect();
        let _ = write!(out, "{}) = {}", pats.join(", "), pretty_expr(&eq.body));
        if i + 1 == f.equations.len() {
            out.push_str(";\n");
        } else {
            out.push('\n');
        }
    }
}

pub fn pretty_defs(defs: &Defs) -> String {
    let mut out = String::new();
    for t in &defs.types {
        write_type_def(&mut out, t);
    }
    for f in &defs.funs {
        write_fun_def(&mut out, f);
    }
    out
}

fn write_component(out: &mut String, c: &ComponentDef, keyword: &str) {
    let _ = writeln!(out, "{keyword} {} {{", c.name);
    for p in &c.ports {
        let dir = match p.dir {
            Dir::In => "in",
            Dir::Out => "out",
        };
        let kind = match p.kind {
            PortKind::Immediate => "immediate",
            PortKind::Delayed => "delayed",
        };
        let _ = writeln!(out, "  port {dir} {} : {} {kind};", p.name, p.ty);
    }
    match &c.body {
        ComponentBody::Composite { subs, channels } => {
            for s in subs {
                let _ = writeln!(out, "  sub {} : {};", s.name, s.ty);
            }
            for ch in channels {
                let ep = |e: &crate::model::Endpoint| match e {
                    crate::model::Endpoint::Own(p) => p.clone(),
                    crate::model::Endpoint::Sub(s, p) => format!("{s}.{p}"),
                };
                let _ = writeln!(
                    out,
                    "  channel {} : {} from {} to {};",
                    ch.name,
                    ch.ty,
                    ep(&ch.from),
                    ep(&ch.to)
                );
            }
        }
        ComponentBody::Atomic(a) => {
            let _ = writeln!(out, "  automaton {{");
            if !a.states.is_empty() {
                let _ = writeln!(out, "    state {};", a.states.join(", "));
            }
            if let Some(init) = &a.init {
                let _ = writeln!(out, "    init {init};");
            }
            for v in &a.vars {
                let _ = writeln!(
                    out,
                    "    var {} : {} = {};",
                    v.name,
                    v.ty,
                    pretty_expr(&v.init)
                );
            }
            for t in &a.transitions {
                let _ = writeln!(out, "    trans {} -> {} {{", t.src, t.dst);
                for (port, pat) in &t.inputs {
                    let _ = writeln!(out, "      in: {port}?{};", pretty_pattern(pat));
                }
                if let Some(g) = &t.guard {
                    let _ = writeln!(out, "      guard: {};", pretty_expr(g));
                }
                for (port, e) in &t.outputs {
                    let _ = writeln!(out, "      out: {port}!{};", pretty_expr(e));
                }
                for (var, e) in &t.assigns {
                    let _ = writeln!(out, "      set: {var} := {};", pretty_expr(e));
                }
                let _ = writeln!(out, "    }}");
            }
            let _ = writeln!(out, "  }}");
        }
    }
    let _ = writeln!(out, "}}");
}

/// Renders a model as canonical text: merged definitions first, then the
/// component types, then the system block.
pub fn pretty_model(m: &Model) -> String {
    let mut out = pretty_defs(&m.defs);
    if !out.is_empty() {
        out.push('\n');
    }
    for c in &m.components {
        if c.name != m.name {
            write_component(&mut out, c, "component");
            out.push('\n');
        }
    }
    write_component(&mut out, m.system(), "system");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model_str;

    const SAMPLE: &str = "\
data Signal = Faulty | Ok;
fun flip(Faulty) = Ok | flip(Ok) = Faulty;
system Driver {
  port in s : Signal immediate;
  port out act : Bool immediate;
  automaton {
    state Active, Deactivated;
    init Active;
    var n : Int = 0;
    trans Active -> Active { in: s?Ok; set: n := 0; out: act!true; }
    trans Active -> Deactivated { in: s?Faulty; guard: n >= 2; set: n := 0; out: act!false; }
  }
}
";

    #[test]
    fn pretty_parse_reaches_a_fixed_point() {
        let m1 = parse_model_str(SAMPLE, "t").unwrap();
        let p1 = pretty_model(&m1);
        let m2 = parse_model_str(&p1, "t").unwrap();
        let p2 = pretty_model(&m2);
        assert_eq!(p1, p2);
    }

    #[test]
    fn bundled_models_reach_a_pretty_parse_fixed_point() {
        for src in [
            crate::les::LANE_DRIVER_MODEL,
            crate::les::VOTER_PLANE_MODEL,
            crate::les::CONTROL_LAW_MODEL,
        ] {
            let m1 = crate::les::parse_les_model(src, "t").unwrap();
            let p1 = pretty_model(&m1);
            let m2 = parse_model_str(&p1, "t").unwrap();
            assert_eq!(p1, pretty_model(&m2));
        }
    }

    #[test]
    fn expressions_print_with_minimal_parentheses() {
        let m = parse_model_str(
            "system S { port out o : Int immediate; automaton { state Q; init Q; trans Q -> Q { out: o!(1 + 2) * 3 - 4; } } }",
            "t",
        )
        .unwrap();
        let a = m.system().automaton().unwrap();
        assert_eq!(
            pretty_expr(&a.transitions[0].outputs[0].1),
            "(1 + 2) * 3 - 4"
        );
    }

    #[test]
    fn if_expressions_parenthesize_for_reparse() {
        let m = parse_model_str(
            "system S { port out o : Int immediate; automaton { state Q; init Q; trans Q -> Q { out: o!(if true then 1 else 2) + 3; } } }",
            "t",
        )
        .unwrap();
        let a = m.system().automaton().unwrap();
        assert_eq!(
            pretty_expr(&a.transitions[0].outputs[0].1),
            "(if true then 1 else 2) + 3"
        );
    }
}
