//! Name resolution and monomorphic type checking for definition sets, plus
//! the ground expression checker used for guards, outputs, and initializers.
//!
//! Function signatures carry no annotations in the textual form; they are
//! inferred by unification over the atomic type universe. Numeric positions
//! that stay unconstrained default to Float; anything else unconstrained is
//! rejected.

use std::collections::BTreeMap;

use crate::diag::{Diagnostics, Pos};
use crate::dtd::{
    derive_functions, BinOp, Defs, Expr, FuncDef, Pattern, TypeDef, TypeRef, UnOp, Value,
};

/// Variable typing environment for ground expression checking.
pub type TypeEnv = BTreeMap<String, TypeRef>;

#[derive(Debug, Clone, PartialEq)]
enum Ty {
    Ground(TypeRef),
    Var(usize),
}

struct Unifier {
    // union-find parent links; a root may carry a ground binding
    parent: Vec<usize>,
    bound: Vec<Option<TypeRef>>,
    numeric: Vec<usize>, // roots that must resolve to Int or Float
}

impl Unifier {
    fn new() -> Self {
        Unifier {
            parent: Vec::new(),
            bound: Vec::new(),
            numeric: Vec::new(),
        }
    }

    fn fresh(&mut self) -> Ty {
        let id = self.parent.len();
        self.parent.push(id);
        self.bound.push(None);
        Ty::Var(id)
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn unify(&mut self, a: &Ty, b: &Ty) -> Result<(), String> {
        match (a, b) {
            (Ty::Ground(x), Ty::Ground(y)) => {
                if x == y {
                    Ok(())
                } else {
                    Err(format!("type mismatch: {x} vs {y}"))
                }
            }
            (Ty::Var(v), Ty::Ground(g)) | (Ty::Ground(g), Ty::Var(v)) => {
                let r = self.find(*v);
                match &self.bound[r] {
                    Some(existing) => {
                        if existing == g {
                            Ok(())
                        } else {
                            Err(format!("type mismatch: {existing} vs {g}"))
                        }
                    }
                    None => {
                        self.bound[r] = Some(g.clone());
                        Ok(())
                    }
                }
            }
            (Ty::Var(v), Ty::Var(w)) => {
                let rv = self.find(*v);
                let rw = self.find(*w);
                if rv == rw {
                    return Ok(());
                }
                match (self.bound[rv].clone(), self.bound[rw].clone()) {
                    (Some(x), Some(y)) if x != y => Err(format!("type mismatch: {x} vs {y}")),
                    (bx, by) => {
                        self.parent[rw] = rv;
                        self.bound[rv] = bx.or(by);
                        Ok(())
                    }
                }
            }
        }
    }

    fn mark_numeric(&mut self, t: &Ty) {
        if let Ty::Var(v) = t {
            let r = self.find(*v);
            self.numeric.push(r);
        }
    }

    /// Resolves a type after solving. Unbound numeric positions default to
    /// Float; unbound non-numeric positions return None.
    fn resolve(&mut self, t: &Ty) -> Option<TypeRef> {
        match t {
            Ty::Ground(g) => Some(g.clone()),
            Ty::Var(v) => {
                let r = self.find(*v);
                if let Some(g) = &self.bound[r] {
                    return Some(g.clone());
                }
                let numeric_roots: Vec<usize> = self
                    .numeric
                    .clone()
                    .into_iter()
                    .map(|n| self.find(n))
                    .collect();
                if numeric_roots.contains(&r) {
                    self.bound[r] = Some(TypeRef::Float);
                    Some(TypeRef::Float)
                } else {
                    None
                }
            }
        }
    }

    fn check_numeric_ground(&mut self) -> Result<(), String> {
        for v in self.numeric.clone() {
            let r = self.find(v);
            match &self.bound[r] {
                Some(TypeRef::Int) | Some(TypeRef::Float) | None => {}
                Some(other) => {
                    return Err(format!("expected Int or Float, found {other}"));
                }
            }
        }
        Ok(())
    }
}

/// Rewrites identifiers that name constructors into constructor nodes.
pub fn resolve_expr(e: Expr, defs: &Defs) -> Expr {
    match e {
        Expr::Var(name) => {
            if defs.is_ctor(&name) {
                Expr::Ctor(name, Vec::new())
            } else {
                Expr::Var(name)
            }
        }
        Expr::Call(name, args) => {
            let args = args.into_iter().map(|a| resolve_expr(a, defs)).collect();
            if defs.is_ctor(&name) {
                Expr::Ctor(name, args)
            } else {
                Expr::Call(name, args)
            }
        }
        Expr::Ctor(name, args) => Expr::Ctor(
            name,
            args.into_iter().map(|a| resolve_expr(a, defs)).collect(),
        ),
        Expr::Unary(op, a) => Expr::Unary(op, Box::new(resolve_expr(*a, defs))),
        Expr::Binary(op, a, b) => Expr::Binary(
            op,
            Box::new(resolve_expr(*a, defs)),
            Box::new(resolve_expr(*b, defs)),
        ),
        Expr::If(c, t, f) => Expr::If(
            Box::new(resolve_expr(*c, defs)),
            Box::new(resolve_expr(*t, defs)),
            Box::new(resolve_expr(*f, defs)),
        ),
        lit @ Expr::Literal(_) => lit,
    }
}

/// Rewrites bare identifiers that name nullary constructors into constructor
/// patterns.
pub(crate) fn resolve_pattern(p: Pattern, defs: &Defs) -> Pattern {
    match p {
        Pattern::Var(name) => {
            if defs.is_ctor(&name) {
                Pattern::Ctor(name, Vec::new())
            } else {
                Pattern::Var(name)
            }
        }
        Pattern::Ctor(name, subs) => Pattern::Ctor(
            name,
            subs.into_iter().map(|s| resolve_pattern(s, defs)).collect(),
        ),
        other => other,
    }
}

fn shallow_value_type(v: &Value) -> Option<TypeRef> {
    match v {
        Value::Int(_) => Some(TypeRef::Int),
        Value::Float(_) => Some(TypeRef::Float),
        Value::Bool(_) => Some(TypeRef::Bool),
        Value::Ctor(..) => None,
    }
}

struct InferCx<'a> {
    defs: &'a Defs,
    uf: Unifier,
    /// Signature variables per function, parallel to `defs.funs`.
    params: Vec<Vec<Ty>>,
    returns: Vec<Ty>,
}

impl<'a> InferCx<'a> {
    fn constrain_pattern(
        &mut self,
        pat: &Pattern,
        expected: &Ty,
        scope: &mut BTreeMap<String, Ty>,
    ) -> Result<(), String> {
        match pat {
            Pattern::Wildcard => Ok(()),
            Pattern::Var(name) => {
                if scope.contains_key(name) {
                    return Err(format!("pattern variable `{name}` bound more than once"));
                }
                scope.insert(name.clone(), expected.clone());
                Ok(())
            }
            Pattern::Literal(v) => match shallow_value_type(v) {
                Some(g) => self.uf.unify(expected, &Ty::Ground(g)),
                None => Err("constructed literals are written as constructor patterns".into()),
            },
            Pattern::Ctor(name, subs) => {
                let (t, c) = self
                    .defs
                    .lookup_ctor(name)
                    .ok_or_else(|| format!("unknown constructor `{name}`"))?;
                if subs.len() != c.arg_types.len() {
                    return Err(format!(
                        "constructor `{name}` takes {} arguments, pattern has {}",
                        c.arg_types.len(),
                        subs.len()
                    ));
                }
                self.uf
                    .unify(expected, &Ty::Ground(TypeRef::Named(t.name.clone())))?;
                let arg_types = c.arg_types.clone();
                for (sub, at) in subs.iter().zip(arg_types) {
                    self.constrain_pattern(sub, &Ty::Ground(at), scope)?;
                }
                Ok(())
            }
        }
    }

    fn infer_expr(&mut self, e: &Expr, scope: &BTreeMap<String, Ty>) -> Result<Ty, String> {
        match e {
            Expr::Literal(v) => match shallow_value_type(v) {
                Some(g) => Ok(Ty::Ground(g)),
                None => Err("constructed values appear as constructor applications".into()),
            },
            Expr::Var(name) => scope
                .get(name)
                .cloned()
                .ok_or_else(|| format!("unbound variable `{name}`")),
            Expr::Ctor(name, args) => {
                let (t, c) = self
                    .defs
                    .lookup_ctor(name)
                    .ok_or_else(|| format!("unknown constructor `{name}`"))?;
                if args.len() != c.arg_types.len() {
                    return Err(format!(
                        "constructor `{name}` takes {} arguments, got {}",
                        c.arg_types.len(),
                        args.len()
                    ));
                }
                let tname = t.name.clone();
                let arg_types = c.arg_types.clone();
                for (a, at) in args.iter().zip(arg_types) {
                    let ty = self.infer_expr(a, scope)?;
                    self.uf.unify(&ty, &Ty::Ground(at))?;
                }
                Ok(Ty::Ground(TypeRef::Named(tname)))
            }
            Expr::Call(name, args) => {
                if let Some(fi) = self.defs.funs.iter().position(|f| f.name == *name) {
                    let params = self.params[fi].clone();
                    if args.len() != params.len() {
                        return Err(format!(
                            "function `{name}` takes {} arguments, got {}",
                            params.len(),
                            args.len()
                        ));
                    }
                    for (a, p) in args.iter().zip(params) {
                        let ty = self.infer_expr(a, scope)?;
                        self.uf.unify(&ty, &p)?;
                    }
                    Ok(self.returns[fi].clone())
                } else if let Some(d) = self.defs.lookup_derived(name) {
                    let params = d.param_types.clone();
                    let ret = d.return_type.clone();
                    if args.len() != params.len() {
                        return Err(format!(
                            "function `{name}` takes {} arguments, got {}",
                            params.len(),
                            args.len()
                        ));
                    }
                    for (a, p) in args.iter().zip(params) {
                        let ty = self.infer_expr(a, scope)?;
                        self.uf.unify(&ty, &Ty::Ground(p))?;
                    }
                    Ok(Ty::Ground(ret))
                } else {
                    Err(format!("unknown function `{name}`"))
                }
            }
            Expr::Unary(UnOp::Neg, a) => {
                let ty = self.infer_expr(a, scope)?;
                self.uf.mark_numeric(&ty);
                if let Ty::Ground(g) = &ty {
                    if !matches!(g, TypeRef::Int | TypeRef::Float) {
                        return Err(format!("cannot negate {g}"));
                    }
                }
                Ok(ty)
            }
            Expr::Unary(UnOp::Not, a) => {
                let ty = self.infer_expr(a, scope)?;
                self.uf.unify(&ty, &Ty::Ground(TypeRef::Bool))?;
                Ok(Ty::Ground(TypeRef::Bool))
            }
            Expr::Binary(op, a, b) => {
                let ta = self.infer_expr(a, scope)?;
                let tb = self.infer_expr(b, scope)?;
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        self.uf.unify(&ta, &tb)?;
                        self.uf.mark_numeric(&ta);
                        if let Ty::Ground(g) = &ta {
                            if !matches!(g, TypeRef::Int | TypeRef::Float) {
                                return Err(format!("arithmetic on {g}"));
                            }
                        }
                        Ok(ta)
                    }
                    BinOp::Rem => {
                        self.uf.unify(&ta, &Ty::Ground(TypeRef::Int))?;
                        self.uf.unify(&tb, &Ty::Ground(TypeRef::Int))?;
                        Ok(Ty::Ground(TypeRef::Int))
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        self.uf.unify(&ta, &tb)?;
                        self.uf.mark_numeric(&ta);
                        if let Ty::Ground(g) = &ta {
                            if !matches!(g, TypeRef::Int | TypeRef::Float) {
                                return Err(format!("ordering comparison on {g}"));
                            }
                        }
                        Ok(Ty::Ground(TypeRef::Bool))
                    }
                    BinOp::Eq | BinOp::Ne => {
                        self.uf.unify(&ta, &tb)?;
                        Ok(Ty::Ground(TypeRef::Bool))
                    }
                    BinOp::And | BinOp::Or => {
                        self.uf.unify(&ta, &Ty::Ground(TypeRef::Bool))?;
                        self.uf.unify(&tb, &Ty::Ground(TypeRef::Bool))?;
                        Ok(Ty::Ground(TypeRef::Bool))
                    }
                }
            }
            Expr::If(c, t, f) => {
                let tc = self.infer_expr(c, scope)?;
                self.uf.unify(&tc, &Ty::Ground(TypeRef::Bool))?;
                let tt = self.infer_expr(t, scope)?;
                let tf = self.infer_expr(f, scope)?;
                self.uf.unify(&tt, &tf)?;
                Ok(tt)
            }
        }
    }
}

fn check_names(types: &[TypeDef], funs: &[FuncDef], diags: &mut Diagnostics) {
    let mut type_names: BTreeMap<&str, Pos> = BTreeMap::new();
    let mut ctor_names: BTreeMap<&str, Pos> = BTreeMap::new();
    for t in types {
        if type_names.insert(&t.name, t.pos).is_some() {
            diags.error(t.pos, format!("duplicate type name `{}`", t.name));
        }
        for c in &t.ctors {
            if ctor_names.insert(&c.name, c.pos).is_some() {
                diags.error(c.pos, format!("duplicate constructor `{}`", c.name));
            }
        }
    }
    // Type references inside constructors must resolve.
    for t in types {
        for c in &t.ctors {
            for at in &c.arg_types {
                if let TypeRef::Named(n) = at {
                    if !type_names.contains_key(n.as_str()) {
                        diags.error(c.pos, format!("unknown type `{n}`"));
                    }
                }
            }
        }
    }
    // Function names must not collide with each other, constructors, or
    // derived functions.
    let mut derived: BTreeMap<String, &str> = BTreeMap::new();
    for t in types {
        for d in derive_functions(t) {
            derived.insert(d.name, "a derived function");
        }
    }
    let mut fun_names: BTreeMap<&str, Pos> = BTreeMap::new();
    for f in funs {
        if fun_names.insert(&f.name, f.pos).is_some() {
            diags.error(f.pos, format!("duplicate function `{}`", f.name));
        } else if let Some(what) = derived.get(&f.name) {
            diags.error(f.pos, format!("function `{}` collides with {what}", f.name));
        }
    }
}

/// Resolves constructor references and infers all function signatures.
/// Returns a checked [`Defs`] or the accumulated diagnostics.
pub fn check_and_resolve(types: Vec<TypeDef>, funs: Vec<FuncDef>) -> Result<Defs, Diagnostics> {
    let mut diags = Diagnostics::new();
    check_names(&types, &funs, &mut diags);
    if !diags.is_empty() {
        return Err(diags);
    }

    // Build a preliminary index so resolution can see constructor names.
    let mut defs = Defs::index(types, funs);

    // Resolve function bodies and patterns.
    let funs_resolved: Vec<FuncDef> = defs
        .funs
        .iter()
        .map(|f| {
            let mut f = f.clone();
            for eq in &mut f.equations {
                eq.patterns = eq
                    .patterns
                    .drain(..)
                    .map(|p| resolve_pattern(p, &defs))
                    .collect();
                eq.body = resolve_expr(eq.body.clone(), &defs);
            }
            f
        })
        .collect();
    defs = Defs::index(defs.types, funs_resolved);

    // Global signature inference over all functions at once, so mutual
    // recursion needs no declaration order.
    let mut cx = InferCx {
        defs: &defs,
        uf: Unifier::new(),
        params: Vec::new(),
        returns: Vec::new(),
    };
    for f in &defs.funs {
        let arity = f.equations[0].patterns.len();
        let params = (0..arity).map(|_| cx.uf.fresh()).collect();
        cx.params.push(params);
        cx.returns.push(cx.uf.fresh());
    }
    for (fi, f) in defs.funs.iter().enumerate() {
        for eq in &f.equations {
            let mut scope: BTreeMap<String, Ty> = BTreeMap::new();
            for (pi, pat) in eq.patterns.iter().enumerate() {
                let expected = cx.params[fi][pi].clone();
                if let Err(msg) = cx.constrain_pattern(pat, &expected, &mut scope) {
                    diags.error(f.pos, format!("in `{}`: {msg}", f.name));
                }
            }
            match cx.infer_expr(&eq.body, &scope) {
                Ok(ty) => {
                    let ret = cx.returns[fi].clone();
                    if let Err(msg) = cx.uf.unify(&ty, &ret) {
                        diags.error(f.pos, format!("in `{}`: {msg}", f.name));
                    }
                }
                Err(msg) => diags.error(f.pos, format!("in `{}`: {msg}", f.name)),
            }
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    if let Err(msg) = cx.uf.check_numeric_ground() {
        diags.error(Pos::default(), msg);
        return Err(diags);
    }

    // Extract ground signatures.
    let mut params = Vec::new();
    let mut returns = Vec::new();
    for (fi, f) in defs.funs.iter().enumerate() {
        let mut ps = Vec::new();
        for (pi, p) in cx.params[fi].iter().enumerate() {
            match cx.uf.resolve(p) {
                Some(g) => ps.push(g),
                None => diags.error(
                    f.pos,
                    format!(
                        "cannot infer the type of parameter {} of `{}`",
                        pi + 1,
                        f.name
                    ),
                ),
            }
        }
        params.push(ps);
        match cx.uf.resolve(&cx.returns[fi]) {
            Some(g) => returns.push(g),
            None => {
                diags.error(
                    f.pos,
                    format!("cannot infer the result type of `{}`", f.name),
                );
                returns.push(TypeRef::Bool);
            }
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    let mut funs = defs.funs.clone();
    for (fi, f) in funs.iter_mut().enumerate() {
        f.param_types = params[fi].clone();
        f.return_type = returns[fi].clone();
    }
    Ok(Defs::index(defs.types, funs))
}

/// Re-runs checking on a merged definition list (used by `Defs::merge` and
/// the model loader, where several sources contribute definitions).
pub fn recheck_merged(types: Vec<TypeDef>, funs: Vec<FuncDef>) -> Result<Defs, Diagnostics> {
    check_and_resolve(types, funs)
}

/// Ground type checking for an already-resolved expression against a known
/// variable environment. Used for guards, output expressions, assignments,
/// and initializers, where every variable type is known.
pub fn expr_type(e: &Expr, env: &TypeEnv, defs: &Defs) -> Result<TypeRef, String> {
    let mut cx = InferCx {
        defs,
        uf: Unifier::new(),
        params: defs
            .funs
            .iter()
            .map(|f| f.param_types.iter().cloned().map(Ty::Ground).collect())
            .collect(),
        returns: defs
            .funs
            .iter()
            .map(|f| Ty::Ground(f.return_type.clone()))
            .collect(),
    };
    let scope: BTreeMap<String, Ty> = env
        .iter()
        .map(|(k, v)| (k.clone(), Ty::Ground(v.clone())))
        .collect();
    let ty = cx.infer_expr(e, &scope)?;
    cx.uf.check_numeric_ground()?;
    cx.uf
        .resolve(&ty)
        .ok_or_else(|| "cannot determine expression type".to_string())
}

/// Collects the variables bound by matching `pat` against a value of type
/// `ty`, checking the pattern's own well-typedness along the way.
pub fn pattern_bindings(
    pat: &Pattern,
    ty: &TypeRef,
    defs: &Defs,
    out: &mut Vec<(String, TypeRef)>,
) -> Result<(), String> {
    match pat {
        Pattern::Wildcard => Ok(()),
        Pattern::Var(name) => {
            if out.iter().any(|(n, _)| n == name) {
                return Err(format!("pattern variable `{name}` bound more than once"));
            }
            out.push((name.clone(), ty.clone()));
            Ok(())
        }
        Pattern::Literal(v) => {
            let got = shallow_value_type(v).ok_or("unsupported literal pattern")?;
            if got == *ty {
                Ok(())
            } else {
                Err(format!("literal pattern has type {got}, port expects {ty}"))
            }
        }
        Pattern::Ctor(name, subs) => {
            let (t, c) = defs
                .lookup_ctor(name)
                .ok_or_else(|| format!("unknown constructor `{name}`"))?;
            if *ty != TypeRef::Named(t.name.clone()) {
                return Err(format!(
                    "constructor `{name}` builds {} values, expected {ty}",
                    t.name
                ));
            }
            if subs.len() != c.arg_types.len() {
                return Err(format!(
                    "constructor `{name}` takes {} arguments, pattern has {}",
                    c.arg_types.len(),
                    subs.len()
                ));
            }
            for (sub, at) in subs.iter().zip(&c.arg_types) {
                pattern_bindings(sub, at, defs, out)?;
            }
            Ok(())
        }
    }
}

/// Checks that a runtime value inhabits the given type.
pub fn check_value_type(v: &Value, ty: &TypeRef, defs: &Defs) -> Result<(), String> {
    match (v, ty) {
        (Value::Int(_), TypeRef::Int) => Ok(()),
        (Value::Float(_), TypeRef::Float) => Ok(()),
        (Value::Bool(_), TypeRef::Bool) => Ok(()),
        (Value::Ctor(name, args), TypeRef::Named(tn)) => {
            let (t, c) = defs
                .lookup_ctor(name)
                .ok_or_else(|| format!("unknown constructor `{name}`"))?;
            if t.name != *tn {
                return Err(format!("value of type {} where {tn} expected", t.name));
            }
            if args.len() != c.arg_types.len() {
                return Err(format!(
                    "constructor `{name}` takes {} arguments, value has {}",
                    c.arg_types.len(),
                    args.len()
                ));
            }
            for (a, at) in args.iter().zip(&c.arg_types) {
                check_value_type(a, at, defs)?;
            }
            Ok(())
        }
        (v, ty) => Err(format!("value `{v}` does not have type {ty}")),
    }
}
