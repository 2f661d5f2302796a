//! The data type definition sub-language: algebraic types, derived
//! constructor/selector/discriminator functions, user functions defined by
//! pattern-matching equations, and a typed expression evaluator.
//!
//! Definitions are written in an ML-like textual form:
//!
//! ```text
//! data SensorVal = Defect | Busy | Ready(Float);
//! fun nextValue(last, Defect) = last
//!   | nextValue(last, Busy) = last
//!   | nextValue(last, Ready(x)) = x;
//! ```

pub mod check;
pub mod eval;
pub mod lexer;
pub mod parser;

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::diag::{Diagnostics, Pos};

/// Reference to a builtin or user-defined type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeRef {
    Int,
    Float,
    Bool,
    Named(String),
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Int => write!(f, "Int"),
            TypeRef::Float => write!(f, "Float"),
            TypeRef::Bool => write!(f, "Bool"),
            TypeRef::Named(n) => write!(f, "{n}"),
        }
    }
}

/// A runtime datum. Floats compare and hash by their bit pattern so that
/// values can key visited-state sets deterministically; the language-level
/// `==` operator uses IEEE comparison instead (see [`Value::semantic_eq`]).
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Ctor(String, Vec<Value>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Ctor(c, xs), Value::Ctor(d, ys)) => c == d && xs == ys,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Int(n) => {
                0u8.hash(state);
                n.hash(state);
            }
            Value::Float(x) => {
                1u8.hash(state);
                x.to_bits().hash(state);
            }
            Value::Bool(b) => {
                2u8.hash(state);
                b.hash(state);
            }
            Value::Ctor(c, args) => {
                3u8.hash(state);
                c.hash(state);
                args.hash(state);
            }
        }
    }
}

impl Value {
    /// IEEE comparison for floats (so `0.0 == -0.0`), structural otherwise.
    /// This is the equality exposed to model expressions and pattern literals.
    pub fn semantic_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Float(a), Value::Float(b)) => a == b,
            (Value::Ctor(c, xs), Value::Ctor(d, ys)) => {
                c == d && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| x.semantic_eq(y))
            }
            _ => self == other,
        }
    }
}

/// Formats a float so that parsing the result returns the identical bits:
/// shortest round-trip decimal, always containing a '.' so the literal stays
/// a Float under the lexer.
pub fn format_float(x: f64) -> String {
    let mut s = format!("{x}");
    if !s.contains('.') {
        s.push_str(".0");
    }
    s
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Float(x) => write!(f, "{}", format_float(*x)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Ctor(c, args) => {
                write!(f, "{c}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Wildcard,
    Var(String),
    Literal(Value),
    Ctor(String, Vec<Pattern>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Value),
    Var(String),
    Call(String, Vec<Expr>),
    Ctor(String, Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone)]
pub struct Constructor {
    pub name: String,
    pub arg_types: Vec<TypeRef>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct TypeDef {
    pub name: String,
    pub ctors: Vec<Constructor>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct Equation {
    pub patterns: Vec<Pattern>,
    pub body: Expr,
}

#[derive(Debug, Clone)]
pub struct FuncDef {
    pub name: String,
    /// Inferred monomorphic signature; filled in by the definition checker.
    pub param_types: Vec<TypeRef>,
    pub return_type: TypeRef,
    pub equations: Vec<Equation>,
    pub pos: Pos,
}

/// The role a derived function plays for its constructor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivedKind {
    /// The constructor itself, callable as a function.
    Construct,
    /// `is_C : T -> Bool`.
    Discriminate,
    /// `CSel : T -> arg` for unary constructors, `CSel<k> : T -> arg_k`
    /// (1-based) otherwise. The payload is the 0-based argument index.
    Select(usize),
}

/// Signature of a function implicitly defined by a `data` declaration.
#[derive(Debug, Clone)]
pub struct DerivedFun {
    pub name: String,
    pub type_name: String,
    pub ctor_name: String,
    pub kind: DerivedKind,
    pub param_types: Vec<TypeRef>,
    pub return_type: TypeRef,
}

/// All functions implicitly defined by a type definition: one constructor
/// function per constructor, one discriminator per constructor, and selectors
/// for every constructor argument.
pub fn derive_functions(t: &TypeDef) -> Vec<DerivedFun> {
    let ret = TypeRef::Named(t.name.clone());
    let mut out = Vec::new();
    for c in &t.ctors {
        out.push(DerivedFun {
            name: c.name.clone(),
            type_name: t.name.clone(),
            ctor_name: c.name.clone(),
            kind: DerivedKind::Construct,
            param_types: c.arg_types.clone(),
            return_type: ret.clone(),
        });
        out.push(DerivedFun {
            name: format!("is_{}", c.name),
            type_name: t.name.clone(),
            ctor_name: c.name.clone(),
            kind: DerivedKind::Discriminate,
            param_types: vec![ret.clone()],
            return_type: TypeRef::Bool,
        });
        if c.arg_types.len() == 1 {
            out.push(DerivedFun {
                name: format!("{}Sel", c.name),
                type_name: t.name.clone(),
                ctor_name: c.name.clone(),
                kind: DerivedKind::Select(0),
                param_types: vec![ret.clone()],
                return_type: c.arg_types[0].clone(),
            });
        } else {
            for (i, at) in c.arg_types.iter().enumerate() {
                out.push(DerivedFun {
                    name: format!("{}Sel{}", c.name, i + 1),
                    type_name: t.name.clone(),
                    ctor_name: c.name.clone(),
                    kind: DerivedKind::Select(i),
                    param_types: vec![ret.clone()],
                    return_type: at.clone(),
                });
            }
        }
    }
    out
}

/// A checked set of type and function definitions with name lookup tables.
/// Immutable once built; every operation over it is a pure function.
#[derive(Debug, Clone, Default)]
pub struct Defs {
    pub types: Vec<TypeDef>,
    pub funs: Vec<FuncDef>,
    type_index: BTreeMap<String, usize>,
    ctor_index: BTreeMap<String, (usize, usize)>,
    fun_index: BTreeMap<String, usize>,
    derived_index: BTreeMap<String, DerivedFun>,
}

impl Defs {
    /// Parses, resolves, and type-checks a definition text.
    pub fn parse(text: &str) -> Result<Defs, Diagnostics> {
        let (types, funs) = parser::parse_dtd_raw(text)?;
        check::check_and_resolve(types, funs)
    }

    pub(crate) fn index(types: Vec<TypeDef>, funs: Vec<FuncDef>) -> Defs {
        let mut defs = Defs {
            types,
            funs,
            ..Defs::default()
        };
        for (ti, t) in defs.types.iter().enumerate() {
            defs.type_index.insert(t.name.clone(), ti);
            for (ci, c) in t.ctors.iter().enumerate() {
                defs.ctor_index.insert(c.name.clone(), (ti, ci));
            }
            for d in derive_functions(t) {
                defs.derived_index.insert(d.name.clone(), d);
            }
        }
        for (fi, f) in defs.funs.iter().enumerate() {
            defs.fun_index.insert(f.name.clone(), fi);
        }
        defs
    }

    pub fn lookup_type(&self, name: &str) -> Option<&TypeDef> {
        self.type_index.get(name).map(|&i| &self.types[i])
    }

    /// Looks a constructor up by name, returning its type and definition.
    pub fn lookup_ctor(&self, name: &str) -> Option<(&TypeDef, &Constructor)> {
        self.ctor_index.get(name).map(|&(ti, ci)| {
            let t = &self.types[ti];
            (t, &t.ctors[ci])
        })
    }

    pub fn lookup_fun(&self, name: &str) -> Option<&FuncDef> {
        self.fun_index.get(name).map(|&i| &self.funs[i])
    }

    pub fn lookup_derived(&self, name: &str) -> Option<&DerivedFun> {
        self.derived_index.get(name)
    }

    /// Whether `name` resolves to anything callable or constructible.
    pub fn is_ctor(&self, name: &str) -> bool {
        self.ctor_index.contains_key(name)
    }

    pub fn type_exists(&self, r: &TypeRef) -> bool {
        match r {
            TypeRef::Named(n) => self.type_index.contains_key(n),
            _ => true,
        }
    }

    /// Merges another definition set into this one, rechecking names.
    pub fn merge(self, other: Defs) -> Result<Defs, Diagnostics> {
        let mut types = self.types;
        types.extend(other.types);
        let mut funs = self.funs;
        funs.extend(other.funs);
        check::recheck_merged(types, funs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips_and_keeps_a_dot() {
        assert_eq!(format_float(2.5), "2.5");
        assert_eq!(format_float(2.0), "2.0");
        assert_eq!(format_float(-0.125), "-0.125");
        let x = 0.1 + 0.2;
        let s = format_float(x);
        assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn value_equality_is_bit_exact_but_semantic_eq_is_ieee() {
        let pz = Value::Float(0.0);
        let nz = Value::Float(-0.0);
        assert_ne!(pz, nz);
        assert!(pz.semantic_eq(&nz));
        assert_eq!(pz, Value::Float(0.0));
    }

    #[test]
    fn derived_functions_cover_ctors_discriminators_selectors() {
        let t = TypeDef {
            name: "SensorVal".into(),
            ctors: vec![
                Constructor {
                    name: "Defect".into(),
                    arg_types: vec![],
                    pos: Pos::default(),
                },
                Constructor {
                    name: "Busy".into(),
                    arg_types: vec![],
                    pos: Pos::default(),
                },
                Constructor {
                    name: "Ready".into(),
                    arg_types: vec![TypeRef::Float],
                    pos: Pos::default(),
                },
            ],
            pos: Pos::default(),
        };
        let names: Vec<String> = derive_functions(&t).into_iter().map(|d| d.name).collect();
        assert_eq!(
            names,
            vec![
                "Defect",
                "is_Defect",
                "Busy",
                "is_Busy",
                "Ready",
                "is_Ready",
                "ReadySel"
            ]
        );
    }

    #[test]
    fn multi_argument_ctor_gets_numbered_selectors() {
        let t = TypeDef {
            name: "Pair".into(),
            ctors: vec![Constructor {
                name: "P".into(),
                arg_types: vec![TypeRef::Int, TypeRef::Int],
                pos: Pos::default(),
            }],
            pos: Pos::default(),
        };
        let names: Vec<String> = derive_functions(&t).into_iter().map(|d| d.name).collect();
        assert_eq!(names, vec!["P", "is_P", "PSel1", "PSel2"]);
    }
}
