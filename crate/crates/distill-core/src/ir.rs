//! Program IR for condensed networks: loops, if/elif chains, condensed
//! sums, and an output head. Every integer literal is an affine form in
//! named size parameters so one structure serves both fixed-size and
//! size-generalized programs.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Integer-affine expression `konst + sum(coef * var)`. Variables are size
/// parameters ("n", "m") or loop indices ("i", "j").
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Affine {
    pub konst: i64,
    /// Sorted by name, zero coefficients removed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<(String, i64)>,
}

impl Affine {
    pub fn konst(k: i64) -> Self {
        Affine { konst: k, terms: Vec::new() }
    }

    pub fn var(name: &str) -> Self {
        Affine { konst: 0, terms: vec![(name.to_string(), 1)] }
    }

    pub fn linear(coef: i64, name: &str, konst: i64) -> Self {
        let mut a = Affine { konst, terms: vec![(name.to_string(), coef)] };
        a.normalize();
        a
    }

    /// Builds a normalized affine from a constant and raw terms.
    pub fn from_parts(konst: i64, terms: Vec<(String, i64)>) -> Self {
        let mut a = Affine { konst, terms };
        a.normalize();
        a
    }

    fn normalize(&mut self) {
        self.terms.sort_by(|a, b| a.0.cmp(&b.0));
        self.terms.retain(|(_, c)| *c != 0);
    }

    pub fn add(&self, other: &Affine) -> Affine {
        let mut map: BTreeMap<&str, i64> = BTreeMap::new();
        for (v, c) in self.terms.iter().chain(&other.terms) {
            *map.entry(v).or_default() += c;
        }
        let mut a = Affine {
            konst: self.konst + other.konst,
            terms: map.into_iter().map(|(v, c)| (v.to_string(), c)).collect(),
        };
        a.normalize();
        a
    }

    pub fn plus(&self, k: i64) -> Affine {
        Affine { konst: self.konst + k, terms: self.terms.clone() }
    }

    pub fn is_const(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Result<i64> {
        let mut v = self.konst;
        for (name, c) in &self.terms {
            let x = env
                .get(name)
                .ok_or_else(|| Error::IrValidation(format!("unbound variable {name}")))?;
            v += c * x;
        }
        Ok(v)
    }

    /// Substitutes any bound parameters, leaving the rest symbolic.
    pub fn subst(&self, bindings: &BTreeMap<String, i64>) -> Affine {
        let mut konst = self.konst;
        let mut terms = Vec::new();
        for (name, c) in &self.terms {
            match bindings.get(name) {
                Some(v) => konst += c * v,
                None => terms.push((name.clone(), *c)),
            }
        }
        Affine { konst, terms }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Number {
    Int(Affine),
    Real(f64),
}

impl Number {
    pub fn int(k: i64) -> Self {
        Number::Int(Affine::konst(k))
    }

    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Result<f64> {
        match self {
            Number::Int(a) => Ok(a.eval(env)? as f64),
            Number::Real(r) => Ok(*r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub dims: Vec<Affine>,
}

impl Shape {
    pub fn vector(d: Affine) -> Self {
        Shape { dims: vec![d] }
    }

    pub fn matrix(r: Affine, c: Affine) -> Self {
        Shape { dims: vec![r, c] }
    }
}

/// One dimension of an array slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DimSel {
    At(Affine),
    /// `a:` — everything from index `a` on.
    From(Affine),
    Full,
}

/// An array or sub-array, e.g. `D[i, :]` or `I[2:, i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub array: String,
    pub sel: Vec<DimSel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(Number),
    /// Scalar variable or loop-local.
    Var(String),
    Ref { array: String, idx: Vec<Affine> },
    Sum(Slice),
    Mean(Slice),
    /// `np.all(slice == v)`
    AllEq(Slice, Number),
    /// `np.any(slice != v)`
    AnyNe(Slice, Number),
    /// `sum(coef * term)`; `parens` wraps the printed form.
    Lin { terms: Vec<(Number, Expr)>, parens: bool },
    Cmp { op: CmpOp, lhs: Box<Expr>, rhs: Box<Expr> },
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn num(k: i64) -> Expr {
        Expr::Num(Number::int(k))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn elem(array: &str, idx: Vec<Affine>) -> Expr {
        Expr::Ref { array: array.to_string(), idx }
    }

    pub fn gt0(self) -> Expr {
        Expr::Cmp { op: CmpOp::Gt, lhs: Box::new(self), rhs: Box::new(Expr::num(0)) }
    }

    pub fn not(self) -> Expr {
        Expr::Not(Box::new(self))
    }

    pub fn cmp(op: CmpOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Cmp { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    /// Plain sum of terms with coefficient 1.
    pub fn add(terms: Vec<Expr>, parens: bool) -> Expr {
        Expr::Lin { terms: terms.into_iter().map(|t| (Number::int(1), t)).collect(), parens }
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Lin { terms: vec![(Number::int(-1), e)], parens: false }
    }

    pub fn minus(a: Expr, b: Expr, parens: bool) -> Expr {
        Expr::Lin { terms: vec![(Number::int(1), a), (Number::int(-1), b)], parens }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BranchBody {
    Value(Number),
    /// Inner if/elif chain; when no condition fires the outer default holds.
    Nested(Vec<(Expr, Number)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfChain {
    /// Value before any branch fires: the `np.zeros` fill for loops, the
    /// printed initial assignment for scalars.
    pub init: Number,
    pub branches: Vec<(Expr, BranchBody)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub else_val: Option<Number>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Expr(Expr),
    Chain(IfChain),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopStmt {
    pub target: String,
    pub shape: Shape,
    /// Loop variable per shape dimension.
    pub indices: Vec<String>,
    /// `if a == b: continue` guard.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip_equal: Option<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub locals: Vec<(String, Expr)>,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarStmt {
    pub target: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub locals: Vec<(String, Expr)>,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stmt {
    Loop(LoopStmt),
    Scalar(ScalarStmt),
    /// `C = [C1, C2]`
    Gather { target: String, elems: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Output {
    /// `return <boolean expression>`; true means the first label applies.
    Bool { expr: Expr },
    /// `results = np.where(C==max(C))[0]; return random.choice(results)`
    ArgmaxChoice { array: String },
    /// `return np.exp(C)/np.sum(np.exp(C))`
    Softmax { array: String },
}

/// How argmax indices map back to labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Labels {
    None,
    /// Concept i means label "i" (index-valued tasks like argmax).
    Indices,
    Named(Vec<String>),
}

impl Output {
    /// The common `return C1 and not C2` form.
    pub fn bool_pair(pos: &str, neg: &str) -> Output {
        Output::Bool {
            expr: Expr::And(vec![Expr::var(pos), Expr::var(neg).not()]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    /// Base name; fixed-size programs get a `_<size>` suffix when printed.
    pub name: String,
    /// Bound size parameters; empty for a generalized program.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sizes: Vec<(String, i64)>,
    /// Free size parameters, in signature order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<String>,
    /// Description; `{n}` placeholders are replaced by bound sizes, and
    /// `{n/2}` by half the bound value.
    pub comment: String,
    pub inputs: Vec<(String, Shape)>,
    pub stmts: Vec<Stmt>,
    pub output: Output,
    pub labels: Labels,
}

impl Program {
    /// Printed function name, e.g. `absmax_20` or `absmax`.
    pub fn display_name(&self) -> String {
        if self.sizes.is_empty() {
            return self.name.clone();
        }
        let mut vals: Vec<i64> = self.sizes.iter().map(|(_, v)| *v).collect();
        vals.sort_unstable();
        let suffix: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        format!("{}_{}", self.name, suffix.join("_"))
    }

    pub fn size_env(&self) -> BTreeMap<String, i64> {
        self.sizes.iter().cloned().collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Program> {
        Ok(serde_json::from_str(s)?)
    }

    /// Visits every integer-affine literal in deterministic order.
    pub fn walk_affines<'a>(&'a self, f: &mut impl FnMut(&'a Affine)) {
        for (_, shape) in &self.inputs {
            for d in &shape.dims {
                f(d);
            }
        }
        for s in &self.stmts {
            walk_stmt(s, f);
        }
        if let Output::Bool { expr } = &self.output {
            walk_expr(expr, f);
        }
    }

    /// Rebuilds the program with every affine literal transformed. The
    /// traversal order matches `walk_affines`.
    pub fn map_affines(&self, f: &mut impl FnMut(&Affine) -> Affine) -> Program {
        let mut p = self.clone();
        for (_, shape) in &mut p.inputs {
            for d in &mut shape.dims {
                *d = f(d);
            }
        }
        for s in &mut p.stmts {
            map_stmt(s, f);
        }
        if let Output::Bool { expr } = &mut p.output {
            map_expr(expr, f);
        }
        p
    }

    /// Structure with all affine literals blanked; two programs align for
    /// generalization iff their skeletons are equal.
    pub fn skeleton(&self) -> Program {
        let mut p = self.map_affines(&mut |_| Affine::konst(0));
        p.sizes.clear();
        p
    }
}

fn walk_number<'a>(n: &'a Number, f: &mut impl FnMut(&'a Affine)) {
    if let Number::Int(a) = n {
        f(a);
    }
}

fn walk_expr<'a>(e: &'a Expr, f: &mut impl FnMut(&'a Affine)) {
    match e {
        Expr::Num(n) => walk_number(n, f),
        Expr::Var(_) => {}
        Expr::Ref { idx, .. } => idx.iter().for_each(&mut *f),
        Expr::Sum(s) | Expr::Mean(s) => walk_slice(s, f),
        Expr::AllEq(s, n) | Expr::AnyNe(s, n) => {
            walk_slice(s, f);
            walk_number(n, f);
        }
        Expr::Lin { terms, .. } => {
            for (c, t) in terms {
                walk_number(c, f);
                walk_expr(t, f);
            }
        }
        Expr::Cmp { lhs, rhs, .. } => {
            walk_expr(lhs, f);
            walk_expr(rhs, f);
        }
        Expr::And(v) | Expr::Or(v) => v.iter().for_each(|e| walk_expr(e, f)),
        Expr::Not(e) => walk_expr(e, f),
    }
}

fn walk_slice<'a>(s: &'a Slice, f: &mut impl FnMut(&'a Affine)) {
    for d in &s.sel {
        match d {
            DimSel::At(a) | DimSel::From(a) => f(a),
            DimSel::Full => {}
        }
    }
}

fn walk_chain<'a>(c: &'a IfChain, f: &mut impl FnMut(&'a Affine)) {
    walk_number(&c.init, f);
    for (cond, body) in &c.branches {
        walk_expr(cond, f);
        match body {
            BranchBody::Value(n) => walk_number(n, f),
            BranchBody::Nested(inner) => {
                for (ic, iv) in inner {
                    walk_expr(ic, f);
                    walk_number(iv, f);
                }
            }
        }
    }
    if let Some(n) = &c.else_val {
        walk_number(n, f);
    }
}

fn walk_value<'a>(v: &'a Value, f: &mut impl FnMut(&'a Affine)) {
    match v {
        Value::Expr(e) => walk_expr(e, f),
        Value::Chain(c) => walk_chain(c, f),
    }
}

fn walk_stmt<'a>(s: &'a Stmt, f: &mut impl FnMut(&'a Affine)) {
    match s {
        Stmt::Loop(l) => {
            for d in &l.shape.dims {
                f(d);
            }
            for (_, e) in &l.locals {
                walk_expr(e, f);
            }
            walk_value(&l.value, f);
        }
        Stmt::Scalar(sc) => {
            for (_, e) in &sc.locals {
                walk_expr(e, f);
            }
            walk_value(&sc.value, f);
        }
        Stmt::Gather { .. } => {}
    }
}

fn map_number(n: &mut Number, f: &mut impl FnMut(&Affine) -> Affine) {
    if let Number::Int(a) = n {
        *a = f(a);
    }
}

fn map_expr(e: &mut Expr, f: &mut impl FnMut(&Affine) -> Affine) {
    match e {
        Expr::Num(n) => map_number(n, f),
        Expr::Var(_) => {}
        Expr::Ref { idx, .. } => {
            for a in idx {
                *a = f(a);
            }
        }
        Expr::Sum(s) | Expr::Mean(s) => map_slice(s, f),
        Expr::AllEq(s, n) | Expr::AnyNe(s, n) => {
            map_slice(s, f);
            map_number(n, f);
        }
        Expr::Lin { terms, .. } => {
            for (c, t) in terms {
                map_number(c, f);
                map_expr(t, f);
            }
        }
        Expr::Cmp { lhs, rhs, .. } => {
            map_expr(lhs, f);
            map_expr(rhs, f);
        }
        Expr::And(v) | Expr::Or(v) => v.iter_mut().for_each(|e| map_expr(e, f)),
        Expr::Not(e) => map_expr(e, f),
    }
}

fn map_slice(s: &mut Slice, f: &mut impl FnMut(&Affine) -> Affine) {
    for d in &mut s.sel {
        match d {
            DimSel::At(a) | DimSel::From(a) => *a = f(a),
            DimSel::Full => {}
        }
    }
}

fn map_chain(c: &mut IfChain, f: &mut impl FnMut(&Affine) -> Affine) {
    map_number(&mut c.init, f);
    for (cond, body) in &mut c.branches {
        map_expr(cond, f);
        match body {
            BranchBody::Value(n) => map_number(n, f),
            BranchBody::Nested(inner) => {
                for (ic, iv) in inner {
                    map_expr(ic, f);
                    map_number(iv, f);
                }
            }
        }
    }
    if let Some(n) = &mut c.else_val {
        map_number(n, f);
    }
}

fn map_value(v: &mut Value, f: &mut impl FnMut(&Affine) -> Affine) {
    match v {
        Value::Expr(e) => map_expr(e, f),
        Value::Chain(c) => map_chain(c, f),
    }
}

fn map_stmt(s: &mut Stmt, f: &mut impl FnMut(&Affine) -> Affine) {
    match s {
        Stmt::Loop(l) => {
            for d in &mut l.shape.dims {
                *d = f(d);
            }
            for (_, e) in &mut l.locals {
                map_expr(e, f);
            }
            map_value(&mut l.value, f);
        }
        Stmt::Scalar(sc) => {
            for (_, e) in &mut sc.locals {
                map_expr(e, f);
            }
            map_value(&mut sc.value, f);
        }
        Stmt::Gather { .. } => {}
    }
}
