//! Reference executor for the program IR. Semantics mirror the emitted
//! Python: zero-filled arrays, truthiness by "nonzero", exact float
//! comparisons, and the same argmax/softmax heads as the network.

use std::collections::BTreeMap;

use crate::enn::{self, Network, NetworkOutput, OutputHead};
use crate::error::{Error, Result};
use crate::ir::*;

/// Row-major n-dimensional float array (n = 1 or 2 here).
#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Array {
    pub fn zeros(dims: Vec<usize>) -> Array {
        let len = dims.iter().product();
        Array { dims, data: vec![0.0; len] }
    }

    pub fn fill(dims: Vec<usize>, v: f64) -> Array {
        let len = dims.iter().product();
        Array { dims, data: vec![v; len] }
    }

    pub fn vector(data: Vec<f64>) -> Array {
        Array { dims: vec![data.len()], data }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Array {
        debug_assert_eq!(rows * cols, data.len());
        Array { dims: vec![rows, cols], data }
    }

    fn offset(&self, idx: &[usize]) -> usize {
        let mut off = 0;
        for (d, &i) in idx.iter().enumerate() {
            off = off * self.dims[d] + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let off = self.offset(idx);
        self.data[off] = v;
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Binding {
    Scalar(f64),
    Arr(Array),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProgOutput {
    Bool(bool),
    Choice { tie_set: Vec<usize>, choice: usize },
    Probs(Vec<f64>),
}

struct Interp<'p> {
    prog: &'p Program,
    ints: BTreeMap<String, i64>,
    vars: BTreeMap<String, Binding>,
}

/// Runs a fully sized program on one input. `inputs` pair up positionally
/// with the program's input declarations.
pub fn interpret_program(prog: &Program, inputs: &[Array], seed: u64) -> Result<ProgOutput> {
    if !prog.params.iter().all(|p| prog.sizes.iter().any(|(n, _)| n == p)) {
        return Err(Error::IrValidation("unbound size parameter; instantiate first".into()));
    }
    if inputs.len() != prog.inputs.len() {
        return Err(Error::InputLayout {
            expected: format!("{} input arrays", prog.inputs.len()),
            got: format!("{}", inputs.len()),
        });
    }
    let mut it = Interp { prog, ints: prog.size_env(), vars: BTreeMap::new() };
    for ((name, shape), arr) in prog.inputs.iter().zip(inputs) {
        let want: Vec<usize> = shape
            .dims
            .iter()
            .map(|d| it.eval_dim(d))
            .collect::<Result<_>>()?;
        if want != arr.dims {
            return Err(Error::InputLayout {
                expected: format!("{name} with dims {want:?}"),
                got: format!("dims {:?}", arr.dims),
            });
        }
        it.vars.insert(name.clone(), Binding::Arr(arr.clone()));
    }
    for stmt in &prog.stmts {
        it.exec(stmt)?;
    }
    it.output(seed)
}

impl<'p> Interp<'p> {
    fn eval_dim(&self, a: &Affine) -> Result<usize> {
        let v = a.eval(&self.ints)?;
        usize::try_from(v).map_err(|_| Error::IrValidation(format!("negative dimension {v}")))
    }

    fn exec(&mut self, stmt: &Stmt) -> Result<()> {
        match stmt {
            Stmt::Scalar(s) => {
                for (name, e) in &s.locals {
                    let v = self.eval(e)?;
                    self.vars.insert(name.clone(), Binding::Scalar(v));
                }
                let v = match &s.value {
                    Value::Expr(e) => self.eval(e)?,
                    Value::Chain(c) => self.eval_chain(c)?,
                };
                self.vars.insert(s.target.clone(), Binding::Scalar(v));
            }
            Stmt::Loop(l) => self.exec_loop(l)?,
            Stmt::Gather { target, elems } => {
                let mut data = Vec::with_capacity(elems.len());
                for e in elems {
                    match self.vars.get(e) {
                        Some(Binding::Scalar(v)) => data.push(*v),
                        _ => return Err(Error::IrValidation(format!("{e} is not a scalar"))),
                    }
                }
                self.vars.insert(target.clone(), Binding::Arr(Array::vector(data)));
            }
        }
        Ok(())
    }

    fn exec_loop(&mut self, l: &LoopStmt) -> Result<()> {
        let dims: Vec<usize> =
            l.shape.dims.iter().map(|d| self.eval_dim(d)).collect::<Result<_>>()?;
        if dims.len() != l.indices.len() {
            return Err(Error::IrValidation(format!(
                "loop over {} produces rank-{} array with {} indices",
                l.target,
                dims.len(),
                l.indices.len()
            )));
        }
        let fill = match &l.value {
            Value::Chain(c) => c.init.eval(&self.ints)?,
            Value::Expr(_) => 0.0,
        };
        let mut arr = Array::fill(dims.clone(), fill);
        let mut idx = vec![0usize; dims.len()];
        'outer: loop {
            for (v, &i) in l.indices.iter().zip(&idx) {
                self.ints.insert(v.clone(), i as i64);
            }
            let skip = match &l.skip_equal {
                Some((a, b)) => self.ints.get(a) == self.ints.get(b),
                None => false,
            };
            if !skip {
                for (name, e) in &l.locals {
                    let v = self.eval(e)?;
                    self.vars.insert(name.clone(), Binding::Scalar(v));
                }
                let v = match &l.value {
                    Value::Expr(e) => self.eval(e)?,
                    Value::Chain(c) => self.eval_chain(c)?,
                };
                arr.set(&idx, v);
            }
            // Odometer increment, row-major.
            for d in (0..dims.len()).rev() {
                idx[d] += 1;
                if idx[d] < dims[d] {
                    continue 'outer;
                }
                idx[d] = 0;
                if d == 0 {
                    break 'outer;
                }
            }
            if dims.iter().any(|&d| d == 0) {
                break;
            }
        }
        for v in &l.indices {
            self.ints.remove(v);
        }
        self.vars.insert(l.target.clone(), Binding::Arr(arr));
        Ok(())
    }

    fn eval_chain(&self, c: &IfChain) -> Result<f64> {
        for (cond, body) in &c.branches {
            if self.eval(cond)? != 0.0 {
                return match body {
                    BranchBody::Value(n) => n.eval(&self.ints),
                    BranchBody::Nested(inner) => {
                        for (ic, iv) in inner {
                            if self.eval(ic)? != 0.0 {
                                return iv.eval(&self.ints);
                            }
                        }
                        c.init.eval(&self.ints)
                    }
                };
            }
        }
        match &c.else_val {
            Some(n) => n.eval(&self.ints),
            None => c.init.eval(&self.ints),
        }
    }

    fn eval(&self, e: &Expr) -> Result<f64> {
        Ok(match e {
            Expr::Num(n) => n.eval(&self.ints)?,
            Expr::Var(name) => match self.vars.get(name) {
                Some(Binding::Scalar(v)) => *v,
                _ => match self.ints.get(name) {
                    Some(v) => *v as f64,
                    None => return Err(Error::IrValidation(format!("unbound variable {name}"))),
                },
            },
            Expr::Ref { array, idx } => {
                let arr = self.array(array)?;
                let pos: Vec<usize> = idx
                    .iter()
                    .map(|a| {
                        let v = a.eval(&self.ints)?;
                        usize::try_from(v)
                            .map_err(|_| Error::IrValidation(format!("negative index {v}")))
                    })
                    .collect::<Result<_>>()?;
                if pos.len() != arr.dims.len() || pos.iter().zip(&arr.dims).any(|(i, d)| i >= d) {
                    return Err(Error::IrValidation(format!("index {pos:?} out of {array}")));
                }
                arr.get(&pos)
            }
            Expr::Sum(s) => self.slice_values(s)?.into_iter().sum(),
            Expr::Mean(s) => {
                let v = self.slice_values(s)?;
                if v.is_empty() {
                    0.0
                } else {
                    v.iter().sum::<f64>() / v.len() as f64
                }
            }
            Expr::AllEq(s, n) => {
                let want = n.eval(&self.ints)?;
                bool_val(self.slice_values(s)?.iter().all(|&v| v == want))
            }
            Expr::AnyNe(s, n) => {
                let want = n.eval(&self.ints)?;
                bool_val(self.slice_values(s)?.iter().any(|&v| v != want))
            }
            Expr::Lin { terms, .. } => {
                let mut acc = 0.0;
                for (c, t) in terms {
                    acc += c.eval(&self.ints)? * self.eval(t)?;
                }
                acc
            }
            Expr::Cmp { op, lhs, rhs } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                bool_val(match op {
                    CmpOp::Gt => a > b,
                    CmpOp::Lt => a < b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Le => a <= b,
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                })
            }
            Expr::And(v) => {
                let mut r = true;
                for e in v {
                    if self.eval(e)? == 0.0 {
                        r = false;
                        break;
                    }
                }
                bool_val(r)
            }
            Expr::Or(v) => {
                let mut r = false;
                for e in v {
                    if self.eval(e)? != 0.0 {
                        r = true;
                        break;
                    }
                }
                bool_val(r)
            }
            Expr::Not(e) => bool_val(self.eval(e)? == 0.0),
        })
    }

    fn array(&self, name: &str) -> Result<&Array> {
        match self.vars.get(name) {
            Some(Binding::Arr(a)) => Ok(a),
            _ => Err(Error::IrValidation(format!("unbound array {name}"))),
        }
    }

    fn slice_values(&self, s: &Slice) -> Result<Vec<f64>> {
        let arr = self.array(&s.array)?;
        if s.sel.len() != arr.dims.len() {
            return Err(Error::IrValidation(format!(
                "slice rank {} vs array rank {} for {}",
                s.sel.len(),
                arr.dims.len(),
                s.array
            )));
        }
        let mut ranges: Vec<std::ops::Range<usize>> = Vec::with_capacity(s.sel.len());
        for (d, sel) in s.sel.iter().enumerate() {
            let n = arr.dims[d];
            let r = match sel {
                DimSel::Full => 0..n,
                DimSel::At(a) => {
                    let i = a.eval(&self.ints)?;
                    let i = usize::try_from(i)
                        .map_err(|_| Error::IrValidation(format!("negative index {i}")))?;
                    if i >= n {
                        return Err(Error::IrValidation(format!(
                            "index {i} out of {} (dim {d})",
                            s.array
                        )));
                    }
                    i..i + 1
                }
                DimSel::From(a) => {
                    let i = a.eval(&self.ints)?;
                    let i = usize::try_from(i.max(0)).unwrap_or(0).min(n);
                    i..n
                }
            };
            ranges.push(r);
        }
        let mut out = Vec::new();
        match ranges.len() {
            1 => {
                for i in ranges[0].clone() {
                    out.push(arr.get(&[i]));
                }
            }
            2 => {
                for i in ranges[0].clone() {
                    for j in ranges[1].clone() {
                        out.push(arr.get(&[i, j]));
                    }
                }
            }
            r => return Err(Error::IrValidation(format!("rank {r} slice unsupported"))),
        }
        Ok(out)
    }

    fn output(&self, seed: u64) -> Result<ProgOutput> {
        match &self.prog.output {
            Output::Bool { expr } => Ok(ProgOutput::Bool(self.eval(expr)? != 0.0)),
            Output::ArgmaxChoice { array } => {
                let arr = self.array(array)?;
                let (tie_set, choice) = enn::argmax_tie_set(&arr.data, seed);
                Ok(ProgOutput::Choice { tie_set, choice })
            }
            Output::Softmax { array } => {
                let arr = self.array(array)?;
                Ok(ProgOutput::Probs(enn::softmax(&arr.data)))
            }
        }
    }

}

fn bool_val(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquivReport {
    Pass { cases: usize },
    /// Vacuous pass over an empty input list.
    PassEmpty,
    Counterexample { case: usize, detail: String },
}

impl EquivReport {
    pub fn is_pass(&self) -> bool {
        !matches!(self, EquivReport::Counterexample { .. })
    }
}

/// Compares program and network outputs on every input. Argmax heads need
/// exact tie-set equality; bool heads need the tied concepts to agree on
/// one label matching the program's boolean; softmax within 1e-9.
pub fn check_equivalence(prog: &Program, net: &Network, inputs: &[Vec<Array>]) -> Result<EquivReport> {
    if inputs.is_empty() {
        return Ok(EquivReport::PassEmpty);
    }
    for (case, input) in inputs.iter().enumerate() {
        let flat: Vec<f64> = input.iter().flat_map(|a| a.data.iter().copied()).collect();
        let rec = net.forward_eval(&flat)?;
        let pout = interpret_program(prog, input, 0)?;
        let detail = match (&pout, net.output_head) {
            (ProgOutput::Choice { tie_set, .. }, OutputHead::Argmax) => {
                let (net_ties, _) = enn::argmax_tie_set(&rec.concept_raw, 0);
                if *tie_set == net_ties {
                    None
                } else {
                    Some(format!("tie sets differ: program {tie_set:?}, network {net_ties:?}"))
                }
            }
            (ProgOutput::Bool(b), OutputHead::Argmax) => {
                // A boolean program means "the first program label applies".
                let (net_ties, _) = enn::argmax_tie_set(&rec.concept_raw, 0);
                let labels: Vec<&str> = net_ties
                    .iter()
                    .map(|&i| net.concept_labels[i].class_name().unwrap_or(""))
                    .collect();
                let agree = labels.windows(2).all(|w| w[0] == w[1]);
                let want = match &prog.labels {
                    crate::ir::Labels::Named(names) if names.len() >= 2 => {
                        if *b { names[0].as_str() } else { names[1].as_str() }
                    }
                    _ => {
                        return Ok(EquivReport::Counterexample {
                            case,
                            detail: "boolean program without two named labels".into(),
                        })
                    }
                };
                if agree && labels.first() == Some(&want) {
                    None
                } else {
                    Some(format!("program {b} ({want}), network labels {labels:?}"))
                }
            }
            (ProgOutput::Probs(p), OutputHead::Softmax) => {
                match net.head_output(&rec.concept_raw, 0)? {
                    NetworkOutput::Probabilities(q) => {
                        if p.len() == q.len()
                            && p.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-9)
                        {
                            None
                        } else {
                            Some(format!("probabilities differ: program {p:?}, network {q:?}"))
                        }
                    }
                    _ => unreachable!(),
                }
            }
            _ => Some("output head mismatch between program and network".to_string()),
        };
        if let Some(detail) = detail {
            return Ok(EquivReport::Counterexample { case, detail });
        }
    }
    Ok(EquivReport::Pass { cases: inputs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Expr as E;

    /// Tiny boolean program: return (I[0] or I[1]) and not (I[0] and I[1]).
    fn xor_prog() -> Program {
        Program {
            name: "xor".into(),
            sizes: vec![],
            params: vec![],
            comment: String::new(),
            inputs: vec![("I".into(), Shape::vector(Affine::konst(2)))],
            stmts: vec![
                Stmt::Scalar(ScalarStmt {
                    target: "C1".into(),
                    locals: vec![],
                    value: Value::Expr(E::Or(vec![
                        E::elem("I", vec![Affine::konst(0)]),
                        E::elem("I", vec![Affine::konst(1)]),
                    ])),
                }),
                Stmt::Scalar(ScalarStmt {
                    target: "C2".into(),
                    locals: vec![],
                    value: Value::Expr(E::And(vec![
                        E::elem("I", vec![Affine::konst(0)]),
                        E::elem("I", vec![Affine::konst(1)]),
                    ])),
                }),
            ],
            output: Output::bool_pair("C1", "C2"),
            labels: Labels::Named(vec!["1".into(), "0".into()]),
        }
    }

    #[test]
    fn bool_pair_semantics() {
        let p = xor_prog();
        let cases = [([0.0, 0.0], false), ([1.0, 0.0], true), ([1.0, 1.0], false)];
        for (x, want) in cases {
            let out = interpret_program(&p, &[Array::vector(x.to_vec())], 0).unwrap();
            assert_eq!(out, ProgOutput::Bool(want), "{x:?}");
        }
    }

    #[test]
    fn loop_guard_and_chain() {
        // Pairwise comparisons with an i == j guard: D[i,j] = sign(I[i] - I[j]).
        let p = Program {
            name: "cmp".into(),
            sizes: vec![("n".into(), 3)],
            params: vec![],
            comment: String::new(),
            inputs: vec![("I".into(), Shape::vector(Affine::var("n")))],
            stmts: vec![
                Stmt::Loop(LoopStmt {
                    target: "D".into(),
                    shape: Shape::matrix(Affine::var("n"), Affine::var("n")),
                    indices: vec!["i".into(), "j".into()],
                    skip_equal: Some(("i".into(), "j".into())),
                    locals: vec![],
                    value: Value::Chain(IfChain {
                        init: Number::int(0),
                        branches: vec![
                            (
                                E::cmp(
                                    CmpOp::Gt,
                                    E::elem("I", vec![Affine::var("i")]),
                                    E::elem("I", vec![Affine::var("j")]),
                                ),
                                BranchBody::Value(Number::int(1)),
                            ),
                            (
                                E::cmp(
                                    CmpOp::Lt,
                                    E::elem("I", vec![Affine::var("i")]),
                                    E::elem("I", vec![Affine::var("j")]),
                                ),
                                BranchBody::Value(Number::int(-1)),
                            ),
                        ],
                        else_val: None,
                    }),
                }),
                Stmt::Loop(LoopStmt {
                    target: "C".into(),
                    shape: Shape::vector(Affine::var("n")),
                    indices: vec!["i".into()],
                    skip_equal: None,
                    locals: vec![],
                    value: Value::Expr(E::Sum(Slice {
                        array: "D".into(),
                        sel: vec![DimSel::At(Affine::var("i")), DimSel::Full],
                    })),
                }),
            ],
            output: Output::ArgmaxChoice { array: "C".into() },
            labels: Labels::Indices,
        };
        let out = interpret_program(&p, &[Array::vector(vec![3.0, -7.0, 2.0])], 1).unwrap();
        match out {
            ProgOutput::Choice { tie_set, choice } => {
                assert_eq!(tie_set, vec![0]); // 3 beats -7 and 2
                assert_eq!(choice, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn softmax_output_normalized() {
        let p = Program {
            name: "s".into(),
            sizes: vec![],
            params: vec![],
            comment: String::new(),
            inputs: vec![("I".into(), Shape::vector(Affine::konst(2)))],
            stmts: vec![
                Stmt::Scalar(ScalarStmt {
                    target: "C1".into(),
                    locals: vec![],
                    value: Value::Expr(E::elem("I", vec![Affine::konst(0)])),
                }),
                Stmt::Scalar(ScalarStmt {
                    target: "C2".into(),
                    locals: vec![],
                    value: Value::Expr(E::elem("I", vec![Affine::konst(1)])),
                }),
                Stmt::Gather { target: "C".into(), elems: vec!["C1".into(), "C2".into()] },
            ],
            output: Output::Softmax { array: "C".into() },
            labels: Labels::None,
        };
        let out = interpret_program(&p, &[Array::vector(vec![0.0, 0.0])], 0).unwrap();
        assert_eq!(out, ProgOutput::Probs(vec![0.5, 0.5]));
    }

    #[test]
    fn equivalence_empty_inputs_vacuous() {
        use crate::dataset::{InputLayout, Label};
        use crate::enn::{Layer, LayerKind, Network, Neuron, OutputHead};
        let net = Network::new(
            InputLayout::Vector(2),
            vec![Layer::new(LayerKind::Concept, vec![Neuron::new(vec![1.0, 0.0], 0.0)])],
            OutputHead::Argmax,
            vec![Label::class("a")],
        );
        let r = check_equivalence(&xor_prog(), &net, &[]).unwrap();
        assert_eq!(r, EquivReport::PassEmpty);
    }
}
