//! Pretty-printer from the program IR to Python-style text.

use std::collections::BTreeMap;

use crate::ir::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    PythonText,
    Pseudocode,
}

/// Deterministic text for a program. Fixed-size programs print bound sizes
/// as integer literals; generalized programs print the affine forms.
pub fn emit_code(p: &Program, target: Target) -> String {
    let mut e = Emitter { sizes: p.size_env(), lines: Vec::new(), indent: 0 };
    match target {
        Target::PythonText => {
            e.push("import numpy as np");
            if matches!(p.output, Output::ArgmaxChoice { .. }) {
                e.push("import random");
            }
            e.push("");
            let args = e.signature_args(p);
            e.push(&format!("def {}({}):", p.display_name(), args));
        }
        Target::Pseudocode => {
            let args = e.signature_args(p);
            e.push(&format!("procedure {}({})", p.display_name(), args));
        }
    }
    e.indent = 1;
    if !p.comment.is_empty() {
        e.push(&format!("#{}", e.render_comment(&p.comment)));
    }
    for stmt in &p.stmts {
        e.push("");
        e.stmt(stmt);
    }
    e.push("");
    e.output(&p.output);
    if target == Target::Pseudocode {
        e.indent = 0;
        e.push("end");
    }
    let mut text = e.lines.join("\n");
    text.push('\n');
    text
}

/// Strips all whitespace within lines and drops blank lines, the
/// equivalence used for golden-file comparison.
pub fn normalize(text: &str) -> String {
    text.lines()
        .map(|l| l.chars().filter(|c| !c.is_whitespace()).collect::<String>())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

struct Emitter {
    sizes: BTreeMap<String, i64>,
    lines: Vec<String>,
    indent: usize,
}

impl Emitter {
    fn push(&mut self, s: &str) {
        if s.is_empty() {
            self.lines.push(String::new());
        } else {
            self.lines.push(format!("{}{}", "\t".repeat(self.indent), s));
        }
    }

    fn signature_args(&self, p: &Program) -> String {
        let mut args: Vec<String> = p.inputs.iter().map(|(n, _)| n.clone()).collect();
        for param in &p.params {
            if !p.sizes.iter().any(|(n, _)| n == param) {
                args.push(param.clone());
            }
        }
        args.join(", ")
    }

    fn render_comment(&self, c: &str) -> String {
        let mut out = String::new();
        let mut rest = c;
        while let Some(start) = rest.find('{') {
            out.push_str(&rest[..start]);
            let end = match rest[start..].find('}') {
                Some(e) => start + e,
                None => break,
            };
            let inner = &rest[start + 1..end];
            let (name, halve) = match inner.strip_suffix("/2") {
                Some(n) => (n, true),
                None => (inner, false),
            };
            match self.sizes.get(name) {
                Some(v) if halve => out.push_str(&(v / 2).to_string()),
                Some(v) => out.push_str(&v.to_string()),
                None if halve => out.push_str(&format!("{name}/2")),
                None => out.push_str(name),
            }
            rest = &rest[end + 1..];
        }
        out.push_str(rest);
        out
    }

    fn affine(&self, a: &Affine) -> String {
        let a = a.subst(&self.sizes);
        if a.terms.is_empty() {
            return a.konst.to_string();
        }
        let mut s = String::new();
        for (name, c) in &a.terms {
            let piece = match c {
                1 => name.clone(),
                -1 => format!("-{name}"),
                c => format!("{c}*{name}"),
            };
            if s.is_empty() {
                s = piece;
            } else if piece.starts_with('-') {
                s.push_str(&piece);
            } else {
                s.push('+');
                s.push_str(&piece);
            }
        }
        match a.konst.cmp(&0) {
            std::cmp::Ordering::Greater => s.push_str(&format!("+{}", a.konst)),
            std::cmp::Ordering::Less => s.push_str(&a.konst.to_string()),
            std::cmp::Ordering::Equal => {}
        }
        s
    }

    fn number(&self, n: &Number) -> String {
        match n {
            Number::Int(a) => self.affine(a),
            Number::Real(r) => {
                if r.fract() == 0.0 && r.abs() < 1e15 {
                    format!("{r:.1}")
                } else {
                    format!("{r}")
                }
            }
        }
    }

    fn slice(&self, s: &Slice) -> String {
        if s.sel.iter().all(|d| matches!(d, DimSel::Full)) {
            return s.array.clone();
        }
        let parts: Vec<String> = s
            .sel
            .iter()
            .map(|d| match d {
                DimSel::At(a) => self.affine(a),
                DimSel::From(a) => format!("{}:", self.affine(a)),
                DimSel::Full => ":".to_string(),
            })
            .collect();
        format!("{}[{}]", s.array, parts.join(", "))
    }

    /// Arithmetic-context rendering.
    fn expr(&self, e: &Expr) -> String {
        match e {
            Expr::Num(n) => self.number(n),
            Expr::Var(v) => v.clone(),
            Expr::Ref { array, idx } => {
                let parts: Vec<String> = idx.iter().map(|a| self.affine(a)).collect();
                format!("{}[{}]", array, parts.join(", "))
            }
            Expr::Sum(s) => format!("np.sum({})", self.slice(s)),
            Expr::Mean(s) => format!("np.mean({})", self.slice(s)),
            Expr::AllEq(s, n) => format!("np.all({}=={})", self.slice(s), self.number(n)),
            Expr::AnyNe(s, n) => format!("np.any({}!={})", self.slice(s), self.number(n)),
            Expr::Lin { terms, parens } => {
                let mut s = String::new();
                for (coef, t) in terms {
                    let ts = self.expr(t);
                    let cs = self.number(coef);
                    let piece = match cs.as_str() {
                        "1" => ts,
                        "-1" => format!("-{ts}"),
                        _ => format!("{cs}*{ts}"),
                    };
                    if s.is_empty() {
                        s = piece;
                    } else if let Some(rest) = piece.strip_prefix('-') {
                        s.push_str(&format!(" - {rest}"));
                    } else {
                        s.push_str(&format!(" + {piece}"));
                    }
                }
                if *parens {
                    format!("({s})")
                } else {
                    s
                }
            }
            Expr::Cmp { op, lhs, rhs } => {
                format!("{} {} {}", self.expr(lhs), op.symbol(), self.expr(rhs))
            }
            Expr::And(_) | Expr::Or(_) | Expr::Not(_) => self.bool_expr(e),
        }
    }

    /// Boolean-context rendering: `and` groups self-parenthesize, `or`
    /// chains do not, `not` wraps unless it is the whole condition.
    fn bool_expr(&self, e: &Expr) -> String {
        match e {
            Expr::And(v) => {
                let parts: Vec<String> = v.iter().map(|a| self.bool_expr(a)).collect();
                format!("({})", parts.join(" and "))
            }
            Expr::Or(v) => {
                let parts: Vec<String> = v.iter().map(|a| self.bool_expr(a)).collect();
                parts.join(" or ")
            }
            Expr::Not(inner) => format!("(not {})", self.expr(inner)),
            other => self.expr(other),
        }
    }

    fn cond(&self, e: &Expr) -> String {
        match e {
            Expr::Not(inner) => format!("not {}", self.expr(inner)),
            other => self.bool_expr(other),
        }
    }

    fn stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::Scalar(s) => {
                match &s.value {
                    Value::Expr(e) => {
                        for (name, le) in &s.locals {
                            self.local(name, le);
                        }
                        let rhs = self.bool_expr(e);
                        self.push(&format!("{} = {}", s.target, rhs));
                    }
                    Value::Chain(c) => {
                        self.push(&format!("{} = {}", s.target, self.number(&c.init)));
                        for (name, le) in &s.locals {
                            self.local(name, le);
                        }
                        self.chain(&s.target, c);
                    }
                }
            }
            Stmt::Loop(l) => self.loop_stmt(l),
            Stmt::Gather { target, elems } => {
                self.push(&format!("{} = [{}]", target, elems.join(", ")));
            }
        }
    }

    fn local(&mut self, name: &str, e: &Expr) {
        self.push(&format!("{} = {}", name, self.expr(e)));
    }

    fn loop_stmt(&mut self, l: &LoopStmt) {
        let zeros = match l.shape.dims.len() {
            1 => format!("np.zeros({})", self.affine(&l.shape.dims[0])),
            _ => {
                let dims: Vec<String> = l.shape.dims.iter().map(|d| self.affine(d)).collect();
                format!("np.zeros(({}))", dims.join(", "))
            }
        };
        self.push(&format!("{} = {}", l.target, zeros));
        for (var, dim) in l.indices.iter().zip(&l.shape.dims) {
            self.push(&format!("for {} in range({}):", var, self.affine(dim)));
            self.indent += 1;
        }
        if let Some((a, b)) = &l.skip_equal {
            self.push(&format!("if {a} == {b}:"));
            self.indent += 1;
            self.push("continue");
            self.indent -= 1;
        }
        for (name, le) in &l.locals {
            self.local(name, le);
        }
        let idx: Vec<&str> = l.indices.iter().map(|s| s.as_str()).collect();
        let elem = format!("{}[{}]", l.target, idx.join(", "));
        match &l.value {
            Value::Expr(e) => {
                let rhs = self.bool_expr(e);
                self.push(&format!("{elem} = {rhs}"));
            }
            Value::Chain(c) => self.chain(&elem, c),
        }
        self.indent -= l.indices.len();
    }

    fn chain(&mut self, target: &str, c: &IfChain) {
        for (i, (cond, body)) in c.branches.iter().enumerate() {
            let kw = if i == 0 { "if" } else { "elif" };
            self.push(&format!("{kw} {}:", self.cond(cond)));
            self.indent += 1;
            match body {
                BranchBody::Value(n) => {
                    self.push(&format!("{target} = {}", self.number(n)));
                }
                BranchBody::Nested(inner) => {
                    for (k, (ic, iv)) in inner.iter().enumerate() {
                        let ikw = if k == 0 { "if" } else { "elif" };
                        self.push(&format!("{ikw} {}:", self.cond(ic)));
                        self.indent += 1;
                        self.push(&format!("{target} = {}", self.number(iv)));
                        self.indent -= 1;
                    }
                }
            }
            self.indent -= 1;
        }
        if let Some(n) = &c.else_val {
            self.push("else:");
            self.indent += 1;
            self.push(&format!("{target} = {}", self.number(n)));
            self.indent -= 1;
        }
    }

    /// `return` lines print the top-level chain without parentheses:
    /// `return C1 and not C2`.
    fn return_expr(&self, e: &Expr) -> String {
        let part = |p: &Expr| match p {
            Expr::Not(inner) => format!("not {}", self.expr(inner)),
            other => self.bool_expr(other),
        };
        match e {
            Expr::And(v) => v.iter().map(part).collect::<Vec<_>>().join(" and "),
            Expr::Or(v) => v.iter().map(part).collect::<Vec<_>>().join(" or "),
            other => part(other),
        }
    }

    fn output(&mut self, o: &Output) {
        match o {
            Output::Bool { expr } => {
                let e = self.return_expr(expr);
                self.push(&format!("return {e}"));
            }
            Output::ArgmaxChoice { array } => {
                self.push(&format!("results = np.where({array}==max({array}))[0]"));
                self.push("return random.choice(results)");
            }
            Output::Softmax { array } => {
                self.push(&format!("return np.exp({array})/np.sum(np.exp({array}))"));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Expr as E;

    #[test]
    fn empty_body_function() {
        let p = Program {
            name: "f".into(),
            sizes: vec![],
            params: vec![],
            comment: String::new(),
            inputs: vec![("I".into(), Shape::vector(Affine::konst(2)))],
            stmts: vec![],
            output: Output::bool_pair("C1", "C2"),
            labels: Labels::None,
        };
        let norm = normalize(&emit_code(&p, Target::PythonText));
        let lines: Vec<&str> = norm.lines().collect();
        assert_eq!(lines, vec!["importnumpyasnp", "deff(I):", "returnC1andnotC2"]);
    }

    #[test]
    fn boolean_parenthesization() {
        // D1 = (not I[0]) or ((not I[1]) and (not I[2]))
        let lit = |i: i64| E::elem("I", vec![Affine::konst(i)]);
        let p = Program {
            name: "b".into(),
            sizes: vec![],
            params: vec![],
            comment: String::new(),
            inputs: vec![("I".into(), Shape::vector(Affine::konst(3)))],
            stmts: vec![Stmt::Scalar(ScalarStmt {
                target: "D1".into(),
                locals: vec![],
                value: Value::Expr(E::Or(vec![
                    lit(0).not(),
                    E::And(vec![lit(1).not(), lit(2).not()]),
                ])),
            })],
            output: Output::bool_pair("D1", "D1"),
            labels: Labels::None,
        };
        let text = emit_code(&p, Target::PythonText);
        assert!(
            text.contains("D1 = (not I[0]) or ((not I[1]) and (not I[2]))"),
            "got:\n{text}"
        );
    }

    #[test]
    fn loop_with_guard_and_chain() {
        let p = Program {
            name: "m".into(),
            sizes: vec![("n".into(), 4)],
            params: vec![],
            comment: "I is an array of {n} numbers".into(),
            inputs: vec![("I".into(), Shape::vector(Affine::var("n")))],
            stmts: vec![Stmt::Loop(LoopStmt {
                target: "D1".into(),
                shape: Shape::matrix(Affine::var("n"), Affine::var("n")),
                indices: vec!["i".into(), "j".into()],
                skip_equal: Some(("i".into(), "j".into())),
                locals: vec![
                    ("value_1".into(), E::elem("I", vec![Affine::var("i")])),
                    ("value_2".into(), E::elem("I", vec![Affine::var("j")])),
                ],
                value: Value::Chain(IfChain {
                    init: Number::int(0),
                    branches: vec![
                        (
                            E::cmp(CmpOp::Gt, E::var("value_1"), E::var("value_2")),
                            BranchBody::Value(Number::int(1)),
                        ),
                        (
                            E::cmp(CmpOp::Lt, E::var("value_1"), E::var("value_2")),
                            BranchBody::Value(Number::int(-1)),
                        ),
                    ],
                    else_val: None,
                }),
            })],
            output: Output::ArgmaxChoice { array: "D1".into() },
            labels: Labels::Indices,
        };
        let text = emit_code(&p, Target::PythonText);
        assert!(text.contains("import random"));
        assert!(text.contains("def m_4(I):"));
        assert!(text.contains("#I is an array of 4 numbers"));
        assert!(text.contains("D1 = np.zeros((4, 4))"));
        assert!(text.contains("for i in range(4):"));
        assert!(text.contains("\t\t\tcontinue"));
        assert!(text.contains("D1[i, j] = 1"));
        assert!(text.contains("results = np.where(D1==max(D1))[0]"));

        // Generalized rendering of the same structure.
        let mut g = p.clone();
        g.sizes.clear();
        g.params = vec!["n".into()];
        let text = emit_code(&g, Target::PythonText);
        assert!(text.contains("def m(I, n):"));
        assert!(text.contains("#I is an array of n numbers"));
        assert!(text.contains("np.zeros((n, n))"));
    }

    #[test]
    fn affine_and_real_formatting() {
        let e = Emitter { sizes: BTreeMap::new(), lines: vec![], indent: 0 };
        assert_eq!(e.affine(&Affine::linear(1, "n", -2)), "n-2");
        assert_eq!(e.affine(&Affine::linear(-2, "n", 3)), "-2*n+3");
        assert_eq!(e.affine(&Affine::linear(-1, "n", 2)), "-n+2");
        assert_eq!(e.number(&Number::Real(10.0)), "10.0");
        assert_eq!(e.number(&Number::Real(2.298)), "2.298");
        assert_eq!(e.number(&Number::Real(0.5)), "0.5");
    }

    #[test]
    fn normalize_drops_blank_and_spacing() {
        let a = "x = 1\n\n\ty  =\t 2\n";
        assert_eq!(normalize(a), "x=1\ny=2");
    }

    #[test]
    fn emission_is_deterministic() {
        let p = Program {
            name: "s".into(),
            sizes: vec![],
            params: vec![],
            comment: String::new(),
            inputs: vec![("I".into(), Shape::vector(Affine::konst(2)))],
            stmts: vec![Stmt::Gather { target: "C".into(), elems: vec!["a".into(), "b".into()] }],
            output: Output::Softmax { array: "C".into() },
            labels: Labels::None,
        };
        assert_eq!(emit_code(&p, Target::PythonText), emit_code(&p, Target::PythonText));
        assert!(emit_code(&p, Target::Pseudocode).starts_with("procedure s(I)"));
    }
}
