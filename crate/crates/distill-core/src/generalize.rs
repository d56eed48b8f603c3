//! Fuse programs condensed at several input sizes into one size-parametric
//! program: align their structure, fit each varying integer constant as an
//! exact affine function of the size parameters, and substitute.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ir::{Affine, Program};

/// A structural alignment of same-shaped programs at different sizes, with
/// one site per integer-affine literal.
#[derive(Debug, Clone)]
pub struct SizeTemplate {
    /// First program, used as the rebuild base.
    base: Program,
    /// Size parameter names in signature order.
    params: Vec<String>,
    /// Size bindings per program.
    envs: Vec<BTreeMap<String, i64>>,
    /// Per site: the affine literal from each program, in walk order.
    sites: Vec<Vec<Affine>>,
    /// Exact affine fit per site, present after `fit_constants`.
    fits: Option<Vec<Affine>>,
}

impl SizeTemplate {
    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }
}

/// Structurally align programs condensed at different sizes. Requires at
/// least 3 sizes, identical skeletons, and identical non-constant structure
/// (names, labels, real literals, loop-variable terms).
pub fn align_programs(programs: &[Program]) -> Result<SizeTemplate> {
    if programs.len() < 3 {
        return Err(Error::NeedThreeSizes(programs.len()));
    }
    let base = &programs[0];
    let params: Vec<String> = base.sizes.iter().map(|(k, _)| k.clone()).collect();
    if params.is_empty() {
        return Err(Error::NonGeneralizable("programs have no bound size parameters".into()));
    }
    let mut envs = Vec::with_capacity(programs.len());
    for p in programs {
        let keys: Vec<String> = p.sizes.iter().map(|(k, _)| k.clone()).collect();
        if keys != params {
            return Err(Error::NonGeneralizable(format!(
                "size parameters differ: {params:?} vs {keys:?}"
            )));
        }
        if p.name != base.name {
            return Err(Error::NonGeneralizable(format!(
                "program names differ: {} vs {}",
                base.name, p.name
            )));
        }
        envs.push(p.size_env());
    }
    let skeleton = base.skeleton();
    for p in &programs[1..] {
        let other = p.skeleton();
        if other != skeleton {
            return Err(Error::NonGeneralizable(divergence(&skeleton, &other, &base.name)));
        }
    }
    // Column-major: one row per site, one entry per program.
    let mut columns: Vec<Vec<Affine>> = Vec::with_capacity(programs.len());
    for p in programs {
        let mut col = Vec::new();
        p.walk_affines(&mut |a| col.push(a.clone()));
        columns.push(col);
    }
    let n_sites = columns[0].len();
    let mut sites = Vec::with_capacity(n_sites);
    for s in 0..n_sites {
        let row: Vec<Affine> = columns.iter().map(|c| c[s].clone()).collect();
        // Loop-variable terms must agree exactly; only constants may vary.
        if row.windows(2).any(|w| w[0].terms != w[1].terms) {
            return Err(Error::NonGeneralizable(format!(
                "site {s}: loop-variable terms differ across sizes"
            )));
        }
        sites.push(row);
    }
    Ok(SizeTemplate { base: base.clone(), params, envs, sites, fits: None })
}

/// Name the first structural divergence between two skeletons.
fn divergence(a: &Program, b: &Program, name: &str) -> String {
    if a.stmts.len() != b.stmts.len() {
        return format!(
            "{name}: statement counts differ ({} vs {})",
            a.stmts.len(),
            b.stmts.len()
        );
    }
    for (i, (sa, sb)) in a.stmts.iter().zip(&b.stmts).enumerate() {
        if sa != sb {
            return format!("{name}: statement {i} diverges structurally");
        }
    }
    if a.inputs != b.inputs {
        return format!("{name}: input declarations diverge");
    }
    format!("{name}: output or labels diverge")
}

/// Fit every site with an exact integer affine function of the size
/// parameters.
pub fn fit_constants(mut t: SizeTemplate) -> Result<SizeTemplate> {
    let mut fits = Vec::with_capacity(t.sites.len());
    for (s, row) in t.sites.iter().enumerate() {
        let values: Vec<i64> = row.iter().map(|a| a.konst).collect();
        let fit = fit_affine(&values, &t.envs, &t.params).ok_or(Error::NonLinearConstant {
            site: format!("site {s} with values {values:?}"),
        })?;
        // Re-attach the (shared) loop-variable terms of the site.
        let mut terms = row[0].terms.clone();
        terms.extend(fit.terms);
        fits.push(Affine::from_parts(fit.konst, terms));
    }
    t.fits = Some(fits);
    Ok(t)
}

/// Exact integer affine fit of `values[j]` against the parameter values in
/// `envs[j]`. Tries the constant fit, then each single parameter, then pairs.
fn fit_affine(values: &[i64], envs: &[BTreeMap<String, i64>], params: &[String]) -> Option<Affine> {
    if values.windows(2).all(|w| w[0] == w[1]) {
        return Some(Affine::konst(values[0]));
    }
    for p in params {
        if let Some(fit) = fit_one(values, envs, p) {
            return Some(fit);
        }
    }
    for (i, p) in params.iter().enumerate() {
        for q in &params[i + 1..] {
            if let Some(fit) = fit_two(values, envs, p, q) {
                return Some(fit);
            }
        }
    }
    None
}

fn check_fit(fit: &Affine, values: &[i64], envs: &[BTreeMap<String, i64>]) -> bool {
    envs.iter().zip(values).all(|(env, &v)| fit.eval(env).is_ok_and(|r| r == v))
}

/// `v = a*p + b` from the first two points with distinct `p`, verified on all.
fn fit_one(values: &[i64], envs: &[BTreeMap<String, i64>], p: &str) -> Option<Affine> {
    let xs: Vec<i64> = envs.iter().map(|e| *e.get(p).unwrap()).collect();
    let j = (1..xs.len()).find(|&j| xs[j] != xs[0])?;
    let (dx, dv) = (xs[j] - xs[0], values[j] - values[0]);
    if dv % dx != 0 {
        return None;
    }
    let a = dv / dx;
    let fit = Affine::linear(a, p, values[0] - a * xs[0]);
    check_fit(&fit, values, envs).then_some(fit)
}

/// `v = a*p + b*q + c` solved from three points by integer elimination,
/// verified on all.
fn fit_two(values: &[i64], envs: &[BTreeMap<String, i64>], p: &str, q: &str) -> Option<Affine> {
    let pts: Vec<(i64, i64, i64)> = envs
        .iter()
        .zip(values)
        .map(|(e, &v)| (*e.get(p).unwrap(), *e.get(q).unwrap(), v))
        .collect();
    // Find three points with a non-singular system.
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (x1, y1, v1) = pts[i];
                let (x2, y2, v2) = pts[j];
                let (x3, y3, v3) = pts[k];
                let det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
                if det == 0 {
                    continue;
                }
                let a_num = (v2 - v1) * (y3 - y1) - (v3 - v1) * (y2 - y1);
                let b_num = (x2 - x1) * (v3 - v1) - (x3 - x1) * (v2 - v1);
                if a_num % det != 0 || b_num % det != 0 {
                    return None;
                }
                let (a, b) = (a_num / det, b_num / det);
                let c = v1 - a * x1 - b * y1;
                let fit = Affine::from_parts(
                    c,
                    vec![(p.to_string(), a), (q.to_string(), b)],
                );
                return check_fit(&fit, values, envs).then_some(fit);
            }
        }
    }
    None
}

/// Produce the size-parametric program from a fitted template.
pub fn generalize(t: &SizeTemplate) -> Result<Program> {
    let fits = t
        .fits
        .as_ref()
        .ok_or_else(|| Error::NonGeneralizable("template has not been fitted".into()))?;
    let mut idx = 0usize;
    let mut out = t.base.map_affines(&mut |_| {
        let a = fits[idx].clone();
        idx += 1;
        a
    });
    out.sizes.clear();
    out.params = t.params.clone();
    Ok(out)
}

/// Align, fit, and generalize in one step.
pub fn generalize_programs(programs: &[Program]) -> Result<Program> {
    generalize(&fit_constants(align_programs(programs)?)?)
}

/// Bind the size parameters of a generalized program, reproducing a
/// fixed-size program.
pub fn instantiate(generalized: &Program, sizes: &[(String, i64)]) -> Result<Program> {
    for p in &generalized.params {
        if !sizes.iter().any(|(k, _)| k == p) {
            return Err(Error::IrValidation(format!("missing size binding for parameter {p}")));
        }
    }
    let bindings: BTreeMap<String, i64> = sizes.iter().cloned().collect();
    let mut out = generalized.map_affines(&mut |a| a.subst(&bindings));
    out.params = Vec::new();
    out.sizes = sizes.to_vec();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::*;

    /// A small loop program parameterized by hand: `n` controls the loop
    /// bound, a threshold `n - 2`, and a weight `3 - 2n`.
    fn sum_all() -> Expr {
        Expr::Sum(Slice { array: "I".into(), sel: vec![DimSel::Full] })
    }

    fn toy_program(n: i64) -> Program {
        let chain = IfChain {
            init: Number::int(0),
            branches: vec![(
                Expr::cmp(CmpOp::Lt, sum_all(), Expr::Num(Number::Int(Affine::konst(n - 2)))),
                BranchBody::Value(Number::Int(Affine::konst(3 - 2 * n))),
            )],
            else_val: None,
        };
        Program {
            name: "toy".into(),
            sizes: vec![("n".into(), n)],
            params: vec![],
            comment: "I is an input of size {n}".into(),
            inputs: vec![("I".into(), Shape::vector(Affine::konst(n)))],
            stmts: vec![Stmt::Loop(LoopStmt {
                target: "S".into(),
                shape: Shape::vector(Affine::konst(n)),
                indices: vec!["i".into()],
                skip_equal: None,
                locals: vec![],
                value: Value::Chain(chain),
            })],
            output: Output::ArgmaxChoice { array: "S".into() },
            labels: Labels::Indices,
        }
    }

    #[test]
    fn round_trip_single_parameter() {
        let progs: Vec<Program> = [18, 19, 20].iter().map(|&n| toy_program(n)).collect();
        let generalized = generalize_programs(&progs).unwrap();
        assert!(generalized.sizes.is_empty());
        assert_eq!(generalized.params, vec!["n".to_string()]);
        for p in &progs {
            let back = instantiate(&generalized, &p.sizes).unwrap();
            assert_eq!(&back, p);
        }
        // Extrapolation to an untrained size matches direct construction.
        assert_eq!(instantiate(&generalized, &[("n".into(), 50)]).unwrap(), toy_program(50));
    }

    #[test]
    fn fits_paper_examples() {
        // Values (16,17,18) at sizes (18,19,20) fit n - 2.
        let envs: Vec<BTreeMap<String, i64>> = [18i64, 19, 20]
            .iter()
            .map(|&n| BTreeMap::from([("n".to_string(), n)]))
            .collect();
        let fit = fit_affine(&[16, 17, 18], &envs, &["n".to_string()]).unwrap();
        assert_eq!(fit, Affine::linear(1, "n", -2));
        // Values (-33,-35,-37) fit 3 - 2n.
        let fit = fit_affine(&[-33, -35, -37], &envs, &["n".to_string()]).unwrap();
        assert_eq!(fit, Affine::linear(-2, "n", 3));
        // Constant values fit a = 0.
        let fit = fit_affine(&[5, 5, 5], &envs, &["n".to_string()]).unwrap();
        assert_eq!(fit, Affine::konst(5));
        // Quadratic values have no affine fit.
        assert!(fit_affine(&[324, 361, 400], &envs, &["n".to_string()]).is_none());
    }

    #[test]
    fn two_parameter_fit() {
        let envs: Vec<BTreeMap<String, i64>> = [(8i64, 98i64), (9, 99), (10, 98), (8, 100)]
            .iter()
            .map(|&(n, m)| BTreeMap::from([("n".to_string(), n), ("m".to_string(), m)]))
            .collect();
        let params = ["n".to_string(), "m".to_string()];
        // v = 2n - 3m + 7.
        let values: Vec<i64> =
            envs.iter().map(|e| 2 * e["n"] - 3 * e["m"] + 7).collect();
        let fit = fit_affine(&values, &envs, &params).unwrap();
        assert_eq!(fit, Affine::from_parts(7, vec![("n".into(), 2), ("m".into(), -3)]));
    }

    #[test]
    fn alignment_errors() {
        let progs = vec![toy_program(18), toy_program(19)];
        assert!(matches!(align_programs(&progs), Err(Error::NeedThreeSizes(2))));

        let mut odd = toy_program(20);
        odd.stmts.push(odd.stmts[0].clone());
        let progs = vec![toy_program(18), toy_program(19), odd];
        match align_programs(&progs) {
            Err(Error::NonGeneralizable(msg)) => assert!(msg.contains("statement counts")),
            other => panic!("expected non-generalizable error, got {other:?}"),
        }
    }

    #[test]
    fn non_linear_site_is_reported() {
        let mut p18 = toy_program(18);
        let mut p19 = toy_program(19);
        let mut p20 = toy_program(20);
        // Overwrite the threshold with a quadratic sequence.
        for (p, v) in [(&mut p18, 10i64), (&mut p19, 11), (&mut p20, 13)] {
            if let Stmt::Loop(LoopStmt { value: Value::Chain(chain), .. }) = &mut p.stmts[0] {
                chain.branches[0].0 =
                    Expr::cmp(CmpOp::Lt, sum_all(), Expr::Num(Number::Int(Affine::konst(v))));
            }
        }
        let t = align_programs(&[p18, p19, p20]).unwrap();
        match fit_constants(t) {
            Err(Error::NonLinearConstant { site }) => assert!(site.contains("site")),
            other => panic!("expected non-linear-constant error, got {other:?}"),
        }
    }

    #[test]
    fn identical_programs_have_constant_sites() {
        // Same structure with sizes attached but no size-dependent constants:
        // everything fits with a = 0 and round-trips.
        let mut progs = Vec::new();
        for n in [5i64, 6, 7] {
            let mut p = toy_program(5);
            p.sizes = vec![("n".into(), n)];
            progs.push(p);
        }
        let generalized = generalize_programs(&progs).unwrap();
        let back = instantiate(&generalized, &[("n".into(), 9)]).unwrap();
        let mut expect = toy_program(5);
        expect.sizes = vec![("n".into(), 9)];
        assert_eq!(back, expect);
    }
}
