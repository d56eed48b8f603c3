//! Network-to-program condensation. Hidden weights are rescaled to small
//! integers, neurons with the same integer structure collapse into loops,
//! and every emitted program is checked against the network before it is
//! returned.
//!
//! Two routes, picked by input size:
//! - small symbolic inputs (<= 12 binary cells): enumerate the whole input
//!   domain, fold constant neurons away, and minimize two-valued neurons
//!   into boolean formulas;
//! - everything else: decompose each neuron's weights over the upstream
//!   arrays into whole-array / row / column / element parts, then group
//!   neurons whose parts differ only by an affine index shift into loops.

use std::collections::BTreeMap;

use crate::dataset::InputLayout;
use crate::enn::{Activation, LayerKind, Network, OutputHead};
use crate::error::{Error, Result};
use crate::interp::{check_equivalence, Array, EquivReport};
use crate::ir::*;
use crate::qm;

#[derive(Debug, Clone)]
pub struct CondenseOptions {
    /// Base program name, e.g. "absmax".
    pub name: String,
    /// Program comment; `{n}` placeholders follow the codegen rules.
    pub comment: String,
    /// Bound size parameters recorded on the program, e.g. [("n", 20)].
    pub sizes: Vec<(String, i64)>,
    /// Absolute tolerance when rounding rescaled weights to integers.
    pub eps: f64,
    /// Largest extra multiplier tried during integer rescaling.
    pub alpha_max: i64,
    /// Weights below `max * prune` count as zero.
    pub prune: f64,
}

impl CondenseOptions {
    pub fn new(name: &str, comment: &str, sizes: Vec<(String, i64)>) -> Self {
        CondenseOptions {
            name: name.into(),
            comment: comment.into(),
            sizes,
            eps: 1e-6,
            alpha_max: 64,
            prune: 1e-9,
        }
    }
}

/// Largest domain enumerated exhaustively by the symbolic route.
const ENUM_CAP: usize = 1 << 12;

/// Condenses `net` into a program and verifies it on `verify` inputs;
/// any disagreement is a condensation error.
pub fn condense(net: &Network, opts: &CondenseOptions, verify: &[Vec<Array>]) -> Result<Program> {
    net.validate()?;
    let dim = net.input_layout.len();
    let symbolic = dim <= ENUM_CAP.trailing_zeros() as usize
        && verify
            .iter()
            .flat_map(|arrs| arrs.iter().flat_map(|a| a.data.iter()))
            .all(|&v| v == 0.0 || v == 1.0);
    let prog = if symbolic {
        condense_enum(net, opts)?
    } else {
        condense_group(net, opts)?
    };
    match check_equivalence(&prog, net, verify)? {
        EquivReport::Counterexample { case, detail } => {
            Err(Error::Condensation(format!("case {case}: {detail}")))
        }
        _ => Ok(prog),
    }
}

// ---------------------------------------------------------------------------
// shared pieces

/// Rescales values to integers: divide by the smallest nonzero magnitude,
/// then try small integer multipliers until everything rounds cleanly.
/// Returns integers as exact f64s.
pub fn integerize(vals: &[f64], eps: f64, alpha_max: i64, prune: f64) -> Option<Vec<f64>> {
    let max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Some(vec![0.0; vals.len()]);
    }
    let cut = max * prune;
    let pruned: Vec<f64> = vals.iter().map(|&v| if v.abs() <= cut { 0.0 } else { v }).collect();
    let min_abs = pruned.iter().filter(|v| **v != 0.0).fold(f64::INFINITY, |m, v| m.min(v.abs()));
    for alpha in 1..=alpha_max {
        let scale = alpha as f64 / min_abs;
        let mut out = Vec::with_capacity(vals.len());
        let mut ok = true;
        for &v in &pruned {
            let s = v * scale;
            let r = s.round();
            if (s - r).abs() > eps * r.abs().max(1.0) || r.abs() > 1e12 {
                ok = false;
                break;
            }
            out.push(r);
        }
        if ok {
            return Some(out);
        }
    }
    None
}

fn layer_prefix(kind: LayerKind) -> &'static str {
    match kind {
        LayerKind::Differentia => "D",
        LayerKind::Subconcept => "S",
        LayerKind::Concept => "C",
    }
}

fn labels_from_net(net: &Network) -> Labels {
    match net.output_head {
        OutputHead::Softmax => Labels::None,
        OutputHead::Argmax => {
            let names: Option<Vec<String>> = net
                .concept_labels
                .iter()
                .map(|l| l.class_name().map(str::to_string))
                .collect();
            match names {
                Some(names) => {
                    let indexed =
                        names.iter().enumerate().all(|(i, n)| *n == i.to_string());
                    if indexed {
                        Labels::Indices
                    } else {
                        Labels::Named(names)
                    }
                }
                None => Labels::None,
            }
        }
    }
}

fn num_of(v: f64) -> Number {
    if v.fract() == 0.0 && v.abs() < 9e15 {
        Number::Int(Affine::konst(v as i64))
    } else {
        Number::Real(v)
    }
}

/// `sum(terms) + bias` as a Lin, with the bias as a trailing `1 * b` term.
fn lin_with_bias(mut terms: Vec<(Number, Expr)>, bias: f64) -> Expr {
    if bias != 0.0 {
        terms.push((Number::int(1), Expr::Num(num_of(bias))));
    }
    if terms.is_empty() {
        terms.push((Number::int(1), Expr::num(0)));
    }
    Expr::Lin { terms, parens: false }
}

/// Sign / indicator threshold chain for `act(lin + bias)`.
fn threshold_chain(terms: Vec<(Number, Expr)>, bias: f64, act: Activation) -> Value {
    let lin = Expr::Lin { terms, parens: false };
    let rhs = Expr::Num(num_of(-bias));
    let gt = Expr::cmp(CmpOp::Gt, lin.clone(), rhs.clone());
    let mut branches = vec![(gt, BranchBody::Value(Number::int(1)))];
    if act == Activation::Sign {
        branches.push((Expr::cmp(CmpOp::Lt, lin, rhs), BranchBody::Value(Number::int(-1))));
    }
    Value::Chain(IfChain { init: Number::int(0), branches, else_val: None })
}

fn floor_div(a: i64, b: i64) -> i64 {
    let (a, b) = if b < 0 { (-a, -b) } else { (a, b) };
    a.div_euclid(b)
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -floor_div(-a, b)
}

/// Widest band (inclusive value count) the nested grid form may branch on.
const MAX_GRID_BRANCHES: i64 = 4;

/// If-chain for `sign(p*s + q*o + bias)` where `s` and `o` are integer sums
/// bounded by `vi` and `vo`. Outside a band of `o` values the sign is
/// fixed by `o` alone; inside the band each `o` value gets conditions on
/// `s`. Returns the band width alongside the chain so callers can pick the
/// tighter orientation. `None` when the band is too wide to read well.
fn band_chain(
    outer: (i64, i64, &str),
    inner: (i64, i64, &str),
    bias: i64,
) -> Option<(i64, IfChain)> {
    let (q, vo, o_name) = outer;
    let (p, vi, i_name) = inner;
    // The sign can depend on the inner variable only while
    // |q*o + bias| <= |p|*vi.
    let reach = p.abs() * vi;
    let (mut lo, mut hi) = if q > 0 {
        (ceil_div(-bias - reach, q), floor_div(-bias + reach, q))
    } else {
        (ceil_div(-bias + reach, q), floor_div(-bias - reach, q))
    };
    lo = lo.max(-vo);
    hi = hi.min(vo);
    if lo > hi || hi - lo + 1 > MAX_GRID_BRANCHES {
        return None;
    }
    let lit = |k: i64| Expr::Num(Number::int(k));
    let side = |m: i64| Number::int(if q * m + bias > 0 { 1 } else { -1 });
    let mut branches: Vec<(Expr, BranchBody)> = Vec::new();
    if lo > -vo {
        branches.push((
            Expr::cmp(CmpOp::Lt, Expr::var(o_name), lit(lo)),
            BranchBody::Value(side(lo - 1)),
        ));
    }
    if hi < vo {
        branches.push((
            Expr::cmp(CmpOp::Gt, Expr::var(o_name), lit(hi)),
            BranchBody::Value(side(hi + 1)),
        ));
    }
    for m in lo..=hi {
        // f = p*s - c with c = -(q*m + bias).
        let c = -(q * m + bias);
        let gt = (Expr::cmp(CmpOp::Gt, Expr::var(i_name), lit(floor_div(c, p))), floor_div(c, p) < vi);
        let lt = (Expr::cmp(CmpOp::Lt, Expr::var(i_name), lit(ceil_div(c, p))), ceil_div(c, p) > -vi);
        let ((pos, pos_ok), (neg, neg_ok)) = if p > 0 { (gt, lt) } else { (lt, gt) };
        let mut arms = Vec::new();
        if pos_ok {
            arms.push((pos, Number::int(1)));
        }
        if neg_ok {
            arms.push((neg, Number::int(-1)));
        }
        if arms.is_empty() {
            continue;
        }
        branches.push((
            Expr::cmp(CmpOp::Eq, Expr::var(o_name), lit(m)),
            BranchBody::Nested(arms),
        ));
    }
    if branches.is_empty() {
        return None;
    }
    Some((hi - lo + 1, IfChain { init: Number::int(0), branches, else_val: None }))
}

/// Nested logic for a sign neuron over exactly two bounded condensed
/// variables: the sum of one row or column of an upstream group plus the
/// sum of the rest of that group. The raw threshold form of such neurons
/// carries constants that grow with the group size; the banded if-chain
/// keeps every emitted constant within the variables' own ranges.
fn nested_grid_value(
    iface: &Iface,
    plan: &FamilyPlan,
    vars: (&str, &str),
    act: Activation,
) -> Option<(Vec<(String, Expr)>, Value)> {
    if act != Activation::Sign || !plan.scalars.is_empty() || plan.slots.len() != 1 {
        return None;
    }
    let fs = &plan.slots[0];
    let g = &iface.groups[fs.group];
    let cols = g.cols?;
    if g.skip_diag || fs.kind == SlotKind::Elem {
        return None;
    }
    if plan.gammas.iter().enumerate().any(|(gi, &gm)| gi != fs.group && gm != 0.0) {
        return None;
    }
    let as_int = |v: f64| (v.fract() == 0.0 && v.abs() < 9e15).then_some(v as i64);
    let q = as_int(plan.gammas[fs.group])?;
    let p = as_int(plan.gammas[fs.group] + fs.coeff)?;
    let bias = as_int(plan.bias)?;
    if p == 0 || q == 0 || p.abs() == q.abs() {
        return None;
    }

    let slice_len = match fs.kind {
        SlotKind::Col => g.rows as i64,
        _ => cols as i64,
    };
    let total = (g.rows * cols) as i64;
    let aff = fs.row.to_affine(vars);
    let sel = match fs.kind {
        SlotKind::Col => vec![DimSel::Full, DimSel::At(aff)],
        _ => vec![DimSel::At(aff), DimSel::Full],
    };
    let (s_name, o_name) = match fs.kind {
        SlotKind::Col => ("col_sum", "offcol_sum"),
        _ => ("row_sum", "offrow_sum"),
    };
    let slice_sum = Expr::Sum(Slice { array: g.name.clone(), sel });
    let full_sum = Expr::Sum(Slice {
        array: g.name.clone(),
        sel: vec![DimSel::Full, DimSel::Full],
    });
    let off_sum = Expr::Lin {
        terms: vec![(Number::int(1), full_sum), (Number::int(-1), slice_sum.clone())],
        parens: true,
    };

    let o_var = (q, total - slice_len, o_name);
    let s_var = (p, slice_len, s_name);
    let chain = match (band_chain(o_var, s_var, bias), band_chain(s_var, o_var, bias)) {
        (Some((wa, ca)), Some((wb, cb))) => {
            if wa <= wb {
                ca
            } else {
                cb
            }
        }
        (Some((_, c)), None) | (None, Some((_, c))) => c,
        (None, None) => return None,
    };
    let locals = vec![(s_name.to_string(), slice_sum), (o_name.to_string(), off_sum)];
    Some((locals, Value::Chain(chain)))
}

/// Boolean formula for a set of minterms over `vars`, via Quine-McCluskey.
fn qm_expr(minterms: &[u32], vars: &[Expr]) -> Result<Expr> {
    let mut implicants = qm::minimize(minterms, vars.len())?;
    implicants.sort_by_key(|im| (im.mask, im.bits));
    if implicants.is_empty() {
        return Ok(Expr::num(0));
    }
    let mut ors = Vec::new();
    for im in implicants {
        let mut lits = Vec::new();
        for (j, var) in vars.iter().enumerate() {
            if im.mask >> j & 1 == 1 {
                if im.bits >> j & 1 == 1 {
                    lits.push(var.clone());
                } else {
                    lits.push(var.clone().not());
                }
            }
        }
        ors.push(match lits.len() {
            0 => Expr::num(1),
            1 => lits.pop().unwrap(),
            _ => Expr::And(lits),
        });
    }
    Ok(if ors.len() == 1 { ors.pop().unwrap() } else { Expr::Or(ors) })
}

fn shape_of(layout: &InputLayout) -> Result<Shape> {
    match layout {
        InputLayout::Vector(n) => Ok(Shape::vector(Affine::konst(*n as i64))),
        InputLayout::Grid(r, c) => {
            Ok(Shape::matrix(Affine::konst(*r as i64), Affine::konst(*c as i64)))
        }
        InputLayout::Concat(_) => {
            Err(Error::Model("nested concatenated input layouts cannot be condensed".into()))
        }
    }
}

/// Input declarations: a single `I`, or `I1..Ik` for concatenated parts.
fn input_decls(layout: &InputLayout) -> Result<Vec<(String, Shape)>> {
    match layout {
        InputLayout::Concat(parts) => parts
            .iter()
            .enumerate()
            .map(|(i, p)| Ok((format!("I{}", i + 1), shape_of(p)?)))
            .collect(),
        _ => Ok(vec![("I".into(), shape_of(layout)?)]),
    }
}

fn input_cell_expr(layout: &InputLayout, coord: usize) -> Expr {
    match layout {
        InputLayout::Grid(_, c) => Expr::elem(
            "I",
            vec![Affine::konst((coord / c) as i64), Affine::konst((coord % c) as i64)],
        ),
        InputLayout::Concat(parts) => {
            let mut off = coord;
            for (i, p) in parts.iter().enumerate() {
                if off < p.len() {
                    let name = format!("I{}", i + 1);
                    return match p {
                        InputLayout::Grid(_, c) => Expr::elem(
                            &name,
                            vec![Affine::konst((off / c) as i64), Affine::konst((off % c) as i64)],
                        ),
                        _ => Expr::elem(&name, vec![Affine::konst(off as i64)]),
                    };
                }
                off -= p.len();
            }
            unreachable!("coordinate {coord} outside concatenated layout")
        }
        _ => Expr::elem("I", vec![Affine::konst(coord as i64)]),
    }
}

// ---------------------------------------------------------------------------
// exhaustive route: small binary inputs

/// How an already-emitted value can be used downstream. Booleans carry the
/// numeric mapping `v = lo + (hi - lo) * b`.
#[derive(Debug, Clone)]
enum EnumRef {
    Bool { expr: Expr, lo: f64, hi: f64 },
    Num(Expr),
    Const(f64),
}

fn condense_enum(net: &Network, opts: &CondenseOptions) -> Result<Program> {
    let dim = net.input_layout.len();
    let combos = 1usize << dim;
    // Joint activations of every layer over the whole binary input domain.
    let mut records: Vec<Vec<Vec<f64>>> = Vec::with_capacity(combos);
    for bits in 0..combos {
        let x: Vec<f64> = (0..dim).map(|k| (bits >> k & 1) as f64).collect();
        records.push(net.forward_eval(&x)?.layers);
    }

    let mut refs: Vec<EnumRef> = (0..dim)
        .map(|k| EnumRef::Bool { expr: input_cell_expr(&net.input_layout, k), lo: 0.0, hi: 1.0 })
        .collect();
    let mut stmts = Vec::new();

    let n_layers = net.layers.len();
    for (li, layer) in net.layers.iter().enumerate() {
        let is_concept = li + 1 == n_layers;
        let prefix = layer_prefix(layer.kind);
        let mut next_refs = Vec::with_capacity(layer.width());
        let mut counter = 0usize;

        // Argmax concept scores may share one positive rescaling factor;
        // per-neuron scaling would reorder them.
        let concept_ints: Option<Vec<Vec<f64>>> = if is_concept {
            if net.output_head == OutputHead::Argmax {
                let all: Vec<f64> = layer
                    .neurons
                    .iter()
                    .flat_map(|n| n.weights.iter().copied().chain([n.bias]))
                    .collect();
                integerize(&all, opts.eps, opts.alpha_max, opts.prune).map(|ints| {
                    ints.chunks(dim_of(layer))
                        .map(|c| c.to_vec())
                        .collect()
                })
            } else {
                None
            }
        } else {
            None
        };

        for (k, neuron) in layer.neurons.iter().enumerate() {
            let reachable: Vec<f64> = {
                let mut outs: Vec<f64> = records.iter().map(|r| r[li][k]).collect();
                outs.sort_by(f64::total_cmp);
                outs.dedup();
                outs
            };
            if !is_concept && reachable.len() == 1 {
                next_refs.push(EnumRef::Const(reachable[0]));
                continue;
            }

            // Fold constant upstream values into the bias.
            let mut bias = neuron.bias;
            let mut active: Vec<usize> = Vec::new();
            for (u, &w) in neuron.weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                match &refs[u] {
                    EnumRef::Const(c) => bias += w * c,
                    _ => active.push(u),
                }
            }

            let scaled = match &concept_ints {
                Some(per) => {
                    let mut v: Vec<f64> = active.iter().map(|&u| per[k][u]).collect();
                    // Constant folds use the shared scale too.
                    let scale = shared_scale(neuron, &per[k]);
                    v.push(bias * scale);
                    Some(v)
                }
                None => {
                    let mut vals: Vec<f64> = active.iter().map(|&u| neuron.weights[u]).collect();
                    vals.push(bias);
                    integerize(&vals, opts.eps, opts.alpha_max, opts.prune)
                }
            };

            if is_concept {
                // Raw score: a plain linear form, never thresholded.
                let (coeffs, b) = match &scaled {
                    Some(v) => (v[..active.len()].to_vec(), v[active.len()]),
                    None => {
                        (active.iter().map(|&u| neuron.weights[u]).collect(), bias)
                    }
                };
                let (terms, b) = fold_terms(&active, &coeffs, b, &refs);
                counter += 1;
                let target = format!("{prefix}{counter}");
                stmts.push(Stmt::Scalar(ScalarStmt {
                    target: target.clone(),
                    locals: vec![],
                    value: Value::Expr(lin_with_bias(terms, b)),
                }));
                next_refs.push(EnumRef::Num(Expr::var(&target)));
                continue;
            }

            // Boolean minimization when the neuron is a two-valued function
            // of boolean upstream values, over every bit combination (a
            // consistent extension of its behavior on reachable inputs).
            let mut emitted = None;
            if let Some(ints) = &scaled {
                let all_bool = active.iter().all(|&u| matches!(refs[u], EnumRef::Bool { .. }));
                if all_bool && active.len() <= qm::MAX_VARS {
                    let k_vars = active.len();
                    let mut vals = Vec::with_capacity(1 << k_vars);
                    for bits in 0..1u32 << k_vars {
                        let mut pre = ints[k_vars];
                        for (j, &u) in active.iter().enumerate() {
                            let (lo, hi) = match &refs[u] {
                                EnumRef::Bool { lo, hi, .. } => (*lo, *hi),
                                _ => unreachable!(),
                            };
                            let b = (bits >> j & 1) as f64;
                            pre += ints[j] * (lo + (hi - lo) * b);
                        }
                        vals.push(layer.activation.apply(pre));
                    }
                    let mut distinct = vals.clone();
                    distinct.sort_by(f64::total_cmp);
                    distinct.dedup();
                    if distinct.len() == 2 {
                        let (lo, hi) = (distinct[0], distinct[1]);
                        let minterms: Vec<u32> = (0..1u32 << k_vars)
                            .filter(|&b| vals[b as usize] == hi)
                            .collect();
                        let vars: Vec<Expr> = active
                            .iter()
                            .map(|&u| match &refs[u] {
                                EnumRef::Bool { expr, .. } => expr.clone(),
                                _ => unreachable!(),
                            })
                            .collect();
                        let expr = qm_expr(&minterms, &vars)?;
                        counter += 1;
                        let target = format!("{prefix}{counter}");
                        stmts.push(Stmt::Scalar(ScalarStmt {
                            target: target.clone(),
                            locals: vec![],
                            value: Value::Expr(expr),
                        }));
                        emitted =
                            Some(EnumRef::Bool { expr: Expr::var(&target), lo, hi });
                    }
                }
            }

            if let Some(r) = emitted {
                next_refs.push(r);
                continue;
            }

            // Numeric threshold chain fallback.
            let (coeffs, b) = match &scaled {
                Some(v) => (v[..active.len()].to_vec(), v[active.len()]),
                None => (active.iter().map(|&u| neuron.weights[u]).collect(), bias),
            };
            let (terms, b) = fold_terms(&active, &coeffs, b, &refs);
            counter += 1;
            let target = format!("{prefix}{counter}");
            stmts.push(Stmt::Scalar(ScalarStmt {
                target: target.clone(),
                locals: vec![],
                value: threshold_chain(terms, b, layer.activation),
            }));
            next_refs.push(EnumRef::Num(Expr::var(&target)));
        }

        if is_concept {
            let elems: Vec<String> = (1..=counter).map(|i| format!("{prefix}{i}")).collect();
            stmts.push(Stmt::Gather { target: "C".into(), elems });
        }
        refs = next_refs;
    }

    assemble(net, opts, stmts)
}

fn dim_of(layer: &crate::enn::Layer) -> usize {
    layer.input_width() + 1
}

/// Scale factor implied by a shared integerization, recovered from the
/// first nonzero weight.
fn shared_scale(neuron: &crate::enn::Neuron, ints: &[f64]) -> f64 {
    for (w, i) in neuron.weights.iter().chain([&neuron.bias]).zip(ints) {
        if *w != 0.0 {
            return i / w;
        }
    }
    1.0
}

/// Linear terms over upstream references, with boolean mappings folded in:
/// `w * (lo + (hi-lo) b)` becomes a `(hi-lo) w` coefficient plus `w lo`
/// into the bias. Term order follows ascending coordinates so float sums
/// reproduce the network's accumulation exactly.
fn fold_terms(
    active: &[usize],
    coeffs: &[f64],
    bias: f64,
    refs: &[EnumRef],
) -> (Vec<(Number, Expr)>, f64) {
    let mut terms = Vec::new();
    let mut b = bias;
    for (&u, &w) in active.iter().zip(coeffs) {
        match &refs[u] {
            EnumRef::Bool { expr, lo, hi } => {
                b += w * lo;
                let c = w * (hi - lo);
                if c != 0.0 {
                    terms.push((num_of(c), expr.clone()));
                }
            }
            EnumRef::Num(expr) => terms.push((num_of(w), expr.clone())),
            EnumRef::Const(_) => unreachable!(),
        }
    }
    (terms, b)
}

fn assemble(net: &Network, opts: &CondenseOptions, stmts: Vec<Stmt>) -> Result<Program> {
    let output = match net.output_head {
        OutputHead::Argmax => Output::ArgmaxChoice { array: "C".into() },
        OutputHead::Softmax => Output::Softmax { array: "C".into() },
    };
    let prog = Program {
        name: opts.name.clone(),
        sizes: opts.sizes.clone(),
        params: vec![],
        comment: opts.comment.clone(),
        inputs: input_decls(&net.input_layout)?,
        stmts,
        output,
        labels: labels_from_net(net),
    };
    Ok(prog)
}

// ---------------------------------------------------------------------------
// structural route: weight decomposition and loop grouping

/// Emitted layout of one layer, as seen by the next layer.
struct Iface {
    groups: Vec<GroupInfo>,
    refs: Vec<CellRef>,
}

#[derive(Debug, Clone)]
struct GroupInfo {
    name: String,
    rows: usize,
    /// None for vector groups.
    cols: Option<usize>,
    skip_diag: bool,
}

#[derive(Debug, Clone)]
enum CellRef {
    Cell { group: usize, r: usize, c: usize },
    Var(String),
}

impl Iface {
    fn from_input(layout: &InputLayout) -> Result<Iface> {
        let (rows, cols) = match layout {
            InputLayout::Vector(n) => (*n, None),
            InputLayout::Grid(r, c) => (*r, Some(*c)),
            InputLayout::Concat(_) => {
                return Err(Error::Model("concatenated input layouts cannot be condensed".into()))
            }
        };
        let width = layout.len();
        let c_dim = cols.unwrap_or(1);
        let refs = (0..width)
            .map(|k| CellRef::Cell { group: 0, r: k / c_dim, c: k % c_dim })
            .collect();
        Ok(Iface {
            groups: vec![GroupInfo { name: "I".into(), rows, cols, skip_diag: false }],
            refs,
        })
    }

    /// Weights of one neuron arranged per upstream group; scalar-upstream
    /// weights listed separately in coordinate order.
    fn split_weights(&self, w: &[f64]) -> (Vec<Vec<Vec<f64>>>, Vec<(String, f64)>) {
        let mut per: Vec<Vec<Vec<f64>>> = self
            .groups
            .iter()
            .map(|g| vec![vec![0.0; g.cols.unwrap_or(1)]; g.rows])
            .collect();
        let mut scalars = Vec::new();
        for (u, &wu) in w.iter().enumerate() {
            match &self.refs[u] {
                CellRef::Cell { group, r, c } => per[*group][*r][*c] = wu,
                CellRef::Var(name) => {
                    if wu != 0.0 {
                        scalars.push((name.clone(), wu));
                    }
                }
            }
        }
        (per, scalars)
    }

    fn cell_expr(&self, u: usize) -> Expr {
        match &self.refs[u] {
            CellRef::Var(name) => Expr::var(name),
            CellRef::Cell { group, r, c } => {
                let g = &self.groups[*group];
                let mut idx = vec![Affine::konst(*r as i64)];
                if g.cols.is_some() {
                    idx.push(Affine::konst(*c as i64));
                }
                Expr::Ref { array: g.name.clone(), idx }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotKind {
    Row,
    Col,
    Elem,
}

/// One additive piece of a neuron's weights over one upstream group.
#[derive(Debug, Clone)]
struct Slot {
    group: usize,
    kind: SlotKind,
    coeff: f64,
    /// (row, col); col is 0 for vector groups and Row/Col slots.
    idx: (usize, usize),
}

/// A neuron's integer weights decomposed into slots plus per-group
/// constant fills.
#[derive(Debug, Clone)]
struct Decomp {
    gammas: Vec<f64>,
    slots: Vec<Slot>,
    scalars: Vec<(String, f64)>,
    bias: f64,
}

impl Decomp {
    /// Grouping key: everything except slot positions.
    fn signature(&self) -> String {
        let mut s = format!("b{};g{:?};", self.bias, self.gammas);
        let mut kinds: Vec<String> = self
            .slots
            .iter()
            .map(|sl| format!("{}:{:?}:{}", sl.group, sl.kind, sl.coeff))
            .collect();
        kinds.sort();
        s.push_str(&kinds.join(","));
        s.push(';');
        for (n, c) in &self.scalars {
            s.push_str(&format!("{n}={c},"));
        }
        s
    }
}

const MAX_ROW_SLOTS: usize = 2;
const MAX_COL_SLOTS: usize = 2;
const MAX_ELEM_SLOTS: usize = 4;

fn mode(values: impl Iterator<Item = f64>) -> f64 {
    let mut counts: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match counts.iter_mut().find(|(x, _)| *x == v) {
            Some((_, c)) => *c += 1,
            None => counts.push((v, 1)),
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.total_cmp(&a.0)))
        .map(|(v, _)| v)
        .unwrap_or(0.0)
}

fn decompose(iface: &Iface, w: &[f64], bias: f64) -> Option<Decomp> {
    let (per, scalars) = iface.split_weights(w);
    let mut gammas = Vec::with_capacity(iface.groups.len());
    let mut slots = Vec::new();
    for (gi, g) in iface.groups.iter().enumerate() {
        let grid = &per[gi];
        let valid = |r: usize, c: usize| !(g.skip_diag && r == c);
        match g.cols {
            None => {
                let gamma = mode(grid.iter().map(|row| row[0]));
                gammas.push(gamma);
                let mut elems = 0;
                for (r, row) in grid.iter().enumerate() {
                    if row[0] != gamma {
                        slots.push(Slot {
                            group: gi,
                            kind: SlotKind::Elem,
                            coeff: row[0] - gamma,
                            idx: (r, 0),
                        });
                        elems += 1;
                    }
                }
                if elems > MAX_ELEM_SLOTS {
                    return None;
                }
            }
            Some(cols) => {
                let gamma = mode(
                    grid.iter()
                        .enumerate()
                        .flat_map(|(r, row)| {
                            row.iter().enumerate().filter_map(move |(c, &v)| {
                                if g.skip_diag && r == c {
                                    None
                                } else {
                                    Some(v)
                                }
                            })
                        }),
                );
                gammas.push(gamma);
                let mut row_adj = vec![0.0; g.rows];
                for r in 0..g.rows {
                    row_adj[r] =
                        mode((0..cols).filter(|&c| valid(r, c)).map(|c| grid[r][c] - gamma));
                }
                let mut col_adj = vec![0.0; cols];
                for c in 0..cols {
                    col_adj[c] = mode(
                        (0..g.rows)
                            .filter(|&r| valid(r, c))
                            .map(|r| grid[r][c] - gamma - row_adj[r]),
                    );
                }
                let mut n_rows = 0;
                for (r, &a) in row_adj.iter().enumerate() {
                    if a != 0.0 {
                        slots.push(Slot { group: gi, kind: SlotKind::Row, coeff: a, idx: (r, 0) });
                        n_rows += 1;
                    }
                }
                let mut n_cols = 0;
                for (c, &a) in col_adj.iter().enumerate() {
                    if a != 0.0 {
                        slots.push(Slot { group: gi, kind: SlotKind::Col, coeff: a, idx: (c, 0) });
                        n_cols += 1;
                    }
                }
                let mut n_elems = 0;
                for r in 0..g.rows {
                    for c in 0..cols {
                        if !valid(r, c) {
                            continue;
                        }
                        let rem = grid[r][c] - gamma - row_adj[r] - col_adj[c];
                        if rem != 0.0 {
                            slots.push(Slot {
                                group: gi,
                                kind: SlotKind::Elem,
                                coeff: rem,
                                idx: (r, c),
                            });
                            n_elems += 1;
                        }
                    }
                }
                if n_rows > MAX_ROW_SLOTS || n_cols > MAX_COL_SLOTS || n_elems > MAX_ELEM_SLOTS {
                    return None;
                }
            }
        }
    }
    Some(Decomp { gammas, slots, scalars, bias })
}

/// Rebuilds the flat weight vector a decomposition describes.
fn reconstruct(iface: &Iface, gammas: &[f64], slots: &[Slot], scalars: &[(String, f64)]) -> Vec<f64> {
    let width = iface.refs.len();
    let mut w = vec![0.0; width];
    for (u, r) in iface.refs.iter().enumerate() {
        if let CellRef::Cell { group, .. } = r {
            w[u] = gammas[*group];
        }
    }
    for slot in slots {
        let g = &iface.groups[slot.group];
        for (u, r) in iface.refs.iter().enumerate() {
            if let CellRef::Cell { group, r: rr, c: cc } = r {
                if *group != slot.group {
                    continue;
                }
                let hit = match slot.kind {
                    SlotKind::Row => *rr == slot.idx.0,
                    SlotKind::Col => *cc == slot.idx.0,
                    SlotKind::Elem => {
                        *rr == slot.idx.0 && (g.cols.is_none() || *cc == slot.idx.1)
                    }
                };
                if hit {
                    w[u] += slot.coeff;
                }
            }
        }
    }
    for (name, c) in scalars {
        for (u, r) in iface.refs.iter().enumerate() {
            if let CellRef::Var(n) = r {
                if n == name {
                    w[u] = *c;
                }
            }
        }
    }
    w
}

/// Parsed provenance components, e.g. `c3.s1|c0.s2` -> [3, 1, 0, 2].
fn provenance_parts(p: &str) -> Option<Vec<i64>> {
    let mut out = Vec::new();
    for piece in p.split(['|', '.']) {
        let digits: String = piece.chars().filter(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() || !piece.chars().next()?.is_ascii_alphabetic() {
            return None;
        }
        out.push(digits.parse().ok()?);
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

/// Affine index form `a*i + b*j + c` used by family slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct IdxForm {
    a: i64,
    b: i64,
    c: i64,
}

impl IdxForm {
    fn konstant(c: i64) -> Self {
        IdxForm { a: 0, b: 0, c }
    }

    fn eval(&self, i: usize, j: usize) -> i64 {
        self.a * i as i64 + self.b * j as i64 + self.c
    }

    fn to_affine(self, vars: (&str, &str)) -> Affine {
        let mut a = Affine::konst(self.c);
        if self.a != 0 {
            a = a.add(&Affine::linear(self.a, vars.0, 0));
        }
        if self.b != 0 {
            a = a.add(&Affine::linear(self.b, vars.1, 0));
        }
        a
    }
}

#[derive(Debug, Clone)]
struct FamilySlot {
    group: usize,
    kind: SlotKind,
    coeff: f64,
    row: IdxForm,
    col: IdxForm,
}

/// A loopable set of neurons: one statement parametrized by (i[, j]).
struct FamilyPlan {
    /// (cell_i, cell_j) per member, aligned with `members`.
    members: Vec<(usize, (usize, usize))>,
    dims: (usize, usize),
    two_d: bool,
    skip_diag: bool,
    gammas: Vec<f64>,
    slots: Vec<FamilySlot>,
    scalars: Vec<(String, f64)>,
    bias: f64,
}

/// Exact affine interpolation of slot positions from a reference member
/// and probes that differ in one loop coordinate.
fn interp_idx(
    ref_cell: (usize, usize),
    ref_pos: i64,
    probe_a: Option<((usize, usize), i64)>,
    probe_b: Option<((usize, usize), i64)>,
) -> Option<IdxForm> {
    let mut a = 0i64;
    let mut b = 0i64;
    if let Some((cell, pos)) = probe_a {
        let d = cell.0 as i64 - ref_cell.0 as i64;
        let dp = pos - ref_pos;
        if dp % d != 0 {
            return None;
        }
        a = dp / d;
    }
    if let Some((cell, pos)) = probe_b {
        let d = cell.1 as i64 - ref_cell.1 as i64;
        let dp = pos - ref_pos;
        if dp % d != 0 {
            return None;
        }
        b = dp / d;
    }
    Some(IdxForm { a, b, c: ref_pos - a * ref_cell.0 as i64 - b * ref_cell.1 as i64 })
}

/// Try to fit one family: members share a decomposition signature; slot
/// positions must vary affinely with the member's loop coordinates.
fn fit_family(
    iface: &Iface,
    members: &[(usize, (usize, usize))],
    decomps: &BTreeMap<usize, Decomp>,
    weights: &BTreeMap<usize, Vec<f64>>,
    dims: (usize, usize),
    two_d: bool,
    skip_diag: bool,
) -> Option<FamilyPlan> {
    let ref_m = &members[0];
    let ref_d = &decomps[&ref_m.0];

    // Probes share one coordinate with the reference so each loop-var
    // coefficient can be isolated.
    let probe_a = members[1..]
        .iter()
        .find(|(_, cell)| cell.1 == ref_m.1 .1 && cell.0 != ref_m.1 .0);
    let probe_b = if two_d {
        members[1..]
            .iter()
            .find(|(_, cell)| cell.0 == ref_m.1 .0 && cell.1 != ref_m.1 .1)
    } else {
        None
    };
    if members.len() > 1 && probe_a.is_none() && probe_b.is_none() {
        return None;
    }

    // Candidate probe slots per reference slot, among equal (group, kind,
    // coeff) classes; ambiguity is resolved by full verification.
    let slot_candidates = |probe: Option<&&(usize, (usize, usize))>, s: &Slot| -> Vec<Option<Slot>> {
        match probe {
            None => vec![None],
            Some((n, _)) => decomps[n]
                .slots
                .iter()
                .filter(|t| t.group == s.group && t.kind == s.kind && t.coeff == s.coeff)
                .cloned()
                .map(Some)
                .collect(),
        }
    };

    // Cartesian product over per-slot candidate pairs, capped.
    let mut assignments: Vec<Vec<(Option<Slot>, Option<Slot>)>> = vec![vec![]];
    for s in &ref_d.slots {
        let cands_a = slot_candidates(probe_a.as_ref(), s);
        let cands_b = slot_candidates(probe_b.as_ref(), s);
        let mut next = Vec::new();
        for base in &assignments {
            for ca in &cands_a {
                for cb in &cands_b {
                    let mut v = base.clone();
                    v.push((ca.clone(), cb.clone()));
                    next.push(v);
                }
            }
        }
        if next.len() > 256 || next.is_empty() {
            return None;
        }
        assignments = next;
    }

    'hypothesis: for assign in &assignments {
        let mut slots = Vec::with_capacity(ref_d.slots.len());
        for (s, (ca, cb)) in ref_d.slots.iter().zip(assign) {
            let row = interp_idx(
                ref_m.1,
                s.idx.0 as i64,
                probe_a.zip(ca.as_ref()).map(|((_, cell), t)| (*cell, t.idx.0 as i64)),
                probe_b.zip(cb.as_ref()).map(|((_, cell), t)| (*cell, t.idx.0 as i64)),
            );
            let col = if s.kind == SlotKind::Elem && iface.groups[s.group].cols.is_some() {
                interp_idx(
                    ref_m.1,
                    s.idx.1 as i64,
                    probe_a.zip(ca.as_ref()).map(|((_, cell), t)| (*cell, t.idx.1 as i64)),
                    probe_b.zip(cb.as_ref()).map(|((_, cell), t)| (*cell, t.idx.1 as i64)),
                )
            } else {
                Some(IdxForm::konstant(0))
            };
            match (row, col) {
                (Some(r), Some(c)) => slots.push(FamilySlot {
                    group: s.group,
                    kind: s.kind,
                    coeff: s.coeff,
                    row: r,
                    col: c,
                }),
                _ => continue 'hypothesis,
            }
        }
        // Verify: the plan must reproduce every member's weights exactly.
        for (n, cell) in members {
            let mut concrete = Vec::with_capacity(slots.len());
            let mut ok = true;
            for fs in &slots {
                let r = fs.row.eval(cell.0, cell.1);
                let c = fs.col.eval(cell.0, cell.1);
                let g = &iface.groups[fs.group];
                let (r_lim, c_lim) = (g.rows as i64, g.cols.unwrap_or(1) as i64);
                if r < 0 || r >= r_lim || c < 0 || c >= c_lim {
                    ok = false;
                    break;
                }
                concrete.push(Slot {
                    group: fs.group,
                    kind: fs.kind,
                    coeff: fs.coeff,
                    idx: (r as usize, c as usize),
                });
            }
            if !ok
                || reconstruct(iface, &ref_d.gammas, &concrete, &ref_d.scalars) != weights[n]
            {
                continue 'hypothesis;
            }
        }
        return Some(FamilyPlan {
            members: members.to_vec(),
            dims,
            two_d,
            skip_diag,
            gammas: ref_d.gammas.clone(),
            slots,
            scalars: ref_d.scalars.clone(),
            bias: ref_d.bias,
        });
    }
    None
}

/// Linear terms for a family member's pre-activation, with loop variables
/// `vars` standing in for the member coordinates.
fn family_terms(iface: &Iface, plan: &FamilyPlan, vars: (&str, &str)) -> Vec<(Number, Expr)> {
    let mut terms = Vec::new();
    for (gi, &gamma) in plan.gammas.iter().enumerate() {
        if gamma != 0.0 {
            let g = &iface.groups[gi];
            let sel = if g.cols.is_some() {
                vec![DimSel::Full, DimSel::Full]
            } else {
                vec![DimSel::Full]
            };
            terms.push((num_of(gamma), Expr::Sum(Slice { array: g.name.clone(), sel })));
        }
    }
    for fs in &plan.slots {
        let g = &iface.groups[fs.group];
        let row_aff = fs.row.to_affine(vars);
        let expr = match fs.kind {
            SlotKind::Row => Expr::Sum(Slice {
                array: g.name.clone(),
                sel: vec![DimSel::At(row_aff), DimSel::Full],
            }),
            SlotKind::Col => Expr::Sum(Slice {
                array: g.name.clone(),
                sel: vec![DimSel::Full, DimSel::At(row_aff)],
            }),
            SlotKind::Elem => {
                let mut idx = vec![row_aff];
                if g.cols.is_some() {
                    idx.push(fs.col.to_affine(vars));
                }
                Expr::Ref { array: g.name.clone(), idx }
            }
        };
        terms.push((num_of(fs.coeff), expr));
    }
    for (name, c) in &plan.scalars {
        terms.push((num_of(*c), Expr::var(name)));
    }
    if terms.is_empty() {
        terms.push((Number::int(1), Expr::num(0)));
    }
    terms
}

/// One processed layer: emitted statements plus the interface the next
/// layer reads.
struct EmittedLayer {
    stmts: Vec<Stmt>,
    iface: Iface,
}

#[allow(clippy::too_many_arguments)]
fn emit_layer(
    layer: &crate::enn::Layer,
    iface: &Iface,
    opts: &CondenseOptions,
    is_concept: bool,
    head: OutputHead,
    counter_prefix: &str,
) -> Result<EmittedLayer> {
    let width = layer.width();

    // Integerized weights (as exact-integer f64s) plus bias, per neuron.
    // Concept argmax layers share one scale; softmax keeps raw values.
    let mut ints: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    if is_concept && head == OutputHead::Argmax {
        let all: Vec<f64> = layer
            .neurons
            .iter()
            .flat_map(|n| n.weights.iter().copied().chain([n.bias]))
            .collect();
        if let Some(v) = integerize(&all, opts.eps, opts.alpha_max, opts.prune) {
            for (k, chunk) in v.chunks(layer.input_width() + 1).enumerate() {
                ints.insert(k, chunk.to_vec());
            }
        }
    } else if is_concept {
        for (k, n) in layer.neurons.iter().enumerate() {
            let mut v = n.weights.clone();
            v.push(n.bias);
            ints.insert(k, v);
        }
    } else {
        for (k, n) in layer.neurons.iter().enumerate() {
            let mut v = n.weights.clone();
            v.push(n.bias);
            if let Some(iv) = integerize(&v, opts.eps, opts.alpha_max, opts.prune) {
                ints.insert(k, iv);
            }
        }
    }

    let mut decomps: BTreeMap<usize, Decomp> = BTreeMap::new();
    let mut weights: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (k, v) in &ints {
        let (w, b) = (&v[..v.len() - 1], v[v.len() - 1]);
        if let Some(d) = decompose(iface, w, b) {
            decomps.insert(*k, d);
            weights.insert(*k, w.to_vec());
        }
    }

    // Group by signature plus fixed provenance components.
    let provs: Vec<Option<Vec<i64>>> = layer
        .neurons
        .iter()
        .map(|n| n.provenance.as_deref().and_then(provenance_parts))
        .collect();
    let mut families: Vec<Vec<usize>> = Vec::new();
    let mut keyed: BTreeMap<String, usize> = BTreeMap::new();
    for k in 0..width {
        let (Some(d), Some(_)) = (decomps.get(&k), provs[k].as_ref()) else {
            continue;
        };
        let key = d.signature();
        match keyed.get(&key) {
            Some(&f) => families[f].push(k),
            None => {
                keyed.insert(key, families.len());
                families.push(vec![k]);
            }
        }
    }

    // Resolve loop coordinates from provenance: the varying components with
    // the most distinct values become (i[, j]); remaining varying
    // components partition the family further.
    let mut plans: Vec<FamilyPlan> = Vec::new();
    let mut covered: Vec<bool> = vec![false; width];
    for fam in &families {
        if fam.len() < 3 {
            continue;
        }
        let comps = provs[fam[0]].as_ref().unwrap().len();
        if provs.iter().enumerate().any(|(k, p)| {
            fam.contains(&k) && p.as_ref().map(|v| v.len()) != Some(comps)
        }) {
            continue;
        }
        let distinct_per: Vec<Vec<i64>> = (0..comps)
            .map(|c| {
                let mut v: Vec<i64> =
                    fam.iter().map(|&k| provs[k].as_ref().unwrap()[c]).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let mut varying: Vec<usize> =
            (0..comps).filter(|&c| distinct_per[c].len() > 1).collect();
        if varying.is_empty() {
            continue;
        }
        varying.sort_by_key(|&c| std::cmp::Reverse(distinct_per[c].len()));
        let loop_comps: Vec<usize> = varying.iter().copied().take(2).collect();
        let split_comps: Vec<usize> = varying.iter().copied().skip(2).collect();

        // Partition by the leftover components.
        let mut parts: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for &k in fam {
            let p = provs[k].as_ref().unwrap();
            let key: Vec<i64> = split_comps.iter().map(|&c| p[c]).collect();
            parts.entry(key).or_default().push(k);
        }
        for sub in parts.values() {
            if sub.len() < 3 {
                continue;
            }
            if let Some(plan) = plan_subfamily(sub, &provs, &loop_comps, iface, &decomps, &weights)
            {
                plans.push(plan);
            }
        }
    }

    // Keep non-overlapping plans, largest first, in first-member order.
    plans.sort_by_key(|p| {
        (std::cmp::Reverse(p.members.len()), p.members.iter().map(|m| m.0).min())
    });
    let mut kept: Vec<FamilyPlan> = Vec::new();
    for plan in plans {
        if plan.members.iter().all(|(k, _)| !covered[*k]) {
            for (k, _) in &plan.members {
                covered[*k] = true;
            }
            kept.push(plan);
        }
    }
    kept.sort_by_key(|p| p.members.iter().map(|m| m.0).min());

    // Emit: loop families then leftover scalars, names numbered in order
    // of first appearance.
    let mut stmts = Vec::new();
    let mut counter = 0usize;
    let mut refs: Vec<Option<CellRef>> = vec![None; width];
    let mut groups: Vec<GroupInfo> = Vec::new();
    let mut order: Vec<(usize, usize)> = kept
        .iter()
        .enumerate()
        .map(|(fi, p)| (p.members.iter().map(|m| m.0).min().unwrap(), fi))
        .collect();
    order.sort_unstable();

    let full_family_loop = is_concept
        && kept.len() == 1
        && kept[0].members.len() == width
        && !kept[0].two_d
        && kept[0]
            .members
            .iter()
            .enumerate()
            .all(|(pos, (k, cell))| *k == pos && cell.0 == pos);

    for (_, fi) in &order {
        let plan = &kept[*fi];
        counter += 1;
        let name = if full_family_loop {
            "C".to_string()
        } else {
            format!("{counter_prefix}{counter}")
        };
        let vars = ("i", "j");
        let (locals, value) = if is_concept {
            (vec![], Value::Expr(lin_with_bias(family_terms(iface, plan, vars), plan.bias)))
        } else if let Some(lv) = nested_grid_value(iface, plan, vars, layer.activation) {
            lv
        } else {
            (
                vec![],
                threshold_chain(family_terms(iface, plan, vars), plan.bias, layer.activation),
            )
        };
        let (shape, indices) = if plan.two_d {
            (
                Shape::matrix(Affine::konst(plan.dims.0 as i64), Affine::konst(plan.dims.1 as i64)),
                vec!["i".to_string(), "j".to_string()],
            )
        } else {
            (Shape::vector(Affine::konst(plan.dims.0 as i64)), vec!["i".to_string()])
        };
        stmts.push(Stmt::Loop(LoopStmt {
            target: name.clone(),
            shape,
            indices,
            skip_equal: if plan.skip_diag {
                Some(("i".into(), "j".into()))
            } else {
                None
            },
            locals,
            value,
        }));
        let gid = groups.len();
        groups.push(GroupInfo {
            name,
            rows: plan.dims.0,
            cols: if plan.two_d { Some(plan.dims.1) } else { None },
            skip_diag: plan.skip_diag,
        });
        for (k, cell) in &plan.members {
            refs[*k] = Some(CellRef::Cell { group: gid, r: cell.0, c: cell.1 });
        }
    }

    // Leftover neurons become scalar statements.
    for k in 0..width {
        if covered[k] {
            continue;
        }
        counter += 1;
        let name = format!("{counter_prefix}{counter}");
        let (terms, bias) = match (decomps.get(&k), ints.get(&k)) {
            (Some(d), _) => {
                // Compact slot form with concrete indices.
                let plan = FamilyPlan {
                    members: vec![],
                    dims: (0, 0),
                    two_d: false,
                    skip_diag: false,
                    gammas: d.gammas.clone(),
                    slots: d
                        .slots
                        .iter()
                        .map(|s| FamilySlot {
                            group: s.group,
                            kind: s.kind,
                            coeff: s.coeff,
                            row: IdxForm::konstant(s.idx.0 as i64),
                            col: IdxForm::konstant(s.idx.1 as i64),
                        })
                        .collect(),
                    scalars: d.scalars.clone(),
                    bias: d.bias,
                };
                (family_terms(iface, &plan, ("i", "j")), d.bias)
            }
            (None, Some(v)) => {
                // Integerized but not decomposable: element-wise form.
                let terms = v[..v.len() - 1]
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(u, &w)| (num_of(w), iface.cell_expr(u)))
                    .collect();
                (terms, v[v.len() - 1])
            }
            (None, None) => {
                // Raw float weights, element order matching the network's
                // accumulation exactly.
                let n = &layer.neurons[k];
                let terms = n
                    .weights
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(u, &w)| (num_of(w), iface.cell_expr(u)))
                    .collect();
                (terms, n.bias)
            }
        };
        let value = if is_concept {
            Value::Expr(lin_with_bias(terms, bias))
        } else {
            threshold_chain(terms, bias, layer.activation)
        };
        stmts.push(Stmt::Scalar(ScalarStmt { target: name.clone(), locals: vec![], value }));
        refs[k] = Some(CellRef::Var(name));
        covered[k] = true;
    }

    if is_concept && !full_family_loop {
        let elems: Vec<String> = refs
            .iter()
            .map(|r| match r {
                Some(CellRef::Var(n)) => n.clone(),
                _ => String::new(),
            })
            .collect();
        if elems.iter().any(String::is_empty) {
            // Mixed loop/scalar concept layers are not representable as a
            // gather; fall back by rejecting the loop plan entirely.
            return Err(Error::Condensation(
                "concept layer mixes loop and scalar neurons".into(),
            ));
        }
        stmts.push(Stmt::Gather { target: "C".into(), elems });
    }

    Ok(EmittedLayer {
        stmts,
        iface: Iface { groups, refs: refs.into_iter().map(Option::unwrap).collect() },
    })
}

fn plan_subfamily(
    sub: &[usize],
    provs: &[Option<Vec<i64>>],
    loop_comps: &[usize],
    iface: &Iface,
    decomps: &BTreeMap<usize, Decomp>,
    weights: &BTreeMap<usize, Vec<f64>>,
) -> Option<FamilyPlan> {
    let two_d = loop_comps.len() == 2;
    let vals = |c: usize| -> Vec<i64> {
        let mut v: Vec<i64> = sub.iter().map(|&k| provs[k].as_ref().unwrap()[c]).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let d1_vals = vals(loop_comps[0]);
    let d2_vals = if two_d { vals(loop_comps[1]) } else { vec![0] };
    let pos = |vals: &[i64], v: i64| vals.iter().position(|&x| x == v);

    let mut members: Vec<(usize, (usize, usize))> = Vec::with_capacity(sub.len());
    for &k in sub {
        let p = provs[k].as_ref().unwrap();
        let i = pos(&d1_vals, p[loop_comps[0]])?;
        let j = if two_d {
            pos(&d2_vals, p[loop_comps[1]])?
        } else {
            0
        };
        members.push((k, (i, j)));
    }
    // Coverage: full rectangle, or square minus the diagonal.
    let (r, c) = (d1_vals.len(), d2_vals.len());
    let full = r * c;
    let skip_diag = two_d && r == c && members.len() == full - r;
    if !(members.len() == full || skip_diag) {
        return None;
    }
    let mut seen = vec![false; full];
    for (_, (i, j)) in &members {
        let cell = i * c + j;
        if seen[cell] || (skip_diag && i == j) {
            return None;
        }
        seen[cell] = true;
    }
    fit_family(iface, &members, decomps, weights, (r, c), two_d, skip_diag)
}

fn condense_group(net: &Network, opts: &CondenseOptions) -> Result<Program> {
    let mut iface = Iface::from_input(&net.input_layout)?;
    let mut stmts = Vec::new();
    let n_layers = net.layers.len();
    for (li, layer) in net.layers.iter().enumerate() {
        let is_concept = li + 1 == n_layers;
        let emitted = emit_layer(
            layer,
            &iface,
            opts,
            is_concept,
            net.output_head,
            layer_prefix(layer.kind),
        )?;
        stmts.extend(emitted.stmts);
        iface = emitted.iface;
    }
    assemble(net, opts, stmts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::{emit_code, Target};
    use crate::dataset::{Dataset, InputLayout, Label, LabelKind, Sample};
    use crate::trainer::{train, TrainConfig};
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    #[test]
    fn integerize_simple_scalings() {
        assert_eq!(
            integerize(&[0.5, -0.5, 1.0], 1e-6, 64, 1e-9).unwrap(),
            vec![1.0, -1.0, 2.0]
        );
        // 1/3 needs multiplier 3.
        assert_eq!(
            integerize(&[1.0 / 3.0, 1.0], 1e-6, 64, 1e-9).unwrap(),
            vec![1.0, 3.0]
        );
        // Incommensurable values never round cleanly.
        assert!(integerize(&[1.0, std::f64::consts::SQRT_2], 1e-6, 64, 1e-9).is_none());
        // Tiny solver noise prunes to zero.
        assert_eq!(
            integerize(&[1.0, 1e-14], 1e-6, 64, 1e-9).unwrap(),
            vec![1.0, 0.0]
        );
    }

    #[test]
    fn qm_expr_forms() {
        let vars = vec![Expr::var("a"), Expr::var("b")];
        // Only minterm 3: a and b.
        let e = qm_expr(&[3], &vars).unwrap();
        assert_eq!(e, Expr::And(vec![Expr::var("a"), Expr::var("b")]));
        // All minterms: constant true.
        let e = qm_expr(&[0, 1, 2, 3], &vars).unwrap();
        assert_eq!(e, Expr::num(1));
    }

    #[test]
    fn matrix_decomposition_col_minus_row() {
        // w = col 2 - row 1 over a 4x4 grid.
        let iface = Iface::from_input(&InputLayout::Grid(4, 4)).unwrap();
        let mut w = vec![0.0; 16];
        for k in 0..4 {
            w[k * 4 + 2] += 1.0;
            w[4 + k] -= 1.0;
        }
        let d = decompose(&iface, &w, 0.0).unwrap();
        assert_eq!(d.gammas, vec![0.0]);
        let mut kinds: Vec<(SlotKind, f64, usize)> =
            d.slots.iter().map(|s| (s.kind, s.coeff, s.idx.0)).collect();
        kinds.sort_by(|a, b| a.1.total_cmp(&b.1));
        assert_eq!(kinds, vec![(SlotKind::Row, -1.0, 1), (SlotKind::Col, 1.0, 2)]);
        assert_eq!(reconstruct(&iface, &d.gammas, &d.slots, &d.scalars), w);
    }

    fn rule30_ds() -> Dataset {
        let mut samples = Vec::new();
        for bits in 0..8u32 {
            let cells =
                vec![(bits >> 2 & 1) as f64, (bits >> 1 & 1) as f64, (bits & 1) as f64];
            let next = 30u32 >> bits & 1;
            samples.push(Sample {
                input: cells,
                label: Label::class(if next == 1 { "1" } else { "0" }),
            });
        }
        Dataset::new(InputLayout::Vector(3), LabelKind::Class, samples)
    }

    fn all_binary_inputs(dim: usize) -> Vec<Vec<Array>> {
        (0..1usize << dim)
            .map(|bits| {
                vec![Array::vector((0..dim).map(|k| (bits >> k & 1) as f64).collect())]
            })
            .collect()
    }

    #[test]
    fn rule30_network_condenses_exactly() {
        let net = train(&rule30_ds(), &TrainConfig::default()).unwrap();
        let opts = CondenseOptions::new("rule30", "", vec![("n".into(), 3)]);
        let verify = all_binary_inputs(3);
        let prog = condense(&net, &opts, &verify).unwrap();
        let text = emit_code(&prog, Target::PythonText);
        assert!(text.contains("def rule30_3(I):"), "{text}");
        // Equivalence on the full domain was already enforced by condense.
        assert!(matches!(
            check_equivalence(&prog, &net, &verify).unwrap(),
            EquivReport::Pass { cases: 8 }
        ));
    }

    fn absmax_ds(d: usize) -> Dataset {
        let mut samples = Vec::new();
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut x = vec![0.0; d];
                x[i] = sign;
                samples.push(Sample { input: x, label: Label::class(&i.to_string()) });
            }
        }
        Dataset::new(InputLayout::Vector(d), LabelKind::Class, samples)
    }

    #[test]
    fn absmax_network_condenses_to_loops() {
        let d = 5;
        let ds = absmax_ds(d);
        let net = train(&ds, &TrainConfig::default()).unwrap();
        let mut verify: Vec<Vec<Array>> =
            ds.samples.iter().map(|s| vec![Array::vector(s.input.clone())]).collect();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            verify.push(vec![Array::vector(x)]);
        }
        let opts = CondenseOptions::new("absmax", "", vec![("n".into(), d as i64)]);
        let prog = condense(&net, &opts, &verify).unwrap();
        let loops = prog.stmts.iter().filter(|s| matches!(s, Stmt::Loop(_))).count();
        assert!(loops >= 3, "expected loop structure, got program:\n{}",
            emit_code(&prog, Target::PythonText));
    }
}
