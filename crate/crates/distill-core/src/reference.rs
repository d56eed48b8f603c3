//! Hand-written reference IRs for the six benchmark programs. These are
//! the known-good distilled solutions; tests use them as oracles for the
//! emitter, the interpreter, and the generalizer.

use crate::ir::*;

fn scalar(target: &str, e: Expr) -> Stmt {
    Stmt::Scalar(ScalarStmt { target: target.into(), locals: vec![], value: Value::Expr(e) })
}

fn iref(array: &str, i: i64) -> Expr {
    Expr::elem(array, vec![Affine::konst(i)])
}

fn branch(cond: Expr, v: i64) -> (Expr, BranchBody) {
    (cond, BranchBody::Value(Number::int(v)))
}

fn sum_of(array: &str, sel: Vec<DimSel>) -> Expr {
    Expr::Sum(Slice { array: array.into(), sel })
}

fn row(i: &str) -> Vec<DimSel> {
    vec![DimSel::At(Affine::var(i)), DimSel::Full]
}

fn col(i: &str) -> Vec<DimSel> {
    vec![DimSel::Full, DimSel::At(Affine::var(i))]
}

/// Shared S/C tail of the single-rule automaton programs.
fn ca_tail() -> Vec<Stmt> {
    vec![
        scalar("S1", Expr::And(vec![Expr::var("D1"), Expr::var("D2")])),
        scalar("S2", Expr::var("D1").not()),
        scalar("S3", Expr::var("D2").not()),
        scalar(
            "C1",
            Expr::Or(vec![
                Expr::var("S1").not(),
                Expr::And(vec![Expr::var("S2"), Expr::var("S3")]),
            ]),
        ),
        scalar(
            "C2",
            Expr::Or(vec![
                Expr::And(vec![Expr::var("S1"), Expr::var("S3").not()]),
                Expr::And(vec![Expr::var("S1"), Expr::var("S2").not(), Expr::var("S3")]),
            ]),
        ),
    ]
}

fn ca_program(name: &str, d1: Expr, d2: Expr) -> Program {
    let mut stmts = vec![scalar("D1", d1), scalar("D2", d2)];
    stmts.extend(ca_tail());
    Program {
        name: name.into(),
        sizes: vec![("n".into(), 3)],
        params: vec![],
        comment: "I is a {n}-cell grid, with cell 1 being the cell to update".into(),
        inputs: vec![("I".into(), Shape::vector(Affine::var("n")))],
        stmts,
        output: Output::bool_pair("C1", "C2"),
        labels: Labels::Named(vec!["0".into(), "1".into()]),
    }
}

/// Rule 30: next center cell of a 3-cell neighborhood.
pub fn rule30() -> Program {
    ca_program(
        "rule30",
        Expr::Or(vec![
            iref("I", 0).not(),
            Expr::And(vec![iref("I", 1).not(), iref("I", 2).not()]),
        ]),
        Expr::Or(vec![iref("I", 2), iref("I", 1), iref("I", 0)]),
    )
}

/// Rule 110.
pub fn rule110() -> Program {
    ca_program(
        "rule110",
        Expr::Or(vec![iref("I", 1), iref("I", 2)]),
        Expr::Or(vec![iref("I", 0).not(), iref("I", 1).not(), iref("I", 2).not()]),
    )
}

/// Game of Life: next center cell of a 3x3 neighborhood (B3/S23).
/// D2 thresholds the 8 neighbors at 3 (overcrowding); D3 thresholds all 9
/// cells at 2 (underpopulation when not exceeded). Then the cell dies next
/// step iff D2 fires or D3 does not.
pub fn game_of_life() -> Program {
    let cell = |r: i64, c: i64| Expr::elem("I", vec![Affine::konst(r), Affine::konst(c)]);
    let ring = vec![
        cell(0, 0),
        cell(0, 1),
        cell(0, 2),
        cell(1, 0),
        cell(1, 2),
        cell(2, 0),
        cell(2, 1),
        cell(2, 2),
    ];
    let mut full = ring.clone();
    full.insert(4, cell(1, 1));
    let threshold = |target: &str, cells: Vec<Expr>, t: i64| {
        Stmt::Scalar(ScalarStmt {
            target: target.into(),
            locals: vec![("part_sum".into(), Expr::add(cells, true))],
            value: Value::Chain(IfChain {
                init: Number::int(0),
                branches: vec![
                    branch(Expr::cmp(CmpOp::Gt, Expr::var("part_sum"), Expr::num(t)), 1),
                    branch(Expr::cmp(CmpOp::Le, Expr::var("part_sum"), Expr::num(t)), -1),
                ],
                else_val: None,
            }),
        })
    };
    let stmts = vec![
        scalar("D1", cell(1, 1)),
        threshold("D2", ring, 3),
        threshold("D3", full, 2),
        scalar("S1", Expr::var("D2").gt0().not()),
        scalar("S2", Expr::var("D3").gt0().not()),
        scalar(
            "S3",
            Expr::And(vec![Expr::var("D1").gt0().not(), Expr::var("D3").gt0().not()]),
        ),
        scalar("S4", Expr::And(vec![Expr::var("D2").gt0(), Expr::var("D3").gt0()])),
        scalar(
            "S5",
            Expr::And(vec![Expr::var("D1").gt0(), Expr::var("D2").gt0(), Expr::var("D3").gt0()]),
        ),
        scalar("C1", Expr::Or(vec![Expr::var("S4"), Expr::var("S2")])),
        scalar(
            "C2",
            Expr::And(vec![Expr::var("S4").not(), Expr::var("S2").not()]),
        ),
    ];
    Program {
        name: "game_of_life".into(),
        sizes: vec![("n".into(), 3)],
        params: vec![],
        comment: "I is a {n}x{n} grid, with the center cell being the cell to update".into(),
        inputs: vec![("I".into(), Shape::matrix(Affine::var("n"), Affine::var("n")))],
        stmts,
        output: Output::bool_pair("C1", "C2"),
        labels: Labels::Named(vec!["0".into(), "1".into()]),
    }
}

/// Index of the maximum absolute value via all-pairs comparisons.
pub fn absmax(n: i64) -> Program {
    let n_ = || Affine::var("n");
    let pair_loop = |target: &str, negate_second: bool| {
        let rhs = if negate_second {
            Expr::neg(Expr::var("value_2"))
        } else {
            Expr::var("value_2")
        };
        Stmt::Loop(LoopStmt {
            target: target.into(),
            shape: Shape::matrix(n_(), n_()),
            indices: vec!["i".into(), "j".into()],
            skip_equal: Some(("i".into(), "j".into())),
            locals: vec![
                ("value_1".into(), Expr::elem("I", vec![Affine::var("i")])),
                ("value_2".into(), Expr::elem("I", vec![Affine::var("j")])),
            ],
            value: Value::Chain(IfChain {
                init: Number::int(0),
                branches: vec![
                    branch(Expr::cmp(CmpOp::Gt, Expr::var("value_1"), rhs.clone()), 1),
                    branch(Expr::cmp(CmpOp::Lt, Expr::var("value_1"), rhs), -1),
                ],
                else_val: None,
            }),
        })
    };
    // Thresholds: row must win every comparison (sum >= n-1 i.e. > n-2) in
    // both matrices; the combined fallback line never fires but is part of
    // the distilled form.
    let win_loop = |target: &str, neg: bool| {
        let rs = |k: &str| -> Expr { Expr::var(k) };
        let (c1, c2, c3op) = if neg {
            (CmpOp::Gt, CmpOp::Gt, Expr::Lin {
                terms: vec![
                    (Number::int(-1), rs("row_sum_1")),
                    (Number::int(-1), rs("row_sum_2")),
                ],
                parens: false,
            })
        } else {
            (CmpOp::Lt, CmpOp::Lt, Expr::Lin {
                terms: vec![
                    (Number::int(1), rs("row_sum_1")),
                    (Number::int(1), rs("row_sum_2")),
                ],
                parens: false,
            })
        };
        let edge = if neg { Affine::linear(-1, "n", 2) } else { Affine::linear(1, "n", -2) };
        Stmt::Loop(LoopStmt {
            target: target.into(),
            shape: Shape::vector(n_()),
            indices: vec!["i".into()],
            skip_equal: None,
            locals: vec![
                ("row_sum_1".into(), sum_of("D1", row("i"))),
                ("row_sum_2".into(), sum_of("D2", row("i"))),
            ],
            value: Value::Chain(IfChain {
                init: Number::int(0),
                branches: vec![
                    branch(
                        Expr::cmp(c1, rs("row_sum_1"), Expr::Num(Number::Int(edge.clone()))),
                        -1,
                    ),
                    branch(Expr::cmp(c2, rs("row_sum_2"), Expr::Num(Number::Int(edge))), -1),
                    branch(
                        Expr::cmp(
                            CmpOp::Gt,
                            c3op,
                            Expr::Num(Number::Int(Affine::linear(-2, "n", 3))),
                        ),
                        1,
                    ),
                ],
                else_val: Some(Number::int(-1)),
            }),
        })
    };
    let concept = Stmt::Loop(LoopStmt {
        target: "C".into(),
        shape: Shape::vector(n_()),
        indices: vec!["i".into()],
        skip_equal: None,
        locals: vec![],
        value: Value::Expr(Expr::Lin {
            terms: vec![
                (Number::Int(n_()), Expr::elem("S2", vec![Affine::var("i")])),
                (Number::Int(n_()), Expr::elem("S1", vec![Affine::var("i")])),
                (Number::int(-1), sum_of("S2", vec![DimSel::Full])),
                (Number::int(-1), sum_of("S1", vec![DimSel::Full])),
            ],
            parens: false,
        }),
    });
    Program {
        name: "absmax".into(),
        sizes: vec![("n".into(), n)],
        params: vec![],
        comment: "I is an array of {n} numbers".into(),
        inputs: vec![("I".into(), Shape::vector(n_()))],
        stmts: vec![
            pair_loop("D1", false),
            pair_loop("D2", true),
            win_loop("S1", false),
            win_loop("S2", true),
            concept,
        ],
        output: Output::ArgmaxChoice { array: "C".into() },
        labels: Labels::Indices,
    }
}

/// Vertical-vs-horizontal line orientation from row/column brightness duels.
pub fn orientation(n: i64) -> Program {
    let n_ = || Affine::var("n");
    let duel = Stmt::Loop(LoopStmt {
        target: "D".into(),
        shape: Shape::matrix(n_(), n_()),
        indices: vec!["i".into(), "j".into()],
        skip_equal: None,
        locals: vec![
            ("col_sum".into(), sum_of("I", col("i"))),
            ("row_sum".into(), sum_of("I", row("j"))),
        ],
        value: Value::Chain(IfChain {
            init: Number::int(0),
            branches: vec![
                branch(Expr::cmp(CmpOp::Gt, Expr::var("col_sum"), Expr::var("row_sum")), 1),
                branch(Expr::cmp(CmpOp::Lt, Expr::var("col_sum"), Expr::var("row_sum")), -1),
            ],
            else_val: None,
        }),
    });
    // Nested tie resolution shared by both subconcept loops; `sign` flips
    // outcomes between the row (S1) and column (S2) versions.
    let tally = |target: &str, line: Vec<DimSel>, off_name: &str, line_name: &str, sign: i64| {
        let all_one = Expr::AllEq(Slice { array: "D".into(), sel: line.clone() }, Number::int(1));
        let all_neg =
            Expr::AllEq(Slice { array: "D".into(), sel: line.clone() }, Number::int(-1));
        let off = || Expr::var(off_name);
        let cmp_off = |op: CmpOp, a: Affine| Expr::cmp(op, off(), Expr::Num(Number::Int(a)));
        // S1 works with offrow_sum near -n, S2 with offcol_sum near +n.
        let (far, near, eq_hi, eq_mid, eq_lo) = if sign > 0 {
            (
                cmp_off(CmpOp::Lt, Affine::linear(-1, "n", -1)),
                cmp_off(CmpOp::Gt, Affine::linear(-1, "n", 1)),
                Affine::linear(-1, "n", 1),
                Affine::linear(-1, "n", 0),
                Affine::linear(-1, "n", -1),
            )
        } else {
            (
                cmp_off(CmpOp::Lt, Affine::linear(1, "n", -1)),
                cmp_off(CmpOp::Gt, Affine::linear(1, "n", 1)),
                Affine::linear(1, "n", 1),
                Affine::linear(1, "n", 0),
                Affine::linear(1, "n", -1),
            )
        };
        let locals = if sign > 0 {
            vec![
                (line_name.to_string(), sum_of("D", line.clone())),
                (
                    off_name.to_string(),
                    Expr::minus(sum_of("D", row_full()), sum_of("D", line.clone()), true),
                ),
            ]
        } else {
            vec![
                (
                    off_name.to_string(),
                    Expr::minus(sum_of("D", row_full()), sum_of("D", line.clone()), true),
                ),
                (line_name.to_string(), sum_of("D", line.clone())),
            ]
        };
        Stmt::Loop(LoopStmt {
            target: target.into(),
            shape: Shape::vector(n_()),
            indices: vec!["i".into()],
            skip_equal: None,
            locals,
            value: Value::Chain(IfChain {
                init: Number::int(0),
                branches: vec![
                    branch(far, sign),
                    branch(near, -sign),
                    (
                        cmp_off(CmpOp::Eq, eq_hi),
                        BranchBody::Nested(vec![
                            (all_one.clone(), Number::int(sign)),
                            (all_one.clone().not(), Number::int(-sign)),
                        ]),
                    ),
                    (
                        cmp_off(CmpOp::Eq, eq_mid),
                        BranchBody::Nested(vec![
                            (
                                Expr::cmp(CmpOp::Gt, Expr::var(line_name), Expr::num(0)),
                                Number::int(sign),
                            ),
                            (
                                Expr::cmp(CmpOp::Lt, Expr::var(line_name), Expr::num(0)),
                                Number::int(-sign),
                            ),
                        ]),
                    ),
                    (
                        cmp_off(CmpOp::Eq, eq_lo),
                        BranchBody::Nested(vec![
                            (all_neg.clone().not(), Number::int(sign)),
                            (all_neg, Number::int(-sign)),
                        ]),
                    ),
                ],
                else_val: None,
            }),
        })
    };
    Program {
        name: "orientation".into(),
        sizes: vec![("n".into(), n)],
        params: vec![],
        comment: "I is an input image that is {n}x{n}".into(),
        inputs: vec![("I".into(), Shape::matrix(n_(), n_()))],
        stmts: vec![
            duel,
            tally("S1", row("i"), "offrow_sum", "row_sum", 1),
            tally("S2", col("i"), "offcol_sum", "col_sum", -1),
            scalar(
                "C1",
                Expr::minus(sum_of("S1", vec![DimSel::Full]), sum_of("S2", vec![DimSel::Full]), false),
            ),
            scalar(
                "C2",
                Expr::minus(sum_of("S2", vec![DimSel::Full]), sum_of("S1", vec![DimSel::Full]), false),
            ),
            Stmt::Gather { target: "C".into(), elems: vec!["C1".into(), "C2".into()] },
        ],
        output: Output::ArgmaxChoice { array: "C".into() },
        labels: Labels::Named(vec!["vertical".into(), "horizontal".into()]),
    }
}

fn row_full() -> Vec<DimSel> {
    vec![DimSel::Full, DimSel::Full]
}

/// Greedy first-variable assignment policy for MAX-SAT. The input is a
/// 2v-row, n-column literal/clause incidence matrix; the output is the
/// probability pair for assigning TRUE vs FALSE to variable 1.
pub fn maxsat(n: i64, m: i64) -> Program {
    let n_ = || Affine::var("n");
    let cell = |r: i64, i: &str| Expr::elem("I", vec![Affine::konst(r), Affine::var(i)]);
    let tail = |i: &str| Slice {
        array: "I".into(),
        sel: vec![DimSel::From(Affine::konst(2)), DimSel::At(Affine::var(i))],
    };
    let vloop = |target: &str, locals: Vec<(String, Expr)>, chain: IfChain| {
        Stmt::Loop(LoopStmt {
            target: target.into(),
            shape: Shape::vector(n_()),
            indices: vec!["i".into()],
            skip_equal: None,
            locals,
            value: Value::Chain(chain),
        })
    };
    let empty_tail = |pos: i64| IfChain {
        init: Number::int(0),
        branches: vec![branch(Expr::AnyNe(tail("i"), Number::int(0)), -pos)],
        else_val: Some(Number::int(pos)),
    };
    let mean_cmp = |plus: i64, minus: i64| IfChain {
        init: Number::int(0),
        branches: vec![branch(
            Expr::cmp(
                CmpOp::Gt,
                Expr::Lin {
                    terms: vec![
                        (Number::int(1), cell(plus, "i")),
                        (Number::int(1), Expr::var("col_mean")),
                        (Number::int(-1), cell(minus, "i")),
                    ],
                    parens: false,
                },
                Expr::num(0),
            ),
            1,
        )],
        else_val: Some(Number::int(-1)),
    };
    let presence = |this: i64, other: i64| IfChain {
        init: Number::int(0),
        branches: vec![
            branch(
                Expr::And(vec![
                    cell(this, "i"),
                    Expr::elem("I", vec![Affine::konst(other), Affine::konst(0)]).not(),
                ]),
                1,
            ),
            branch(
                Expr::Or(vec![
                    Expr::elem("I", vec![Affine::konst(other), Affine::konst(0)]).not(),
                    cell(this, "i"),
                ]),
                -1,
            ),
        ],
        else_val: None,
    };
    let pair = |target: &str, a: &str, b: &str| {
        Stmt::Loop(LoopStmt {
            target: target.into(),
            shape: Shape::vector(n_()),
            indices: vec!["i".into()],
            skip_equal: None,
            locals: vec![],
            value: Value::Expr(Expr::And(vec![
                Expr::elem(a, vec![Affine::var("i")]).gt0(),
                Expr::elem(b, vec![Affine::var("i")]).gt0(),
            ])),
        })
    };
    let logits = |s: [&str; 4]| {
        Expr::Lin {
            terms: vec![
                (Number::Real(10.0), sum_of(s[0], vec![DimSel::Full])),
                (Number::Real(2.298), sum_of(s[1], vec![DimSel::Full])),
                (Number::Real(-2.298), sum_of(s[2], vec![DimSel::Full])),
                (Number::Real(-10.0), sum_of(s[3], vec![DimSel::Full])),
            ],
            parens: false,
        }
    };
    Program {
        name: "maxsat".into(),
        sizes: vec![("n".into(), n), ("m".into(), m)],
        params: vec![],
        comment:
            "I is an input of size {m}x{n} ({m/2} one-hot-encoded Boolean variables, {n} clauses)"
                .into(),
        inputs: vec![("I".into(), Shape::matrix(Affine::var("m"), n_()))],
        stmts: vec![
            vloop("D1", vec![], empty_tail(1)),
            vloop("D2", vec![], empty_tail(-1)),
            vloop("D3", vec![("col_mean".into(), Expr::Mean(tail("i")))], mean_cmp(1, 0)),
            vloop("D4", vec![("col_mean".into(), Expr::Mean(tail("i")))], mean_cmp(0, 1)),
            vloop("D5", vec![], presence(0, 1)),
            vloop("D6", vec![], presence(1, 0)),
            pair("S1", "D6", "D1"),
            pair("S2", "D2", "D3"),
            pair("S3", "D5", "D1"),
            pair("S4", "D2", "D4"),
            scalar("C1", logits(["S3", "S4", "S2", "S1"])),
            scalar("C2", logits(["S1", "S2", "S4", "S3"])),
            Stmt::Gather { target: "C".into(), elems: vec!["C1".into(), "C2".into()] },
        ],
        output: Output::Softmax { array: "C".into() },
        labels: Labels::None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{interpret_program, Array, ProgOutput};

    // The boolean programs answer "is the next cell 0?", so a live next
    // cell corresponds to a false return.
    fn next_cell_live(p: &Program, inputs: &[Array]) -> bool {
        match interpret_program(p, inputs, 0).unwrap() {
            ProgOutput::Bool(b) => !b,
            other => panic!("expected bool, got {other:?}"),
        }
    }

    #[test]
    fn rule30_truth_table() {
        // Rule 30: next = left XOR (center OR right); rule bits LSB-first.
        let p = rule30();
        for bits in 0..8u32 {
            let cells = [(bits >> 2 & 1) as f64, (bits >> 1 & 1) as f64, (bits & 1) as f64];
            let idx = (bits >> 2 & 1) << 2 | (bits >> 1 & 1) << 1 | (bits & 1);
            let want = 30u32 >> idx & 1 == 1;
            let got = next_cell_live(&p, &[Array::vector(cells.to_vec())]);
            assert_eq!(got, want, "neighborhood {cells:?}");
        }
    }

    #[test]
    fn rule110_truth_table() {
        let p = rule110();
        for bits in 0..8u32 {
            let cells = [(bits >> 2 & 1) as f64, (bits >> 1 & 1) as f64, (bits & 1) as f64];
            let idx = (bits >> 2 & 1) << 2 | (bits >> 1 & 1) << 1 | (bits & 1);
            let want = 110u32 >> idx & 1 == 1;
            let got = next_cell_live(&p, &[Array::vector(cells.to_vec())]);
            assert_eq!(got, want, "neighborhood {cells:?}");
        }
        // Spot check from the rule number: (1,1,1) -> bit 7 of 110 -> 0.
        assert!(!next_cell_live(&p, &[Array::vector(vec![1.0, 1.0, 1.0])]));
    }

    #[test]
    fn game_of_life_all_512() {
        let p = game_of_life();
        for bits in 0..512u32 {
            let cells: Vec<f64> = (0..9).map(|k| (bits >> k & 1) as f64).collect();
            let center = cells[4] == 1.0;
            let live: u32 = (0..9).filter(|&k| k != 4).map(|k| bits >> k & 1).sum();
            let want = live == 3 || (center && live == 2);
            let got = next_cell_live(&p, &[Array::matrix(3, 3, cells)]);
            assert_eq!(got, want, "grid {bits:09b}");
        }
    }

    #[test]
    fn absmax_matches_brute_force() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for trial in 0..200 {
            let n = rng.random_range(2..=8usize);
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
            let p = absmax(n as i64);
            let out = interpret_program(&p, &[Array::vector(xs.clone())], trial).unwrap();
            let best = (0..n)
                .max_by(|&a, &b| xs[a].abs().partial_cmp(&xs[b].abs()).unwrap())
                .unwrap();
            match out {
                ProgOutput::Choice { tie_set, .. } => {
                    assert!(tie_set.contains(&best), "xs={xs:?} ties={tie_set:?}");
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn absmax_ties_reported() {
        let p = absmax(4);
        let out =
            interpret_program(&p, &[Array::vector(vec![5.0, -5.0, 1.0, 0.0])], 0).unwrap();
        match out {
            ProgOutput::Choice { tie_set, .. } => assert_eq!(tie_set, vec![0, 1]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn orientation_full_lines() {
        for n in [5usize, 8, 28] {
            let p = orientation(n as i64);
            for k in 0..n {
                // Horizontal line in row k.
                let mut img = vec![0.0; n * n];
                for j in 0..n {
                    img[k * n + j] = 1.0;
                }
                let out =
                    interpret_program(&p, &[Array::matrix(n, n, img)], 0).unwrap();
                match out {
                    ProgOutput::Choice { tie_set, .. } => {
                        assert_eq!(tie_set, vec![1], "row line n={n} k={k}")
                    }
                    other => panic!("unexpected {other:?}"),
                }
                // Vertical line in column k.
                let mut img = vec![0.0; n * n];
                for i in 0..n {
                    img[i * n + k] = 1.0;
                }
                let out =
                    interpret_program(&p, &[Array::matrix(n, n, img)], 0).unwrap();
                match out {
                    ProgOutput::Choice { tie_set, .. } => {
                        assert_eq!(tie_set, vec![0], "col line n={n} k={k}")
                    }
                    other => panic!("unexpected {other:?}"),
                }
            }
        }
    }

    #[test]
    fn maxsat_prefers_satisfying_assignment() {
        // 4 variables (8 rows), 3 clauses, every clause contains x1 only:
        // assigning TRUE satisfies everything.
        let (rows, cols) = (8usize, 3usize);
        let mut grid = vec![0.0; rows * cols];
        for c in 0..cols {
            grid[c] = 1.0; // row 0 = x1 present
        }
        let p = maxsat(cols as i64, rows as i64);
        let out = interpret_program(&p, &[Array::matrix(rows, cols, grid)], 0).unwrap();
        match out {
            ProgOutput::Probs(pr) => {
                assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(pr[0] > 0.99, "want TRUE strongly preferred, got {pr:?}");
            }
            other => panic!("unexpected {other:?}"),
        }
        // All-empty formula: both assignments equivalent.
        let p = maxsat(3, 8);
        let out =
            interpret_program(&p, &[Array::matrix(8, 3, vec![0.0; 24])], 0).unwrap();
        match out {
            ProgOutput::Probs(pr) => {
                assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
