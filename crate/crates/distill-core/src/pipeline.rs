//! End-to-end task flows: generate data, train a network, condense it to a
//! program, and (per task) generalize across input sizes. Shared by the CLI
//! and the reproduction harnesses.

use crate::condense::{condense, CondenseOptions};
use crate::dataset::{Dataset, InputLayout, Label};
use crate::enn::Network;
use crate::error::{Error, Result};
use crate::generalize::{generalize_programs, instantiate};
use crate::interp::{interpret_program, Array, ProgOutput};
use crate::ir::{Labels, Program};
use crate::tasks::{self, SatFormula};
use crate::trainer::{train, TrainConfig};

/// A trained network together with its condensed program.
#[derive(Debug, Clone)]
pub struct Distilled {
    pub network: Network,
    pub program: Program,
}

/// Splits one flat sample into the positional input arrays of a program with
/// the given layout.
pub fn arrays_for(layout: &InputLayout, flat: &[f64]) -> Vec<Array> {
    match layout {
        InputLayout::Vector(_) => vec![Array::vector(flat.to_vec())],
        InputLayout::Grid(r, c) => vec![Array::matrix(*r, *c, flat.to_vec())],
        InputLayout::Concat(parts) => {
            let mut out = Vec::with_capacity(parts.len());
            let mut off = 0;
            for p in parts {
                let end = off + p.len();
                out.extend(arrays_for(p, &flat[off..end]));
                off = end;
            }
            out
        }
    }
}

/// Default size bindings for a layout: `n` for vectors and square grids,
/// `n` columns and `m` rows for rectangular grids, the trailing part's
/// length for concatenations.
pub fn sizes_for(layout: &InputLayout) -> Vec<(String, i64)> {
    match layout {
        InputLayout::Vector(n) => vec![("n".into(), *n as i64)],
        InputLayout::Grid(r, c) if r == c => vec![("n".into(), *r as i64)],
        InputLayout::Grid(r, c) => vec![("n".into(), *c as i64), ("m".into(), *r as i64)],
        InputLayout::Concat(parts) => {
            vec![("n".into(), parts.last().map_or(0, |p| p.len()) as i64)]
        }
    }
}

/// Train on `ds` and condense, verifying the program against the network on
/// every training input.
pub fn distill_dataset(
    ds: &Dataset,
    cfg: &TrainConfig,
    opts: &CondenseOptions,
) -> Result<Distilled> {
    let network = train(ds, cfg)?;
    let verify: Vec<Vec<Array>> =
        ds.samples.iter().map(|s| arrays_for(&ds.layout, &s.input)).collect();
    let program = condense(&network, opts, &verify)?;
    Ok(Distilled { network, program })
}

/// The class name a program associates with concept index `idx`.
pub fn label_name(prog: &Program, idx: usize) -> String {
    match &prog.labels {
        Labels::Named(names) if idx < names.len() => names[idx].clone(),
        _ => idx.to_string(),
    }
}

/// Class prediction of a program on one input. Argmax ties resolve to the
/// seeded choice; boolean outputs map to the first/second named label.
pub fn predict_class(prog: &Program, inputs: &[Array], seed: u64) -> Result<String> {
    match interpret_program(prog, inputs, seed)? {
        ProgOutput::Bool(b) => match &prog.labels {
            Labels::Named(names) if names.len() >= 2 => {
                Ok(names[usize::from(!b)].clone())
            }
            _ => Err(Error::Interpretation(
                "boolean program without two named labels".into(),
            )),
        },
        ProgOutput::Choice { choice, .. } => Ok(label_name(prog, choice)),
        ProgOutput::Probs(p) => {
            let best =
                (0..p.len()).max_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap()).unwrap_or(0);
            Ok(label_name(prog, best))
        }
    }
}

/// All class names tied for the program's top score (singleton for boolean
/// and probability outputs).
pub fn predict_tie_set(prog: &Program, inputs: &[Array], seed: u64) -> Result<Vec<String>> {
    match interpret_program(prog, inputs, seed)? {
        ProgOutput::Choice { tie_set, .. } => {
            Ok(tie_set.into_iter().map(|i| label_name(prog, i)).collect())
        }
        other => {
            let single = match other {
                ProgOutput::Bool(b) => match &prog.labels {
                    Labels::Named(names) if names.len() >= 2 => names[usize::from(!b)].clone(),
                    _ => {
                        return Err(Error::Interpretation(
                            "boolean program without two named labels".into(),
                        ))
                    }
                },
                ProgOutput::Probs(p) => {
                    let best = (0..p.len())
                        .max_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap())
                        .unwrap_or(0);
                    label_name(prog, best)
                }
                ProgOutput::Choice { .. } => unreachable!(),
            };
            Ok(vec![single])
        }
    }
}

/// Fraction of dataset samples the program classifies correctly. Argmax ties
/// count as correct when the true label is in the tie set; probability-pair
/// labels compare argmax sides.
pub fn dataset_accuracy(prog: &Program, ds: &Dataset, seed: u64) -> Result<f64> {
    let mut correct = 0usize;
    for s in &ds.samples {
        let inputs = arrays_for(&ds.layout, &s.input);
        let ok = match &s.label {
            Label::Class(want) => {
                predict_tie_set(prog, &inputs, seed)?.iter().any(|l| l == want)
            }
            Label::Probability(a, b) => match interpret_program(prog, &inputs, seed)? {
                ProgOutput::Probs(p) if p.len() >= 2 => (p[0] >= p[1]) == (a >= b),
                _ => false,
            },
        };
        correct += usize::from(ok);
    }
    Ok(correct as f64 / ds.samples.len().max(1) as f64)
}

// ---------------------------------------------------------------------------
// per-task pipelines

fn default_cfg(seed: u64) -> TrainConfig {
    TrainConfig { seed, ..TrainConfig::default() }
}

/// Iterative splitting copes better with concepts whose members cluster on
/// irrelevant features (e.g. random cells outside a CA neighborhood).
fn split_cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        method: crate::trainer::PartitionMethod::MisclassificationSplit,
        ..TrainConfig::default()
    }
}

/// Distill a single elementary CA rule from `count` random `n`-cell grids.
pub fn elementary_pipeline(rule: u32, n: usize, count: usize, seed: u64) -> Result<Distilled> {
    let ds = tasks::gen_elementary_ca(rule, n, count, seed)?;
    let opts = CondenseOptions::new(
        &format!("rule{rule}"),
        "I is a {n}-cell grid, with cell {n/2} being the cell to update",
        vec![("n".into(), n as i64)],
    );
    distill_dataset(&ds, &split_cfg(seed), &opts)
}

/// Distill the shared program for a set of elementary CA rules at width `n`,
/// training on all grids per rule with an 8-bit rule prefix.
pub fn all_rules_pipeline(rules: &[u32], n: usize, seed: u64) -> Result<Distilled> {
    let ds = tasks::gen_all_rules_ca(rules, n)?;
    let opts = CondenseOptions::new(
        "elementary_automata",
        "I1 is the 8-bit encoding of the rule number. #I2 is a {n}-cell grid, with cell {n/2} being the cell to update",
        vec![("n".into(), n as i64)],
    );
    distill_dataset(&ds, &split_cfg(seed), &opts)
}

/// Distill the Game of Life center-cell update from all 512 3x3 grids.
pub fn game_of_life_pipeline(seed: u64) -> Result<Distilled> {
    let ds = tasks::gen_game_of_life_exhaustive(3)?;
    let opts = CondenseOptions::new(
        "game_of_life",
        "I is a {n}x{n} grid, with the center cell being the cell to update",
        vec![("n".into(), 3)],
    );
    distill_dataset(&ds, &split_cfg(seed), &opts)
}

/// Distill abs-max at one array size.
pub fn absmax_pipeline(d: usize, seed: u64) -> Result<Distilled> {
    let ds = tasks::gen_absmax(d)?;
    let opts = CondenseOptions::new(
        "absmax",
        "I is an array of {n} numbers",
        vec![("n".into(), d as i64)],
    );
    distill_dataset(&ds, &default_cfg(seed), &opts)
}

/// Distill abs-max at several sizes and fuse into a size-parametric program.
pub fn absmax_generalized(sizes: &[usize], seed: u64) -> Result<Program> {
    let progs: Vec<Program> = sizes
        .iter()
        .map(|&d| absmax_pipeline(d, seed).map(|r| r.program))
        .collect::<Result<_>>()?;
    generalize_programs(&progs)
}

/// Distill the MAX-SAT first-variable policy at one (clauses, variables)
/// size.
pub fn maxsat_pipeline(clauses: usize, vars: usize, seed: u64) -> Result<Distilled> {
    let ds = tasks::gen_maxsat_train(clauses, vars)?;
    let opts = CondenseOptions::new(
        "maxsat",
        "I is an input of size {m}x{n} ({m/2} one-hot-encoded Boolean variables, {n} clauses)",
        vec![("n".into(), clauses as i64), ("m".into(), 2 * vars as i64)],
    );
    // One subconcept per (label, clause position): the non-empty clause
    // appears at every position, and the policy must weight each position's
    // clause separately. Complete linkage puts same-position formulas closer
    // (distance sqrt(2)) than cross-position ones (distance 2), so asking for
    // 4*clauses subconcepts lands the cut exactly at that scale. The default
    // coarsest certified cut blurs positions together and the condensed
    // policy degenerates to whole-formula sums.
    let cfg = TrainConfig { min_k: 4 * clauses, ..default_cfg(seed) };
    distill_dataset(&ds, &cfg, &opts)
}

/// Distill the MAX-SAT policy at several sizes (spanning both parameters)
/// and fuse into a two-parameter program.
pub fn maxsat_generalized(sizes: &[(usize, usize)], seed: u64) -> Result<Program> {
    let progs: Vec<Program> = sizes
        .iter()
        .map(|&(m, v)| maxsat_pipeline(m, v, seed).map(|r| r.program))
        .collect::<Result<_>>()?;
    generalize_programs(&progs)
}

/// First-variable policy backed by a generalized MAX-SAT program: instantiate
/// at the formula's current size and read the softmax pair.
///
/// # Panics
/// Panics if the program cannot be instantiated or interpreted at the
/// formula's size; validate on a sample formula first.
pub fn maxsat_program_policy(generalized: &Program) -> impl FnMut(&SatFormula) -> (f64, f64) + '_ {
    move |f: &SatFormula| {
        let sizes = vec![
            ("n".to_string(), f.num_clauses() as i64),
            ("m".to_string(), 2 * f.n_vars as i64),
        ];
        let prog = instantiate(generalized, &sizes).expect("instantiate maxsat program");
        let input = Array::matrix(2 * f.n_vars, f.num_clauses(), f.to_input());
        match interpret_program(&prog, &[input], 0).expect("interpret maxsat program") {
            ProgOutput::Probs(p) if p.len() >= 2 => (p[0], p[1]),
            other => panic!("maxsat program produced non-probability output {other:?}"),
        }
    }
}

/// Distill shape orientation from the `2n` full-line training images.
pub fn orientation_pipeline(n: usize, seed: u64) -> Result<Distilled> {
    let imgs = tasks::gen_orientation(n, tasks::OrientKind::FullLine, 0, seed)?;
    let ds = tasks::orientation_dataset(&imgs)?;
    let opts = CondenseOptions::new(
        "orientation",
        "I is an input image that is {n}x{n}",
        vec![("n".into(), n as i64)],
    );
    distill_dataset(&ds, &default_cfg(seed), &opts)
}

/// Distill orientation at several image sizes and fuse into a
/// size-parametric program.
pub fn orientation_generalized(sizes: &[usize], seed: u64) -> Result<Program> {
    let progs: Vec<Program> = sizes
        .iter()
        .map(|&n| orientation_pipeline(n, seed).map(|r| r.program))
        .collect::<Result<_>>()?;
    generalize_programs(&progs)
}

/// Classify one orientation image with a fixed-size or generalized program.
pub fn orientation_predict(prog: &Program, img: &tasks::OrientImage, seed: u64) -> Result<bool> {
    let sized = if prog.sizes.is_empty() {
        instantiate(prog, &[("n".to_string(), img.n as i64)])?
    } else {
        prog.clone()
    };
    let input = Array::matrix(img.n, img.n, img.pixels.clone());
    Ok(predict_class(&sized, &[input], seed)? == "horizontal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{ca_next, ca_rule_table};

    #[test]
    fn elementary_pipeline_is_exact_on_small_grids() {
        let d = elementary_pipeline(30, 5, 24, 3).unwrap();
        let table = ca_rule_table(30).unwrap();
        for g in 0..32u32 {
            let cells: Vec<f64> = (0..5).map(|i| ((g >> (4 - i)) & 1) as f64).collect();
            let want = ca_next(&table, cells[1] as u8, cells[2] as u8, cells[3] as u8);
            let got = predict_class(&d.program, &[Array::vector(cells)], 0).unwrap();
            assert_eq!(got, want.to_string(), "grid {g:05b}");
        }
    }

    #[test]
    fn arrays_split_concat_layouts() {
        let layout = InputLayout::Concat(vec![InputLayout::Vector(2), InputLayout::Grid(2, 2)]);
        let arrays = arrays_for(&layout, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(arrays.len(), 2);
        assert_eq!(arrays[0].data, vec![1.0, 2.0]);
        assert_eq!(arrays[1].dims, vec![2, 2]);
    }
}
